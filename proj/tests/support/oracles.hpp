#pragma once

// Reference computations used only by the tests. Each takes a different
// route from the library code it checks.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace oracle {

// ---------------------------------------------------------------- Bradley-Terry

struct Outcome {
    std::size_t winner;
    std::size_t loser;
};

/// Exact log-likelihood of strengths p (any positive scale).
inline double bt_log_likelihood(const std::vector<double>& p, const std::vector<Outcome>& games) {
    double ll = 0;
    for (const auto& g : games) ll += std::log(p[g.winner] / (p[g.winner] + p[g.loser]));
    return ll;
}

/// Maximizes the likelihood by Newton's method on log-strengths with the
/// first log-strength pinned at 0, using the analytic gradient and Hessian.
/// Step halving keeps every step uphill. Returns simplex-normalized p.
inline std::vector<double> bt_newton(std::size_t n, const std::vector<Outcome>& games) {
    if (n < 2 || n > 6) throw std::invalid_argument("bt_newton: small instances only");
    std::vector<double> theta(n, 0.0);
    auto strengths = [&](const std::vector<double>& t) {
        std::vector<double> p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = std::exp(t[i]);
        return p;
    };
    const std::size_t m = n - 1;  // free coordinates 1..n-1
    for (int iter = 0; iter < 500; ++iter) {
        const auto p = strengths(theta);
        std::vector<double> grad(n, 0.0);
        std::vector<std::vector<double>> hess(n, std::vector<double>(n, 0.0));
        for (const auto& g : games) {
            const double q = p[g.loser] / (p[g.winner] + p[g.loser]);  // 1 - P(win)
            grad[g.winner] += q;
            grad[g.loser] -= q;
            const double w = q * (1 - q);
            hess[g.winner][g.winner] -= w;
            hess[g.loser][g.loser] -= w;
            hess[g.winner][g.loser] += w;
            hess[g.loser][g.winner] += w;
        }
        // Solve (-H) d = g on the free block by Gaussian elimination.
        std::vector<std::vector<double>> a(m, std::vector<double>(m + 1));
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t j = 0; j < m; ++j) a[i][j] = -hess[i + 1][j + 1];
            a[i][m] = grad[i + 1];
        }
        for (std::size_t c = 0; c < m; ++c) {
            std::size_t piv = c;
            for (std::size_t r = c + 1; r < m; ++r)
                if (std::fabs(a[r][c]) > std::fabs(a[piv][c])) piv = r;
            std::swap(a[c], a[piv]);
            if (std::fabs(a[c][c]) < 1e-300) throw std::runtime_error("bt_newton: singular Hessian");
            for (std::size_t r = 0; r < m; ++r) {
                if (r == c) continue;
                const double f = a[r][c] / a[c][c];
                for (std::size_t k = c; k <= m; ++k) a[r][k] -= f * a[c][k];
            }
        }
        std::vector<double> step(n, 0.0);
        double size = 0;
        for (std::size_t i = 0; i < m; ++i) {
            step[i + 1] = a[i][m] / a[i][i];
            size = std::max(size, std::fabs(step[i + 1]));
        }
        const double before = bt_log_likelihood(p, games);
        double scale = 1.0;
        std::vector<double> next(n);
        for (int halve = 0; halve < 60; ++halve) {
            for (std::size_t i = 0; i < n; ++i) next[i] = theta[i] + scale * step[i];
            if (bt_log_likelihood(strengths(next), games) >= before - 1e-15) break;
            scale /= 2;
        }
        theta = next;
        if (size * scale < 1e-14) break;
    }
    auto p = strengths(theta);
    double total = 0;
    for (double v : p) total += v;
    for (double& v : p) v /= total;
    return p;
}

// ---------------------------------------------------------------- Hurwitz zeta

/// sum_{k>=0} (a+k)^-s by explicit summation of `terms` terms, with the
/// remainder estimated by the midpoint-rule integral from a+terms-1/2.
inline long double hurwitz_partial_sum(double s, double a, std::size_t terms = 2'000'000) {
    long double sum = 0;
    // add small terms first to limit rounding
    for (std::size_t k = terms; k-- > 0;) sum += std::pow(static_cast<long double>(a) + k, -static_cast<long double>(s));
    const long double edge = static_cast<long double>(a) + terms - 0.5L;
    sum += std::pow(edge, 1.0L - s) / (s - 1.0L);
    return sum;
}

// ---------------------------------------------------------------- coincidence

/// Enumerates all days^n placements of n labelled draws and returns the
/// exact share with some `k` draws inside a span of `window` days.
inline double coincidence_enumerated(int n, int window, int k, int days, bool circular) {
    std::vector<int> draw(static_cast<std::size_t>(n), 0);
    std::uint64_t hits = 0, total = 0;
    std::vector<int> counts(static_cast<std::size_t>(days));
    for (;;) {
        std::fill(counts.begin(), counts.end(), 0);
        for (int d : draw) ++counts[static_cast<std::size_t>(d)];
        bool hit = false;
        for (int start = 0; start < days && !hit; ++start) {
            int inside = 0;
            for (int off = 0; off <= window; ++off) {
                const int day = start + off;
                if (day >= days && !circular) break;
                inside += counts[static_cast<std::size_t>(day % days)];
            }
            if (inside >= k) hit = true;
        }
        hits += hit;
        ++total;
        int pos = 0;
        while (pos < n && ++draw[static_cast<std::size_t>(pos)] == days) draw[static_cast<std::size_t>(pos++)] = 0;
        if (pos == n) break;
    }
    return static_cast<double>(hits) / static_cast<double>(total);
}

/// Classic product formula for at least one shared day among n draws.
inline double shared_day_product(int n, int days) {
    long double none = 1;
    for (int i = 0; i < n; ++i) none *= static_cast<long double>(days - i) / days;
    return static_cast<double>(1 - std::max(none, 0.0L));
}

// ---------------------------------------------------------------- correlation

struct PearsonSlope {
    double r;
    double slope;
};

/// Pearson r and OLS slope of ln y on ln x from raw power sums.
inline PearsonSlope pearson_raw_sums(const std::vector<double>& xs, const std::vector<double>& ys) {
    long double n = 0, sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (!(xs[i] > 0 && ys[i] > 0)) continue;
        const long double lx = std::log(static_cast<long double>(xs[i]));
        const long double ly = std::log(static_cast<long double>(ys[i]));
        n += 1;
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        syy += ly * ly;
        sxy += lx * ly;
    }
    const long double cov = n * sxy - sx * sy;
    const long double vx = n * sxx - sx * sx;
    const long double vy = n * syy - sy * sy;
    return {static_cast<double>(cov / std::sqrt(vx * vy)), static_cast<double>(cov / vx)};
}

// ---------------------------------------------------------------- Gutenberg-Richter

inline double gr_value(double a, double b, double nu, double x) { return 1.0 / (a + std::pow(x, nu) / b); }

}  // namespace oracle
