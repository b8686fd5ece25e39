#pragma once

// Discrete power-law tails: p(x) = x^-alpha / H(alpha, x_min) for integer
// x >= x_min, with alpha fitted by maximum likelihood and x_min chosen by
// minimizing the Kolmogorov-Smirnov distance between the empirical and the
// model distribution of the tail.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "fame/csv.hpp"
#include "fame/error.hpp"
#include "fame/parallel.hpp"
#include "fame/rng.hpp"
#include "fame/zeta.hpp"

namespace fame::tail {

inline constexpr double alpha_lower = 1.01;
inline constexpr double alpha_upper = 6.0;

/// Probability mass at x of the power law with exponent alpha above x_min.
inline double powerlaw_pmf(double alpha, std::int64_t x_min, std::int64_t x) {
    if (!(alpha > 1)) throw std::invalid_argument("powerlaw_pmf: alpha must exceed 1");
    if (x_min < 1) throw std::invalid_argument("powerlaw_pmf: x_min must be positive");
    if (x < x_min) throw std::invalid_argument("powerlaw_pmf: x below x_min");
    return std::pow(static_cast<double>(x), -alpha) / hurwitz_zeta(alpha, static_cast<double>(x_min));
}

/// P(X >= x) for x >= x_min.
inline double powerlaw_survival(double alpha, std::int64_t x_min, std::int64_t x) {
    if (x <= x_min) return 1.0;
    return hurwitz_zeta(alpha, static_cast<double>(x)) / hurwitz_zeta(alpha, static_cast<double>(x_min));
}

struct AlphaFit {
    double alpha = 0;
    double alpha_se = 0;        // (alpha - 1) / sqrt(n_tail)
    double log_likelihood = 0;  // n ln C - alpha sum ln x
    std::size_t n_tail = 0;
};

namespace detail {

inline double tail_log_likelihood(double alpha, std::int64_t x_min, std::size_t n, double sum_log) {
    return -static_cast<double>(n) * std::log(hurwitz_zeta(alpha, static_cast<double>(x_min))) -
           alpha * sum_log;
}

/// Brent maximization of the tail log-likelihood on [alpha_lower, alpha_upper].
inline AlphaFit maximize_alpha(std::int64_t x_min, std::size_t n, double sum_log) {
    auto negative = [&](double a) { return -tail_log_likelihood(a, x_min, n, sum_log); };
    std::uintmax_t max_iter = 200;
    const auto [a, f] = boost::math::tools::brent_find_minima(
        negative, alpha_lower, alpha_upper, std::numeric_limits<double>::digits / 2, max_iter);
    AlphaFit fit;
    fit.alpha = a;
    fit.log_likelihood = -f;
    fit.n_tail = n;
    fit.alpha_se = (a - 1.0) / std::sqrt(static_cast<double>(n));
    return fit;
}

struct Distinct {
    std::vector<std::int64_t> value;  // ascending
    std::vector<std::size_t> count;
};

inline Distinct distinct_of(std::vector<std::int64_t> sorted) {
    Distinct d;
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        d.value.push_back(sorted[i]);
        d.count.push_back(j - i);
        i = j;
    }
    return d;
}

/// KS distance over the distinct values from index `first` onward, which
/// hold `n_tail` samples. Both CDFs are step functions on the integers, so
/// the supremum is attained at a sample value or just before the next one.
inline double ks_over(const Distinct& d, std::size_t first, std::size_t n_tail, double alpha) {
    const double h_min = hurwitz_zeta(alpha, static_cast<double>(d.value[first]));
    const double n = static_cast<double>(n_tail);
    std::size_t cum = 0;
    double worst = 0;
    for (std::size_t j = first; j < d.value.size(); ++j) {
        cum += d.count[j];
        const double emp = static_cast<double>(cum) / n;
        const double x = static_cast<double>(d.value[j]);
        const double model_at = 1.0 - hurwitz_zeta(alpha, x + 1.0) / h_min;
        worst = std::max(worst, std::abs(emp - model_at));
        if (j + 1 < d.value.size() && d.value[j + 1] > d.value[j] + 1) {
            const double model_before_next =
                1.0 - hurwitz_zeta(alpha, static_cast<double>(d.value[j + 1])) / h_min;
            worst = std::max(worst, std::abs(emp - model_before_next));
        }
    }
    return worst;
}

inline std::vector<std::int64_t> tail_of(std::span<const std::int64_t> samples, std::int64_t x_min) {
    std::vector<std::int64_t> t;
    for (auto x : samples)
        if (x >= x_min) t.push_back(x);
    return t;
}

}  // namespace detail

/// Maximum-likelihood exponent for the samples at or above x_min.
inline AlphaFit fit_alpha(std::span<const std::int64_t> samples, std::int64_t x_min) {
    if (x_min < 1) throw std::invalid_argument("fit_alpha: x_min must be positive");
    std::size_t n = 0;
    double sum_log = 0;
    std::optional<std::int64_t> first;
    bool varied = false;
    for (auto x : samples) {
        if (x < x_min) continue;
        ++n;
        sum_log += std::log(static_cast<double>(x));
        if (!first) first = x;
        else if (x != *first) varied = true;
    }
    if (n < 2) throw InputError("fit_alpha: fewer than 2 samples at or above x_min");
    if (!varied) throw InputError("fit_alpha: all tail samples are equal");
    return detail::maximize_alpha(x_min, n, sum_log);
}

/// Largest absolute difference between the empirical and model CDFs of the
/// tail, both conditioned on x >= x_min.
inline double ks_distance(std::span<const std::int64_t> samples, double alpha, std::int64_t x_min) {
    if (!(alpha > 1)) throw std::invalid_argument("ks_distance: alpha must exceed 1");
    auto tail = detail::tail_of(samples, x_min);
    if (tail.empty()) throw InputError("ks_distance: no samples at or above x_min");
    std::sort(tail.begin(), tail.end());
    const std::size_t n = tail.size();
    auto d = detail::distinct_of(std::move(tail));
    // Conditioning is on x >= x_min, which may lie below the smallest sample.
    if (d.value.front() != x_min) {
        d.value.insert(d.value.begin(), x_min);
        d.count.insert(d.count.begin(), 0);
    }
    return detail::ks_over(d, 0, n, alpha);
}

struct XminCandidate {
    std::int64_t x_min = 0;
    double alpha = 0;
    double alpha_se = 0;
    double ks = 0;
    std::size_t n_tail = 0;
};

struct ScanOptions {
    std::optional<std::int64_t> lo;  // restrict candidates to [lo, hi]
    std::optional<std::int64_t> hi;
    std::size_t min_tail = 5;
    double plateau_factor = 1.05;
    unsigned threads = 0;
};

struct PowerLawFit {
    double alpha = 0;
    double alpha_se = 0;
    std::int64_t x_min = 0;
    std::int64_t plateau_lo = 0;
    std::int64_t plateau_hi = 0;
    double ks_distance = 0;
    std::size_t n_tail = 0;
    double log_c = 0;  // -ln H(alpha, x_min)
};

/// Fits alpha at every distinct observed value that leaves at least
/// `min_tail` samples (and two distinct values) in the tail.
inline std::vector<XminCandidate> scan_xmin(std::span<const std::int64_t> samples,
                                            const ScanOptions& options = {}) {
    std::vector<std::int64_t> sorted(samples.begin(), samples.end());
    for (auto x : sorted)
        if (x < 1) throw InputError("scan_xmin: samples must be positive integers");
    std::sort(sorted.begin(), sorted.end());
    const auto d = detail::distinct_of(sorted);
    if (d.value.size() < 10)
        throw InputError("scan_xmin: need at least 10 distinct values, got " +
                         std::to_string(d.value.size()));

    std::vector<std::size_t> tail_count(d.value.size() + 1, 0);
    std::vector<double> tail_log(d.value.size() + 1, 0.0);
    for (std::size_t j = d.value.size(); j-- > 0;) {
        tail_count[j] = tail_count[j + 1] + d.count[j];
        tail_log[j] = tail_log[j + 1] +
                      static_cast<double>(d.count[j]) * std::log(static_cast<double>(d.value[j]));
    }

    std::vector<std::size_t> candidates;
    for (std::size_t j = 0; j + 1 < d.value.size(); ++j) {
        if (tail_count[j] < options.min_tail) break;
        if (options.lo && d.value[j] < *options.lo) continue;
        if (options.hi && d.value[j] > *options.hi) break;
        candidates.push_back(j);
    }
    if (candidates.empty()) throw InputError("scan_xmin: no admissible x_min candidates");

    std::vector<XminCandidate> out(candidates.size());
    parallel_for(
        candidates.size(),
        [&](std::size_t c) {
            const std::size_t j = candidates[c];
            const auto fit = detail::maximize_alpha(d.value[j], tail_count[j], tail_log[j]);
            out[c] = {d.value[j], fit.alpha, fit.alpha_se, detail::ks_over(d, j, tail_count[j], fit.alpha),
                      tail_count[j]};
        },
        options.threads);
    return out;
}

/// Picks the candidate with the smallest KS distance (ties toward smaller
/// x_min) and reports the contiguous run of candidates whose distance stays
/// within plateau_factor of the minimum.
inline PowerLawFit select_xmin(std::span<const std::int64_t> samples, const ScanOptions& options = {}) {
    const auto scan = scan_xmin(samples, options);
    std::size_t best = 0;
    for (std::size_t c = 1; c < scan.size(); ++c)
        if (scan[c].ks < scan[best].ks) best = c;
    const double limit = options.plateau_factor * scan[best].ks;
    std::size_t lo = best, hi = best;
    while (lo > 0 && scan[lo - 1].ks <= limit) --lo;
    while (hi + 1 < scan.size() && scan[hi + 1].ks <= limit) ++hi;

    const auto& b = scan[best];
    PowerLawFit fit;
    fit.alpha = b.alpha;
    fit.alpha_se = b.alpha_se;
    fit.x_min = b.x_min;
    fit.plateau_lo = scan[lo].x_min;
    fit.plateau_hi = scan[hi].x_min;
    fit.ks_distance = b.ks;
    fit.n_tail = b.n_tail;
    fit.log_c = -std::log(hurwitz_zeta(b.alpha, static_cast<double>(b.x_min)));
    return fit;
}

/// n independent draws from the discrete power law, by inverting the
/// survival function. Beyond 10^6 x_min the continuous approximation
/// H(alpha, x) ~ (x - 1/2)^(1 - alpha) / (alpha - 1) is used.
inline std::vector<std::int64_t> sample_powerlaw(double alpha, std::int64_t x_min, std::size_t n,
                                                 std::uint64_t seed) {
    if (!(alpha > 1)) throw std::invalid_argument("sample_powerlaw: alpha must exceed 1");
    if (x_min < 1) throw std::invalid_argument("sample_powerlaw: x_min must be positive");
    if (n == 0) throw std::invalid_argument("sample_powerlaw: n must be >= 1");

    const double h_min = hurwitz_zeta(alpha, static_cast<double>(x_min));
    const double cap = 1e6 * static_cast<double>(x_min);
    const double survival_cap = hurwitz_zeta(alpha, cap) / h_min;
    const double inv_exp = -1.0 / (alpha - 1.0);
    auto continuous = [&](double u) { return 0.5 + std::pow(u * h_min * (alpha - 1.0), inv_exp); };
    // true when P(X >= x) >= u
    auto reaches = [&](double x, double u) { return hurwitz_zeta(alpha, x) >= u * h_min; };

    SplitMix64 rng = stream(seed, 0);
    std::vector<std::int64_t> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double u = 1.0 - uniform01(rng);  // (0, 1]
        if (u <= survival_cap) {
            const double x = std::floor(continuous(u));
            out.push_back(x >= 9.0e18 ? std::numeric_limits<std::int64_t>::max() / 2
                                      : static_cast<std::int64_t>(x));
            continue;
        }
        // Largest integer x in [x_min, cap) with P(X >= x) >= u.
        double lo = static_cast<double>(x_min);
        double hi = cap;
        const double guess = std::clamp(std::floor(continuous(u)), lo, cap - 1.0);
        if (reaches(guess, u)) {
            lo = guess;
            for (double step = 1; lo + step < cap; step *= 2) {
                if (!reaches(lo + step, u)) {
                    hi = lo + step;
                    break;
                }
                lo += step;
            }
        } else {
            hi = guess;
            for (double step = 1; hi - step > lo; step *= 2) {
                if (reaches(hi - step, u)) {
                    lo = hi - step;
                    break;
                }
                hi -= step;
            }
        }
        while (hi - lo > 1) {
            const double mid = std::floor((lo + hi) / 2);
            (reaches(mid, u) ? lo : hi) = mid;
        }
        out.push_back(static_cast<std::int64_t>(lo));
    }
    return out;
}

/// Bootstrap standard error of alpha at fixed x_min (resample the tail,
/// refit).
inline double alpha_se_bootstrap(std::span<const std::int64_t> samples, std::int64_t x_min,
                                 std::size_t replicates, std::uint64_t seed) {
    const auto tail = detail::tail_of(samples, x_min);
    fit_alpha(tail, x_min);  // validates the tail
    if (replicates < 2) throw std::invalid_argument("alpha_se_bootstrap: need at least 2 replicates");
    std::vector<double> alphas;
    std::vector<std::int64_t> draw(tail.size());
    for (std::size_t r = 0; r < replicates; ++r) {
        auto rng = stream(seed, r);
        for (auto& x : draw) x = tail[uniform_below(rng, tail.size())];
        try {
            alphas.push_back(fit_alpha(draw, x_min).alpha);
        } catch (const InputError&) {
            // a resample with a single distinct value carries no slope information
        }
    }
    if (alphas.size() < 2) throw NumericalError("alpha_se_bootstrap: too few usable replicates");
    double mean = 0;
    for (double a : alphas) mean += a;
    mean /= static_cast<double>(alphas.size());
    double ss = 0;
    for (double a : alphas) ss += (a - mean) * (a - mean);
    return std::sqrt(ss / static_cast<double>(alphas.size() - 1));
}

/// Goodness-of-fit p-value: share of synthetic tails, drawn from the fitted
/// law at the fitted x_min and refit there, whose KS distance is at least
/// the observed one.
inline double gof_pvalue(std::span<const std::int64_t> samples, const PowerLawFit& fit,
                         std::size_t replicates, std::uint64_t seed) {
    if (replicates == 0) throw std::invalid_argument("gof_pvalue: need at least 1 replicate");
    const double observed = ks_distance(samples, fit.alpha, fit.x_min);
    std::size_t exceed = 0, used = 0;
    for (std::size_t r = 0; r < replicates; ++r) {
        const auto synth = sample_powerlaw(fit.alpha, fit.x_min, fit.n_tail, seed + 0x9E37 * (r + 1));
        try {
            const auto refit = fit_alpha(synth, fit.x_min);
            ++used;
            if (ks_distance(synth, refit.alpha, fit.x_min) >= observed) ++exceed;
        } catch (const InputError&) {
        }
    }
    if (used == 0) throw NumericalError("gof_pvalue: no usable replicates");
    return static_cast<double>(exceed) / static_cast<double>(used);
}

struct CdfPoint {
    std::int64_t x;
    double empirical_survival;
    double model_survival;
};

/// Empirical and model P(X >= x) at every distinct tail value.
inline std::vector<CdfPoint> survival_comparison(std::span<const std::int64_t> samples, double alpha,
                                                 std::int64_t x_min) {
    auto tail = detail::tail_of(samples, x_min);
    if (tail.empty()) throw InputError("survival_comparison: no samples at or above x_min");
    std::sort(tail.begin(), tail.end());
    const double n = static_cast<double>(tail.size());
    const auto d = detail::distinct_of(std::move(tail));
    const double h_min = hurwitz_zeta(alpha, static_cast<double>(x_min));
    std::vector<CdfPoint> out;
    double remaining = n;
    for (std::size_t j = 0; j < d.value.size(); ++j) {
        out.push_back({d.value[j], remaining / n,
                       hurwitz_zeta(alpha, static_cast<double>(d.value[j])) / h_min});
        remaining -= static_cast<double>(d.count[j]);
    }
    return out;
}

inline void write_fit_header(std::ostream& out) {
    out << "dataset,alpha,alpha_se,x_min,plateau_lo,plateau_hi,ks,n_tail\n";
}

inline void write_fit_row(std::ostream& out, const std::string& dataset, const PowerLawFit& f) {
    out << dataset << ',' << csv::format(f.alpha) << ',' << csv::format(f.alpha_se) << ',' << f.x_min
        << ',' << f.plateau_lo << ',' << f.plateau_hi << ',' << csv::format(f.ks_distance) << ','
        << f.n_tail << '\n';
}

inline void write_survival_csv(std::ostream& out, const std::vector<CdfPoint>& points) {
    out << "x,empirical_survival,model_survival\n";
    for (const auto& p : points)
        out << p.x << ',' << csv::format(p.empirical_survival) << ',' << csv::format(p.model_survival)
            << '\n';
}

/// Rounds non-negative metric values to the integer samples the discrete
/// law is defined on, dropping zeros.
inline std::vector<std::int64_t> to_samples(std::span<const double> values) {
    std::vector<std::int64_t> out;
    for (double v : values)
        if (v >= 1) out.push_back(static_cast<std::int64_t>(std::llround(v)));
    return out;
}

}  // namespace fame::tail
