#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fame/csv.hpp"
#include "fame/error.hpp"

namespace fame::corr {

struct LogLogFit {
    double r = 0;
    double slope = 0;
    double slope_se = 0;
    double intercept = 0;
    std::size_t n_points = 0;
    std::size_t dropped_nonpositive = 0;
};

struct Pair {
    double x;
    double y;
};

/// Pearson correlation and ordinary least-squares line of ln y on ln x.
/// Pairs with a non-positive coordinate are dropped and counted.
inline LogLogFit loglog_fit(std::span<const Pair> pairs) {
    LogLogFit fit;
    std::vector<Pair> logs;
    logs.reserve(pairs.size());
    for (const auto& p : pairs) {
        if (p.x > 0 && p.y > 0)
            logs.push_back({std::log(p.x), std::log(p.y)});
        else
            ++fit.dropped_nonpositive;
    }
    fit.n_points = logs.size();
    if (logs.size() < 3) throw InputError("loglog_fit: fewer than 3 pairs with positive coordinates");

    const double n = static_cast<double>(logs.size());
    double mx = 0, my = 0;
    for (const auto& p : logs) {
        mx += p.x;
        my += p.y;
    }
    mx /= n;
    my /= n;
    double sxx = 0, syy = 0, sxy = 0;
    for (const auto& p : logs) {
        const double dx = p.x - mx, dy = p.y - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (!(sxx > 0)) throw InputError("loglog_fit: ln x has zero variance");

    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r = syy > 0 ? std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0) : 0.0;
    const double sse = std::max(0.0, syy - fit.slope * sxy);
    fit.slope_se = std::sqrt(sse / (n - 2) / sxx);
    return fit;
}

inline LogLogFit loglog_fit(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw InputError("loglog_fit: x and y lengths differ");
    std::vector<Pair> pairs(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) pairs[i] = {xs[i], ys[i]};
    return loglog_fit(pairs);
}

inline void write_report_header(std::ostream& out) { out << "x_metric,y_metric,r,slope,slope_se,n\n"; }

inline void write_report_row(std::ostream& out, const std::string& x_metric, const std::string& y_metric,
                             const LogLogFit& fit) {
    out << x_metric << ',' << y_metric << ',' << csv::format(fit.r) << ',' << csv::format(fit.slope) << ','
        << csv::format(fit.slope_se) << ',' << fit.n_points << '\n';
}

struct ScatterPoint {
    std::string id;
    double x;
    double y;
};

/// Scatter data in log coordinates (natural log), positive pairs only.
inline void write_scatter_csv(std::ostream& out, std::span<const ScatterPoint> points) {
    out << "id,x,y,ln_x,ln_y\n";
    for (const auto& p : points) {
        if (!(p.x > 0 && p.y > 0)) continue;
        out << p.id << ',' << csv::format(p.x) << ',' << csv::format(p.y) << ',' << csv::format(std::log(p.x))
            << ',' << csv::format(std::log(p.y)) << '\n';
    }
}

}  // namespace fame::corr
