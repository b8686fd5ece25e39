#pragma once

// Cumulative frequency of events (events per year with magnitude >= x) and
// least-squares fits of the Gutenberg-Richter form
//
//     f(x) = 1 / (a + x^nu / b)
//
// in log-log space.

#include <algorithm>
#include <array>
#include <cmath>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fame/csv.hpp"
#include "fame/data.hpp"
#include "fame/error.hpp"
#include "fame/optimize.hpp"

namespace fame::gr {

struct FrequencyPoint {
    double x;
    double f;  // events per year with magnitude >= x

    friend bool operator==(const FrequencyPoint&, const FrequencyPoint&) = default;
};

struct FrequencyCurve {
    std::vector<FrequencyPoint> points;  // ascending x
    double annualization_factor = 1.0;
};

/// f(x) = factor * #{samples >= x} at each distinct sample value.
inline FrequencyCurve cumulative_frequency(std::span<const double> samples, double factor) {
    if (samples.empty()) throw InputError("cumulative_frequency: no samples");
    if (!(factor > 0)) throw std::invalid_argument("cumulative_frequency: factor must be positive");
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    FrequencyCurve curve;
    curve.annualization_factor = factor;
    const std::size_t n = sorted.size();
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j < n && sorted[j] == sorted[i]) ++j;
        curve.points.push_back({sorted[i], factor * static_cast<double>(n - i)});
        i = j;
    }
    return curve;
}

/// Annualized curve for one metric of a dataset:
/// factor = (12 / coverage_months) / sample_fraction.
inline FrequencyCurve cumulative_frequency(const MetricDataset& ds, MetricKind kind) {
    validate(ds);
    const auto values = ds.values(kind);
    if (values.empty())
        throw InputError("cumulative_frequency: dataset '" + ds.name + "' has no " +
                         std::string(to_string(kind)) + " values");
    return cumulative_frequency(values, ds.annualization_factor());
}

struct GRFit {
    double a = 0;   // years
    double b = 0;
    double nu = 0;
    double residual = 0;  // RMS of ln f_model - ln f_data
};

inline double eval_gr(const GRFit& fit, double x) {
    if (!(x > 0)) throw std::invalid_argument("eval_gr: x must be positive");
    return 1.0 / (fit.a + std::pow(x, fit.nu) / fit.b);
}

/// Parameters searched by the fit: (ln a, ln b, nu).
using Params = std::array<double, 3>;

namespace detail {

struct LogPoint {
    double log_x;
    double log_f;
};

inline std::vector<LogPoint> usable_points(const FrequencyCurve& curve) {
    auto pts = curve.points;
    std::sort(pts.begin(), pts.end(), [](const FrequencyPoint& p, const FrequencyPoint& q) {
        return p.x != q.x ? p.x < q.x : p.f < q.f;
    });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    std::vector<LogPoint> out;
    for (const auto& p : pts)
        if (p.x > 0 && p.f > 0) out.push_back({std::log(p.x), std::log(p.f)});
    return out;
}

inline double log_model(const Params& t, double log_x) {
    // -ln(e^{ln a} + e^{nu ln x - ln b}), evaluated stably
    const double u = t[0], v = t[2] * log_x - t[1];
    const double m = std::max(u, v);
    return -(m + std::log1p(std::exp(-std::abs(u - v))));
}

inline double sum_squares(const std::vector<LogPoint>& pts, const Params& t) {
    double s = 0;
    for (const auto& p : pts) {
        const double r = log_model(t, p.log_x) - p.log_f;
        s += r * r;
    }
    return std::isfinite(s) ? s : std::numeric_limits<double>::infinity();
}

}  // namespace detail

/// RMS log-space residual of the curve at parameters (ln a, ln b, nu).
inline double gr_residual(const FrequencyCurve& curve, const Params& params) {
    const auto pts = detail::usable_points(curve);
    if (pts.empty()) throw InputError("gr_residual: no positive points");
    return std::sqrt(detail::sum_squares(pts, params) / static_cast<double>(pts.size()));
}

/// ln a used for the "a = 0" starts.
inline constexpr double log_a_near_zero = -30.0;

/// The fixed multi-start grid: nu in {1, 1.5, 2, 3} x a in {0, 0.01}, with
/// ln b from the pure power-law least-squares intercept for that nu.
inline std::vector<Params> multistart_points(const FrequencyCurve& curve) {
    const auto pts = detail::usable_points(curve);
    if (pts.empty()) throw InputError("multistart_points: no positive points");
    std::vector<Params> starts;
    for (double nu : {1.0, 1.5, 2.0, 3.0}) {
        double ln_b = 0;
        for (const auto& p : pts) ln_b += p.log_f + nu * p.log_x;
        ln_b /= static_cast<double>(pts.size());
        for (double ln_a : {log_a_near_zero, std::log(0.01)}) starts.push_back({ln_a, ln_b, nu});
    }
    return starts;
}

/// Least-squares Gutenberg-Richter fit in log-log space, equal weight per
/// distinct point. Deterministic: fixed starts, argmin with ties to the
/// earliest start.
inline GRFit fit_gutenberg_richter(const FrequencyCurve& curve) {
    const auto pts = detail::usable_points(curve);
    std::size_t distinct_x = 0;
    for (std::size_t i = 0; i < pts.size(); ++i)
        if (i == 0 || pts[i].log_x != pts[i - 1].log_x) ++distinct_x;
    if (distinct_x < 4) throw InputError("fit_gutenberg_richter: need at least 4 distinct points");

    auto objective = [&](const Params& t) { return detail::sum_squares(pts, t); };
    opt::NelderMeadOptions nm;
    nm.initial_step = 1.0;

    bool have = false;
    opt::MinimizeResult<3> best;
    for (const auto& start : multistart_points(curve)) {
        const auto r = opt::nelder_mead(objective, start, nm);
        if (!have || r.value < best.value) {
            best = r;
            have = true;
        }
    }
    if (!std::isfinite(best.value)) throw NumericalError("fit_gutenberg_richter: non-finite objective");

    GRFit fit;
    fit.a = std::exp(best.x[0]);
    fit.b = std::exp(best.x[1]);
    fit.nu = best.x[2];
    fit.residual = std::sqrt(best.value / static_cast<double>(pts.size()));
    if (!(fit.nu > 0) || !(fit.b > 0) || !std::isfinite(fit.b))
        throw NumericalError("fit_gutenberg_richter: fit left the admissible region (b > 0, nu > 0)");
    return fit;
}

inline void write_curve_csv(std::ostream& out, const FrequencyCurve& curve) {
    out << "x,f_per_year\n";
    for (const auto& p : curve.points) out << csv::format(p.x) << ',' << csv::format(p.f) << '\n';
}

inline void write_fit_header(std::ostream& out) { out << "dataset,a,b,nu,residual\n"; }

inline void write_fit_row(std::ostream& out, const std::string& dataset, const GRFit& fit) {
    out << dataset << ',' << csv::format(fit.a) << ',' << csv::format(fit.b) << ','
        << csv::format(fit.nu) << ',' << csv::format(fit.residual) << '\n';
}

}  // namespace fame::gr
