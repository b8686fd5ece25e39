#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>

namespace fame::opt {

template <std::size_t N>
struct MinimizeResult {
    std::array<double, N> x{};
    double value = 0;
    std::size_t evaluations = 0;
};

struct NelderMeadOptions {
    double initial_step = 0.5;
    double f_tolerance = 1e-15;   // spread of simplex values
    double x_tolerance = 1e-10;   // simplex diameter
    std::size_t max_evaluations = 20000;
    std::size_t restarts = 3;     // re-seed the simplex at the optimum
};

/// Derivative-free Nelder-Mead simplex descent with restarts. The returned
/// value never exceeds f(start).
template <std::size_t N, class F>
MinimizeResult<N> nelder_mead(F&& f, std::array<double, N> start, const NelderMeadOptions& opt = {}) {
    using Point = std::array<double, N>;
    MinimizeResult<N> best;
    best.x = start;
    best.value = f(start);
    best.evaluations = 1;

    for (std::size_t round = 0; round <= opt.restarts; ++round) {
        std::array<Point, N + 1> simplex;
        std::array<double, N + 1> value;
        simplex[0] = best.x;
        value[0] = best.value;
        for (std::size_t i = 0; i < N; ++i) {
            simplex[i + 1] = best.x;
            simplex[i + 1][i] += opt.initial_step;
            value[i + 1] = f(simplex[i + 1]);
            ++best.evaluations;
        }

        std::array<std::size_t, N + 1> order;
        while (best.evaluations < opt.max_evaluations) {
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::sort(order.begin(), order.end(),
                      [&](std::size_t a, std::size_t b) { return value[a] < value[b]; });
            const std::size_t lo = order[0], hi = order[N], second = order[N - 1];

            double diameter = 0;
            for (std::size_t i = 0; i <= N; ++i)
                for (std::size_t k = 0; k < N; ++k)
                    diameter = std::max(diameter, std::abs(simplex[i][k] - simplex[lo][k]));
            if (std::abs(value[hi] - value[lo]) <= opt.f_tolerance * (1.0 + std::abs(value[lo])) &&
                diameter <= opt.x_tolerance * (1.0 + diameter))
                break;
            if (diameter < 1e-14) break;

            Point centroid{};
            for (std::size_t i = 0; i <= N; ++i) {
                if (i == hi) continue;
                for (std::size_t k = 0; k < N; ++k) centroid[k] += simplex[i][k] / static_cast<double>(N);
            }
            auto along = [&](double t) {
                Point p;
                for (std::size_t k = 0; k < N; ++k) p[k] = centroid[k] + t * (simplex[hi][k] - centroid[k]);
                return p;
            };

            const Point reflected = along(-1.0);
            const double fr = f(reflected);
            ++best.evaluations;
            if (fr < value[lo]) {
                const Point expanded = along(-2.0);
                const double fe = f(expanded);
                ++best.evaluations;
                if (fe < fr) {
                    simplex[hi] = expanded;
                    value[hi] = fe;
                } else {
                    simplex[hi] = reflected;
                    value[hi] = fr;
                }
                continue;
            }
            if (fr < value[second]) {
                simplex[hi] = reflected;
                value[hi] = fr;
                continue;
            }
            const bool outside = fr < value[hi];
            const Point contracted = along(outside ? -0.5 : 0.5);
            const double fc = f(contracted);
            ++best.evaluations;
            if (fc < (outside ? fr : value[hi])) {
                simplex[hi] = contracted;
                value[hi] = fc;
                continue;
            }
            for (std::size_t i = 0; i <= N; ++i) {
                if (i == lo) continue;
                for (std::size_t k = 0; k < N; ++k)
                    simplex[i][k] = simplex[lo][k] + 0.5 * (simplex[i][k] - simplex[lo][k]);
                value[i] = f(simplex[i]);
                ++best.evaluations;
            }
        }

        const std::size_t lo = static_cast<std::size_t>(
            std::min_element(value.begin(), value.end()) - value.begin());
        const bool improved = value[lo] < best.value;
        if (value[lo] <= best.value) {
            best.x = simplex[lo];
            best.value = value[lo];
        }
        if (!improved && round > 0) break;
    }
    return best;
}

}  // namespace fame::opt
