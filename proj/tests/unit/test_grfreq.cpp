#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fame/fame.hpp"
#include "support/oracles.hpp"

using namespace fame;
using Catch::Approx;

namespace {

/// Curve sampled exactly from the closed form on log-spaced x.
gr::FrequencyCurve exact_curve(double a, double b, double nu, double lo = 100, double hi = 2e5, int points = 40) {
    gr::FrequencyCurve c;
    for (int i = 0; i < points; ++i) {
        const double x = lo * std::pow(hi / lo, double(i) / double(points - 1));
        c.points.push_back({x, oracle::gr_value(a, b, nu, x)});
    }
    return c;
}

}  // namespace

TEST_CASE("cumulative frequency", "[grfreq][curve]") {
    const std::vector<double> s{5, 1, 3, 3, 10};
    const auto c = gr::cumulative_frequency(s, 2.0);
    REQUIRE(c.points.size() == 4);
    CHECK(c.points[0] == gr::FrequencyPoint{1, 10});
    CHECK(c.points[1] == gr::FrequencyPoint{3, 8});
    CHECK(c.points[2] == gr::FrequencyPoint{5, 4});
    CHECK(c.points[3] == gr::FrequencyPoint{10, 2});

    SECTION("largest sample occurs once per year at factor 1") {
        const auto fx = table1::load();
        const auto curve = gr::cumulative_frequency(fx.metrics, MetricKind::WE);
        CHECK(curve.annualization_factor == 1.0);
        CHECK(curve.points.back().x == 13975);
        CHECK(curve.points.back().f == 1.0);
        CHECK(curve.points.front().f == 20.0);
    }

    SECTION("non-increasing with the maximum at the smallest sample") {
        const auto draws = tail::sample_powerlaw(2.0, 3, 2000, 1);
        std::vector<double> v(draws.begin(), draws.end());
        const auto curve = gr::cumulative_frequency(v, 98.77);
        for (std::size_t i = 1; i < curve.points.size(); ++i) {
            CHECK(curve.points[i].x > curve.points[i - 1].x);
            CHECK(curve.points[i].f <= curve.points[i - 1].f);
        }
        CHECK(curve.points.front().x == *std::min_element(v.begin(), v.end()));
        CHECK(curve.points.front().f == Approx(98.77 * 2000));
    }

    SECTION("doubling every count doubles every frequency") {
        std::vector<double> twice = s;
        twice.insert(twice.end(), s.begin(), s.end());
        const auto d = gr::cumulative_frequency(twice, 2.0);
        REQUIRE(d.points.size() == c.points.size());
        for (std::size_t i = 0; i < c.points.size(); ++i) {
            CHECK(d.points[i].x == c.points[i].x);
            CHECK(d.points[i].f == 2 * c.points[i].f);
        }
    }

    SECTION("annualization uses coverage and sampling fraction") {
        MetricDataset ds;
        ds.name = "Wiki";
        ds.coverage_months = 1;
        ds.sample_fraction = 78.0 / 642.0;
        ds.snapshots.push_back({"a", MetricKind::WE, std::int64_t{40}, {2017, 1, 1}});
        const auto curve = gr::cumulative_frequency(ds, MetricKind::WE);
        CHECK(curve.annualization_factor == Approx(98.77).margin(0.01));
        CHECK(curve.points.front().f == Approx(12.0 * 642.0 / 78.0));
        CHECK_THROWS_AS(gr::cumulative_frequency(ds, MetricKind::GN), InputError);
        ds.coverage_months = 0;
        CHECK_THROWS_AS(gr::cumulative_frequency(ds, MetricKind::WE), InputError);
    }
}

TEST_CASE("closed-form evaluation", "[grfreq][eval]") {
    const gr::GRFit fit{0.0079, 3e6, 1.5, 0};
    CHECK(gr::eval_gr(fit, 1000) == Approx(1.0 / (0.0079 + std::pow(10.0, 4.5) / 3e6)).epsilon(1e-14));
    CHECK(gr::eval_gr(fit, 1000) == Approx(54.3).margin(0.1));
    CHECK(gr::eval_gr(fit, 1e-12) == Approx(1.0 / 0.0079).epsilon(1e-6));
    for (double x = 0.5; x < 1e7; x *= 1.7) CHECK(gr::eval_gr(fit, 2 * x) <= gr::eval_gr(fit, x));
    CHECK_THROWS_AS(gr::eval_gr(fit, 0), std::invalid_argument);
}

TEST_CASE("fit recovers generating parameters", "[grfreq][fit]") {
    SECTION("published triple") {
        const auto fit = gr::fit_gutenberg_richter(exact_curve(0.0079, 3e6, 1.5));
        CHECK(fit.nu == Approx(1.5).epsilon(0.05));
        CHECK(fit.a == Approx(0.0079).epsilon(0.2));
        CHECK(fit.b == Approx(3e6).epsilon(0.2));
        CHECK(fit.residual < 1e-4);
    }

    SECTION("pure power law") {
        gr::FrequencyCurve c;
        for (int i = 0; i < 30; ++i) {
            const double x = 10 * std::pow(1.4, i);
            c.points.push_back({x, 5e4 * std::pow(x, -1.7)});
        }
        const auto fit = gr::fit_gutenberg_richter(c);
        CHECK(fit.nu == Approx(1.7).epsilon(0.01));
        CHECK(fit.a < 1e-6);
    }

    SECTION("other shapes") {
        for (auto [a, b, nu] : std::vector<std::array<double, 3>>{{0.05, 1e5, 2.0}, {0.001, 2e7, 1.2}, {0.02, 4e8, 2.6}}) {
            const auto fit = gr::fit_gutenberg_richter(exact_curve(a, b, nu, 10, 1e5));
            INFO("a=" << a << " b=" << b << " nu=" << nu);
            CHECK(fit.nu == Approx(nu).epsilon(0.05));
            CHECK(fit.a == Approx(a).epsilon(0.2));
            CHECK(fit.b == Approx(b).epsilon(0.2));
        }
    }
}

TEST_CASE("fit invariants", "[grfreq][invariants]") {
    const auto draws = tail::sample_powerlaw(2.1, 20, 500, 9);
    std::vector<double> v(draws.begin(), draws.end());
    const auto curve = gr::cumulative_frequency(v, 6.0);
    const auto fit = gr::fit_gutenberg_richter(curve);
    CHECK(fit.a >= 0);
    CHECK(fit.b > 0);
    CHECK(fit.nu > 0);

    SECTION("no start beats the result") {
        for (const auto& start : gr::multistart_points(curve))
            CHECK(fit.residual <= gr::gr_residual(curve, start) + 1e-15);
        CHECK(gr::multistart_points(curve).size() == 8);
        CHECK(fit.residual == Approx(gr::gr_residual(curve, {std::log(fit.a), std::log(fit.b), fit.nu})).epsilon(1e-9));
    }

    SECTION("point order and duplicates do not matter") {
        auto shuffled = curve;
        std::reverse(shuffled.points.begin(), shuffled.points.end());
        shuffled.points.push_back(shuffled.points[3]);
        shuffled.points.push_back(shuffled.points[0]);
        const auto again = gr::fit_gutenberg_richter(shuffled);
        CHECK(again.a == fit.a);
        CHECK(again.b == fit.b);
        CHECK(again.nu == fit.nu);
        CHECK(again.residual == fit.residual);
    }

    SECTION("deterministic") {
        const auto again = gr::fit_gutenberg_richter(curve);
        CHECK(again.nu == fit.nu);
        CHECK(again.b == fit.b);
    }
}

TEST_CASE("fit preconditions", "[grfreq][errors]") {
    gr::FrequencyCurve c;
    c.points = {{1, 5}, {2, 3}, {3, 1}};
    CHECK_THROWS_AS(gr::fit_gutenberg_richter(c), InputError);
    c.points.push_back({3, 1});
    CHECK_THROWS_AS(gr::fit_gutenberg_richter(c), InputError);
    CHECK_THROWS_AS(gr::cumulative_frequency(std::vector<double>{}, 1.0), InputError);
}

TEST_CASE("curve and fit CSV", "[grfreq][io]") {
    const auto curve = gr::cumulative_frequency(std::vector<double>{1, 2, 4, 8, 16}, 1.0);
    std::ostringstream c, f;
    gr::write_curve_csv(c, curve);
    CHECK(c.str() == "x,f_per_year\n1,5\n2,4\n4,3\n8,2\n16,1\n");
    gr::write_fit_header(f);
    gr::write_fit_row(f, "t", gr::fit_gutenberg_richter(curve));
    CHECK(f.str().starts_with("dataset,a,b,nu,residual\nt,"));
}
