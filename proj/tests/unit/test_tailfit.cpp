#include <catch_amalgamated.hpp>

#include <algorithm>
#include <boost/math/special_functions/zeta.hpp>
#include <cmath>
#include <numbers>
#include <sstream>

#include "fame/fame.hpp"
#include "support/oracles.hpp"

using namespace fame;
using Catch::Approx;

namespace {

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double log_likelihood_at(std::span<const std::int64_t> s, std::int64_t x_min, double alpha) {
    double n = 0, sum_log = 0;
    for (auto x : s)
        if (x >= x_min) {
            n += 1;
            sum_log += std::log(static_cast<double>(x));
        }
    return -n * std::log(static_cast<double>(oracle::hurwitz_partial_sum(alpha, static_cast<double>(x_min), 200000))) -
           alpha * sum_log;
}

}  // namespace

TEST_CASE("Hurwitz zeta agrees with independent evaluations", "[tailfit][zeta]") {
    for (double s : {1.1, 1.5, 2.0, 2.1, 2.6, 3.5, 6.0})
        CHECK(hurwitz_zeta(s, 1.0) == Approx(boost::math::zeta(s)).epsilon(1e-13));
    CHECK(hurwitz_zeta(2.0, 1.0) == Approx(std::numbers::pi * std::numbers::pi / 6).epsilon(1e-14));
    for (double s : {1.5, 1.9, 2.1, 2.5, 2.6})
        for (double q : {1.0, 7.0, 50.0, 700.0, 3071.0}) {
            INFO("s=" << s << " q=" << q);
            const double ref = static_cast<double>(oracle::hurwitz_partial_sum(s, q));
            CHECK(hurwitz_zeta(s, q) == Approx(ref).epsilon(1e-10));
        }
    // shift identity H(s, q) = q^-s + H(s, q + 1)
    for (double q : {0.5, 3.0, 31.5, 32.0, 400.0})
        CHECK(hurwitz_zeta(2.3, q) == Approx(std::pow(q, -2.3) + hurwitz_zeta(2.3, q + 1)).epsilon(1e-14));
    CHECK_THROWS_AS(hurwitz_zeta(1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(hurwitz_zeta(2.0, 0.0), std::invalid_argument);
}

TEST_CASE("power-law pmf", "[tailfit][pmf]") {
    CHECK(tail::powerlaw_pmf(2.0, 1, 1) == Approx(6.0 / (std::numbers::pi * std::numbers::pi)).epsilon(1e-13));
    CHECK(tail::powerlaw_pmf(2.0, 1, 1) == Approx(0.60793).margin(5e-6));

    const double h = static_cast<double>(oracle::hurwitz_partial_sum(2.1, 700.0));
    CHECK(tail::powerlaw_pmf(2.1, 700, 700) == Approx(std::pow(700.0, -2.1) / h).epsilon(1e-10));

    // normalization: explicit partial sum plus the survival beyond the cut
    for (auto [alpha, x_min] : std::vector<std::pair<double, std::int64_t>>{{2.5, 700}, {1.9, 20}, {2.1, 1}, {2.6, 50}}) {
        long double total = 0;
        const std::int64_t cut = x_min + 200000;
        for (std::int64_t x = x_min; x < cut; ++x) total += tail::powerlaw_pmf(alpha, x_min, x);
        total += tail::powerlaw_survival(alpha, x_min, cut);
        CHECK(std::fabs(static_cast<double>(total) - 1.0) < 1e-9);
    }
    CHECK_THROWS_AS(tail::powerlaw_pmf(1.0, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(tail::powerlaw_pmf(2.0, 10, 9), std::invalid_argument);
}

TEST_CASE("sampler", "[tailfit][sampler]") {
    const auto a = tail::sample_powerlaw(2.1, 700, 1000, 42);
    CHECK(a == tail::sample_powerlaw(2.1, 700, 1000, 42));
    CHECK_FALSE(a == tail::sample_powerlaw(2.1, 700, 1000, 43));
    for (auto x : a) CHECK(x >= 700);
    const auto one = tail::sample_powerlaw(2.5, 3, 1, 0);
    REQUIRE(one.size() == 1);
    CHECK(one[0] >= 3);
    CHECK_THROWS_AS(tail::sample_powerlaw(2.5, 3, 0, 0), std::invalid_argument);
    CHECK_THROWS_AS(tail::sample_powerlaw(1.0, 3, 5, 0), std::invalid_argument);

    SECTION("truncated mean matches the analytic value") {
        const double alpha = 2.1;
        const std::int64_t x_min = 10, cap = 10000;
        const auto draws = tail::sample_powerlaw(alpha, x_min, 100000, 7);
        double mean = 0, sq = 0;
        for (auto x : draws) {
            const double v = static_cast<double>(std::min(x, cap));
            mean += v;
            sq += v * v;
        }
        mean /= draws.size();
        const double sd = std::sqrt(sq / draws.size() - mean * mean);
        // E[min(X, cap)] = sum_{x<cap} x pmf(x) + cap P(X >= cap), from partial sums
        const double h = static_cast<double>(oracle::hurwitz_partial_sum(alpha, double(x_min)));
        long double expect = 0, below = 0;
        for (std::int64_t x = x_min; x < cap; ++x) {
            const long double pm = std::pow(static_cast<long double>(x), -alpha) / h;
            expect += x * pm;
            below += pm;
        }
        expect += cap * (1 - below);
        CHECK(std::fabs(mean - static_cast<double>(expect)) < 3 * sd / std::sqrt(double(draws.size())));
    }

    SECTION("far tail uses the continuous approximation without overflow") {
        const auto far = tail::sample_powerlaw(1.2, 1, 20000, 3);
        CHECK(*std::max_element(far.begin(), far.end()) > 1000000);
        for (auto x : far) CHECK(x >= 1);
    }
}

TEST_CASE("alpha fit", "[tailfit][alpha]") {
    SECTION("large samples") {
        for (double alpha : {1.9, 2.1, 2.6}) {
            const auto s = tail::sample_powerlaw(alpha, 700, 10000, 11);
            const auto fit = tail::fit_alpha(s, 700);
            CHECK(fit.alpha == Approx(alpha).margin(0.05));
            CHECK(fit.n_tail == 10000);
            CHECK(fit.alpha_se == Approx((fit.alpha - 1) / 100.0).epsilon(1e-12));
        }
    }

    SECTION("likelihood is maximal at the estimate") {
        const auto s = tail::sample_powerlaw(2.1, 30, 2000, 5);
        const auto fit = tail::fit_alpha(s, 30);
        const double best = log_likelihood_at(s, 30, fit.alpha);
        CHECK(fit.log_likelihood == Approx(best).epsilon(1e-9));
        CHECK(best >= log_likelihood_at(s, 30, fit.alpha + 1e-3));
        CHECK(best >= log_likelihood_at(s, 30, fit.alpha - 1e-3));
    }

    SECTION("n = 126 stays within 0.3 in at least 95 of 100 trials") {
        int ok = 0;
        for (std::uint64_t t = 0; t < 100; ++t) {
            const auto s = tail::sample_powerlaw(2.1, 700, 126, 5000 + t);
            ok += std::fabs(tail::fit_alpha(s, 700).alpha - 2.1) <= 0.3;
        }
        CHECK(ok >= 95);
    }

    SECTION("median over 100 trials is consistent") {
        for (double alpha : {1.9, 2.1, 2.6}) {
            std::vector<double> est;
            for (std::uint64_t t = 0; t < 100; ++t)
                est.push_back(tail::fit_alpha(tail::sample_powerlaw(alpha, 50, 10000, 900 + t), 50).alpha);
            CHECK(median(est) == Approx(alpha).margin(0.02));
        }
    }

    SECTION("errors") {
        const std::vector<std::int64_t> s{5, 5, 5, 9};
        CHECK_THROWS_AS(tail::fit_alpha(s, 9), InputError);
        CHECK_THROWS_AS(tail::fit_alpha(std::vector<std::int64_t>{5, 5, 5}, 5), InputError);
        CHECK_NOTHROW(tail::fit_alpha(s, 5));
    }
}

TEST_CASE("KS distance", "[tailfit][ks]") {
    SECTION("model quantiles sit within one step of the model") {
        const double alpha = 2.3;
        const std::int64_t x_min = 20;
        const std::size_t n = 400;
        std::vector<std::int64_t> s;
        std::int64_t x = x_min;
        for (std::size_t i = 1; i <= n; ++i) {
            const double target = (double(i) - 0.5) / double(n);
            while (1.0 - tail::powerlaw_survival(alpha, x_min, x + 1) < target) ++x;
            s.push_back(x);
        }
        CHECK(tail::ks_distance(s, alpha, x_min) < 1.0 / n);
    }

    SECTION("single sample") {
        const std::vector<std::int64_t> s{10};
        const double d = tail::ks_distance(s, 2.0, 10);
        CHECK(d == Approx(1.0 - tail::powerlaw_pmf(2.0, 10, 10)).epsilon(1e-12));
        CHECK(d <= 1.0);
    }

    SECTION("true parameters on a large sample") {
        const auto s = tail::sample_powerlaw(2.1, 700, 10000, 21);
        CHECK(tail::ks_distance(s, 2.1, 700) < 0.02);
    }

    CHECK_THROWS_AS(tail::ks_distance(std::vector<std::int64_t>{3, 4}, 2.0, 10), InputError);
}

TEST_CASE("x_min selection", "[tailfit][xmin]") {
    SECTION("pure power law") {
        const auto s = tail::sample_powerlaw(2.5, 50, 10000, 0);
        const auto fit = tail::select_xmin(s);
        CHECK(fit.alpha == Approx(2.5).margin(0.1));
        CHECK(fit.plateau_lo <= fit.x_min);
        CHECK(fit.x_min <= fit.plateau_hi);
        CHECK(std::find(s.begin(), s.end(), fit.x_min) != s.end());
        CHECK(fit.log_c == Approx(-std::log(hurwitz_zeta(fit.alpha, double(fit.x_min)))));
        CHECK(std::exp(fit.log_c) * hurwitz_zeta(fit.alpha, double(fit.x_min)) == Approx(1.0).epsilon(1e-12));
    }

    SECTION("selected candidate has the smallest KS of the scan") {
        const auto s = tail::sample_powerlaw(2.1, 5, 3000, 8);
        const auto scan = tail::scan_xmin(s);
        const auto fit = tail::select_xmin(s);
        for (const auto& c : scan) {
            CHECK(fit.ks_distance <= c.ks);
            CHECK(c.n_tail >= 5);
            CHECK(c.ks == Approx(tail::ks_distance(s, c.alpha, c.x_min)).margin(1e-12));
            if (c.x_min == fit.x_min) CHECK(c.alpha == fit.alpha);
        }
        tail::ScanOptions threads1, threads4;
        threads1.threads = 1;
        threads4.threads = 4;
        const auto a = tail::select_xmin(s, threads1), b = tail::select_xmin(s, threads4);
        CHECK(a.x_min == b.x_min);
        CHECK(a.alpha == b.alpha);
    }

    SECTION("body below the cutoff is rejected by the scan") {
        // exponential-ish body under a power-law tail starting at 100
        auto s = tail::sample_powerlaw(2.2, 100, 5000, 4);
        auto rng = stream(4, 1);
        for (int i = 0; i < 5000; ++i) s.push_back(1 + static_cast<std::int64_t>(uniform_below(rng, 99)));
        const auto fit = tail::select_xmin(s);
        CHECK(fit.x_min >= 90);
        CHECK(fit.alpha == Approx(2.2).margin(0.15));
        // every candidate inside the uniform body fits clearly worse
        for (const auto& c : tail::scan_xmin(s))
            if (c.x_min < 90) CHECK(c.ks > 1.5 * fit.ks_distance);
    }

    SECTION("range restriction") {
        const auto s = tail::sample_powerlaw(2.1, 5, 3000, 8);
        tail::ScanOptions opts;
        opts.lo = 10;
        opts.hi = 40;
        for (const auto& c : tail::scan_xmin(s, opts)) {
            CHECK(c.x_min >= 10);
            CHECK(c.x_min <= 40);
        }
    }

    SECTION("too few distinct values") {
        CHECK_THROWS_AS(tail::select_xmin(std::vector<std::int64_t>(50, 7)), InputError);
        CHECK_THROWS_AS(tail::select_xmin(std::vector<std::int64_t>{1, 2, 3, 4, 5, 6, 7, 8, 9}), InputError);
    }
}

TEST_CASE("survival comparison, bootstrap SE and goodness of fit", "[tailfit][extras]") {
    const auto s = tail::sample_powerlaw(2.1, 20, 2000, 12);
    const auto fit = tail::select_xmin(s);
    const auto curve = tail::survival_comparison(s, fit.alpha, fit.x_min);
    REQUIRE_FALSE(curve.empty());
    CHECK(curve.front().empirical_survival == Approx(1.0));
    CHECK(curve.front().model_survival == Approx(1.0));
    for (std::size_t i = 1; i < curve.size(); ++i) {
        CHECK(curve[i].x > curve[i - 1].x);
        CHECK(curve[i].empirical_survival <= curve[i - 1].empirical_survival);
        CHECK(curve[i].model_survival <= curve[i - 1].model_survival);
    }

    const double se = tail::alpha_se_bootstrap(s, fit.x_min, 200, 3);
    CHECK(se == Approx(fit.alpha_se).epsilon(0.35));
    CHECK(se == tail::alpha_se_bootstrap(s, fit.x_min, 200, 3));

    const double pv = tail::gof_pvalue(s, fit, 50, 1);
    CHECK(pv >= 0.0);
    CHECK(pv <= 1.0);
    CHECK(pv == tail::gof_pvalue(s, fit, 50, 1));

    std::ostringstream out;
    tail::write_fit_header(out);
    tail::write_fit_row(out, "synthetic", fit);
    CHECK(out.str().starts_with("dataset,alpha,alpha_se,x_min,plateau_lo,plateau_hi,ks,n_tail\nsynthetic,"));
    std::ostringstream surv;
    tail::write_survival_csv(surv, curve);
    CHECK(surv.str().starts_with("x,empirical_survival,model_survival\n"));
}
