#pragma once

// Generalized birthday problem: the probability that among N deaths placed
// uniformly over the days of a year, some k of them fall within a span of
// at most Δn days.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fame/csv.hpp"
#include "fame/error.hpp"
#include "fame/parallel.hpp"
#include "fame/rng.hpp"

namespace fame::coincide {

enum class Topology { circular, linear };

/// How a probability is obtained. `automatic` picks exact evaluation when
/// it is affordable and Monte Carlo otherwise.
enum class MethodChoice { automatic, exact, monte_carlo };

enum class Method { exact, monte_carlo };

inline std::string_view to_string(Topology t) { return t == Topology::circular ? "circular" : "linear"; }
inline std::string_view to_string(Method m) { return m == Method::exact ? "exact" : "monte_carlo"; }

inline Topology parse_topology(std::string_view s) {
    if (s == "circular") return Topology::circular;
    if (s == "linear") return Topology::linear;
    throw InputError("unknown topology '" + std::string(s) + "' (expected circular or linear)");
}

inline MethodChoice parse_method(std::string_view s) {
    if (s == "auto") return MethodChoice::automatic;
    if (s == "exact") return MethodChoice::exact;
    if (s == "monte_carlo" || s == "mc") return MethodChoice::monte_carlo;
    throw InputError("unknown method '" + std::string(s) + "' (expected auto, exact or monte_carlo)");
}

struct CoincidenceSpec {
    std::int64_t n_deaths = 1;
    int window_days = 0;
    int multiplicity = 2;
    int year_days = 365;
    Topology topology = Topology::circular;
    std::int64_t trials = 1'000'000;
    std::uint64_t seed = 0;
    MethodChoice method = MethodChoice::automatic;
    unsigned threads = 0;

    void validate() const {
        if (n_deaths < 1) throw std::invalid_argument("coincidence: n_deaths must be at least 1");
        if (year_days < 1) throw std::invalid_argument("coincidence: year_days must be positive");
        if (window_days < 0 || window_days >= year_days)
            throw std::invalid_argument("coincidence: window_days must lie in [0, year_days)");
        if (multiplicity != 2 && multiplicity != 3)
            throw std::invalid_argument("coincidence: multiplicity must be 2 or 3");
        if (method != MethodChoice::exact && trials < 1000)
            throw std::invalid_argument("coincidence: Monte Carlo needs at least 1000 trials");
    }
};

struct CoincidenceResult {
    double probability = 0;
    double std_error = 0;
    Method method = Method::exact;
};

/// Classic birthday problem: 1 - prod_{k=1}^{n-1} (1 - k/year_days).
inline double pair_same_day_exact(std::int64_t n_deaths, int year_days = 365) {
    if (n_deaths < 1) throw std::invalid_argument("pair_same_day_exact: n_deaths must be at least 1");
    if (year_days < 1) throw std::invalid_argument("pair_same_day_exact: year_days must be positive");
    if (n_deaths > year_days) return 1.0;
    double none = 1.0;
    for (std::int64_t k = 1; k < n_deaths; ++k) none *= 1.0 - static_cast<double>(k) / year_days;
    return 1.0 - none;
}

namespace detail {

inline long double log_choose(long double n, long double k) {
    return std::lgamma(n + 1) - std::lgamma(k + 1) - std::lgamma(n - k + 1);
}

/// Probability that no two of N draws lie within Δn days, by counting
/// placements with every gap at least Δn + 1.
inline double no_pair_probability(std::int64_t n, int window, int days, Topology topology) {
    const long double N = static_cast<long double>(n), D = days, w = window;
    const long double log_orderings = std::lgamma(N + 1) - N * std::log(D);
    if (topology == Topology::circular) {
        if (N * (w + 1) > D) return 0.0;
        // D/N * C(D - N w - 1, N - 1) arrangements of an unlabeled set
        const long double lg = std::log(D) - std::log(N) + log_choose(D - N * w - 1, N - 1) + log_orderings;
        return static_cast<double>(std::exp(lg));
    }
    if ((N - 1) * w + N > D) return 0.0;
    const long double lg = log_choose(D - (N - 1) * w, N) + log_orderings;
    return static_cast<double>(std::exp(lg));
}

/// Day-by-day transfer over the occupancy counts of the most recent Δn days.
/// Each state carries a polynomial in the total number of deaths placed so
/// far; a day holding c deaths contributes weight (1/D)^c / c!, so the
/// coefficient of x^N times N! is the probability of no k-fold coincidence.
class TransferMatrix {
public:
    TransferMatrix(int window, int multiplicity, int days, std::int64_t n)
        : w_(window), cap_(multiplicity - 1), days_(days), n_(n) {
        std::vector<int> counts(static_cast<std::size_t>(w_), 0);
        enumerate(counts, 0, 0);
        index_.assign(static_cast<std::size_t>(encode_limit()), -1);
        for (std::size_t i = 0; i < states_.size(); ++i) index_[static_cast<std::size_t>(encode(states_[i]))] = static_cast<int>(i);
        weight_.resize(static_cast<std::size_t>(cap_) + 1);
        for (int c = 0; c <= cap_; ++c)
            weight_[static_cast<std::size_t>(c)] = std::pow(1.0L / days_, c) / std::tgamma(static_cast<long double>(c) + 1);
    }

    std::size_t state_count() const { return states_.size(); }

    static double cost(int window, int multiplicity, int days, std::int64_t n, Topology topology) {
        // C(window + k - 1, k - 1) states
        double states = 1;
        for (int i = 1; i < multiplicity; ++i) states = states * (window + i) / i;
        const double starts = topology == Topology::circular ? states : 1.0;
        return starts * states * multiplicity * static_cast<double>(days) * static_cast<double>(n + 1);
    }

    double no_coincidence(Topology topology) const {
        long double coef = 0;
        if (topology == Topology::linear) {
            std::vector<Poly> dp(states_.size());
            dp[static_cast<std::size_t>(zero_index())] = unit(0, 1.0L);
            run(dp, 0);
            for (const auto& poly : dp)
                if (!poly.empty()) coef += poly[static_cast<std::size_t>(n_)];
        } else {
            for (std::size_t s0 = 0; s0 < states_.size(); ++s0) {
                const auto& first = states_[s0];
                long double wt = 1;
                int total = 0;
                for (int c : first) {
                    wt *= weight_[static_cast<std::size_t>(c)];
                    total += c;
                }
                if (total > n_) continue;
                std::vector<Poly> dp(states_.size());
                dp[s0] = unit(total, wt);
                run(dp, w_);
                for (std::size_t sf = 0; sf < states_.size(); ++sf)
                    if (!dp[sf].empty() && wraps_ok(states_[sf], first)) coef += dp[sf][static_cast<std::size_t>(n_)];
            }
        }
        if (coef <= 0) return 0.0;
        return static_cast<double>(std::exp(std::log(coef) + std::lgamma(static_cast<long double>(n_) + 1)));
    }

private:
    using Poly = std::vector<long double>;

    void enumerate(std::vector<int>& counts, std::size_t pos, int sum) {
        if (pos == counts.size()) {
            states_.push_back(counts);
            return;
        }
        for (int c = 0; sum + c <= cap_; ++c) {
            counts[pos] = c;
            enumerate(counts, pos + 1, sum + c);
        }
        counts[pos] = 0;
    }

    std::int64_t encode_limit() const {
        std::int64_t limit = 1;
        for (int i = 0; i < w_; ++i) limit *= cap_ + 1;
        return limit;
    }
    std::int64_t encode(const std::vector<int>& s) const {
        std::int64_t code = 0;
        for (int c : s) code = code * (cap_ + 1) + c;
        return code;
    }
    int zero_index() const { return index_[0]; }

    Poly unit(int degree, long double value) const {
        Poly p(static_cast<std::size_t>(n_) + 1, 0.0L);
        if (degree <= n_) p[static_cast<std::size_t>(degree)] = value;
        return p;
    }

    void run(std::vector<Poly>& dp, int first_day) const {
        // successor[s][c] = state after appending a day with c deaths, or -1
        std::vector<std::vector<int>> successor(states_.size(), std::vector<int>(static_cast<std::size_t>(cap_) + 1, -1));
        for (std::size_t s = 0; s < states_.size(); ++s) {
            int sum = 0;
            for (int c : states_[s]) sum += c;
            for (int c = 0; sum + c <= cap_; ++c) {
                std::vector<int> next(states_[s].begin() + (w_ > 0 ? 1 : 0), states_[s].end());
                if (w_ > 0) next.push_back(c);
                successor[s][static_cast<std::size_t>(c)] = index_[static_cast<std::size_t>(encode(next))];
            }
        }
        const std::size_t len = static_cast<std::size_t>(n_) + 1;
        for (int day = first_day; day < days_; ++day) {
            std::vector<Poly> next(states_.size());
            for (std::size_t s = 0; s < states_.size(); ++s) {
                if (dp[s].empty()) continue;
                for (int c = 0; c <= cap_; ++c) {
                    const int t = successor[s][static_cast<std::size_t>(c)];
                    if (t < 0) continue;
                    auto& dst = next[static_cast<std::size_t>(t)];
                    if (dst.empty()) dst.assign(len, 0.0L);
                    const long double wt = weight_[static_cast<std::size_t>(c)];
                    const std::size_t shift = static_cast<std::size_t>(c);
                    for (std::size_t i = 0; i + shift < len; ++i) dst[i + shift] += dp[s][i] * wt;
                }
            }
            dp = std::move(next);
        }
    }

    bool wraps_ok(const std::vector<int>& last, const std::vector<int>& first) const {
        for (int j = 1; j <= w_; ++j) {
            int sum = 0;
            for (int i = w_ - j; i < w_; ++i) sum += last[static_cast<std::size_t>(i)];
            for (int i = 0; i <= w_ - j; ++i) sum += first[static_cast<std::size_t>(i)];
            if (sum > cap_) return false;
        }
        return true;
    }

    int w_, cap_, days_;
    std::int64_t n_;
    std::vector<std::vector<int>> states_;
    std::vector<int> index_;
    std::vector<long double> weight_;
};

inline constexpr double exact_cost_limit = 4e8;

inline bool exact_available(const CoincidenceSpec& s) {
    if (s.multiplicity == 2) return true;
    if (s.topology == Topology::circular && s.year_days <= 2 * s.window_days) return false;
    return TransferMatrix::cost(s.window_days, s.multiplicity, s.year_days, s.n_deaths, s.topology) <=
           exact_cost_limit;
}

inline double exact_probability(const CoincidenceSpec& s) {
    const std::int64_t pigeonhole =
        static_cast<std::int64_t>(s.multiplicity - 1) * s.year_days + 1;
    if (s.n_deaths < s.multiplicity) return 0.0;
    if (s.n_deaths >= pigeonhole) return 1.0;
    if (s.multiplicity == 2) {
        if (s.window_days == 0) return pair_same_day_exact(s.n_deaths, s.year_days);
        return 1.0 - no_pair_probability(s.n_deaths, s.window_days, s.year_days, s.topology);
    }
    TransferMatrix tm(s.window_days, s.multiplicity, s.year_days, s.n_deaths);
    return std::clamp(1.0 - tm.no_coincidence(s.topology), 0.0, 1.0);
}

/// Draws days one at a time and returns the draw index (1-based) at which a
/// k-fold coincidence within Δn days first appears. `counts` must be zeroed
/// on entry and is zeroed again on exit.
template <class Engine>
std::int64_t first_coincidence(Engine& eng, std::vector<int>& counts, std::vector<int>& touched, int window,
                               int multiplicity, Topology topology, std::int64_t limit) {
    const int days = static_cast<int>(counts.size());
    std::int64_t hit = limit;
    for (std::int64_t draw = 1; draw <= limit; ++draw) {
        const int d = static_cast<int>(uniform_below(eng, static_cast<std::uint64_t>(days)));
        if (counts[static_cast<std::size_t>(d)]++ == 0) touched.push_back(d);
        bool found = false;
        if (topology == Topology::circular) {
            auto at = [&](int day) { return counts[static_cast<std::size_t>(((day % days) + days) % days)]; };
            int sum = 0;
            for (int i = d - window; i <= d; ++i) sum += at(i);
            found = sum >= multiplicity;
            for (int start = d - window + 1; !found && start <= d; ++start) {
                sum += at(start + window) - at(start - 1);
                found = sum >= multiplicity;
            }
        } else {
            auto at = [&](int day) { return day < 0 || day >= days ? 0 : counts[static_cast<std::size_t>(day)]; };
            int sum = 0;
            for (int i = d - window; i <= d; ++i) sum += at(i);
            found = sum >= multiplicity;
            for (int start = d - window + 1; !found && start <= d; ++start) {
                sum += at(start + window) - at(start - 1);
                found = sum >= multiplicity;
            }
        }
        if (found) {
            hit = draw;
            break;
        }
    }
    for (int d : touched) counts[static_cast<std::size_t>(d)] = 0;
    touched.clear();
    return hit;
}

}  // namespace detail

/// Monte Carlo distribution of the first-coincidence time. Trial t always
/// uses stream (seed, t), so the estimate for every N comes from the same
/// random days: P(N) is exactly non-decreasing in N and Δn and P3 <= P2.
class FirstHitDistribution {
public:
    FirstHitDistribution(int window, int multiplicity, int year_days, Topology topology, std::int64_t trials,
                         std::uint64_t seed, unsigned threads = 0)
        : trials_(trials) {
        if (trials < 1) throw std::invalid_argument("FirstHitDistribution: trials must be positive");
        limit_ = static_cast<std::int64_t>(multiplicity - 1) * year_days + 1;
        cumulative_.assign(static_cast<std::size_t>(limit_) + 1, 0);
        constexpr std::int64_t batch = 8192;
        const std::size_t batches = static_cast<std::size_t>((trials + batch - 1) / batch);
        std::mutex merge;
        parallel_for(
            batches,
            [&](std::size_t b) {
                std::vector<std::int64_t> local(static_cast<std::size_t>(limit_) + 1, 0);
                std::vector<int> counts(static_cast<std::size_t>(year_days), 0);
                std::vector<int> touched;
                const std::int64_t lo = static_cast<std::int64_t>(b) * batch;
                const std::int64_t hi = std::min(trials, lo + batch);
                for (std::int64_t t = lo; t < hi; ++t) {
                    auto eng = stream(seed, static_cast<std::uint64_t>(t));
                    ++local[static_cast<std::size_t>(detail::first_coincidence(
                        eng, counts, touched, window, multiplicity, topology, limit_))];
                }
                std::lock_guard lock(merge);
                for (std::size_t i = 0; i < local.size(); ++i) cumulative_[i] += local[i];
            },
            threads);
        for (std::size_t i = 1; i < cumulative_.size(); ++i) cumulative_[i] += cumulative_[i - 1];
    }

    std::int64_t trials() const { return trials_; }

    /// Trials whose first coincidence occurs within the first n draws.
    std::int64_t hits(std::int64_t n) const {
        if (n < 1) return 0;
        return cumulative_[static_cast<std::size_t>(std::min(n, limit_))];
    }

    CoincidenceResult at(std::int64_t n) const {
        CoincidenceResult r;
        r.method = Method::monte_carlo;
        r.probability = static_cast<double>(hits(n)) / static_cast<double>(trials_);
        r.std_error = std::sqrt(r.probability * (1 - r.probability) / static_cast<double>(trials_));
        return r;
    }

private:
    std::int64_t trials_;
    std::int64_t limit_;
    std::vector<std::int64_t> cumulative_;
};

inline FirstHitDistribution monte_carlo_distribution(const CoincidenceSpec& s) {
    return FirstHitDistribution(s.window_days, s.multiplicity, s.year_days, s.topology, s.trials, s.seed,
                                s.threads);
}

inline CoincidenceResult coincidence_probability(const CoincidenceSpec& spec) {
    spec.validate();
    const bool exact = spec.method == MethodChoice::exact ||
                       (spec.method == MethodChoice::automatic && detail::exact_available(spec));
    if (exact) {
        if (!detail::exact_available(spec))
            throw InputError("coincidence: exact evaluation is too large for this window and multiplicity");
        return {detail::exact_probability(spec), 0.0, Method::exact};
    }
    return monte_carlo_distribution(spec).at(spec.n_deaths);
}

/// Smallest N >= 1 with probability(N) >= target, by doubling then binary
/// search. `probability` must be non-decreasing in N.
inline std::int64_t smallest_n_reaching(double target, std::int64_t upper_bound,
                                        const std::function<double(std::int64_t)>& probability) {
    std::int64_t hi = 1;
    while (hi < upper_bound && probability(hi) < target) hi = std::min(hi * 2, upper_bound);
    std::int64_t lo = hi / 2;  // probability(lo) < target, or lo == 0
    while (hi - lo > 1) {
        const std::int64_t mid = lo + (hi - lo) / 2;
        if (probability(mid) >= target)
            hi = mid;
        else
            lo = mid;
    }
    return hi;
}

/// Smallest number of deaths whose coincidence probability reaches target.
/// `base` supplies year length, topology, trials, seed and method.
inline std::int64_t min_deaths_for(double target, int window_days, int multiplicity,
                                   CoincidenceSpec base = {}) {
    if (!(target > 0 && target < 1)) throw std::invalid_argument("min_deaths_for: target must lie in (0, 1)");
    base.window_days = window_days;
    base.multiplicity = multiplicity;
    base.n_deaths = 1;
    base.validate();
    const std::int64_t bound = static_cast<std::int64_t>(multiplicity - 1) * base.year_days + 1;

    const bool exact = base.method == MethodChoice::exact ||
                       (base.method == MethodChoice::automatic && [&] {
                           CoincidenceSpec probe = base;
                           probe.n_deaths = bound;
                           return detail::exact_available(probe);
                       }());
    if (exact) {
        return smallest_n_reaching(target, bound, [&](std::int64_t n) {
            CoincidenceSpec s = base;
            s.n_deaths = n;
            s.method = MethodChoice::exact;
            return coincidence_probability(s).probability;
        });
    }
    const auto dist = monte_carlo_distribution(base);
    return smallest_n_reaching(target, bound, [&](std::int64_t n) { return dist.at(n).probability; });
}

inline void write_curve_header(std::ostream& out) { out << "n_deaths,probability,std_error\n"; }

inline void write_curve_row(std::ostream& out, std::int64_t n, const CoincidenceResult& r) {
    out << n << ',' << csv::format(r.probability) << ',' << csv::format(r.std_error) << '\n';
}

}  // namespace fame::coincide
