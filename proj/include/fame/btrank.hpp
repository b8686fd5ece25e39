#pragma once

// Bradley-Terry ratings from pairwise preferences.
//
// Strength p_i > 0 on the unit simplex; i is preferred over j with
// probability p_i / (p_i + p_j). Ratings are the maximum-likelihood estimate,
// found with the minorization (Zermelo/Ford) iteration
//
//     p_i <- W_i / sum_j n_ij / (p_i + p_j),     then renormalize,
//
// where W_i counts the wins of i and n_ij the comparisons between i and j.
// The MLE is finite exactly when the directed win graph is strongly
// connected.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fame/csv.hpp"
#include "fame/data.hpp"
#include "fame/error.hpp"
#include "fame/parallel.hpp"
#include "fame/rng.hpp"

namespace fame::bt {

/// Probability that an individual of strength p_i is preferred over one of
/// strength p_j.
inline double win_probability(double p_i, double p_j) {
    if (!(p_i > 0) || !(p_j > 0))
        throw std::invalid_argument("win_probability: strengths must be positive");
    return p_i / (p_i + p_j);
}

struct Score {
    std::string id;
    double p = 0;
    std::optional<double> delta_p;  // set only by the bootstrap

    friend bool operator==(const Score&, const Score&) = default;
};

/// Ratings in roster order.
struct FameScores {
    std::vector<Score> entries;

    const Score* find(std::string_view id) const {
        for (const auto& e : entries)
            if (e.id == id) return &e;
        return nullptr;
    }

    double total() const {
        double s = 0;
        for (const auto& e : entries) s += e.p;
        return s;
    }

    /// Entries by descending p; ties by id.
    std::vector<Score> ranked() const {
        auto out = entries;
        std::stable_sort(out.begin(), out.end(), [](const Score& a, const Score& b) {
            return a.p != b.p ? a.p > b.p : a.id < b.id;
        });
        return out;
    }

    friend bool operator==(const FameScores&, const FameScores&) = default;
};

/// How "no preference" records enter a fit.
enum class NonePolicy {
    ignore,    // excluded (the default; NONE rows are normally dropped at ingest)
    half_win,  // half a win to each side
};

/// Granularity of bootstrap resampling.
enum class ResampleUnit { records, subjects };

struct BTConfig {
    double tolerance = 1e-10;  // max relative change of any p per sweep
    std::size_t max_iterations = 10000;
    double pseudo_count = 0.0;  // virtual wins each way per observed pair
    std::size_t bootstrap_samples = 2000;
    std::uint64_t seed = 0;
    NonePolicy none_policy = NonePolicy::ignore;
    ResampleUnit resample = ResampleUnit::records;
    double bootstrap_pseudo_count = 0.5;  // applied to disconnected resamples only
    unsigned threads = 0;

    void validate() const {
        if (!(tolerance > 0)) throw std::invalid_argument("BTConfig: tolerance must be positive");
        if (max_iterations == 0) throw std::invalid_argument("BTConfig: max_iterations must be >= 1");
        if (!(pseudo_count >= 0)) throw std::invalid_argument("BTConfig: pseudo_count must be >= 0");
        if (bootstrap_samples == 0)
            throw std::invalid_argument("BTConfig: bootstrap_samples must be >= 1");
        if (!(bootstrap_pseudo_count > 0))
            throw std::invalid_argument("BTConfig: bootstrap_pseudo_count must be positive");
    }
};

struct BTFitResult {
    FameScores scores;
    std::size_t iterations = 0;
    double log_likelihood = 0;  // natural log, over the records used
    double llr_vs_null = 0;     // log(L_model / L_null)
    std::vector<double> comparison_likelihoods;  // one per record used
    bool none_as_half = false;
};

struct ConnectivityReport {
    bool strongly_connected = false;
    /// Strongly connected components as roster ids, each in roster order;
    /// components ordered by their first member.
    std::vector<std::vector<std::string>> components;
};

namespace detail {

/// Directed adjacency over roster indices, edge i -> j when i beat j.
using Adjacency = std::vector<std::vector<char>>;

/// Tarjan's algorithm; returns the component index of every node.
inline std::vector<std::size_t> strong_components(const Adjacency& adj, std::size_t& count) {
    const std::size_t n = adj.size();
    constexpr std::size_t unvisited = static_cast<std::size_t>(-1);
    std::vector<std::size_t> index(n, unvisited), low(n, 0), comp(n, unvisited);
    std::vector<char> on_stack(n, 0);
    std::vector<std::size_t> stack;
    std::size_t next_index = 0;
    count = 0;

    std::function<void(std::size_t)> visit = [&](std::size_t v) {
        index[v] = low[v] = next_index++;
        stack.push_back(v);
        on_stack[v] = 1;
        for (std::size_t w = 0; w < n; ++w) {
            if (!adj[v][w]) continue;
            if (index[w] == unvisited) {
                visit(w);
                low[v] = std::min(low[v], low[w]);
            } else if (on_stack[w]) {
                low[v] = std::min(low[v], index[w]);
            }
        }
        if (low[v] == index[v]) {
            std::size_t w;
            do {
                w = stack.back();
                stack.pop_back();
                on_stack[w] = 0;
                comp[w] = count;
            } while (w != v);
            ++count;
        }
    };
    for (std::size_t v = 0; v < n; ++v)
        if (index[v] == unvisited) visit(v);
    return comp;
}

inline bool strongly_connected(const Adjacency& adj) {
    if (adj.size() <= 1) return true;
    std::size_t count = 0;
    strong_components(adj, count);
    return count == 1;
}

/// Aggregated comparison counts; wins[i * n + j] = times i beat j.
struct Tally {
    std::size_t n = 0;
    std::vector<double> wins;

    explicit Tally(std::size_t size) : n(size), wins(size * size, 0.0) {}

    double& at(std::size_t i, std::size_t j) { return wins[i * n + j]; }
    double at(std::size_t i, std::size_t j) const { return wins[i * n + j]; }

    Adjacency win_graph() const {
        Adjacency adj(n, std::vector<char>(n, 0));
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) adj[i][j] = at(i, j) > 0;
        return adj;
    }

    void add_pseudo(const std::vector<char>& observed_pairs, double c) {
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (i != j && observed_pairs[i * n + j]) at(i, j) += c;
    }
};

/// A record reduced to roster indices. weight 1 for a decisive record;
/// half-win NONE records are stored as weight 0.5 in both orientations.
struct IndexedRecord {
    std::size_t winner;
    std::size_t loser;
    std::size_t subject;
    bool none;
};

struct Indexed {
    std::vector<IndexedRecord> records;  // records used by the fit
    std::size_t subjects = 0;
    std::vector<char> observed_pairs;    // symmetric n*n mask
};

inline Indexed index_records(const PreferenceDataset& ds, NonePolicy policy) {
    const std::size_t n = ds.roster.size();
    Indexed out;
    out.observed_pairs.assign(n * n, 0);
    std::vector<std::string> subjects;
    for (const auto& r : ds.records) {
        if (!r.decisive() && policy == NonePolicy::ignore) continue;
        const auto a = ds.index_of(r.winner());
        const auto b = ds.index_of(r.loser());
        if (!a || !b) throw InputError("record refers to an id missing from the roster");
        auto it = std::find(subjects.begin(), subjects.end(), r.subject);
        const std::size_t s = static_cast<std::size_t>(it - subjects.begin());
        if (it == subjects.end()) subjects.push_back(r.subject);
        out.records.push_back({*a, *b, s, !r.decisive()});
        out.observed_pairs[*a * n + *b] = out.observed_pairs[*b * n + *a] = 1;
    }
    out.subjects = subjects.size();
    return out;
}

inline void accumulate(Tally& t, const IndexedRecord& r) {
    if (r.none) {
        t.at(r.winner, r.loser) += 0.5;
        t.at(r.loser, r.winner) += 0.5;
    } else {
        t.at(r.winner, r.loser) += 1.0;
    }
}

struct Solution {
    std::vector<double> p;
    std::size_t iterations = 0;
    bool converged = false;
};

/// Minorization iteration on a tally whose win graph is strongly connected.
inline Solution solve_mm(const Tally& t, double tolerance, std::size_t max_iterations) {
    const std::size_t n = t.n;
    Solution s;
    s.p.assign(n, 1.0 / static_cast<double>(n));
    if (n == 1) {
        s.p[0] = 1.0;
        s.converged = true;
        return s;
    }
    std::vector<double> total_wins(n, 0.0), pair_counts(n * n, 0.0), next(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            total_wins[i] += t.at(i, j);
            pair_counts[i * n + j] = t.at(i, j) + t.at(j, i);
        }

    for (std::size_t it = 1; it <= max_iterations; ++it) {
        double sum = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double denom = 0;
            for (std::size_t j = 0; j < n; ++j)
                if (j != i && pair_counts[i * n + j] > 0)
                    denom += pair_counts[i * n + j] / (s.p[i] + s.p[j]);
            next[i] = total_wins[i] / denom;
            sum += next[i];
        }
        double max_rel = 0;
        for (std::size_t i = 0; i < n; ++i) {
            next[i] /= sum;
            max_rel = std::max(max_rel, std::abs(next[i] - s.p[i]) / s.p[i]);
        }
        s.p.swap(next);
        s.iterations = it;
        if (!std::isfinite(max_rel)) return s;
        if (max_rel < tolerance) {
            s.converged = true;
            return s;
        }
    }
    return s;
}

inline Adjacency graph_from(const std::vector<char>& observed_pairs, std::size_t n) {
    Adjacency adj(n, std::vector<char>(n, 0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) adj[i][j] = observed_pairs[i * n + j];
    return adj;
}

inline double record_log_likelihood(const std::vector<double>& p, const IndexedRecord& r) {
    const double pw = p[r.winner], pl = p[r.loser];
    if (r.none) return 0.5 * (std::log(pw / (pw + pl)) + std::log(pl / (pw + pl)));
    return std::log(pw / (pw + pl));
}

inline double record_likelihood(const std::vector<double>& p, const IndexedRecord& r) {
    const double pw = p[r.winner], pl = p[r.loser];
    if (r.none) return std::sqrt(pw * pl) / (pw + pl);
    return pw / (pw + pl);
}

}  // namespace detail

/// Reports whether the directed win graph (edge winner -> loser over
/// decisive records) is strongly connected, and its components.
inline ConnectivityReport check_connectivity(const PreferenceDataset& ds) {
    const std::size_t n = ds.roster.size();
    detail::Adjacency adj(n, std::vector<char>(n, 0));
    for (const auto& r : ds.records) {
        if (!r.decisive()) continue;
        const auto w = ds.index_of(r.winner());
        const auto l = ds.index_of(r.loser());
        if (w && l) adj[*w][*l] = 1;
    }
    std::size_t count = 0;
    const auto comp = detail::strong_components(adj, count);

    ConnectivityReport report;
    std::vector<std::size_t> order;  // component ids by first roster member
    for (std::size_t v = 0; v < n; ++v)
        if (std::find(order.begin(), order.end(), comp[v]) == order.end()) order.push_back(comp[v]);
    for (std::size_t c : order) {
        std::vector<std::string> members;
        for (std::size_t v = 0; v < n; ++v)
            if (comp[v] == c) members.push_back(ds.roster[v].id);
        report.components.push_back(std::move(members));
    }
    report.strongly_connected = report.components.size() <= 1;
    return report;
}

namespace detail {

inline BTFitResult assemble(const PreferenceDataset& ds, const Indexed& idx, Solution sol,
                            bool none_as_half) {
    BTFitResult result;
    result.iterations = sol.iterations;
    result.none_as_half = none_as_half;
    for (std::size_t i = 0; i < ds.roster.size(); ++i)
        result.scores.entries.push_back({ds.roster[i].id, sol.p[i], std::nullopt});
    result.comparison_likelihoods.reserve(idx.records.size());
    for (const auto& r : idx.records) {
        result.log_likelihood += record_log_likelihood(sol.p, r);
        result.comparison_likelihoods.push_back(record_likelihood(sol.p, r));
    }
    result.llr_vs_null =
        result.log_likelihood - static_cast<double>(idx.records.size()) * std::log(0.5);
    return result;
}

inline Tally tally_of(std::size_t n, const std::vector<IndexedRecord>& records) {
    Tally t(n);
    for (const auto& r : records) accumulate(t, r);
    return t;
}

}  // namespace detail

/// Maximum-likelihood ratings. Deterministic; no random numbers involved.
///
/// Throws NumericalError when the win graph is not strongly connected and
/// pseudo_count is zero (the MLE is not finite), or when the iteration has
/// not converged after max_iterations sweeps.
inline BTFitResult fit_bradley_terry(const PreferenceDataset& ds, const BTConfig& config = {}) {
    config.validate();
    const std::size_t n = ds.roster.size();
    const auto idx = detail::index_records(ds, config.none_policy);
    if (idx.records.empty()) throw InputError("fit_bradley_terry: no preference records");

    auto tally = detail::tally_of(n, idx.records);
    if (config.pseudo_count > 0) {
        if (!detail::strongly_connected(detail::graph_from(idx.observed_pairs, n)))
            throw NumericalError(
                "fit_bradley_terry: comparison graph is disconnected; ratings are not identifiable");
        tally.add_pseudo(idx.observed_pairs, config.pseudo_count);
    } else if (!detail::strongly_connected(tally.win_graph())) {
        throw NumericalError(
            "fit_bradley_terry: win graph is not strongly connected, so the maximum-likelihood "
            "ratings are not finite (set a pseudo-count to regularize)");
    }

    auto sol = detail::solve_mm(tally, config.tolerance, config.max_iterations);
    if (!sol.converged)
        throw NumericalError("fit_bradley_terry: no convergence after " +
                             std::to_string(sol.iterations) + " sweeps");
    return detail::assemble(ds, idx, std::move(sol), config.none_policy == NonePolicy::half_win);
}

/// Log-likelihood of the dataset under the given ratings (roster order),
/// using the same record selection as a fit with `policy`.
inline double log_likelihood(const PreferenceDataset& ds, const std::vector<double>& p,
                             NonePolicy policy = NonePolicy::ignore) {
    if (p.size() != ds.roster.size())
        throw std::invalid_argument("log_likelihood: rating vector does not match roster");
    const auto idx = detail::index_records(ds, policy);
    double ll = 0;
    for (const auto& r : idx.records) ll += detail::record_log_likelihood(p, r);
    return ll;
}

struct BootstrapResult {
    FameScores scores;  // full-data p with bootstrap delta_p
    std::size_t samples = 0;
    std::size_t regularized_resamples = 0;  // refit with a pseudo-count
    std::size_t nonconverged_resamples = 0;
};

/// Bootstrap standard deviations of the ratings. Resample r draws from its
/// own random stream derived from (seed, r), so results do not depend on
/// scheduling.
inline BootstrapResult bootstrap(const PreferenceDataset& ds, const BTConfig& config = {}) {
    const auto full = fit_bradley_terry(ds, config);
    const std::size_t n = ds.roster.size();
    const auto idx = detail::index_records(ds, config.none_policy);
    const std::size_t m = idx.records.size();

    std::vector<std::vector<std::size_t>> by_subject(idx.subjects);
    for (std::size_t k = 0; k < m; ++k) by_subject[idx.records[k].subject].push_back(k);

    const std::size_t samples = config.bootstrap_samples;
    std::vector<std::vector<double>> replicate(samples);
    std::vector<char> regularized(samples, 0), nonconverged(samples, 0);

    parallel_for(
        samples,
        [&](std::size_t r) {
            auto rng = stream(config.seed, r);
            detail::Tally t(n);
            if (config.resample == ResampleUnit::records) {
                for (std::size_t k = 0; k < m; ++k)
                    detail::accumulate(t, idx.records[uniform_below(rng, m)]);
            } else {
                for (std::size_t k = 0; k < idx.subjects; ++k)
                    for (std::size_t rec : by_subject[uniform_below(rng, idx.subjects)])
                        detail::accumulate(t, idx.records[rec]);
            }
            if (config.pseudo_count > 0) {
                t.add_pseudo(idx.observed_pairs, config.pseudo_count);
            } else if (!detail::strongly_connected(t.win_graph())) {
                t.add_pseudo(idx.observed_pairs, config.bootstrap_pseudo_count);
                regularized[r] = 1;
            }
            auto sol = detail::solve_mm(t, config.tolerance, config.max_iterations);
            nonconverged[r] = !sol.converged;
            replicate[r] = std::move(sol.p);
        },
        config.threads);

    BootstrapResult out;
    out.samples = samples;
    out.scores = full.scores;
    for (std::size_t i = 0; i < n; ++i) {
        double mean = 0;
        for (std::size_t r = 0; r < samples; ++r) mean += replicate[r][i];
        mean /= static_cast<double>(samples);
        double ss = 0;
        for (std::size_t r = 0; r < samples; ++r) ss += (replicate[r][i] - mean) * (replicate[r][i] - mean);
        out.scores.entries[i].delta_p =
            samples > 1 ? std::sqrt(ss / static_cast<double>(samples - 1)) : 0.0;
    }
    for (std::size_t r = 0; r < samples; ++r) {
        out.regularized_resamples += regularized[r];
        out.nonconverged_resamples += nonconverged[r];
    }
    return out;
}

/// Ratings with 1-sigma bootstrap uncertainties.
inline FameScores bootstrap_uncertainties(const PreferenceDataset& ds, const BTConfig& config = {}) {
    return bootstrap(ds, config).scores;
}

/// log(L_model / L_null), where the null model gives every recorded
/// preference probability 1/2.
inline double null_llr(const BTFitResult& fit, const PreferenceDataset& ds) {
    const std::size_t expected = fit.none_as_half ? ds.records.size() : ds.decisive_count();
    if (fit.comparison_likelihoods.size() != expected || fit.scores.entries.size() != ds.roster.size())
        throw std::invalid_argument("null_llr: fit was not produced from this dataset");
    return fit.log_likelihood - static_cast<double>(expected) * std::log(0.5);
}

struct HistogramBin {
    double lo;
    double hi;
    std::size_t count;
};

struct LikelihoodSummary {
    double fraction_above = 0;
    std::vector<HistogramBin> histogram;
};

/// Share of per-comparison likelihoods strictly above `threshold`, plus a
/// histogram on [0, 1].
inline LikelihoodSummary likelihood_fractions(const BTFitResult& fit, double threshold = 0.5,
                                              std::size_t bins = 20) {
    if (bins == 0) throw std::invalid_argument("likelihood_fractions: bins must be >= 1");
    LikelihoodSummary s;
    const auto& lk = fit.comparison_likelihoods;
    std::vector<std::size_t> counts(bins, 0);
    std::size_t above = 0;
    for (double v : lk) {
        if (v > threshold) ++above;
        auto b = static_cast<std::size_t>(v * static_cast<double>(bins));
        counts[std::min(b, bins - 1)] += 1;
    }
    s.fraction_above = lk.empty() ? 0.0 : static_cast<double>(above) / static_cast<double>(lk.size());
    for (std::size_t b = 0; b < bins; ++b)
        s.histogram.push_back({static_cast<double>(b) / static_cast<double>(bins),
                               static_cast<double>(b + 1) / static_cast<double>(bins), counts[b]});
    return s;
}

inline void write_scores_csv(std::ostream& out, const FameScores& scores) {
    out << "id,p,delta_p\n";
    for (const auto& s : scores.ranked())
        out << s.id << ',' << csv::format(s.p) << ',' << (s.delta_p ? csv::format(*s.delta_p) : "")
            << '\n';
}

inline void write_histogram_csv(std::ostream& out, const LikelihoodSummary& summary) {
    out << "bin_lo,bin_hi,count\n";
    for (const auto& b : summary.histogram)
        out << csv::format(b.lo) << ',' << csv::format(b.hi) << ',' << b.count << '\n';
}

/// Reads an `id,p,delta_p` scores file (delta_p may be empty).
inline FameScores parse_scores(std::istream& in, const std::string& source = "scores") {
    const auto doc = csv::read_document(in);
    if (doc.lines.empty() || doc.lines.front().text != "id,p,delta_p")
        throw InputError(source + ": expected header 'id,p,delta_p'");
    FameScores scores;
    for (std::size_t i = 1; i < doc.lines.size(); ++i) {
        const auto cells = csv::split(doc.lines[i].text);
        if (cells.size() != 3)
            throw InputError(source + ":" + std::to_string(doc.lines[i].number) + ": expected 3 columns");
        Score s{std::string(csv::trim(cells[0])), csv::parse_double(cells[1], "p"), std::nullopt};
        if (!csv::trim(cells[2]).empty()) s.delta_p = csv::parse_double(cells[2], "delta_p");
        if (!(s.p > 0)) throw InputError(source + ": rating for '" + s.id + "' is not positive");
        scores.entries.push_back(std::move(s));
    }
    return scores;
}

}  // namespace fame::bt
