#pragma once

// Synthetic pairwise-preference surveys drawn from known strengths.

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fame/btrank.hpp"
#include "fame/data.hpp"
#include "fame/rng.hpp"

namespace fame::sim {

struct SurveyDesign {
    std::size_t subjects = 50;
    std::size_t pairs_per_subject = 50;  // distinct unordered pairs per subject
    double none_rate = 0.0;              // chance a subject answers "no preference"
    std::uint64_t seed = 0;
};

inline std::string subject_label(std::size_t s) {
    std::string digits = std::to_string(s + 1);
    if (digits.size() < 2) digits.insert(0, 2 - digits.size(), '0');
    return "s" + digits;
}

/// Each subject sees `pairs_per_subject` distinct pairs in random order and
/// random presentation (A/B), answering NONE with probability none_rate and
/// otherwise preferring A with probability p_A / (p_A + p_B).
/// Subject s draws from stream (seed, s).
inline PreferenceDataset simulate_survey(const std::vector<Individual>& roster, const std::vector<double>& p,
                                         const SurveyDesign& design) {
    const std::size_t n = roster.size();
    if (p.size() != n) throw std::invalid_argument("simulate_survey: strengths do not match roster");
    if (n < 2) throw std::invalid_argument("simulate_survey: need at least two individuals");
    const std::size_t pair_count = n * (n - 1) / 2;
    if (design.pairs_per_subject > pair_count)
        throw std::invalid_argument("simulate_survey: more pairs per subject than distinct pairs");
    if (!(design.none_rate >= 0 && design.none_rate < 1))
        throw std::invalid_argument("simulate_survey: none_rate must lie in [0, 1)");

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    pairs.reserve(pair_count);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);

    PreferenceDataset ds;
    ds.roster = roster;
    std::vector<std::size_t> order(pair_count);
    for (std::size_t s = 0; s < design.subjects; ++s) {
        auto rng = stream(design.seed, s);
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t k = 0; k < design.pairs_per_subject; ++k) {
            const std::size_t pick = k + static_cast<std::size_t>(uniform_below(rng, pair_count - k));
            std::swap(order[k], order[pick]);
            auto [a, b] = pairs[order[k]];
            if (uniform01(rng) < 0.5) std::swap(a, b);
            PreferenceRecord rec{subject_label(s), roster[a].id, roster[b].id, Choice::A};
            if (uniform01(rng) < design.none_rate)
                rec.choice = Choice::None;
            else
                rec.choice = uniform01(rng) < bt::win_probability(p[a], p[b]) ? Choice::A : Choice::B;
            ds.records.push_back(std::move(rec));
        }
    }
    return ds;
}

}  // namespace fame::sim
