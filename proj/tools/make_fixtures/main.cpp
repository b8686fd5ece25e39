// Regenerates the bundled files under data/ from the embedded Table 1
// fixture: roster, metrics, titles, a synthetic survey and recorded wiki
// responses.
//
//   make_fixtures <data-dir>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "fame/simulate.hpp"
#include "fame/table1.hpp"
#include "fame/wiki.hpp"

namespace fs = std::filesystem;
using namespace fame;

namespace {

// Ali (0.18) and Prince (0.17) are nearly tied; 2020 is the first seed from
// 2017 upward whose realization ranks Ali first, as the published table does.
constexpr std::uint64_t survey_seed = 2020;
// 1679 of 2500 offered comparisons were decisive in the original survey.
constexpr double survey_none_rate = 821.0 / 2500.0;
constexpr Date views_first{2015, 7, 1};

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
}

/// Daily views over [first, last] with a spike around the date of death,
/// a weekly cycle, and a total of exactly mean * days.
std::vector<wiki::Sample> views_profile(const DateRange& range, const Date& death, std::int64_t mean) {
    const auto days = static_cast<std::size_t>(range.days());
    const auto total = static_cast<std::int64_t>(days) * mean;
    std::vector<double> weight(days);
    const double death_day = static_cast<double>(to_days(death) - to_days(range.first));
    for (std::size_t d = 0; d < days; ++d) {
        const double t = static_cast<double>(d);
        const double spike = t >= death_day ? 40.0 * std::exp(-(t - death_day) / 6.0) : 0.0;
        weight[d] = 1.0 + 0.15 * std::sin(2.0 * 3.141592653589793 * t / 7.0) + spike;
    }
    const double sum = std::accumulate(weight.begin(), weight.end(), 0.0);

    std::vector<std::int64_t> views(days);
    std::vector<std::pair<double, std::size_t>> remainder(days);
    std::int64_t assigned = 0;
    for (std::size_t d = 0; d < days; ++d) {
        const double exact = static_cast<double>(total) * weight[d] / sum;
        views[d] = static_cast<std::int64_t>(std::floor(exact));
        assigned += views[d];
        remainder[d] = {exact - std::floor(exact), d};
    }
    std::sort(remainder.begin(), remainder.end(),
              [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
    for (std::int64_t k = 0; k < total - assigned; ++k) ++views[remainder[static_cast<std::size_t>(k)].second];

    std::vector<wiki::Sample> out;
    for (std::size_t d = 0; d < days; ++d)
        out.push_back({add_days(range.first, static_cast<std::int64_t>(d)), static_cast<double>(views[d])});
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: make_fixtures <data-dir>\n";
        return 2;
    }
    try {
        const fs::path dir = argv[1];
        fs::create_directories(dir / "wiki_fixtures");
        const auto fx = table1::load();

        std::ostringstream roster, metrics, survey;
        write_roster(roster, fx.roster);
        write_file(dir / "individuals.csv", roster.str());
        write_metrics(metrics, fx.metrics);
        write_file(dir / "table1_metrics.csv", metrics.str());

        sim::SurveyDesign design;
        design.none_rate = survey_none_rate;
        design.seed = survey_seed;
        const auto ds = sim::simulate_survey(fx.roster, table1::normalized_p(fx), design);
        write_preferences(survey, ds);
        write_file(dir / "synthetic_survey.csv", survey.str());

        std::ostringstream titles;
        titles << "id,title\n";
        for (const auto& person : fx.roster) titles << person.id << ',' << person.name << '\n';
        write_file(dir / "titles.csv", titles.str());

        const DateRange views_range{views_first, table1::views_date};
        for (const auto& person : fx.roster) {
            const auto we = fx.metrics.find(person.id, MetricKind::WE);
            const auto rate = fx.metrics.find(person.id, MetricKind::DWV_DT);
            write_file(dir / "wiki_fixtures" /
                           wiki::record_filename(person.name, wiki::Metric::edit_count, to_iso(table1::counts_date)),
                       wiki::detail::edit_record(person.name, table1::counts_date, static_cast<std::int64_t>(*we)));
            write_file(dir / "wiki_fixtures" /
                           wiki::record_filename(person.name, wiki::Metric::pageviews, wiki::range_key(views_range)),
                       wiki::detail::views_record(person.name, views_range,
                                                  views_profile(views_range, *person.dod,
                                                                static_cast<std::int64_t>(*rate))));
        }
        std::cout << "wrote fixtures to " << dir << "\n";
    } catch (const std::exception& e) {
        std::cerr << "make_fixtures: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
