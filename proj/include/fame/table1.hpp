#pragma once

// Bundled fixture: survey ratings and internet metrics for twenty individuals
// who died in 2016-2017, transcribed cell for cell (including the published
// M/D/YYYY dates and thousands separators).

#include <string>
#include <string_view>
#include <vector>

#include "fame/csv.hpp"
#include "fame/data.hpp"
#include "fame/date.hpp"

namespace fame::table1 {

// ID|Name|DOB|DOD|p|dp|WE|GN|GH|WV|dWE/dt|dWV/dt
inline constexpr std::string_view raw_rows = R"(01|Muhammad Ali|1/17/1942|6/3/2016|0.18|0.03|10,909|280,000|69,300,000|250,833|61|36,516
02|Fidel Castro|8/13/1926|11/25/2016|0.17|0.03|13,975|149,000|39,800,000|110,573|76|13,685
03|Prince|6/7/1958|4/21/2016|0.17|0.03|10,102|2,520,000|768,000,000|199,107|56|47,565
04|Nancy Reagan|7/6/1921|3/6/2016|0.079|0.012|3,664|23,200|13,200,000|42,626|19|5,904
05|Arnold Palmer|9/10/1929|9/25/2016|0.062|0.011|1,933|112,000|36,300,000|44,455|11|3,961
06|Alan Rickman|2/21/1946|1/15/2016|0.057|0.010|3,666|62,000|585,000|117,690|20|19,510
07|Harper Lee|4/28/1926|2/19/2016|0.042|0.007|4,193|15,100|59,600,000|32,566|24|5,384
08|George Michael|6/25/1963|12/25/2016|0.040|0.007|7,025|432,000|403,000,000|115,813|39|3,652
09|John Glenn|7/18/1921|12/8/2016|0.037|0.007|3,920|84,000|125,000,000|72,615|23|3,088
10|Debbie Reynolds|4/1/1932|12/28/2016|0.036|0.006|2,037|95,900|27,300,000|118,990|12|3,934
11|Gene Wilder|6/11/1933|8/29/2016|0.032|0.006|2,303|20,400|10,600,000|85,083|14|10,458
12|Christina Grimmie|3/12/1994|6/10/2016|0.018|0.004|3,071|21,500|631,000|206,297|42|11,236
13|Bill Paxton|5/17/1955|2/25/2017|0.018|0.004|1,530|1,220,000|30,500,000|166,144|10|2,580
14|Kimbo Slice|2/8/1974|6/6/2016|0.016|0.003|4,213|13,000|540,000|109,950|29|8,307
15|Elie Wiesel|9/30/1928|7/2/2016|0.015|0.003|5,637|8,960|6,560,000|33,537|31|2,700
16|Juan Gabriel|1/7/1950|8/28/2016|0.012|0.003|1,399|41,500|78,600,000|11,594|9|3,375
17|Vanity|1/4/1959|2/15/2016|0.0081|0.0020|1,040|1,480|8,970,000|17,233|7|3,771
18|Keith Emerson|11/2/1944|3/11/2016|0.0041|0.0013|1,629|7,170|4,370,000|13,816|9|1,541
19|Phife Dawg|11/20/1970|3/22/2016|0.0038|0.0012|525|6,700|459,000|16,783|4|2,579
20|Afeni Shakur|1/10/1947|5/2/2016|0.0029|0.0010|736|3,220|355,000|128,852|4|1,585
)";

// WE, GN and GH were collected on 2017-03-08; WV and the page-view rate on
// 2017-06-29; the edit rate covers page creation through June 2017.
inline constexpr Date counts_date{2017, 3, 8};
inline constexpr Date views_date{2017, 6, 29};
inline constexpr Date edit_rate_date{2017, 6, 30};

struct PublishedScore {
    std::string id;
    double p;
    double delta_p;
};

struct Fixture {
    std::vector<Individual> roster;
    std::vector<PublishedScore> scores;
    MetricDataset metrics;

    std::optional<PublishedScore> score(std::string_view id) const {
        for (const auto& s : scores)
            if (s.id == id) return s;
        return std::nullopt;
    }
};

namespace detail {
inline std::int64_t parse_grouped(std::string_view s) {
    std::string digits;
    for (char c : s)
        if (c != ',') digits += c;
    return csv::parse_int(digits, "fixture count");
}

inline std::vector<std::string> split_bar(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto bar = line.find('|', start);
        out.emplace_back(line.substr(start, bar - start));
        if (bar == std::string_view::npos) break;
        start = bar + 1;
    }
    return out;
}
}  // namespace detail

/// Parses the bundled table. This is the only loader that accepts M/D/YYYY.
inline Fixture load() {
    Fixture fx;
    fx.metrics.name = "Table1";
    fx.metrics.coverage_months = 12.0;
    fx.metrics.sample_fraction = 1.0;

    std::string_view rest = raw_rows;
    while (!rest.empty()) {
        const auto nl = rest.find('\n');
        const std::string_view line = rest.substr(0, nl);
        rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
        if (line.empty()) continue;
        const auto f = detail::split_bar(line);

        fx.roster.push_back({f[0], f[1], parse_us_date(f[2]), parse_us_date(f[3]), ""});
        fx.scores.push_back({f[0], csv::parse_double(f[4], "p"), csv::parse_double(f[5], "delta_p")});

        auto& snaps = fx.metrics.snapshots;
        snaps.push_back({f[0], MetricKind::WE, detail::parse_grouped(f[6]), counts_date});
        snaps.push_back({f[0], MetricKind::GN, detail::parse_grouped(f[7]), counts_date});
        snaps.push_back({f[0], MetricKind::GH, detail::parse_grouped(f[8]), counts_date});
        snaps.push_back({f[0], MetricKind::WV, detail::parse_grouped(f[9]), views_date});
        snaps.push_back({f[0], MetricKind::DWE_DT, static_cast<double>(detail::parse_grouped(f[10])),
                         edit_rate_date});
        snaps.push_back({f[0], MetricKind::DWV_DT, static_cast<double>(detail::parse_grouped(f[11])),
                         views_date});
    }
    validate_roster(fx.roster);
    validate(fx.metrics);
    return fx;
}

/// Published ratings renormalized onto the simplex (the printed values are
/// rounded and sum to 1.0029).
inline std::vector<double> normalized_p(const Fixture& fx) {
    double total = 0;
    for (const auto& s : fx.scores) total += s.p;
    std::vector<double> p;
    for (const auto& s : fx.scores) p.push_back(s.p / total);
    return p;
}

}  // namespace fame::table1
