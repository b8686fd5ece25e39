#pragma once

// Domain types and CSV ingestion for survey preferences, rosters and
// internet fame metrics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "fame/csv.hpp"
#include "fame/date.hpp"
#include "fame/error.hpp"

namespace fame {

struct Individual {
    std::string id;
    std::string name;
    std::optional<Date> dob;
    std::optional<Date> dod;
    std::string occupation;

    friend bool operator==(const Individual&, const Individual&) = default;
};

enum class Choice { A, B, None };

inline std::string_view to_string(Choice c) {
    switch (c) {
        case Choice::A: return "A";
        case Choice::B: return "B";
        case Choice::None: return "NONE";
    }
    return "?";
}

inline Choice parse_choice(std::string_view s) {
    if (s == "A") return Choice::A;
    if (s == "B") return Choice::B;
    if (s == "NONE") return Choice::None;
    throw InputError("malformed choice token '" + std::string(s) + "' (expected A, B or NONE)");
}

/// One subject's answer to one offered pair.
struct PreferenceRecord {
    std::string subject;
    std::string id_a;
    std::string id_b;
    Choice choice = Choice::A;

    bool decisive() const noexcept { return choice != Choice::None; }
    const std::string& winner() const noexcept { return choice == Choice::B ? id_b : id_a; }
    const std::string& loser() const noexcept { return choice == Choice::B ? id_a : id_b; }

    friend bool operator==(const PreferenceRecord&, const PreferenceRecord&) = default;
};

struct PreferenceDataset {
    std::vector<Individual> roster;
    std::vector<PreferenceRecord> records;
    std::size_t dropped_none_count = 0;

    /// Position of `id` in the roster, or nullopt.
    std::optional<std::size_t> index_of(std::string_view id) const {
        for (std::size_t i = 0; i < roster.size(); ++i)
            if (roster[i].id == id) return i;
        return std::nullopt;
    }

    std::size_t decisive_count() const {
        return static_cast<std::size_t>(std::count_if(
            records.begin(), records.end(), [](const PreferenceRecord& r) { return r.decisive(); }));
    }

    friend bool operator==(const PreferenceDataset&, const PreferenceDataset&) = default;
};

enum class MetricKind { WE, GN, GH, WV, DWE_DT, DWV_DT };

inline constexpr MetricKind all_metric_kinds[] = {MetricKind::WE, MetricKind::GN, MetricKind::GH,
                                                  MetricKind::WV, MetricKind::DWE_DT,
                                                  MetricKind::DWV_DT};

inline std::string_view to_string(MetricKind k) {
    switch (k) {
        case MetricKind::WE: return "WE";
        case MetricKind::GN: return "GN";
        case MetricKind::GH: return "GH";
        case MetricKind::WV: return "WV";
        case MetricKind::DWE_DT: return "DWE_DT";
        case MetricKind::DWV_DT: return "DWV_DT";
    }
    return "?";
}

inline MetricKind parse_metric_kind(std::string_view s) {
    for (MetricKind k : all_metric_kinds)
        if (s == to_string(k)) return k;
    throw InputError("unknown metric kind '" + std::string(s) + "'");
}

/// Counts are integers; the two rate kinds are real-valued.
constexpr bool is_count_kind(MetricKind k) noexcept {
    return k != MetricKind::DWE_DT && k != MetricKind::DWV_DT;
}

struct MetricSnapshot {
    std::string id;
    MetricKind kind = MetricKind::WE;
    std::variant<std::int64_t, double> value{std::int64_t{0}};
    Date retrieved_on;

    double as_double() const {
        return std::visit([](auto v) { return static_cast<double>(v); }, value);
    }

    friend bool operator==(const MetricSnapshot&, const MetricSnapshot&) = default;
};

struct MetricDataset {
    std::string name;
    std::vector<MetricSnapshot> snapshots;
    double coverage_months = 12.0;
    double sample_fraction = 1.0;

    /// Scale from sampled event counts to events per year.
    double annualization_factor() const { return (12.0 / coverage_months) / sample_fraction; }

    /// Values of one kind, in snapshot order. Absent entries are skipped.
    std::vector<double> values(MetricKind kind) const {
        std::vector<double> out;
        for (const auto& s : snapshots)
            if (s.kind == kind) out.push_back(s.as_double());
        return out;
    }

    std::optional<double> find(std::string_view id, MetricKind kind) const {
        for (const auto& s : snapshots)
            if (s.kind == kind && s.id == id) return s.as_double();
        return std::nullopt;
    }

    /// Distinct ids in first-appearance order.
    std::vector<std::string> ids() const {
        std::vector<std::string> out;
        std::set<std::string> seen;
        for (const auto& s : snapshots)
            if (seen.insert(s.id).second) out.push_back(s.id);
        return out;
    }

    friend bool operator==(const MetricDataset&, const MetricDataset&) = default;
};

// ---------------------------------------------------------------------------
// Validation

inline void validate(const Individual& ind) {
    if (ind.id.empty()) throw InputError("individual with empty id");
    if (ind.name.empty()) throw InputError("individual '" + ind.id + "' has an empty name");
    if (ind.dob && ind.dod && !(*ind.dob < *ind.dod))
        throw InputError("individual '" + ind.id + "': date of birth is not before date of death");
}

inline void validate_roster(const std::vector<Individual>& roster) {
    std::set<std::string> ids;
    for (const auto& ind : roster) {
        validate(ind);
        if (!ids.insert(ind.id).second) throw InputError("duplicate individual id '" + ind.id + "'");
    }
}

inline void validate(const MetricDataset& ds) {
    if (!(ds.coverage_months > 0) || !std::isfinite(ds.coverage_months))
        throw InputError("dataset '" + ds.name + "': coverage_months must be positive");
    if (!(ds.sample_fraction > 0 && ds.sample_fraction <= 1))
        throw InputError("dataset '" + ds.name + "': sample_fraction must lie in (0, 1]");
    std::set<std::pair<std::string, MetricKind>> seen;
    for (const auto& s : ds.snapshots) {
        if (s.id.empty()) throw InputError("metric row with empty id");
        const bool integral = std::holds_alternative<std::int64_t>(s.value);
        if (is_count_kind(s.kind) != integral)
            throw InputError("metric " + std::string(to_string(s.kind)) + " for '" + s.id +
                             "' has the wrong value type");
        const double v = s.as_double();
        if (!(v >= 0) || !std::isfinite(v))
            throw InputError("negative or non-finite " + std::string(to_string(s.kind)) +
                             " value for '" + s.id + "'");
        if (!seen.emplace(s.id, s.kind).second)
            throw InputError("duplicate (" + s.id + ", " + std::string(to_string(s.kind)) + ") entry");
    }
}

// ---------------------------------------------------------------------------
// Parsing

namespace detail {

inline std::string where(const std::string& source, std::size_t line) {
    return source + ":" + std::to_string(line) + ": ";
}

inline std::optional<Date> parse_optional_iso(std::string_view s) {
    s = csv::trim(s);
    if (s.empty()) return std::nullopt;
    return parse_iso_date(s);
}

/// Accepts a plain number or a ratio such as `78/642`.
inline double parse_ratio(std::string_view s, std::string_view what) {
    const auto slash = s.find('/');
    if (slash == std::string_view::npos) return csv::parse_double(s, what);
    const double num = csv::parse_double(s.substr(0, slash), what);
    const double den = csv::parse_double(s.substr(slash + 1), what);
    if (den == 0) throw InputError("zero denominator in " + std::string(what));
    return num / den;
}

inline std::map<std::string, std::string> parse_key_values(const std::vector<std::string>& lines) {
    std::map<std::string, std::string> out;
    for (const auto& l : lines) {
        const auto eq = l.find('=');
        if (eq == std::string::npos) continue;
        out[std::string(csv::trim(std::string_view(l).substr(0, eq)))] =
            std::string(csv::trim(std::string_view(l).substr(eq + 1)));
    }
    return out;
}

}  // namespace detail

inline std::vector<Individual> parse_roster(std::istream& in, const std::string& source = "roster") {
    const auto doc = csv::read_document(in);
    if (doc.lines.empty()) throw InputError(source + ": missing header row");
    if (doc.lines.front().text != "id,name,dob,dod,occupation")
        throw InputError(detail::where(source, doc.lines.front().number) +
                         "expected header 'id,name,dob,dod,occupation'");
    std::vector<Individual> roster;
    for (std::size_t i = 1; i < doc.lines.size(); ++i) {
        const auto& line = doc.lines[i];
        const auto cells = csv::split(line.text);
        if (cells.size() != 5)
            throw InputError(detail::where(source, line.number) + "expected 5 columns");
        try {
            Individual ind{std::string(csv::trim(cells[0])), std::string(csv::trim(cells[1])),
                           detail::parse_optional_iso(cells[2]), detail::parse_optional_iso(cells[3]),
                           std::string(csv::trim(cells[4]))};
            validate(ind);
            roster.push_back(std::move(ind));
        } catch (const InputError& e) {
            throw InputError(detail::where(source, line.number) + e.what());
        }
    }
    validate_roster(roster);
    return roster;
}

inline std::vector<Individual> load_roster(const std::string& path) {
    auto in = csv::open_input(path);
    return parse_roster(in, path);
}

struct PreferenceLoadOptions {
    bool drop_none = true;
};

/// Reads `subject,id_a,id_b,choice` rows, or the winner/loser shape
/// `subject,winner,loser` (mapped to choice A).
inline PreferenceDataset parse_preferences(std::istream& in, std::vector<Individual> roster,
                                           PreferenceLoadOptions options = {},
                                           const std::string& source = "preferences") {
    validate_roster(roster);
    PreferenceDataset ds;
    ds.roster = std::move(roster);
    std::set<std::string> known;
    for (const auto& ind : ds.roster) known.insert(ind.id);

    const auto doc = csv::read_document(in);
    if (doc.lines.empty()) throw InputError(source + ": missing header row");
    const std::string& header = doc.lines.front().text;
    bool winner_loser = false;
    if (header == "subject,winner,loser") {
        winner_loser = true;
    } else if (header != "subject,id_a,id_b,choice") {
        throw InputError(detail::where(source, doc.lines.front().number) +
                         "expected header 'subject,id_a,id_b,choice' or 'subject,winner,loser'");
    }
    const std::size_t columns = winner_loser ? 3 : 4;

    for (std::size_t i = 1; i < doc.lines.size(); ++i) {
        const auto& line = doc.lines[i];
        const auto cells = csv::split(line.text);
        if (cells.size() != columns)
            throw InputError(detail::where(source, line.number) + "expected " +
                             std::to_string(columns) + " columns");
        PreferenceRecord rec;
        rec.subject = std::string(csv::trim(cells[0]));
        rec.id_a = std::string(csv::trim(cells[1]));
        rec.id_b = std::string(csv::trim(cells[2]));
        try {
            rec.choice = winner_loser ? Choice::A : parse_choice(csv::trim(cells[3]));
        } catch (const InputError& e) {
            throw InputError(detail::where(source, line.number) + e.what());
        }
        if (rec.subject.empty())
            throw InputError(detail::where(source, line.number) + "empty subject identifier");
        if (rec.id_a == rec.id_b)
            throw InputError(detail::where(source, line.number) + "pair compares '" + rec.id_a +
                             "' with itself");
        for (const auto* id : {&rec.id_a, &rec.id_b})
            if (!known.contains(*id))
                throw InputError(detail::where(source, line.number) + "unknown individual id '" +
                                 *id + "'");
        if (!rec.decisive() && options.drop_none) {
            ++ds.dropped_none_count;
            continue;
        }
        ds.records.push_back(std::move(rec));
    }
    return ds;
}

inline PreferenceDataset load_preferences(const std::string& path, std::vector<Individual> roster,
                                          PreferenceLoadOptions options = {}) {
    auto in = csv::open_input(path);
    return parse_preferences(in, std::move(roster), options, path);
}

inline PreferenceDataset load_preferences(const std::string& path, const std::string& roster_path,
                                          PreferenceLoadOptions options = {}) {
    return load_preferences(path, load_roster(roster_path), options);
}

/// Dataset metadata that may arrive from a sidecar file instead of the
/// comment block.
struct MetricMetadata {
    std::optional<std::string> name;
    std::optional<double> coverage_months;
    std::optional<double> sample_fraction;
};

inline MetricMetadata parse_metric_metadata(const std::vector<std::string>& key_value_lines) {
    const auto kv = detail::parse_key_values(key_value_lines);
    MetricMetadata md;
    if (auto it = kv.find("name"); it != kv.end()) md.name = it->second;
    if (auto it = kv.find("coverage_months"); it != kv.end())
        md.coverage_months = detail::parse_ratio(it->second, "coverage_months");
    if (auto it = kv.find("sample_fraction"); it != kv.end())
        md.sample_fraction = detail::parse_ratio(it->second, "sample_fraction");
    return md;
}

inline MetricDataset parse_metrics(std::istream& in, const std::string& source = "metrics",
                                   const MetricMetadata& fallback = {}) {
    const auto doc = csv::read_document(in);
    const auto header_md = parse_metric_metadata(doc.comments);

    MetricDataset ds;
    const auto name = header_md.name ? header_md.name : fallback.name;
    const auto coverage = header_md.coverage_months ? header_md.coverage_months : fallback.coverage_months;
    const auto fraction = header_md.sample_fraction ? header_md.sample_fraction : fallback.sample_fraction;
    if (!name || !coverage || !fraction)
        throw InputError(source + ": missing dataset metadata (name, coverage_months, sample_fraction)");
    ds.name = *name;
    ds.coverage_months = *coverage;
    ds.sample_fraction = *fraction;

    if (doc.lines.empty()) throw InputError(source + ": missing header row");
    if (doc.lines.front().text != "id,kind,value,retrieved_on")
        throw InputError(detail::where(source, doc.lines.front().number) +
                         "expected header 'id,kind,value,retrieved_on'");
    for (std::size_t i = 1; i < doc.lines.size(); ++i) {
        const auto& line = doc.lines[i];
        const auto cells = csv::split(line.text);
        if (cells.size() != 4) throw InputError(detail::where(source, line.number) + "expected 4 columns");
        try {
            MetricSnapshot s;
            s.id = std::string(csv::trim(cells[0]));
            s.kind = parse_metric_kind(csv::trim(cells[1]));
            if (is_count_kind(s.kind))
                s.value = csv::parse_int(cells[2], "value");
            else
                s.value = csv::parse_double(cells[2], "value");
            s.retrieved_on = parse_iso_date(csv::trim(cells[3]));
            if (s.as_double() < 0) throw InputError("negative value");
            ds.snapshots.push_back(std::move(s));
        } catch (const InputError& e) {
            throw InputError(detail::where(source, line.number) + e.what());
        }
    }
    try {
        validate(ds);
    } catch (const InputError& e) {
        throw InputError(source + ": " + e.what());
    }
    return ds;
}

/// Loads a metrics file. Metadata missing from the comment block is looked
/// up in a `<path>.meta` sidecar of `key=value` lines.
inline MetricDataset load_metrics(const std::string& path) {
    MetricMetadata sidecar;
    const std::string meta_path = path + ".meta";
    if (std::filesystem::exists(meta_path)) {
        auto meta_in = csv::open_input(meta_path);
        std::vector<std::string> lines;
        for (std::string l; std::getline(meta_in, l);) lines.push_back(l);
        sidecar = parse_metric_metadata(lines);
    }
    if (!sidecar.name) sidecar.name = std::filesystem::path(path).stem().string();
    auto in = csv::open_input(path);
    return parse_metrics(in, path, sidecar);
}

// ---------------------------------------------------------------------------
// Canonical serialization

inline void write_roster(std::ostream& out, const std::vector<Individual>& roster) {
    out << "id,name,dob,dod,occupation\n";
    for (const auto& ind : roster) {
        out << ind.id << ',' << ind.name << ',' << (ind.dob ? to_iso(*ind.dob) : "") << ','
            << (ind.dod ? to_iso(*ind.dod) : "") << ',' << ind.occupation << '\n';
    }
}

inline void write_preferences(std::ostream& out, const PreferenceDataset& ds) {
    out << "subject,id_a,id_b,choice\n";
    for (const auto& r : ds.records)
        out << r.subject << ',' << r.id_a << ',' << r.id_b << ',' << to_string(r.choice) << '\n';
}

inline void write_metrics(std::ostream& out, const MetricDataset& ds) {
    out << "# name=" << ds.name << '\n'
        << "# coverage_months=" << csv::format(ds.coverage_months) << '\n'
        << "# sample_fraction=" << csv::format(ds.sample_fraction) << '\n'
        << "id,kind,value,retrieved_on\n";
    for (const auto& s : ds.snapshots) {
        out << s.id << ',' << to_string(s.kind) << ','
            << std::visit([](auto v) { return csv::format(v); }, s.value) << ','
            << to_iso(s.retrieved_on) << '\n';
    }
}

}  // namespace fame
