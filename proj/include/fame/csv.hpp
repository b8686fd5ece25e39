#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fame/error.hpp"

namespace fame::csv {

/// Splits one line on commas. Tokens in this toolkit never need quoting.
inline std::vector<std::string> split(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        out.emplace_back(line.substr(start, comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

/// A physical line with its 1-based position, for error messages.
struct Line {
    std::size_t number;
    std::string text;
};

/// Reads a stream, separating leading `#` comment lines from data lines.
/// Blank lines are skipped; a UTF-8 BOM on the first line is dropped.
struct Document {
    std::vector<std::string> comments;  // without the leading '#'
    std::vector<Line> lines;            // header first, then data rows
};

inline Document read_document(std::istream& in) {
    Document doc;
    std::string raw;
    std::size_t number = 0;
    while (std::getline(in, raw)) {
        ++number;
        std::string_view v = raw;
        if (number == 1 && v.starts_with("\xEF\xBB\xBF")) v.remove_prefix(3);
        v = trim(v);
        if (v.empty()) continue;
        if (v.front() == '#') {
            doc.comments.emplace_back(trim(v.substr(1)));
            continue;
        }
        doc.lines.push_back({number, std::string(v)});
    }
    return doc;
}

inline std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    return in;
}

inline std::string read_file(const std::string& path) {
    auto in = open_input(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::int64_t parse_int(std::string_view s, std::string_view what) {
    std::int64_t v = 0;
    s = trim(s);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
        throw InputError("malformed integer for " + std::string(what) + ": '" + std::string(s) + "'");
    return v;
}

inline double parse_double(std::string_view s, std::string_view what) {
    double v = 0;
    s = trim(s);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
        throw InputError("malformed number for " + std::string(what) + ": '" + std::string(s) + "'");
    return v;
}

/// Shortest round-trip representation; byte-stable across runs.
inline std::string format(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

inline std::string format(std::int64_t v) { return std::to_string(v); }

/// Fixed significant-digit rendering for human-facing report columns.
inline std::string format_sig(double v, int digits) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, digits);
    return std::string(buf, ptr);
}

inline std::string join(const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += cells[i];
    }
    return out;
}

}  // namespace fame::csv
