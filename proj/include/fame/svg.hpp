#pragma once

// Minimal static SVG plots: scatter points and polylines on linear or
// logarithmic axes, with decade ticks on log axes.

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "fame/csv.hpp"

namespace fame::svg {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    bool line = false;  // polyline instead of markers
    std::string color = "#1f77b4";
};

struct Plot {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = true;
    bool log_y = true;
    std::vector<Series> series;
};

namespace detail {

inline std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string num(double v) { return csv::format_sig(v, 6); }

}  // namespace detail

inline void write(std::ostream& out, const Plot& plot) {
    constexpr double width = 640, height = 480, left = 70, right = 20, top = 40, bottom = 60;
    auto tx = [&](double v) { return plot.log_x ? std::log10(v) : v; };
    auto ty = [&](double v) { return plot.log_y ? std::log10(v) : v; };
    auto usable = [&](double x, double y) {
        return std::isfinite(x) && std::isfinite(y) && (!plot.log_x || x > 0) && (!plot.log_y || y > 0);
    };

    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const auto& s : plot.series)
        for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
            if (!usable(s.x[i], s.y[i])) continue;
            x0 = std::min(x0, tx(s.x[i]));
            x1 = std::max(x1, tx(s.x[i]));
            y0 = std::min(y0, ty(s.y[i]));
            y1 = std::max(y1, ty(s.y[i]));
        }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
    if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
    if (plot.log_x) x0 = std::floor(x0), x1 = std::ceil(x1);
    if (plot.log_y) y0 = std::floor(y0), y1 = std::ceil(y1);

    const double pw = width - left - right, ph = height - top - bottom;
    auto px = [&](double v) { return left + (tx(v) - x0) / (x1 - x0) * pw; };
    auto py = [&](double v) { return top + ph - (ty(v) - y0) / (y1 - y0) * ph; };

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
        << detail::escape(plot.title) << "</text>\n";
    out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"black\"/>\n";

    auto ticks = [](double lo, double hi, bool log) {
        std::vector<double> t;
        if (log) {
            for (double e = lo; e <= hi + 1e-9; e += 1) t.push_back(e);
        } else {
            const double step = std::pow(10.0, std::floor(std::log10((hi - lo) / 5)));
            for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step) t.push_back(v);
        }
        return t;
    };
    for (double t : ticks(x0, x1, plot.log_x)) {
        const double X = left + (t - x0) / (x1 - x0) * pw;
        out << "<line x1=\"" << detail::num(X) << "\" y1=\"" << top + ph << "\" x2=\"" << detail::num(X)
            << "\" y2=\"" << top + ph + 5 << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << detail::num(X) << "\" y=\"" << top + ph + 18 << "\" text-anchor=\"middle\">"
            << (plot.log_x ? "1e" + detail::num(t) : detail::num(t)) << "</text>\n";
    }
    for (double t : ticks(y0, y1, plot.log_y)) {
        const double Y = top + ph - (t - y0) / (y1 - y0) * ph;
        out << "<line x1=\"" << left - 5 << "\" y1=\"" << detail::num(Y) << "\" x2=\"" << left << "\" y2=\""
            << detail::num(Y) << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << left - 8 << "\" y=\"" << detail::num(Y + 4) << "\" text-anchor=\"end\">"
            << (plot.log_y ? "1e" + detail::num(t) : detail::num(t)) << "</text>\n";
    }
    out << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 15 << "\" text-anchor=\"middle\">"
        << detail::escape(plot.x_label) << "</text>\n";
    out << "<text transform=\"translate(18," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
        << detail::escape(plot.y_label) << "</text>\n";

    double legend_y = top + 16;
    for (const auto& s : plot.series) {
        if (s.line) {
            out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i)
                if (usable(s.x[i], s.y[i])) out << detail::num(px(s.x[i])) << ',' << detail::num(py(s.y[i])) << ' ';
            out << "\"/>\n";
        } else {
            for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i)
                if (usable(s.x[i], s.y[i]))
                    out << "<circle cx=\"" << detail::num(px(s.x[i])) << "\" cy=\"" << detail::num(py(s.y[i]))
                        << "\" r=\"3\" fill=\"" << s.color << "\"/>\n";
        }
        if (!s.label.empty()) {
            out << "<text x=\"" << left + pw - 8 << "\" y=\"" << legend_y << "\" text-anchor=\"end\" fill=\""
                << s.color << "\">" << detail::escape(s.label) << "</text>\n";
            legend_y += 16;
        }
    }
    out << "</svg>\n";
}

}  // namespace fame::svg
