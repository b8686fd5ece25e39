#pragma once

// famectl: command-line front end. run() is callable in-process so tests can
// drive it without spawning processes.

#include <CLI11.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fame/fame.hpp"
#include "fame/wiki_http.hpp"

#ifndef FAME_DATA_DIR
#define FAME_DATA_DIR "data"
#endif

namespace famectl {

namespace fs = std::filesystem;
using namespace fame;

enum ExitCode : int {
    exit_ok = 0,
    exit_usage = 2,
    exit_input = 3,
    exit_numerical = 4,
    exit_io = 5,
    exit_network = 6,
};

inline fs::path bundled(const std::string& name) { return fs::path(FAME_DATA_DIR) / name; }

inline std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
        EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
        throw IoError("sha256 computation failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

/// Per-invocation state shared by the sub-commands: where outputs go and
/// what every output header records.
class Context {
public:
    Context(std::vector<std::string> args, std::ostream& out) : args_(std::move(args)), out_(out) {}

    std::uint64_t seed = 0;
    fs::path out_dir = ".";
    bool svg = false;
    unsigned threads = 0;

    std::ostream& console() { return out_; }

    /// Reads an input file and records its digest for the output headers.
    std::string read_input(const fs::path& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot open input file " + path.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        inputs_.emplace_back(path.string(), sha256_hex(ss.str()));
        return ss.str();
    }

    void note_input(const std::string& label, const std::string& digest) { inputs_.emplace_back(label, digest); }

    std::string header(const std::string& prefix = "# ") const {
        std::string h = prefix + "famectl";
        for (const auto& a : args_) h += " " + a;
        h += "\n" + prefix + "seed=" + std::to_string(seed) + "\n";
        for (const auto& [path, digest] : inputs_) h += prefix + "input " + path + " sha256=" + digest + "\n";
        return h;
    }

    fs::path write(const std::string& name, const std::string& body) {
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        if (ec) throw IoError("cannot create output directory " + out_dir.string() + ": " + ec.message());
        const fs::path path = out_dir / name;
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + path.string());
        out << header() << body;
        out.close();
        if (!out) throw IoError("failed writing " + path.string());
        written_.push_back(path);
        return path;
    }

    void write_plot(const std::string& name, const svg::Plot& plot) {
        if (!svg) return;
        std::ostringstream body;
        svg::write(body, plot);
        std::string text = body.str();
        // the comment goes after the root element's opening tag
        const auto close = text.find(">\n");
        std::string comment = "<!--\n" + header("") + "-->\n";
        text.insert(close + 2, comment);
        std::error_code ec;
        fs::create_directories(out_dir, ec);
        const fs::path path = out_dir / name;
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + path.string());
        out << text;
        written_.push_back(path);
    }

    const std::vector<fs::path>& written() const { return written_; }

private:
    std::vector<std::string> args_;
    std::ostream& out_;
    std::vector<std::pair<std::string, std::string>> inputs_;
    std::vector<fs::path> written_;
};

// ---------------------------------------------------------------- inputs

inline PreferenceDataset read_preferences(Context& ctx, const fs::path& prefs, const std::optional<fs::path>& roster_path,
                                          bool keep_none) {
    const std::string text = ctx.read_input(prefs);
    std::vector<Individual> roster;
    if (roster_path) {
        std::istringstream rin(ctx.read_input(*roster_path));
        roster = parse_roster(rin, roster_path->string());
    } else {
        // roster implied by the ids that occur, in sorted order
        std::istringstream scan(text);
        const auto doc = csv::read_document(scan);
        std::set<std::string> ids;
        if (!doc.lines.empty()) {
            // both accepted layouts carry the two ids in columns 1 and 2
            for (std::size_t i = 1; i < doc.lines.size(); ++i) {
                const auto cells = csv::split(doc.lines[i].text);
                if (cells.size() >= 3) {
                    ids.emplace(csv::trim(cells[1]));
                    ids.emplace(csv::trim(cells[2]));
                }
            }
        }
        for (const auto& id : ids) roster.push_back({id, id, std::nullopt, std::nullopt, ""});
    }
    std::istringstream in(text);
    PreferenceLoadOptions opts;
    opts.drop_none = !keep_none;
    return parse_preferences(in, std::move(roster), opts, prefs.string());
}

inline MetricDataset read_metrics(Context& ctx, const fs::path& path) {
    ctx.read_input(path);
    fs::path meta = path;
    meta += ".meta";
    if (fs::exists(meta)) ctx.read_input(meta);
    return load_metrics(path.string());
}

inline std::pair<std::int64_t, std::int64_t> parse_range(const std::string& text, const std::string& sep,
                                                         const std::string& what) {
    const auto pos = text.find(sep);
    if (pos == std::string::npos) throw CLI::ValidationError(what, "expected LO" + sep + "HI");
    const auto lo = csv::parse_int(text.substr(0, pos), what);
    const auto hi = csv::parse_int(text.substr(pos + sep.size()), what);
    if (hi < lo) throw CLI::ValidationError(what, "range end precedes start");
    return {lo, hi};
}

// ---------------------------------------------------------------- rank / bootstrap

struct RankOptions {
    std::string prefs;
    std::optional<std::string> roster;
    std::size_t bootstrap = 0;
    std::string resample = "records";
    std::string none_policy = "ignore";
    double pseudo_count = 0;
    std::size_t bins = 20;
};

inline int run_rank(Context& ctx, const RankOptions& o) {
    const bool half = o.none_policy == "half";
    auto ds = read_preferences(ctx, o.prefs, o.roster ? std::optional<fs::path>(*o.roster) : std::nullopt, half);

    bt::BTConfig cfg;
    cfg.seed = ctx.seed;
    cfg.threads = ctx.threads;
    cfg.pseudo_count = o.pseudo_count;
    cfg.none_policy = half ? bt::NonePolicy::half_win : bt::NonePolicy::ignore;
    cfg.resample = o.resample == "subjects" ? bt::ResampleUnit::subjects : bt::ResampleUnit::records;

    const auto fit = bt::fit_bradley_terry(ds, cfg);
    bt::FameScores scores = fit.scores;
    std::size_t regularized = 0;
    if (o.bootstrap > 0) {
        cfg.bootstrap_samples = o.bootstrap;
        const auto boot = bt::bootstrap(ds, cfg);
        scores = boot.scores;
        regularized = boot.regularized_resamples;
    }
    const auto summary = bt::likelihood_fractions(fit, 0.5, o.bins);

    std::ostringstream s, h, m;
    bt::write_scores_csv(s, scores);
    ctx.write("scores.csv", s.str());
    bt::write_histogram_csv(h, summary);
    ctx.write("likelihood_histogram.csv", h.str());
    m << "records,dropped_none,iterations,log_likelihood,llr_vs_null,fraction_above_half,bootstrap_samples,"
         "regularized_resamples\n"
      << fit.comparison_likelihoods.size() << ',' << ds.dropped_none_count << ',' << fit.iterations << ','
      << csv::format(fit.log_likelihood) << ',' << csv::format(fit.llr_vs_null) << ','
      << csv::format(summary.fraction_above) << ',' << o.bootstrap << ',' << regularized << '\n';
    ctx.write("rank_summary.csv", m.str());

    if (ctx.svg) {
        svg::Plot hist{"Per-comparison likelihood", "likelihood", "comparisons", false, false, {}};
        svg::Series bars{"", {}, {}, true, "#1f77b4"};
        for (const auto& b : summary.histogram) {
            bars.x.insert(bars.x.end(), {b.lo, b.lo, b.hi, b.hi});
            bars.y.insert(bars.y.end(), {0.0, double(b.count), double(b.count), 0.0});
        }
        hist.series.push_back(bars);
        ctx.write_plot("likelihood_histogram.svg", hist);

        svg::Plot ranks{"Fame ratings", "rank", "p", false, true, {}};
        svg::Series pts{"p", {}, {}, false, "#d62728"};
        const auto ranked = scores.ranked();
        for (std::size_t i = 0; i < ranked.size(); ++i) {
            pts.x.push_back(double(i + 1));
            pts.y.push_back(ranked[i].p);
        }
        ranks.series.push_back(pts);
        ctx.write_plot("scores.svg", ranks);
    }

    const auto ranked = scores.ranked();
    ctx.console() << "records used: " << fit.comparison_likelihoods.size() << " (dropped NONE: "
                  << ds.dropped_none_count << ")\n"
                  << "iterations: " << fit.iterations << "\n"
                  << "log-likelihood ratio vs null: " << csv::format_sig(fit.llr_vs_null, 6) << "\n"
                  << "comparisons with likelihood > 0.5: " << csv::format_sig(summary.fraction_above, 4) << "\n";
    if (!ranked.empty())
        ctx.console() << "top: " << ranked.front().id << " p=" << csv::format_sig(ranked.front().p, 4) << "\n";
    return exit_ok;
}

// ---------------------------------------------------------------- powerlaw

struct PowerlawOptions {
    std::string metrics;
    std::string kind = "WE";
    std::optional<std::string> xmin_range;
    std::size_t gof = 0;
    std::size_t se_bootstrap = 0;
};

inline int run_powerlaw(Context& ctx, const PowerlawOptions& o) {
    const auto ds = read_metrics(ctx, o.metrics);
    const auto kind = parse_metric_kind(o.kind);
    const auto samples = tail::to_samples(ds.values(kind));

    tail::ScanOptions scan_opts;
    scan_opts.threads = ctx.threads;
    if (o.xmin_range) {
        const auto [lo, hi] = parse_range(*o.xmin_range, ":", "--xmin-range");
        scan_opts.lo = lo;
        scan_opts.hi = hi;
    }
    const auto scan = tail::scan_xmin(samples, scan_opts);
    auto fit = tail::select_xmin(samples, scan_opts);
    if (o.se_bootstrap > 0) fit.alpha_se = tail::alpha_se_bootstrap(samples, fit.x_min, o.se_bootstrap, ctx.seed);

    std::ostringstream f, c, s;
    tail::write_fit_header(f);
    tail::write_fit_row(f, ds.name + ":" + std::string(to_string(kind)), fit);
    ctx.write("powerlaw_fit.csv", f.str());
    const auto curve = tail::survival_comparison(samples, fit.alpha, fit.x_min);
    tail::write_survival_csv(c, curve);
    ctx.write("powerlaw_survival.csv", c.str());
    s << "x_min,alpha,alpha_se,ks,n_tail\n";
    for (const auto& cand : scan)
        s << cand.x_min << ',' << csv::format(cand.alpha) << ',' << csv::format(cand.alpha_se) << ','
          << csv::format(cand.ks) << ',' << cand.n_tail << '\n';
    ctx.write("powerlaw_scan.csv", s.str());
    if (o.gof > 0) {
        const double pv = tail::gof_pvalue(samples, fit, o.gof, ctx.seed);
        std::ostringstream g;
        g << "replicates,p_value\n" << o.gof << ',' << csv::format(pv) << '\n';
        ctx.write("powerlaw_gof.csv", g.str());
        ctx.console() << "goodness-of-fit p-value: " << csv::format_sig(pv, 4) << "\n";
    }

    if (ctx.svg) {
        svg::Plot plot{"Tail survival, " + std::string(to_string(kind)), std::string(to_string(kind)), "P(X >= x)",
                       true, true, {}};
        svg::Series emp{"data", {}, {}, false, "#1f77b4"}, model{"power law", {}, {}, true, "#d62728"};
        for (const auto& p : curve) {
            emp.x.push_back(double(p.x));
            emp.y.push_back(p.empirical_survival);
            model.x.push_back(double(p.x));
            model.y.push_back(p.model_survival);
        }
        plot.series = {emp, model};
        ctx.write_plot("powerlaw_survival.svg", plot);
    }
    ctx.console() << "alpha = " << csv::format_sig(fit.alpha, 4) << " +/- " << csv::format_sig(fit.alpha_se, 2)
                  << ", x_min = " << fit.x_min << " (plateau " << fit.plateau_lo << "-" << fit.plateau_hi
                  << "), n_tail = " << fit.n_tail << ", KS = " << csv::format_sig(fit.ks_distance, 3) << "\n";
    return exit_ok;
}

// ---------------------------------------------------------------- grfit

struct GrfitOptions {
    std::string metrics;
    std::string kind = "WE";
};

inline int run_grfit(Context& ctx, const GrfitOptions& o) {
    const auto ds = read_metrics(ctx, o.metrics);
    const auto kind = parse_metric_kind(o.kind);
    const auto curve = gr::cumulative_frequency(ds, kind);
    const auto fit = gr::fit_gutenberg_richter(curve);

    std::ostringstream c, f;
    gr::write_curve_csv(c, curve);
    ctx.write("gr_curve.csv", c.str());
    gr::write_fit_header(f);
    gr::write_fit_row(f, ds.name + ":" + std::string(to_string(kind)), fit);
    ctx.write("gr_fit.csv", f.str());

    if (ctx.svg) {
        svg::Plot plot{"Annual frequency, " + std::string(to_string(kind)), std::string(to_string(kind)),
                       "events per year >= x", true, true, {}};
        svg::Series data{"data", {}, {}, false, "#1f77b4"}, model{"fit", {}, {}, true, "#d62728"};
        for (const auto& p : curve.points) {
            data.x.push_back(p.x);
            data.y.push_back(p.f);
            if (p.x > 0) {
                model.x.push_back(p.x);
                model.y.push_back(gr::eval_gr(fit, p.x));
            }
        }
        plot.series = {data, model};
        ctx.write_plot("gr_curve.svg", plot);
    }
    ctx.console() << "a = " << csv::format_sig(fit.a, 4) << " yr, b = " << csv::format_sig(fit.b, 4)
                  << ", nu = " << csv::format_sig(fit.nu, 4) << ", rms log residual = "
                  << csv::format_sig(fit.residual, 3) << " (annualization x" << csv::format_sig(curve.annualization_factor, 5)
                  << ")\n";
    return exit_ok;
}

// ---------------------------------------------------------------- coincide

struct CoincideOptions {
    std::int64_t n = 23;
    int window = 0;
    int k = 2;
    std::int64_t trials = 1'000'000;
    std::optional<std::string> sweep;
    std::string topology = "circular";
    std::string method = "auto";
    int year_days = 365;
    std::optional<double> target;
};

inline int run_coincide(Context& ctx, const CoincideOptions& o) {
    coincide::CoincidenceSpec spec;
    spec.n_deaths = o.n;
    spec.window_days = o.window;
    spec.multiplicity = o.k;
    spec.trials = o.trials;
    spec.seed = ctx.seed;
    spec.year_days = o.year_days;
    spec.topology = coincide::parse_topology(o.topology);
    spec.method = coincide::parse_method(o.method);
    spec.threads = ctx.threads;
    spec.validate();

    std::int64_t lo = o.n, hi = o.n;
    if (o.sweep) std::tie(lo, hi) = parse_range(*o.sweep, "..", "--sweep");
    if (lo < 1) throw CLI::ValidationError("--sweep", "N must be at least 1");

    std::vector<std::pair<std::int64_t, coincide::CoincidenceResult>> rows;
    std::optional<coincide::FirstHitDistribution> dist;
    std::string method_used;
    for (std::int64_t n = lo; n <= hi; ++n) {
        spec.n_deaths = n;
        const bool exact = spec.method == coincide::MethodChoice::exact ||
                           (spec.method == coincide::MethodChoice::automatic && coincide::detail::exact_available(spec));
        if (exact) {
            rows.emplace_back(n, coincide::coincidence_probability(spec));
        } else {
            // one simulation serves the whole sweep, so the curve uses common random numbers
            if (!dist) dist.emplace(coincide::monte_carlo_distribution(spec));
            rows.emplace_back(n, dist->at(n));
        }
    }

    std::ostringstream c;
    c << "# window_days=" << o.window << " multiplicity=" << o.k << " year_days=" << o.year_days
      << " topology=" << o.topology << "\n";
    coincide::write_curve_header(c);
    for (const auto& [n, r] : rows) coincide::write_curve_row(c, n, r);
    ctx.write("coincidence.csv", c.str());

    if (o.target) {
        spec.n_deaths = 1;
        const auto n_min = coincide::min_deaths_for(*o.target, o.window, o.k, spec);
        std::ostringstream t;
        t << "window_days,multiplicity,target,n_deaths\n"
          << o.window << ',' << o.k << ',' << csv::format(*o.target) << ',' << n_min << '\n';
        ctx.write("coincidence_threshold.csv", t.str());
        ctx.console() << "smallest N with P >= " << *o.target << ": " << n_min << "\n";
    }

    if (ctx.svg) {
        svg::Plot plot{"Coincidence probability (window " + std::to_string(o.window) + " d, k = " +
                           std::to_string(o.k) + ")",
                       "deaths N", "probability", false, false, {}};
        svg::Series s{"P", {}, {}, true, "#1f77b4"};
        for (const auto& [n, r] : rows) {
            s.x.push_back(double(n));
            s.y.push_back(r.probability);
        }
        plot.series = {s};
        ctx.write_plot("coincidence.svg", plot);
    }
    for (const auto& [n, r] : rows)
        if (rows.size() <= 5)
            ctx.console() << "N=" << n << " P=" << csv::format_sig(r.probability, 6) << " +/- "
                          << csv::format_sig(r.std_error, 2) << " (" << to_string(r.method) << ")\n";
    if (rows.size() > 5)
        ctx.console() << "wrote " << rows.size() << " rows for N=" << lo << ".." << hi << "\n";
    return exit_ok;
}

// ---------------------------------------------------------------- correlate

struct CorrelateOptions {
    std::optional<std::string> metrics;
    std::optional<std::string> scores;
    std::string x = "WE";
    std::string y = "p";
};

inline int run_correlate(Context& ctx, const CorrelateOptions& o) {
    MetricDataset ds;
    std::map<std::string, double> p_by_id;
    if (o.metrics) {
        ds = read_metrics(ctx, *o.metrics);
    } else {
        const auto fx = table1::load();
        ds = fx.metrics;
        ctx.note_input("embedded:table1", sha256_hex(std::string(table1::raw_rows)));
    }
    if (o.scores) {
        std::istringstream in(ctx.read_input(*o.scores));
        for (const auto& s : bt::parse_scores(in, *o.scores).entries) p_by_id[s.id] = s.p;
    } else if (o.x == "p" || o.y == "p") {
        const auto fx = table1::load();
        for (const auto& s : fx.scores) p_by_id[s.id] = s.p;
        if (o.metrics) ctx.note_input("embedded:table1", sha256_hex(std::string(table1::raw_rows)));
    }

    auto lookup = [&](const std::string& metric, const std::string& id) -> std::optional<double> {
        if (metric == "p") {
            const auto it = p_by_id.find(id);
            return it == p_by_id.end() ? std::nullopt : std::optional<double>(it->second);
        }
        return ds.find(id, parse_metric_kind(metric));
    };
    if (o.x != "p") parse_metric_kind(o.x);
    if (o.y != "p") parse_metric_kind(o.y);

    std::vector<corr::Pair> pairs;
    std::vector<corr::ScatterPoint> scatter;
    for (const auto& id : ds.ids()) {
        const auto x = lookup(o.x, id), y = lookup(o.y, id);
        if (!x || !y) continue;
        pairs.push_back({*x, *y});
        scatter.push_back({id, *x, *y});
    }
    const auto fit = corr::loglog_fit(pairs);

    std::ostringstream r, s;
    corr::write_report_header(r);
    corr::write_report_row(r, o.x, o.y, fit);
    ctx.write("correlation.csv", r.str());
    corr::write_scatter_csv(s, scatter);
    ctx.write("scatter.csv", s.str());

    if (ctx.svg) {
        svg::Plot plot{o.y + " vs " + o.x + " (R = " + csv::format_sig(fit.r, 2) + ")", o.x, o.y, true, true, {}};
        svg::Series pts{"data", {}, {}, false, "#1f77b4"}, line{"least squares", {}, {}, true, "#d62728"};
        double lo = std::numeric_limits<double>::infinity(), hi = 0;
        for (const auto& p : scatter)
            if (p.x > 0 && p.y > 0) {
                pts.x.push_back(p.x);
                pts.y.push_back(p.y);
                lo = std::min(lo, p.x);
                hi = std::max(hi, p.x);
            }
        for (double x : {lo, hi}) {
            line.x.push_back(x);
            line.y.push_back(std::exp(fit.intercept + fit.slope * std::log(x)));
        }
        plot.series = {pts, line};
        ctx.write_plot("scatter.svg", plot);
    }
    ctx.console() << o.y << " vs " << o.x << ": R = " << csv::format_sig(fit.r, 4) << ", slope = "
                  << csv::format_sig(fit.slope, 4) << " +/- " << csv::format_sig(fit.slope_se, 2) << " (n = "
                  << fit.n_points << ", dropped " << fit.dropped_nonpositive << ")\n";
    return exit_ok;
}

// ---------------------------------------------------------------- fetch

struct FetchOptions {
    std::string titles;
    std::string metric = "we";
    std::optional<std::string> offline;
    std::optional<std::string> cache;
    std::optional<std::string> as_of;
    std::optional<std::string> from;
    std::optional<std::string> to;
};

struct TitleEntry {
    std::string id;
    std::string title;
};

/// Titles file: either `id,title` with that header, or one title per line.
inline std::vector<TitleEntry> parse_titles(const std::string& text, const std::string& source) {
    std::istringstream in(text);
    const auto doc = csv::read_document(in);
    std::vector<TitleEntry> out;
    if (doc.lines.empty()) return out;
    const bool keyed = doc.lines.front().text == "id,title";
    for (std::size_t i = keyed ? 1 : 0; i < doc.lines.size(); ++i) {
        const auto& line = doc.lines[i].text;
        if (keyed) {
            const auto comma = line.find(',');
            if (comma == std::string::npos)
                throw InputError(source + ":" + std::to_string(doc.lines[i].number) + ": expected id,title");
            out.push_back({std::string(csv::trim(line.substr(0, comma))),
                           std::string(csv::trim(line.substr(comma + 1)))});
        } else {
            out.push_back({line, line});
        }
    }
    return out;
}

inline int run_fetch(Context& ctx, const FetchOptions& o) {
    const auto entries = parse_titles(ctx.read_input(o.titles), o.titles);
    const auto metric = wiki::parse_metric(o.metric);

    wiki::ClientOptions copts;
    if (o.cache) copts.cache_dir = *o.cache;
    if (o.offline) copts.offline_dir = *o.offline;
    if (o.as_of) copts.as_of = parse_iso_date(*o.as_of);
    std::shared_ptr<wiki::Transport> transport;
    if (!o.offline) transport = std::make_shared<wiki::HttpsTransport>();
    wiki::Client client(copts, transport);

    if (metric == wiki::Metric::edit_count) {
        MetricDataset ds;
        ds.name = "fetched";
        for (const auto& e : entries) {
            auto snap = client.fetch_edit_count(e.title);
            snap.id = e.id;
            ds.snapshots.push_back(snap);
            ctx.console() << e.id << " (" << e.title << "): WE = " << csv::format(std::get<std::int64_t>(snap.value))
                          << " on " << to_iso(snap.retrieved_on) << "\n";
        }
        std::ostringstream m;
        write_metrics(m, ds);
        ctx.write("fetched_metrics.csv", m.str());
        return exit_ok;
    }

    if (!o.from || !o.to) throw CLI::ValidationError("--from/--to", "page views need --from and --to dates");
    const DateRange range{parse_iso_date(*o.from), parse_iso_date(*o.to)};
    std::ostringstream series, summary;
    series << "id,date,views,cumulative\n";
    summary << "id,title,days_requested,days_sampled,gaps,covered_from,covered_to,daily_mean\n";
    svg::Plot plot{"Cumulative page views", "day", "views", false, true, {}};
    for (const auto& e : entries) {
        const auto ts = client.fetch_pageviews(e.title, range);
        const auto cum = ts.cumulative();
        for (std::size_t i = 0; i < ts.samples.size(); ++i)
            series << e.id << ',' << to_iso(ts.samples[i].date) << ',' << csv::format(ts.samples[i].value) << ','
                   << csv::format(cum[i].value) << '\n';
        summary << e.id << ',' << e.title << ',' << range.days() << ',' << ts.samples.size() << ','
                << ts.gaps.size() << ',' << (ts.covered ? to_iso(ts.covered->first) : "") << ','
                << (ts.covered ? to_iso(ts.covered->last) : "") << ','
                << (ts.samples.empty() ? "" : csv::format(ts.daily_mean())) << '\n';
        if (ts.partial())
            ctx.console() << e.id << ": " << ts.gaps.size() << " of " << range.days() << " days missing\n";
        if (!ts.samples.empty())
            ctx.console() << e.id << " (" << e.title << "): mean " << csv::format_sig(ts.daily_mean(), 6)
                          << " views/day over " << ts.samples.size() << " days\n";
        svg::Series s{e.id, {}, {}, true, "#1f77b4"};
        for (std::size_t i = 0; i < cum.size(); ++i) {
            s.x.push_back(double(to_days(cum[i].date) - to_days(range.first)));
            s.y.push_back(cum[i].value);
        }
        plot.series.push_back(std::move(s));
    }
    ctx.write("pageviews.csv", series.str());
    ctx.write("pageviews_summary.csv", summary.str());
    ctx.write_plot("pageviews.svg", plot);
    return exit_ok;
}

// ---------------------------------------------------------------- driver

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

namespace detail {

inline std::vector<std::string> config_args(const std::string& path, CLI::App* sub, CLI::App& app) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path);
    std::vector<std::string> extra;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        const auto t = std::string(csv::trim(line));
        if (t.empty() || t.front() == '#') continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw InputError(path + ":" + std::to_string(number) + ": expected key=value");
        const std::string key(csv::trim(t.substr(0, eq)));
        const std::string value(csv::trim(t.substr(eq + 1)));
        const std::string flag = "--" + key;
        CLI::Option* opt = sub ? sub->get_option_no_throw(flag) : nullptr;
        if (!opt) opt = app.get_option_no_throw(flag);
        if (!opt || key == "config") continue;  // keys for other sub-commands
        if (opt->get_expected_min() == 0) {
            if (value == "true" || value == "1" || value == "yes") extra.push_back(flag);
        } else {
            extra.push_back(flag);
            extra.push_back(value);
        }
    }
    return extra;
}

}  // namespace detail

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"famectl: fame quantification toolkit", "famectl"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1, 1);

    std::uint64_t seed = 0;
    std::string out_dir = ".";
    std::string format = "csv";
    std::string config;
    unsigned threads = 0;
    app.add_option("--seed", seed, "random seed (default 0)");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--format", format, "csv, or svg for CSV plus SVG plots")->check(CLI::IsMember({"csv", "svg"}));
    app.add_option("--config", config, "key=value file of option defaults");
    app.add_option("--threads", threads, "worker threads (0 = all cores)");

    auto sub = [&](const char* name, const char* help) {
        auto* s = app.add_subcommand(name, help);
        s->fallthrough();
        return s;
    };

    RankOptions rank, boot;
    auto* rank_cmd = sub("rank", "Bradley-Terry ratings from pairwise preferences");
    rank_cmd->add_option("--prefs", rank.prefs, "preferences CSV")->required();
    rank_cmd->add_option("--roster", rank.roster, "individuals CSV (default: ids found in --prefs)");
    rank_cmd->add_option("--bootstrap", rank.bootstrap, "bootstrap resamples for delta_p (0 = none)");
    rank_cmd->add_option("--resample", rank.resample, "bootstrap unit")->check(CLI::IsMember({"records", "subjects"}));
    rank_cmd->add_option("--none", rank.none_policy, "NONE answers: ignore or half")->check(CLI::IsMember({"ignore", "half"}));
    rank_cmd->add_option("--pseudo-count", rank.pseudo_count, "virtual wins each way per observed pair");
    rank_cmd->add_option("--bins", rank.bins, "likelihood histogram bins");

    boot.bootstrap = 2000;
    auto* boot_cmd = sub("bootstrap", "Bradley-Terry ratings with bootstrap uncertainties");
    boot_cmd->add_option("--prefs", boot.prefs, "preferences CSV")->required();
    boot_cmd->add_option("--roster", boot.roster, "individuals CSV (default: ids found in --prefs)");
    boot_cmd->add_option("--samples", boot.bootstrap, "bootstrap resamples")->check(CLI::PositiveNumber);
    boot_cmd->add_option("--resample", boot.resample, "bootstrap unit")->check(CLI::IsMember({"records", "subjects"}));
    boot_cmd->add_option("--none", boot.none_policy, "NONE answers: ignore or half")->check(CLI::IsMember({"ignore", "half"}));
    boot_cmd->add_option("--pseudo-count", boot.pseudo_count, "virtual wins each way per observed pair");
    boot_cmd->add_option("--bins", boot.bins, "likelihood histogram bins");

    PowerlawOptions pl;
    auto* pl_cmd = sub("powerlaw", "discrete power-law tail fit with KS x_min selection");
    pl_cmd->add_option("--metrics", pl.metrics, "metrics CSV")->required();
    pl_cmd->add_option("--kind", pl.kind, "metric kind (WE, GN, GH, WV, DWE_DT, DWV_DT)");
    pl_cmd->add_option("--xmin-range", pl.xmin_range, "restrict x_min candidates to LO:HI");
    pl_cmd->add_option("--gof", pl.gof, "goodness-of-fit replicates (0 = skip)");
    pl_cmd->add_option("--se-bootstrap", pl.se_bootstrap, "bootstrap replicates for alpha_se (0 = analytic)");

    GrfitOptions grf;
    auto* gr_cmd = sub("grfit", "annualized cumulative frequency and Gutenberg-Richter fit");
    gr_cmd->add_option("--metrics", grf.metrics, "metrics CSV")->required();
    gr_cmd->add_option("--kind", grf.kind, "metric kind");

    CoincideOptions co;
    auto* co_cmd = sub("coincide", "birthday-problem coincidence probabilities");
    co_cmd->add_option("--n", co.n, "number of deaths");
    co_cmd->add_option("--window", co.window, "window in days (span of the k deaths)");
    co_cmd->add_option("--k", co.k, "multiplicity")->check(CLI::IsMember({2, 3}));
    co_cmd->add_option("--trials", co.trials, "Monte Carlo trials");
    co_cmd->add_option("--sweep", co.sweep, "evaluate every N in LO..HI");
    co_cmd->add_option("--topology", co.topology, "circular or linear year")->check(CLI::IsMember({"circular", "linear"}));
    co_cmd->add_option("--method", co.method, "auto, exact or monte_carlo")->check(CLI::IsMember({"auto", "exact", "monte_carlo", "mc"}));
    co_cmd->add_option("--year-days", co.year_days, "days per year");
    co_cmd->add_option("--target", co.target, "also report the smallest N reaching this probability");

    CorrelateOptions cr;
    auto* cr_cmd = sub("correlate", "log-log Pearson correlation and least-squares slope");
    cr_cmd->add_option("--metrics", cr.metrics, "metrics CSV (default: bundled Table 1)");
    cr_cmd->add_option("--scores", cr.scores, "scores CSV supplying p (default: published Table 1 p)");
    cr_cmd->add_option("--x", cr.x, "x metric kind or p");
    cr_cmd->add_option("--y", cr.y, "y metric kind or p");

    FetchOptions fe;
    auto* fe_cmd = sub("fetch", "collect WE or WV from the wiki APIs");
    fe_cmd->add_option("--titles", fe.titles, "titles file (id,title or one title per line)")->required();
    fe_cmd->add_option("--metric", fe.metric, "we or wv")->check(CLI::IsMember({"we", "wv"}));
    fe_cmd->add_option("--offline", fe.offline, "serve recorded responses from this directory");
    fe_cmd->add_option("--cache", fe.cache, "cache directory");
    fe_cmd->add_option("--as-of", fe.as_of, "count edits up to this date (YYYY-MM-DD)");
    fe_cmd->add_option("--from", fe.from, "first day of page views (YYYY-MM-DD)");
    fe_cmd->add_option("--to", fe.to, "last day of page views (YYYY-MM-DD)");

    bool report_all = false;
    std::vector<std::string> sections;
    std::size_t report_bootstrap = 2000;
    auto* rp_cmd = sub("report", "run every analysis on the bundled data");
    rp_cmd->add_flag("--all", report_all, "run every section");
    rp_cmd->add_option("--section", sections, "run only these sections (rank, correlate, powerlaw, grfit, coincide, fetch)")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
    rp_cmd->add_option("--bootstrap", report_bootstrap, "bootstrap resamples for the rank section");

    // Config values go in right after the sub-command name so that flags
    // given on the command line come later and win.
    std::vector<std::string> argv = args;
    try {
        std::optional<std::string> config_path;
        for (std::size_t i = 0; i < argv.size(); ++i) {
            if (argv[i] == "--config" && i + 1 < argv.size()) config_path = argv[i + 1];
            if (argv[i].starts_with("--config=")) config_path = argv[i].substr(9);
        }
        if (config_path) {
            std::size_t pos = argv.size();
            CLI::App* chosen = nullptr;
            for (std::size_t i = 0; i < argv.size() && !chosen; ++i)
                for (auto* s : app.get_subcommands([](CLI::App*) { return true; }))
                    if (s->get_name() == argv[i]) {
                        chosen = s;
                        pos = i + 1;
                        break;
                    }
            const auto extra = detail::config_args(*config_path, chosen, app);
            argv.insert(argv.begin() + static_cast<std::ptrdiff_t>(std::min(pos, argv.size())), extra.begin(),
                        extra.end());
        }
        std::vector<std::string> reversed(argv.rbegin(), argv.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    } catch (const Error& e) {
        err << "famectl: " << e.what() << "\n";
        return dynamic_cast<const IoError*>(&e) ? exit_io : exit_input;
    }

    Context ctx(args, out);
    ctx.seed = seed;
    ctx.out_dir = out_dir;
    ctx.svg = format == "svg";
    ctx.threads = threads;
    if (!config.empty()) ctx.read_input(config);

    try {
        if (*rank_cmd) return run_rank(ctx, rank);
        if (*boot_cmd) return run_rank(ctx, boot);
        if (*pl_cmd) return run_powerlaw(ctx, pl);
        if (*gr_cmd) return run_grfit(ctx, grf);
        if (*co_cmd) return run_coincide(ctx, co);
        if (*cr_cmd) return run_correlate(ctx, cr);
        if (*fe_cmd) return run_fetch(ctx, fe);
        if (*rp_cmd) {
            const std::vector<std::string> all{"rank", "correlate", "powerlaw", "grfit", "coincide", "fetch"};
            if (report_all) sections = all;
            if (sections.empty()) throw CLI::ValidationError("report", "choose --all or at least one --section");
            for (const auto& s : sections)
                if (std::find(all.begin(), all.end(), s) == all.end())
                    throw CLI::ValidationError("--section", "unknown section '" + s + "'");

            const fs::path root = out_dir;
            const std::string seed_text = std::to_string(seed);
            std::vector<std::string> common{"--seed", seed_text, "--format", format, "--threads",
                                            std::to_string(threads)};
            auto step = [&](const std::string& dir, std::vector<std::string> cmd) {
                cmd.insert(cmd.end(), common.begin(), common.end());
                cmd.push_back("--out");
                cmd.push_back((root / dir).string());
                out << "== " << dir << ": famectl";
                for (const auto& a : cmd) out << ' ' << a;
                out << "\n";
                const int code = run(cmd, out, err);
                if (code != exit_ok) throw std::runtime_error("report step '" + dir + "' failed");
            };
            const std::string survey = bundled("synthetic_survey.csv").string();
            const std::string roster = bundled("individuals.csv").string();
            const std::string metrics = bundled("table1_metrics.csv").string();
            for (const auto& s : sections) {
                if (s == "rank")
                    step("rank", {"rank", "--prefs", survey, "--roster", roster, "--bootstrap",
                                  std::to_string(report_bootstrap)});
                if (s == "correlate")
                    for (const char* x : {"WE", "GN", "GH", "WV", "DWE_DT", "DWV_DT"})
                        step(std::string("correlate/") + x + "_p",
                             {"correlate", "--metrics", metrics, "--x", x, "--y", "p"});
                if (s == "powerlaw") step("powerlaw", {"powerlaw", "--metrics", metrics, "--kind", "WE"});
                if (s == "grfit") step("grfit", {"grfit", "--metrics", metrics, "--kind", "WE"});
                if (s == "coincide")
                    for (const auto& [w, k] : std::vector<std::pair<int, int>>{{0, 2}, {1, 2}, {2, 2}, {0, 3}, {2, 3}})
                        step("coincide/window" + std::to_string(w) + "_k" + std::to_string(k),
                             {"coincide", "--window", std::to_string(w), "--k", std::to_string(k), "--sweep",
                              "1..100", "--target", "0.5"});
                if (s == "fetch") {
                    const std::string fixtures = bundled("wiki_fixtures").string();
                    const std::string titles = bundled("titles.csv").string();
                    step("fetch/we", {"fetch", "--titles", titles, "--metric", "we", "--offline", fixtures});
                    step("fetch/wv", {"fetch", "--titles", titles, "--metric", "wv", "--offline", fixtures, "--from",
                                      "2015-07-01", "--to", "2017-06-29"});
                }
            }
            return exit_ok;
        }
    } catch (const CLI::ValidationError& e) {
        err << "famectl: " << e.what() << "\n";
        return exit_usage;
    } catch (const NumericalError& e) {
        err << "famectl: numerical failure: " << e.what() << "\n";
        return exit_numerical;
    } catch (const IoError& e) {
        err << "famectl: I/O error: " << e.what() << "\n";
        return exit_io;
    } catch (const NetworkError& e) {
        err << "famectl: network error: " << e.what() << "\n";
        return exit_network;
    } catch (const Error& e) {
        err << "famectl: input error: " << e.what() << "\n";
        return exit_input;
    } catch (const std::invalid_argument& e) {
        err << "famectl: invalid argument: " << e.what() << "\n";
        return exit_input;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "famectl: I/O error: " << e.what() << "\n";
        return exit_io;
    } catch (const std::exception& e) {
        err << "famectl: " << e.what() << "\n";
        return exit_input;
    }
    return exit_usage;
}

}  // namespace famectl
