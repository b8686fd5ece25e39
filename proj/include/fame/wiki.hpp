#pragma once

// Client for wiki page statistics: total revision counts (WE) through the
// action API and daily page views (WV) through the pageviews REST API.
// Requests go through an injectable Transport and Clock, are spaced by a
// FIFO rate limiter, and are cached on disk as normalized JSON records.
// An offline mode serves the same record layout from a fixture directory.

#include <algorithm>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <variant>
#include <vector>

#include <json.hpp>

#include "fame/data.hpp"
#include "fame/date.hpp"
#include "fame/error.hpp"

namespace fame::wiki {

enum class Metric { edit_count, pageviews };

inline std::string_view to_string(Metric m) { return m == Metric::edit_count ? "edit_count" : "pageviews"; }

inline Metric parse_metric(std::string_view s) {
    if (s == "we" || s == "WE" || s == "edit_count") return Metric::edit_count;
    if (s == "wv" || s == "WV" || s == "pageviews") return Metric::pageviews;
    throw InputError("unknown wiki metric '" + std::string(s) + "' (expected we or wv)");
}

/// Wiki titles treat '_' and ' ' alike; keys use spaces.
inline std::string normalize_title(std::string_view title) {
    std::string out(title);
    for (auto& c : out)
        if (c == '_') c = ' ';
    const auto first = out.find_first_not_of(' ');
    if (first == std::string::npos) return {};
    const auto last = out.find_last_not_of(' ');
    return out.substr(first, last - first + 1);
}

struct FetchRequest {
    std::string title;
    Metric metric = Metric::edit_count;
    std::optional<DateRange> date_range;  // pageviews only

    void validate() const {
        if (normalize_title(title).empty()) throw InputError("fetch request: empty title");
        if (metric == Metric::pageviews) {
            if (!date_range) throw InputError("fetch request: pageviews need a date range");
            if (date_range->last < date_range->first)
                throw InputError("fetch request: date range starts after it ends");
        }
    }
};

struct Sample {
    Date date;
    double value = 0;

    friend bool operator==(const Sample&, const Sample&) = default;
};

struct TimeSeries {
    std::string title;
    MetricKind kind = MetricKind::WV;
    DateRange requested;
    std::vector<Sample> samples;         // strictly increasing dates
    std::vector<Date> gaps;              // requested days with no sample
    std::optional<DateRange> covered;    // first and last sampled day

    bool partial() const { return !gaps.empty(); }

    void validate() const {
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (samples[i].value < 0) throw InputError("time series: negative value");
            if (i && !(samples[i - 1].date < samples[i].date))
                throw InputError("time series: dates not strictly increasing");
        }
    }

    /// Running totals over the sampled days.
    std::vector<Sample> cumulative() const {
        std::vector<Sample> out;
        out.reserve(samples.size());
        double total = 0;
        for (const auto& s : samples) {
            total += s.value;
            out.push_back({s.date, total});
        }
        return out;
    }

    /// Mean value per sampled day; gaps are excluded rather than counted as 0.
    double daily_mean() const {
        if (samples.empty()) throw InputError("time series '" + title + "' has no samples");
        double total = 0;
        for (const auto& s : samples) total += s.value;
        return total / static_cast<double>(samples.size());
    }
};

struct HttpResponse {
    int status = 0;
    std::string body;
};

/// One HTTPS GET. Implementations throw NetworkError when no response
/// arrives; HTTP error statuses are returned, not thrown.
class Transport {
public:
    virtual ~Transport() = default;
    virtual HttpResponse get(const std::string& host, const std::string& target) = 0;
};

class Clock {
public:
    virtual ~Clock() = default;
    virtual std::chrono::steady_clock::duration now() = 0;
    virtual void sleep_for(std::chrono::steady_clock::duration d) = 0;
    virtual Date today() = 0;
};

class SystemClock : public Clock {
public:
    std::chrono::steady_clock::duration now() override {
        return std::chrono::steady_clock::now().time_since_epoch();
    }
    void sleep_for(std::chrono::steady_clock::duration d) override { std::this_thread::sleep_for(d); }
    Date today() override {
        const auto since = std::chrono::system_clock::now().time_since_epoch();
        return from_days(std::chrono::duration_cast<std::chrono::days>(since).count());
    }
};

/// Serializes work in FIFO order and keeps successive starts at least
/// `spacing` apart as measured by the clock.
class RateLimiter {
public:
    RateLimiter(Clock& clock, std::chrono::steady_clock::duration spacing) : clock_(clock), spacing_(spacing) {}

    template <class F>
    auto run(F&& f) {
        std::unique_lock lock(mutex_);
        const std::uint64_t ticket = next_ticket_++;
        turn_.wait(lock, [&] { return serving_ == ticket; });
        lock.unlock();

        struct Release {
            RateLimiter& self;
            ~Release() {
                std::lock_guard guard(self.mutex_);
                ++self.serving_;
                self.turn_.notify_all();
            }
        } release{*this};

        if (last_start_) {
            const auto due = *last_start_ + spacing_;
            const auto now = clock_.now();
            if (now < due) clock_.sleep_for(due - now);
        }
        last_start_ = clock_.now();
        return f();
    }

private:
    Clock& clock_;
    std::chrono::steady_clock::duration spacing_;
    std::mutex mutex_;
    std::condition_variable turn_;
    std::uint64_t next_ticket_ = 0;
    std::uint64_t serving_ = 0;
    std::optional<std::chrono::steady_clock::duration> last_start_;
};

/// Percent-encodes every byte outside [A-Za-z0-9-._~].
inline std::string percent_encode(std::string_view s) {
    static constexpr char hex[] = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : s) {
        const bool plain = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') ||
                           c == '-' || c == '.' || c == '_' || c == '~';
        if (plain) {
            out += static_cast<char>(c);
        } else {
            out += '%';
            out += hex[c >> 4];
            out += hex[c & 15];
        }
    }
    return out;
}

/// Record file name for a (title, metric, date key) triple.
inline std::string record_filename(std::string_view title, Metric metric, std::string_view date_key) {
    return percent_encode(normalize_title(title)) + "__" + std::string(to_string(metric)) + "__" +
           std::string(date_key) + ".json";
}

inline std::string range_key(const DateRange& r) { return to_compact(r.first) + "-" + to_compact(r.last); }

namespace detail {

using nlohmann::json;

inline std::string edit_record(const std::string& title, const Date& date, std::int64_t edits) {
    json j;
    j["metric"] = "edit_count";
    j["title"] = title;
    j["date"] = to_iso(date);
    j["edits"] = edits;
    return j.dump(2) + "\n";
}

inline std::string views_record(const std::string& title, const DateRange& range,
                                 const std::vector<Sample>& samples) {
    json items = json::array();
    for (const auto& s : samples)
        items.push_back({{"date", to_iso(s.date)}, {"views", static_cast<std::int64_t>(s.value)}});
    json j;
    j["metric"] = "pageviews";
    j["title"] = title;
    j["start"] = to_iso(range.first);
    j["end"] = to_iso(range.last);
    j["items"] = std::move(items);
    return j.dump(2) + "\n";
}

inline json parse_json(const std::string& text, const std::string& source) {
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw InputError("malformed JSON in " + source + ": " + e.what());
    }
}

inline std::optional<std::string> read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
    const auto tmp = p.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write cache file " + tmp);
        out << text;
        if (!out) throw IoError("failed writing cache file " + tmp);
    }
    std::filesystem::rename(tmp, p, ec);
    if (ec) throw IoError("cannot move cache file into place: " + p.string());
}

inline std::vector<Sample> samples_of(const json& record, const std::string& source) {
    std::vector<Sample> out;
    try {
        for (const auto& item : record.at("items"))
            out.push_back({parse_iso_date(item.at("date").get<std::string>()),
                           static_cast<double>(item.at("views").get<std::int64_t>())});
    } catch (const json::exception& e) {
        throw InputError("malformed pageviews record " + source + ": " + e.what());
    }
    return out;
}

inline TimeSeries series_over(const std::string& title, const DateRange& range, const std::vector<Sample>& all) {
    TimeSeries ts;
    ts.title = title;
    ts.kind = MetricKind::WV;
    ts.requested = range;
    for (const auto& s : all)
        if (!(s.date < range.first) && !(range.last < s.date)) ts.samples.push_back(s);
    std::sort(ts.samples.begin(), ts.samples.end(), [](const Sample& a, const Sample& b) { return a.date < b.date; });
    std::size_t k = 0;
    for (std::int64_t d = to_days(range.first); d <= to_days(range.last); ++d) {
        const Date day = from_days(d);
        if (k < ts.samples.size() && ts.samples[k].date == day)
            ++k;
        else
            ts.gaps.push_back(day);
    }
    if (!ts.samples.empty()) ts.covered = DateRange{ts.samples.front().date, ts.samples.back().date};
    ts.validate();
    return ts;
}

inline Date parse_compact_timestamp(std::string_view ts) {
    if (ts.size() < 8) throw InputError("malformed pageviews timestamp '" + std::string(ts) + "'");
    return parse_iso_date(std::string(ts.substr(0, 4)) + "-" + std::string(ts.substr(4, 2)) + "-" +
                          std::string(ts.substr(6, 2)));
}

}  // namespace detail

struct ClientOptions {
    std::optional<std::filesystem::path> cache_dir;
    std::optional<std::filesystem::path> offline_dir;  // when set, no network is used
    std::optional<Date> as_of;                         // edit counts up to this day
    std::chrono::steady_clock::duration spacing = std::chrono::seconds(1);
    int max_retries = 3;
    std::string wiki_host = "en.wikipedia.org";
    std::string rest_host = "wikimedia.org";
    std::string project = "en.wikipedia";
};

class Client {
public:
    explicit Client(ClientOptions options, std::shared_ptr<Transport> transport = nullptr,
                    std::shared_ptr<Clock> clock = std::make_shared<SystemClock>())
        : options_(std::move(options)), transport_(std::move(transport)), clock_(std::move(clock)),
          limiter_(*clock_, options_.spacing) {
        if (!options_.offline_dir && !transport_)
            throw std::invalid_argument("wiki client: a transport is required unless offline");
    }

    /// Live requests sent so far (each page of a paginated listing counts).
    std::size_t network_requests() const {
        std::lock_guard lock(count_mutex_);
        return requests_;
    }

    MetricSnapshot fetch_edit_count(const std::string& raw_title) {
        const std::string title = normalize_title(raw_title);
        FetchRequest{title, Metric::edit_count, std::nullopt}.validate();

        if (options_.offline_dir) return offline_edit_count(title);

        const Date date = options_.as_of.value_or(clock_->today());
        const std::string name = record_filename(title, Metric::edit_count, to_iso(date));
        if (auto cached = read_cache(name)) return edit_snapshot(*cached, name);

        const std::int64_t edits = count_revisions(title, date);
        const std::string record = detail::edit_record(title, date, edits);
        write_cache(name, record);
        return edit_snapshot(record, name);
    }

    TimeSeries fetch_pageviews(const std::string& raw_title, const DateRange& range) {
        const std::string title = normalize_title(raw_title);
        FetchRequest{title, Metric::pageviews, range}.validate();

        if (options_.offline_dir) return offline_pageviews(title, range);

        const std::string name = record_filename(title, Metric::pageviews, range_key(range));
        if (auto cached = read_cache(name))
            return detail::series_over(title, range, detail::samples_of(detail::parse_json(*cached, name), name));

        const auto samples = download_views(title, range);
        write_cache(name, detail::views_record(title, range, samples));
        return detail::series_over(title, range, samples);
    }

    std::variant<MetricSnapshot, TimeSeries> fetch(const FetchRequest& req) {
        req.validate();
        if (req.metric == Metric::edit_count) return fetch_edit_count(req.title);
        return fetch_pageviews(req.title, *req.date_range);
    }

private:
    MetricSnapshot edit_snapshot(const std::string& record, const std::string& source) const {
        const auto j = detail::parse_json(record, source);
        try {
            MetricSnapshot s;
            s.id = j.at("title").get<std::string>();
            s.kind = MetricKind::WE;
            s.value = j.at("edits").get<std::int64_t>();
            s.retrieved_on = parse_iso_date(j.at("date").get<std::string>());
            return s;
        } catch (const nlohmann::json::exception& e) {
            throw InputError("malformed edit-count record " + source + ": " + e.what());
        }
    }

    std::optional<std::string> read_cache(const std::string& name) const {
        if (!options_.cache_dir) return std::nullopt;
        return detail::read_text(*options_.cache_dir / name);
    }

    void write_cache(const std::string& name, const std::string& record) const {
        if (options_.cache_dir) detail::write_text(*options_.cache_dir / name, record);
    }

    /// Fixture files whose name starts with the title/metric prefix, sorted.
    std::vector<std::filesystem::path> fixtures_for(const std::string& title, Metric metric) const {
        const std::string prefix = percent_encode(title) + "__" + std::string(to_string(metric)) + "__";
        std::vector<std::filesystem::path> out;
        std::error_code ec;
        for (const auto& entry : std::filesystem::directory_iterator(*options_.offline_dir, ec)) {
            const auto name = entry.path().filename().string();
            if (name.starts_with(prefix) && name.ends_with(".json")) out.push_back(entry.path());
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    MetricSnapshot offline_edit_count(const std::string& title) const {
        if (options_.as_of) {
            const auto name = record_filename(title, Metric::edit_count, to_iso(*options_.as_of));
            if (auto text = detail::read_text(*options_.offline_dir / name)) return edit_snapshot(*text, name);
            throw FixtureMissingError("no recorded edit count for '" + title + "' on " + to_iso(*options_.as_of));
        }
        const auto files = fixtures_for(title, Metric::edit_count);
        if (files.empty()) throw FixtureMissingError("no recorded edit count for '" + title + "'");
        // ISO dates sort chronologically; take the latest recording
        const auto text = detail::read_text(files.back());
        if (!text) throw IoError("cannot read fixture " + files.back().string());
        return edit_snapshot(*text, files.back().string());
    }

    TimeSeries offline_pageviews(const std::string& title, const DateRange& range) const {
        std::vector<Sample> merged;
        bool any = false;
        for (const auto& path : fixtures_for(title, Metric::pageviews)) {
            const auto text = detail::read_text(path);
            if (!text) throw IoError("cannot read fixture " + path.string());
            const auto j = detail::parse_json(*text, path.string());
            DateRange recorded;
            try {
                recorded = {parse_iso_date(j.at("start").get<std::string>()),
                            parse_iso_date(j.at("end").get<std::string>())};
            } catch (const nlohmann::json::exception& e) {
                throw InputError("malformed pageviews record " + path.string() + ": " + e.what());
            }
            if (recorded.last < range.first || range.last < recorded.first) continue;
            any = true;
            for (const auto& s : detail::samples_of(j, path.string())) {
                const bool seen = std::any_of(merged.begin(), merged.end(),
                                              [&](const Sample& m) { return m.date == s.date; });
                if (!seen) merged.push_back(s);
            }
        }
        if (!any)
            throw FixtureMissingError("no recorded pageviews for '" + title + "' overlapping " +
                                      to_iso(range.first) + ".." + to_iso(range.last));
        return detail::series_over(title, range, merged);
    }

    HttpResponse request(const std::string& host, const std::string& target) {
        for (int attempt = 0;; ++attempt) {
            std::optional<HttpResponse> response;
            std::string failure;
            try {
                response = limiter_.run([&] {
                    {
                        std::lock_guard lock(count_mutex_);
                        ++requests_;
                    }
                    return transport_->get(host, target);
                });
            } catch (const NetworkError& e) {
                failure = e.what();
            }
            const bool retryable =
                !response || response->status == 429 || (response->status >= 500 && response->status < 600);
            if (!retryable) return *response;
            if (attempt >= options_.max_retries)
                throw NetworkError(response ? "HTTP " + std::to_string(response->status) + " from " + host + target
                                            : failure);
            clock_->sleep_for(std::chrono::seconds(1 << attempt));
        }
    }

    std::int64_t count_revisions(const std::string& title, const Date& date) {
        std::string base = "/w/api.php?action=query&format=json&formatversion=2&redirects=1"
                           "&prop=revisions%7Cpageprops&ppprop=disambiguation&rvprop=ids&rvlimit=max"
                           "&rvdir=older&rvstart=" +
                           to_iso(date) + "T23%3A59%3A59Z&titles=" + percent_encode(title);
        std::int64_t total = 0;
        std::optional<std::string> cont;
        for (;;) {
            const std::string target = cont ? base + "&rvcontinue=" + percent_encode(*cont) : base;
            const auto response = request(options_.wiki_host, target);
            if (response.status == 404) throw NotFoundError("wiki page '" + title + "' not found");
            if (response.status != 200)
                throw NetworkError("HTTP " + std::to_string(response.status) + " from action API");
            const auto j = detail::parse_json(response.body, "action API response");
            try {
                if (j.contains("error"))
                    throw InputError("action API error: " + j["error"].value("info", std::string("unknown")));
                const auto& pages = j.at("query").at("pages");
                if (pages.empty()) throw NotFoundError("wiki page '" + title + "' not found");
                const auto& page = pages.at(0);
                if (page.value("missing", false) || page.value("invalid", false))
                    throw NotFoundError("wiki page '" + title + "' not found");
                if (page.contains("pageprops") && page["pageprops"].contains("disambiguation"))
                    throw InputError("wiki page '" + title + "' is a disambiguation page");
                if (page.contains("revisions")) total += static_cast<std::int64_t>(page["revisions"].size());
                if (j.contains("continue") && j["continue"].contains("rvcontinue"))
                    cont = j["continue"]["rvcontinue"].get<std::string>();
                else
                    break;
            } catch (const nlohmann::json::exception& e) {
                throw InputError(std::string("unexpected action API response: ") + e.what());
            }
        }
        return total;
    }

    std::vector<Sample> download_views(const std::string& title, const DateRange& range) {
        std::string article = title;
        for (auto& c : article)
            if (c == ' ') c = '_';
        const std::string target = "/api/rest_v1/metrics/pageviews/per-article/" + options_.project +
                                   "/all-access/all-agents/" + percent_encode(article) + "/daily/" +
                                   to_compact(range.first) + "00/" + to_compact(range.last) + "00";
        const auto response = request(options_.rest_host, target);
        if (response.status == 404) throw NotFoundError("no pageviews for '" + title + "' (HTTP 404)");
        if (response.status != 200) throw NetworkError("HTTP " + std::to_string(response.status) + " from pageviews API");
        const auto j = detail::parse_json(response.body, "pageviews response");
        std::vector<Sample> out;
        try {
            for (const auto& item : j.at("items"))
                out.push_back({detail::parse_compact_timestamp(item.at("timestamp").get<std::string>()),
                               static_cast<double>(item.at("views").get<std::int64_t>())});
        } catch (const nlohmann::json::exception& e) {
            throw InputError(std::string("unexpected pageviews response: ") + e.what());
        }
        return out;
    }

    ClientOptions options_;
    std::shared_ptr<Transport> transport_;
    std::shared_ptr<Clock> clock_;
    RateLimiter limiter_;
    mutable std::mutex count_mutex_;
    std::size_t requests_ = 0;
};

}  // namespace fame::wiki
