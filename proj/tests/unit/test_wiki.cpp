#include <catch_amalgamated.hpp>

#include <atomic>
#include <fstream>
#include <sstream>
#include <thread>

#include "fame/fame.hpp"
#include "support/fakes.hpp"

using namespace fame;
using namespace fame::wiki;
using namespace std::chrono_literals;
using Catch::Approx;

namespace {

const std::filesystem::path fixtures = std::filesystem::path(FAME_DATA_DIR) / "wiki_fixtures";
const DateRange views_window{{2015, 7, 1}, {2017, 6, 29}};

ClientOptions offline() {
    ClientOptions o;
    o.offline_dir = fixtures;
    return o;
}

std::string revisions_page(int count, std::optional<std::string> cont, bool disambiguation = false) {
    nlohmann::json page;
    page["title"] = "X";
    page["revisions"] = nlohmann::json::array();
    for (int i = 0; i < count; ++i) page["revisions"].push_back({{"revid", i + 1}});
    if (disambiguation) page["pageprops"] = {{"disambiguation", ""}};
    nlohmann::json j;
    j["query"]["pages"] = nlohmann::json::array({page});
    if (cont) j["continue"] = {{"rvcontinue", *cont}, {"continue", "||"}};
    return j.dump();
}

std::string views_body(const std::vector<std::pair<std::string, int>>& days) {
    nlohmann::json items = nlohmann::json::array();
    for (const auto& [ts, v] : days) items.push_back({{"timestamp", ts}, {"views", v}});
    return nlohmann::json{{"items", items}}.dump();
}

/// Serves a single 3-revision page for edit counts and a 3-day series for views.
HttpResponse simple_server(const std::string& host, const std::string& target) {
    if (host == "en.wikipedia.org") return {200, revisions_page(3, std::nullopt)};
    if (target.find("/pageviews/") != std::string::npos)
        return {200, views_body({{"2016010100", 5}, {"2016010200", 7}, {"2016010300", 9}})};
    return {404, ""};
}

}  // namespace

TEST_CASE("offline edit counts reproduce the table", "[wiki][offline]") {
    Client client(offline());
    const auto snap = client.fetch_edit_count("Muhammad Ali");
    CHECK(std::get<std::int64_t>(snap.value) == 10909);
    CHECK(snap.kind == MetricKind::WE);
    CHECK(snap.retrieved_on == table1::counts_date);
    CHECK(std::get<std::int64_t>(client.fetch_edit_count("Muhammad_Ali").value) == 10909);
    CHECK(client.network_requests() == 0);

    const auto fx = table1::load();
    for (const auto& ind : fx.roster) {
        const auto s = client.fetch_edit_count(ind.name);
        INFO(ind.name);
        CHECK(static_cast<double>(std::get<std::int64_t>(s.value)) == *fx.metrics.find(ind.id, MetricKind::WE));
    }
}

TEST_CASE("offline pageviews", "[wiki][offline]") {
    Client client(offline());
    const auto ts = client.fetch_pageviews("Muhammad Ali", views_window);
    CHECK(ts.samples.size() == 730);
    CHECK_FALSE(ts.partial());
    CHECK(ts.daily_mean() == Approx(36516).margin(0.5));
    const auto cum = ts.cumulative();
    for (std::size_t i = 1; i < cum.size(); ++i) CHECK(cum[i].value >= cum[i - 1].value);
    CHECK(cum.back().value == Approx(ts.daily_mean() * 730));

    const auto fx = table1::load();
    for (const auto& ind : fx.roster) {
        INFO(ind.name);
        CHECK(client.fetch_pageviews(ind.name, views_window).daily_mean() ==
              Approx(*fx.metrics.find(ind.id, MetricKind::DWV_DT)).margin(0.5));
    }

    const Date day{2016, 6, 4};
    const auto one = client.fetch_pageviews("Muhammad Ali", {day, day});
    REQUIRE(one.samples.size() == 1);
    CHECK(one.samples[0].date == day);
    CHECK(one.cumulative()[0].value == one.samples[0].value);
    CHECK(client.network_requests() == 0);
}

TEST_CASE("offline mode reports partial coverage and missing fixtures", "[wiki][offline]") {
    Client client(offline());
    const auto ts = client.fetch_pageviews("Prince", {{2017, 6, 20}, {2017, 7, 9}});
    CHECK(ts.partial());
    CHECK(ts.samples.size() == 10);
    CHECK(ts.gaps.size() == 10);
    CHECK(ts.gaps.front() == Date{2017, 6, 30});
    REQUIRE(ts.covered);
    CHECK(ts.covered->last == Date{2017, 6, 29});

    CHECK_THROWS_AS(client.fetch_edit_count("Nobody In Particular"), FixtureMissingError);
    CHECK_THROWS_AS(client.fetch_pageviews("Prince", {{2019, 1, 1}, {2019, 1, 2}}), FixtureMissingError);

    auto dated = offline();
    dated.as_of = Date{2018, 1, 1};
    CHECK_THROWS_AS(Client(dated).fetch_edit_count("Prince"), FixtureMissingError);
}

TEST_CASE("request validation", "[wiki][errors]") {
    Client client(offline());
    CHECK_THROWS_AS(client.fetch_edit_count("  "), InputError);
    CHECK_THROWS_AS(client.fetch_pageviews("Prince", {{2016, 2, 1}, {2016, 1, 1}}), InputError);
    CHECK_THROWS_AS(client.fetch(FetchRequest{"Prince", Metric::pageviews, std::nullopt}), InputError);
    CHECK_THROWS_AS(Client(ClientOptions{}), std::invalid_argument);
    CHECK(parse_metric("wv") == Metric::pageviews);
    CHECK_THROWS_AS(parse_metric("likes"), InputError);
    CHECK(normalize_title(" Muhammad_Ali ") == "Muhammad Ali");
    CHECK(record_filename("Muhammad Ali", Metric::edit_count, "2017-03-08") ==
          "Muhammad%20Ali__edit_count__2017-03-08.json");
}

TEST_CASE("live edit count with pagination", "[wiki][live]") {
    auto clock = std::make_shared<fakes::ManualClock>();
    auto transport = std::make_shared<fakes::ScriptedTransport>(clock, [](const std::string&, const std::string& t) {
        if (t.find("rvcontinue=") == std::string::npos) return HttpResponse{200, revisions_page(500, "p2")};
        if (t.find("rvcontinue=p2") != std::string::npos) return HttpResponse{200, revisions_page(500, "p3")};
        return HttpResponse{200, revisions_page(42, std::nullopt)};
    });
    ClientOptions o;
    o.as_of = Date{2017, 3, 8};
    Client client(o, transport, clock);
    const auto snap = client.fetch_edit_count("Muhammad Ali");
    CHECK(std::get<std::int64_t>(snap.value) == 1042);
    CHECK(client.network_requests() == 3);
    const auto calls = transport->calls();
    REQUIRE(calls.size() == 3);
    CHECK(calls[0].host == "en.wikipedia.org");
    CHECK(calls[0].target.find("titles=Muhammad%20Ali") != std::string::npos);
    CHECK(calls[0].target.find("rvstart=2017-03-08") != std::string::npos);
    for (std::size_t i = 1; i < calls.size(); ++i) CHECK(calls[i].at - calls[i - 1].at >= 1s);
}

TEST_CASE("rate limiting spaces every request", "[wiki][live]") {
    auto clock = std::make_shared<fakes::ManualClock>();
    auto transport = std::make_shared<fakes::ScriptedTransport>(clock, simple_server);
    Client client(ClientOptions{}, transport, clock);
    for (const char* t : {"A", "B", "C", "D"}) client.fetch_edit_count(t);
    client.fetch_pageviews("A", {{2016, 1, 1}, {2016, 1, 3}});
    const auto calls = transport->calls();
    REQUIRE(calls.size() == 5);
    for (std::size_t i = 1; i < calls.size(); ++i) CHECK(calls[i].at - calls[i - 1].at >= 1s);

    SECTION("concurrent callers are serialized") {
        auto clock2 = std::make_shared<fakes::ManualClock>();
        auto transport2 = std::make_shared<fakes::ScriptedTransport>(clock2, simple_server);
        Client shared(ClientOptions{}, transport2, clock2);
        std::vector<std::thread> workers;
        for (int w = 0; w < 4; ++w)
            workers.emplace_back([&, w] { shared.fetch_edit_count("T" + std::to_string(w)); });
        for (auto& t : workers) t.join();
        auto times = transport2->calls();
        REQUIRE(times.size() == 4);
        std::sort(times.begin(), times.end(), [](const auto& a, const auto& b) { return a.at < b.at; });
        for (std::size_t i = 1; i < times.size(); ++i) CHECK(times[i].at - times[i - 1].at >= 1s);
    }
}

TEST_CASE("rate limiter on its own", "[wiki][live]") {
    fakes::ManualClock clock;
    RateLimiter limiter(clock, 2s);
    std::vector<std::chrono::steady_clock::duration> starts;
    for (int i = 0; i < 3; ++i) starts.push_back(limiter.run([&] { return clock.now(); }));
    CHECK(starts[1] - starts[0] == 2s);
    CHECK(starts[2] - starts[1] == 2s);
    clock.sleep_for(5s);
    const auto late = limiter.run([&] { return clock.now(); });
    CHECK(late - starts[2] == 5s);
}

TEST_CASE("transient failures are retried with backoff", "[wiki][live]") {
    auto clock = std::make_shared<fakes::ManualClock>();
    int attempts = 0;
    auto transport = std::make_shared<fakes::ScriptedTransport>(clock, [&](const std::string& h, const std::string& t) {
        ++attempts;
        if (attempts == 1) return HttpResponse{429, ""};
        if (attempts == 2) return HttpResponse{503, ""};
        if (attempts == 3) throw NetworkError("connection reset");
        return simple_server(h, t);
    });
    ClientOptions o;
    o.max_retries = 3;
    Client client(o, transport, clock);
    CHECK(std::get<std::int64_t>(client.fetch_edit_count("Prince").value) == 3);
    CHECK(attempts == 4);
    const auto sleeps = clock->sleeps();
    // backoff sleeps of 1, 2 and 4 seconds, interleaved with spacing waits
    std::vector<std::chrono::steady_clock::duration> backoff;
    for (auto d : sleeps)
        if (d == 1s || d == 2s || d == 4s) backoff.push_back(d);
    REQUIRE(backoff.size() >= 3);
    CHECK(backoff[0] == 1s);
    CHECK(std::find(backoff.begin(), backoff.end(), 2s) != backoff.end());
    CHECK(std::find(backoff.begin(), backoff.end(), 4s) != backoff.end());
    const auto calls = transport->calls();
    CHECK(calls[1].at - calls[0].at >= 1s);
    CHECK(calls[2].at - calls[1].at >= 2s);
    CHECK(calls[3].at - calls[2].at >= 4s);

    SECTION("retries are bounded") {
        auto c2 = std::make_shared<fakes::ManualClock>();
        auto always = std::make_shared<fakes::ScriptedTransport>(
            c2, [](const std::string&, const std::string&) { return HttpResponse{500, ""}; });
        Client failing(o, always, c2);
        CHECK_THROWS_AS(failing.fetch_edit_count("Prince"), NetworkError);
        CHECK(always->calls().size() == 4);
    }
}

TEST_CASE("missing and ambiguous pages", "[wiki][errors]") {
    auto clock = std::make_shared<fakes::ManualClock>();
    auto transport = std::make_shared<fakes::ScriptedTransport>(clock, [](const std::string& h, const std::string& t) {
        if (t.find("Ghost") != std::string::npos) {
            if (h == "wikimedia.org") return HttpResponse{404, "{}"};
            return HttpResponse{200, R"({"query":{"pages":[{"title":"Ghost","missing":true}]}})"};
        }
        return HttpResponse{200, revisions_page(1, std::nullopt, true)};
    });
    Client client(ClientOptions{}, transport, clock);
    CHECK_THROWS_AS(client.fetch_edit_count("Ghost"), NotFoundError);
    CHECK_THROWS_AS(client.fetch_pageviews("Ghost", {{2016, 1, 1}, {2016, 1, 2}}), NotFoundError);
    CHECK_THROWS_AS(client.fetch_edit_count("Mercury"), InputError);
    CHECK(transport->calls().size() == 3);
}

TEST_CASE("cache serves repeat requests without the network", "[wiki][cache]") {
    const auto dir = fakes::scratch_dir("wiki_cache");
    auto clock = std::make_shared<fakes::ManualClock>();
    auto transport = std::make_shared<fakes::ScriptedTransport>(clock, simple_server);
    ClientOptions o;
    o.cache_dir = dir;
    const DateRange range{{2016, 1, 1}, {2016, 1, 4}};
    {
        Client first(o, transport, clock);
        CHECK(std::get<std::int64_t>(first.fetch_edit_count("Prince").value) == 3);
        const auto ts = first.fetch_pageviews("Prince", range);
        CHECK(ts.samples.size() == 3);
        CHECK(ts.gaps == std::vector<Date>{{2016, 1, 4}});
        CHECK(first.network_requests() == 2);
    }
    Client second(o, transport, clock);
    const auto snap = second.fetch_edit_count("Prince");
    const auto ts = second.fetch_pageviews("Prince", range);
    CHECK(second.network_requests() == 0);
    CHECK(std::get<std::int64_t>(snap.value) == 3);
    CHECK(snap.retrieved_on == Date{2017, 3, 8});
    CHECK(ts.daily_mean() == Approx(7.0));
    CHECK(ts.partial());

    // cached records can serve as offline fixtures, byte for byte
    const auto name = record_filename("Prince", Metric::pageviews, range_key(range));
    std::ifstream in(dir / name, std::ios::binary);
    std::stringstream text;
    text << in.rdbuf();
    CHECK(text.str() == wiki::detail::views_record("Prince", range, ts.samples));
    ClientOptions off;
    off.offline_dir = dir;
    Client replay(off);
    CHECK(replay.fetch_pageviews("Prince", range).samples == ts.samples);
    CHECK(std::get<std::int64_t>(replay.fetch_edit_count("Prince").value) == 3);
}
