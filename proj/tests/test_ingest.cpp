#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "jumpscatter/detect.hpp"
#include "jumpscatter/ingest.hpp"

#include <cmath>
#include <cstring>
#include <random>
#include <sstream>

using namespace jumpscatter;
using namespace std::chrono_literals;

namespace {

std::string hhmm(int minute_of_day) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "%02d:%02d", minute_of_day / 60, minute_of_day % 60);
    return buf;
}

// Full 09:31..16:00 day (390 minutes) for each ticker.
std::string full_day_csv(const std::vector<std::string>& tickers, const std::vector<std::string>& dates,
                         std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 1e-3);
    std::ostringstream csv;
    csv << "date,time,ticker,return\n";
    for (const auto& d : dates)
        for (int m = 9 * 60 + 31; m <= 16 * 60; ++m)
            for (const auto& t : tickers) csv << d << ',' << hhmm(m) << ',' << t << ',' << z(rng) << '\n';
    return csv.str();
}

bool same_bits(double a, double b) {
    if (std::isnan(a) || std::isnan(b)) return std::isnan(a) && std::isnan(b);
    return std::memcmp(&a, &b, sizeof a) == 0;
}

}  // namespace

TEST_CASE("two tickers over a full day load as a dense 2 x 390 panel") {
    std::istringstream in(full_day_csv({"AAA", "BBB"}, {"2021-03-01"}, 1));
    const auto p = read_panel(in);
    CHECK(p.grid.tickers.size() == 2);
    CHECK(p.grid.days.size() == 1);
    CHECK(p.grid.slots.size() == 390);
    CHECK(p.missing_count() == 0);
    // Out-of-session rows are retained but flagged.
    CHECK_FALSE(p.grid.in_session(0));
    CHECK(p.grid.session.start == 10h + 30min);
}

TEST_CASE("price input is differenced to log returns") {
    std::istringstream in("date,time,ticker,price\n2021-03-01,10:00,X,100\n2021-03-01,10:01,X,101\n");
    const auto p = read_panel(in);
    REQUIRE(p.grid.slots.size() == 2);
    CHECK(is_missing(p.at(0, 0, 0)));
    CHECK(p.at(0, 0, 1) == doctest::Approx(std::log(101.0 / 100.0)).epsilon(1e-15));
    CHECK(p.at(0, 0, 1) == doctest::Approx(0.00995).epsilon(1e-3));
}

TEST_CASE("price differencing restarts every day") {
    std::istringstream in(
        "date,time,ticker,price\n2021-03-01,10:00,X,100\n2021-03-01,10:01,X,110\n2021-03-02,10:00,X,50\n"
        "2021-03-02,10:01,X,55\n");
    const auto p = read_panel(in);
    CHECK(is_missing(p.at(0, 1, 0)));
    CHECK(p.at(0, 1, 1) == doctest::Approx(std::log(1.1)));
}

TEST_CASE("non-numeric return raises a parse error naming the line") {
    std::istringstream in("date,time,ticker,return\n2021-03-01,10:00,X,0.1\n2021-03-01,10:01,X,abc\n");
    try {
        read_panel(in);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("duplicate cell is an alignment error") {
    std::istringstream in("date,time,ticker,return\n2021-03-01,10:00,X,0.1\n2021-03-01,10:00,X,0.2\n");
    CHECK_THROWS_AS(read_panel(in), AlignmentError);
}

TEST_CASE("missing cells stay explicit") {
    std::istringstream in("date,time,ticker,return\n2021-03-01,10:00,X,0.1\n2021-03-01,10:01,Y,0.2\n");
    const auto p = read_panel(in);
    CHECK(p.missing_count() == 2);
    CHECK(is_missing(p.at(0, 0, 1)));
    CHECK(is_missing(p.at(1, 0, 0)));
}

TEST_CASE("write_panel round-trips bit for bit") {
    std::istringstream in(full_day_csv({"AAA", "BBB", "CCC"}, {"2021-03-01", "2021-03-02"}, 2));
    auto p = read_panel(in);
    p.returns[5] = kMissing;
    p.returns[17] = 1.0 / 3.0;
    p.returns[18] = -5e-310;  // subnormal
    std::ostringstream out;
    write_panel(out, p);
    std::istringstream back(out.str());
    const auto q = read_panel(back);
    REQUIRE(q.returns.size() == p.returns.size());
    CHECK(q.grid.tickers == p.grid.tickers);
    CHECK(q.grid.days == p.grid.days);
    CHECK(q.grid.slots == p.grid.slots);
    bool identical = true;
    for (std::size_t i = 0; i < p.returns.size(); ++i) identical = identical && same_bits(p.returns[i], q.returns[i]);
    CHECK(identical);
}

TEST_CASE("comment lines are ignored") {
    std::istringstream in("# config_hash=0123\ndate,time,ticker,return\n2021-03-01,10:00,X,0.5\n");
    CHECK(read_panel(in).at(0, 0, 0) == 0.5);
}

TEST_CASE("news feed is sorted and deduplicated") {
    SUBCASE("duplicate collapsed") {
        std::istringstream in("date,time,ticker\n2021-03-01,10:00,X\n2021-03-01,10:00,X\n2021-03-01,11:00,Y\n");
        CHECK(read_news(in).events.size() == 2);
    }
    SUBCASE("empty file") {
        std::istringstream in("");
        CHECK(read_news(in).events.empty());
    }
    SUBCASE("out of order rows") {
        std::istringstream in("date,time,ticker\n2021-03-02,10:00,X\n2021-03-01,12:00,\n2021-03-01,11:00,Y\n");
        const auto f = read_news(in);
        REQUIRE(f.events.size() == 3);
        CHECK(std::is_sorted(f.events.begin(), f.events.end()));
        CHECK_FALSE(f.events[1].ticker.has_value());
    }
    SUBCASE("bad timestamp") {
        std::istringstream in("date,time\n2021-13-01,10:00\n");
        CHECK_THROWS_AS(read_news(in), ParseError);
    }
}

TEST_CASE("exclusion calendar masks days without touching data") {
    std::istringstream in(full_day_csv(
        {"AAA"}, {"2021-03-01", "2021-03-02", "2021-03-03", "2021-03-04", "2021-03-05"}, 3));
    const auto p = read_panel(in);
    CHECK(p.grid.active_day_count() == 5);

    SUBCASE("one of five days") {
        std::istringstream cal("2021-03-03\n");
        const auto q = apply_exclusions(p, read_exclusions(cal));
        CHECK(q.grid.active_day_count() == 4);
        CHECK_FALSE(q.grid.day_active(2));
        CHECK(q.returns.size() == p.returns.size());
        const auto r = clear_exclusions(q);
        CHECK(r.grid.day_excluded == p.grid.day_excluded);
        bool identical = true;
        for (std::size_t i = 0; i < p.returns.size(); ++i) identical = identical && same_bits(p.returns[i], r.returns[i]);
        CHECK(identical);
    }
    SUBCASE("empty calendar is the identity") {
        std::istringstream cal("");
        const auto q = apply_exclusions(p, read_exclusions(cal));
        CHECK(q.grid.day_excluded == p.grid.day_excluded);
    }
    SUBCASE("dates outside the panel only warn") {
        std::istringstream cal("2020-01-01\n");
        std::vector<std::string> warnings;
        const auto q = apply_exclusions(p, read_exclusions(cal), &warnings);
        CHECK(warnings.size() == 1);
        CHECK(q.grid.active_day_count() == 5);
    }
    SUBCASE("all days excluded leaves a valid panel and no jumps") {
        std::istringstream cal("2021-03-01\n2021-03-02\n2021-03-03\n2021-03-04\n2021-03-05\n");
        auto q = apply_exclusions(p, read_exclusions(cal));
        CHECK(q.grid.active_day_count() == 0);
        std::vector<double> big(q.returns.size(), 100.0);
        const auto scores = score_panel_from_scores(q.grid, big);
        CHECK(detect_jumps(scores).empty());
    }
}

TEST_CASE("exclusion file carries the co-jump size cut") {
    std::istringstream cal("# FOMC\n2021-03-17\n");
    const auto c = read_exclusions(cal, 120);
    CHECK(c.max_cojump_size == 120);
    CHECK(c.excluded_dates.size() == 1);
    std::istringstream bad("not-a-date\n");
    CHECK_THROWS_AS(read_exclusions(bad), ParseError);
}

TEST_CASE("session parsing") {
    const auto s = parse_session("09:45-15:30");
    CHECK(s.start == 9h + 45min);
    CHECK(s.end == 15h + 30min);
    CHECK(format_session(s) == "09:45-15:30");
    CHECK_THROWS_AS(parse_session("15:00-10:00"), ConfigError);
    CHECK_THROWS_AS(parse_session("nonsense"), ConfigError);
}
