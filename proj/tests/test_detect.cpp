#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "jumpscatter/detect.hpp"
#include "oracles.hpp"

#include <random>
#include <set>

using namespace jumpscatter;
using namespace std::chrono_literals;

namespace {

PanelGrid make_grid(std::size_t tickers, std::size_t days, int first_minute, int last_minute,
                    SessionWindow session = {}) {
    PanelGrid g;
    for (std::size_t t = 0; t < tickers; ++t) g.tickers.push_back("T" + std::to_string(t));
    const Date start = parse_date("2021-01-04");
    for (std::size_t d = 0; d < days; ++d) g.days.push_back(start + std::chrono::days{static_cast<int>(d)});
    for (int m = first_minute; m <= last_minute; ++m) g.slots.emplace_back(m);
    g.day_excluded.assign(days, false);
    g.session = session;
    return g;
}

ReturnPanel gaussian_panel(std::size_t tickers, std::size_t days, std::uint64_t seed,
                           const std::function<double(std::size_t)>& shape) {
    ReturnPanel p;
    p.grid = make_grid(tickers, days, 9 * 60 + 31, 16 * 60);
    p.returns.resize(p.grid.cell_count());
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 1e-3);
    for (std::size_t t = 0; t < tickers; ++t)
        for (std::size_t d = 0; d < days; ++d)
            for (std::size_t s = 0; s < p.grid.slots.size(); ++s) p.returns[p.grid.index(t, d, s)] = shape(s) * z(rng);
    return p;
}

std::size_t slot_of(const PanelGrid& g, std::chrono::minutes m) {
    return static_cast<std::size_t>(std::find(g.slots.begin(), g.slots.end(), m) - g.slots.begin());
}

}  // namespace

TEST_CASE("flat Gaussian panel gives a flat periodicity") {
    const auto p = gaussian_panel(30, 100, 1, [](std::size_t) { return 1.0; });
    const auto sp = deseasonalize(p, {.threads = 4});
    REQUIRE(sp.periodicity.size() == 390);
    double worst = 0.0;
    for (double f : sp.periodicity) worst = std::max(worst, std::abs(f - 1.0));
    CHECK(worst < 0.10);
    // unit variance of the scores under Gaussian residuals
    std::vector<double> x;
    for (double v : sp.scores)
        if (std::isfinite(v)) x.push_back(v);
    double ss = 0.0;
    for (double v : x) ss += v * v;
    CHECK(std::sqrt(ss / static_cast<double>(x.size())) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("planted U-shape is recovered") {
    auto g = [](std::size_t s) {
        const double u = (static_cast<double>(s) - 194.5) / 194.5;
        return 0.6 + 1.2 * u * u;
    };
    const auto p = gaussian_panel(20, 40, 2, g);
    const auto sp = deseasonalize(p, {.threads = 4});
    std::vector<double> planted(390);
    for (std::size_t s = 0; s < 390; ++s) planted[s] = g(s);
    CHECK(oracle::pearson(sp.periodicity, planted) > 0.99);
    CHECK(std::all_of(sp.periodicity.begin(), sp.periodicity.end(), [](double f) { return f > 0.0; }));
}

TEST_CASE("constant zero returns are degenerate") {
    auto p = gaussian_panel(3, 5, 3, [](std::size_t) { return 0.0; });
    CHECK_THROWS_AS(deseasonalize(p), DegenerateVolatilityError);
}

TEST_CASE("too few active days is a precondition failure") {
    auto p = gaussian_panel(3, 2, 3, [](std::size_t) { return 1.0; });
    CHECK_THROWS_AS(deseasonalize(p), PreconditionError);
}

TEST_CASE("all-missing ticker is skipped with a warning") {
    auto p = gaussian_panel(3, 5, 4, [](std::size_t) { return 1.0; });
    for (std::size_t d = 0; d < 5; ++d)
        for (std::size_t s = 0; s < 390; ++s) p.returns[p.grid.index(1, d, s)] = kMissing;
    const auto sp = deseasonalize(p);
    CHECK(sp.ticker_skipped[1]);
    CHECK_FALSE(sp.ticker_skipped[0]);
    CHECK_FALSE(sp.warnings.empty());
}

TEST_CASE("a single planted spike is the only detection") {
    auto g = make_grid(1, 1, 9 * 60 + 31, 16 * 60);
    std::vector<double> x(g.cell_count(), 0.0);
    const auto s = slot_of(g, 12h + 7min);
    x[s] = -5.0;
    const auto sp = score_panel_from_scores(g, x);
    const auto j = detect_jumps(sp);
    REQUIRE(j.size() == 1);
    CHECK(j[0].slot == s);
    CHECK(j[0].score == -5.0);
}

TEST_CASE("scores below threshold give no jumps") {
    auto g = make_grid(2, 3, 9 * 60 + 31, 16 * 60);
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-3.99, 3.99);
    std::vector<double> x(g.cell_count());
    for (double& v : x) v = u(rng);
    CHECK(detect_jumps(score_panel_from_scores(g, x)).empty());
}

TEST_CASE("out-of-session and excluded-day minutes are never flagged") {
    auto g = make_grid(1, 2, 9 * 60 + 31, 16 * 60);
    g.day_excluded[1] = true;
    std::vector<double> x(g.cell_count(), 10.0);
    const auto j = detect_jumps(score_panel_from_scores(g, x));
    for (const auto& c : j) {
        CHECK(c.day == 0);
        CHECK(g.in_session(c.slot));
    }
    CHECK(j.size() == 271);  // 10:30..15:00 inclusive
}

TEST_CASE("Gaussian exceedance count matches the two-sided tail") {
    // 10^6 in-session minutes: 4000 days of 250 slots, session covering all.
    auto g = make_grid(1, 4000, 600, 849, SessionWindow{600min, 849min});
    std::mt19937_64 rng(20240601);
    std::normal_distribution<double> z;
    std::vector<double> x(g.cell_count());
    for (double& v : x) v = z(rng);
    const double lambda = 2.0 * oracle::normal_sf(4.0) * 1e6;
    CHECK(lambda == doctest::Approx(63.34).epsilon(1e-3));
    const auto n = static_cast<double>(detect_jumps(score_panel_from_scores(g, x)).size());
    CHECK(std::abs(n - lambda) <= 3.0 * std::sqrt(lambda));
}

TEST_CASE("Gumbel threshold controls the daily family-wise level") {
    for (double alpha : {0.01, 0.05}) {
        const double theta = gumbel_threshold(271, alpha);
        // exact probability that the max of 271 |N(0,1)| exceeds theta
        const double p = 1.0 - std::pow(1.0 - 2.0 * oracle::normal_sf(theta), 271.0);
        CHECK(p > 0.5 * alpha);
        CHECK(p < 1.5 * alpha);
    }
    CHECK(gumbel_threshold(271, 0.01) > gumbel_threshold(271, 0.05));
}

TEST_CASE("detection is sign-equivariant") {
    auto g = make_grid(3, 4, 9 * 60 + 31, 16 * 60);
    std::mt19937_64 rng(6);
    std::student_t_distribution<double> t3(3.0);
    std::vector<double> x(g.cell_count());
    for (double& v : x) v = t3(rng);
    std::vector<double> neg(x.size());
    std::transform(x.begin(), x.end(), neg.begin(), [](double v) { return -v; });
    auto a = detect_jumps(score_panel_from_scores(g, x));
    auto b = detect_jumps(score_panel_from_scores(g, neg));
    REQUIRE(a.size() == b.size());
    REQUIRE_FALSE(a.empty());
    bool same = true;
    for (std::size_t i = 0; i < a.size(); ++i)
        same = same && a[i].ticker == b[i].ticker && a[i].day == b[i].day && a[i].slot == b[i].slot;
    CHECK(same);
}

TEST_CASE("cluster pruning") {
    auto g = make_grid(1, 2, 0, 1439, SessionWindow{0min, 1439min});
    const auto sp = score_panel_from_scores(g, std::vector<double>(g.cell_count(), 0.0));
    auto at = [](std::size_t day, std::size_t slot) { return JumpCandidate{0, day, slot, 5.0}; };

    SUBCASE("replicas inside the window are dropped") {
        const auto r = prune_clusters(sp, {at(0, 100), at(0, 103), at(0, 500)}, 60);
        REQUIRE(r.size() == 2);
        CHECK(r[0].slot == 100);
        CHECK(r[1].slot == 500);
    }
    SUBCASE("single jump") {
        const auto r = prune_clusters(sp, {at(0, 42)}, 60);
        REQUIRE(r.size() == 1);
        CHECK(r[0].slot == 42);
    }
    SUBCASE("chain measured from the retained jump, window inclusive") {
        const auto r = prune_clusters(sp, {at(0, 100), at(0, 150), at(0, 160), at(0, 161)}, 60);
        REQUIRE(r.size() == 2);
        CHECK(r[1].slot == 161);
    }
    SUBCASE("a new day starts fresh") {
        const auto r = prune_clusters(sp, {at(0, 1430), at(1, 5)}, 60);
        CHECK(r.size() == 2);
    }
}

TEST_CASE("pruning is idempotent and leaves no retained pair within the window") {
    auto g = make_grid(5, 3, 9 * 60 + 31, 16 * 60);
    std::mt19937_64 rng(7);
    std::normal_distribution<double> z(0.0, 2.5);
    std::vector<double> x(g.cell_count());
    for (double& v : x) v = z(rng);
    const auto sp = score_panel_from_scores(g, x);
    const auto raw = detect_jumps(sp);
    REQUIRE(raw.size() > 100);
    const auto once = prune_clusters(sp, raw, 60);
    const auto twice = prune_clusters(sp, once, 60);
    CHECK(once == twice);
    for (std::size_t i = 1; i < once.size(); ++i) {
        const auto& a = once[i - 1];
        const auto& b = once[i];
        if (a.ticker == b.ticker && a.day == b.day) CHECK((g.slots[b.slot] - g.slots[a.slot]).count() > 60);
    }
}

TEST_CASE("retained inter-jump times of a Poisson stream are exponential past the dead time") {
    // One long day per ticker; raw jumps are Bernoulli(q) per minute. After a
    // retained jump the next one is the first raw jump more than 60 minutes
    // later, so (gap - 60) is geometric; a test-side uniform refinement makes
    // it exactly exponential with rate -log(1 - q).
    const double q = 0.05;
    const double rate = -std::log(1.0 - q);
    const std::size_t tickers = 1500;
    auto g = make_grid(tickers, 1, 0, 1439, SessionWindow{0min, 1439min});
    std::mt19937_64 rng(8);
    std::bernoulli_distribution hit(q);
    std::vector<double> x(g.cell_count(), 0.0);
    for (double& v : x) v = hit(rng) ? 6.0 : 0.0;
    const auto sp = score_panel_from_scores(g, x);
    const auto kept = prune_clusters(sp, detect_jumps(sp), 60);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> gaps;
    for (std::size_t i = 1; i < kept.size(); ++i) {
        // first complete gap of each ticker only; later gaps are censored by the day end
        if (kept[i].ticker != kept[i - 1].ticker) continue;
        if (i >= 2 && kept[i - 2].ticker == kept[i].ticker) continue;
        const auto k = static_cast<double>(kept[i].slot - kept[i - 1].slot) - 60.0;
        REQUIRE(k >= 1.0);
        const double w = -std::log(1.0 - u(rng) * (1.0 - std::exp(-rate))) / rate;
        gaps.push_back(k - 1.0 + w);
    }
    REQUIRE(gaps.size() > 1000);
    CHECK(oracle::ks_exponential_pvalue(gaps, rate) > 0.01);
}

TEST_CASE("window extraction") {
    auto g = make_grid(1, 1, 9 * 60 + 31, 16 * 60);
    std::vector<double> x(g.cell_count());
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::sin(0.37 * static_cast<double>(i));
    const auto s0 = slot_of(g, 12h);
    x[s0] = -7.5;
    const auto sp = score_panel_from_scores(g, x);

    SUBCASE("full context") {
        WindowSkip why{};
        const auto ev = extract_window(sp, {0, 0, s0, -7.5}, {}, &why);
        REQUIRE(ev);
        CHECK(why == WindowSkip::None);
        CHECK(ev->window.size() == 119);
        CHECK(ev->window[59] == -7.5);
        CHECK(ev->sign == -1);
        CHECK(ev->aligned[59] == 7.5);
        CHECK(ev->timestamp == g.timestamp(0, s0));
        for (int t = -59; t <= 59; ++t)
            CHECK(ev->window[static_cast<std::size_t>(t + 59)] == sp.score(0, 0, s0 + static_cast<std::size_t>(t + 59) - 59));
        for (std::size_t i = 0; i < 119; ++i) CHECK(ev->aligned[i] == -ev->window[i]);
    }
    SUBCASE("30 minutes after the session opens") {
        WindowSkip why{};
        const auto s = slot_of(g, 11h);
        CHECK_FALSE(extract_window(sp, {0, 0, s, x[s]}, {}, &why));
        CHECK(why == WindowSkip::Truncated);
    }
    SUBCASE("exactly 59 minutes of context on both edges") {
        CHECK(extract_window(sp, {0, 0, slot_of(g, 11h + 29min), 5.0}));
        CHECK(extract_window(sp, {0, 0, slot_of(g, 14h + 1min), 5.0}));
        CHECK_FALSE(extract_window(sp, {0, 0, slot_of(g, 11h + 28min), 5.0}));
        CHECK_FALSE(extract_window(sp, {0, 0, slot_of(g, 14h + 2min), 5.0}));
    }
    SUBCASE("missing cells follow the policy") {
        auto y = x;
        y[s0 + 3] = kMissing;
        const auto sp2 = score_panel_from_scores(g, y);
        const auto filled = extract_window(sp2, {0, 0, s0, -7.5}, {MissingPolicy::ZeroFill});
        REQUIRE(filled);
        CHECK(filled->window[62] == 0.0);
        WindowSkip why{};
        CHECK_FALSE(extract_window(sp2, {0, 0, s0, -7.5}, {MissingPolicy::Skip}, &why));
        CHECK(why == WindowSkip::Missing);
    }
}

TEST_CASE("extract_windows reports skips") {
    auto g = make_grid(1, 1, 9 * 60 + 31, 16 * 60);
    std::vector<double> x(g.cell_count(), 0.1);
    x[slot_of(g, 10h + 40min)] = 9.0;
    x[slot_of(g, 13h)] = 9.0;
    const auto sp = score_panel_from_scores(g, x);
    const auto r = extract_windows(sp, detect_jumps(sp));
    CHECK(r.events.size() == 1);
    CHECK(r.truncated == 1);
}
