#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "jumpscatter/cojump.hpp"
#include "oracles.hpp"

#include <random>
#include <set>

using namespace jumpscatter;
using namespace std::chrono_literals;

namespace {

const Minute kDay = make_minute(parse_date("2021-03-01"), 0min);

JumpEvent ev(const std::string& ticker, std::chrono::minutes tod, double d1 = 0.0, int sign = 1) {
    std::vector<double> w(119, 0.0);
    w[59] = sign * 5.0;
    auto e = make_event(ticker, kDay + tod, w);
    e.d1 = d1;
    return e;
}

// n co-jumps of a given size whose member D1 values have population std `spread`.
void add_cojumps(std::vector<JumpEvent>& evs, std::size_t n, std::size_t size, double spread, double centre,
                 int& minute) {
    for (std::size_t k = 0; k < n; ++k, ++minute) {
        // symmetric offsets with unit population std
        std::vector<double> off(size);
        for (std::size_t i = 0; i < size; ++i) off[i] = static_cast<double>(i) - static_cast<double>(size - 1) / 2.0;
        double ss = 0.0;
        for (double o : off) ss += o * o;
        const double norm = std::sqrt(ss / static_cast<double>(size));
        for (std::size_t i = 0; i < size; ++i)
            evs.push_back(ev("T" + std::to_string(i), std::chrono::minutes{minute}, centre + spread * off[i] / norm));
    }
}

}  // namespace

TEST_CASE("grouping by minute") {
    SUBCASE("three tickers in the same minute") {
        std::vector<JumpEvent> evs{ev("A", 11h + 37min), ev("B", 11h + 37min), ev("C", 11h + 37min), ev("A", 12h)};
        const auto r = group(evs);
        REQUIRE(r.cojumps.size() == 2);
        CHECK(r.cojumps[0].size() == 3);
        CHECK(r.cojumps[1].size() == 1);
        for (const auto& e : evs) CHECK(e.cojump_id.has_value());
        CHECK(*evs[0].cojump_id == *evs[2].cojump_id);
    }
    SUBCASE("distinct minutes are singles") {
        std::vector<JumpEvent> evs{ev("A", 10h + 31min), ev("B", 10h + 32min), ev("C", 10h + 33min)};
        const auto r = group(evs);
        CHECK(r.cojumps.size() == 3);
        for (const auto& c : r.cojumps) CHECK(c.size() == 1);
    }
    SUBCASE("oversized group is dropped and counted") {
        std::vector<JumpEvent> evs;
        for (int i = 0; i < 251; ++i) evs.push_back(ev("T" + std::to_string(i), 13h));
        evs.push_back(ev("X", 14h));
        const auto r = group(evs, 250);
        CHECK(r.dropped_groups == 1);
        CHECK(r.dropped_jumps == 251);
        REQUIRE(r.cojumps.size() == 1);
        CHECK(r.cojumps[0].size() == 1);
        CHECK_FALSE(evs[0].cojump_id.has_value());
    }
    SUBCASE("a ticker twice in one minute is a data error") {
        std::vector<JumpEvent> evs{ev("A", 13h), ev("A", 13h)};
        CHECK_THROWS_AS(group(evs), DataError);
    }
}

TEST_CASE("grouping is a partition of the retained jumps") {
    std::mt19937_64 rng(1);
    std::uniform_int_distribution<int> minute(0, 200);
    std::vector<JumpEvent> evs;
    std::set<std::pair<int, int>> seen;
    for (int i = 0; i < 2000; ++i) {
        const int m = minute(rng), t = i % 40;
        if (!seen.insert({m, t}).second) continue;
        evs.push_back(ev("T" + std::to_string(t), std::chrono::minutes{600 + m}));
    }
    const auto r = group(evs, 12);
    std::vector<int> hits(evs.size(), 0);
    std::size_t total = 0;
    for (const auto& c : r.cojumps) {
        CHECK(c.size() <= 12);
        for (auto m : c.members) {
            ++hits[m];
            CHECK(evs[m].timestamp == c.minute);
            CHECK(*evs[m].cojump_id == c.id);
        }
        total += c.size();
    }
    CHECK(total + r.dropped_jumps == evs.size());
    for (std::size_t i = 0; i < evs.size(); ++i) CHECK(hits[i] == (evs[i].cojump_id ? 1 : 0));
}

TEST_CASE("news label uses the any-member rule") {
    std::vector<JumpEvent> evs{ev("A", 13h), ev("B", 13h), ev("C", 14h), ev("D", 14h)};
    evs[1].news_related = true;
    const auto r = group(evs);
    CHECK(r.cojumps[0].news_related);
    CHECK_FALSE(r.cojumps[1].news_related);
}

TEST_CASE("reflexivity indicators") {
    std::vector<JumpEvent> evs{ev("A", 13h, -1.0), ev("B", 13h, 0.0), ev("C", 13h, 3.0)};
    auto r = group(evs);
    compute_indicators(r.cojumps, evs);
    const auto& c = r.cojumps[0];
    CHECK(*c.mean_d1 == doctest::Approx(2.0 / 3.0));
    CHECK(*c.min_d1 == -1.0);
    CHECK(*c.max_d1 == 3.0);
    CHECK(*c.min_d1 <= *c.mean_d1);
    CHECK(*c.mean_d1 <= *c.max_d1);
}

TEST_CASE("size-matched spread") {
    SUBCASE("identical within-spread") {
        std::vector<JumpEvent> evs;
        int minute = 600;
        add_cojumps(evs, 8, 3, 0.7, -1.0, minute);
        add_cojumps(evs, 8, 3, 0.7, 2.0, minute);
        auto r = group(evs);
        const auto s = size_sigma(r.cojumps, evs);
        CHECK(s.at(3) == doctest::Approx(0.7).epsilon(1e-12));
    }
    SUBCASE("brute-force recomputation with known per-size spreads") {
        std::vector<JumpEvent> evs;
        int minute = 600;
        std::mt19937_64 rng(2);
        std::uniform_real_distribution<double> spread(0.2, 2.0), centre(-3.0, 3.0);
        std::map<std::size_t, std::vector<double>> planted;
        for (std::size_t size : {3, 4, 6, 9})
            for (int k = 0; k < 7; ++k) {
                const double s = spread(rng);
                planted[size].push_back(s);
                add_cojumps(evs, 1, size, s, centre(rng), minute);
            }
        // size-2 co-jumps never enter the size-matched spread
        add_cojumps(evs, 6, 2, 10.0, 0.0, minute);
        auto r = group(evs);
        const auto s = size_sigma(r.cojumps, evs);
        CHECK_FALSE(s.count(2));
        for (const auto& [size, v] : planted) {
            double m = 0.0;
            for (double x : v) m += x;
            m /= static_cast<double>(v.size());
            CHECK(s.at(size) == doctest::Approx(m).epsilon(1e-12));
        }
    }
    SUBCASE("sparse sizes are pooled with the nearest sizes") {
        std::vector<JumpEvent> evs;
        int minute = 600;
        add_cojumps(evs, 5, 3, 1.0, 0.0, minute);
        add_cojumps(evs, 1, 4, 5.0, 0.0, minute);  // pooled with the five size-3 co-jumps
        add_cojumps(evs, 6, 10, 2.0, 0.0, minute);
        auto r = group(evs);
        const auto s = size_sigma(r.cojumps, evs);
        CHECK(s.at(3) == doctest::Approx(1.0));
        CHECK(s.at(4) == doctest::Approx((5.0 + 5 * 1.0) / 6.0));
        CHECK(s.at(10) == doctest::Approx(2.0));
    }
    SUBCASE("zero spread skips normalization") {
        std::vector<JumpEvent> evs;
        int minute = 600;
        add_cojumps(evs, 5, 3, 0.0, 1.0, minute);
        auto r = group(evs);
        compute_indicators(r.cojumps, evs);
        for (const auto& c : r.cojumps) {
            CHECK(c.normalization_skipped);
            CHECK_FALSE(c.quadrant);
        }
    }
}

TEST_CASE("quadrant rule") {
    // arguments are (mean, min) in units of sigma
    CHECK(quadrant(-2.0, -5.0, 1.0) == Quadrant::LL);
    CHECK(quadrant(-2.0, -3.0, 1.0) == Quadrant::Gray);  // spread exactly one sigma
    CHECK(quadrant(2.0, 1.0, 1.0) == Quadrant::Gray);
    CHECK(quadrant(2.0, -2.0, 1.0) == Quadrant::LR);
    CHECK(quadrant(4.0, 2.0, 1.0) == Quadrant::UR);
    CHECK(quadrant(0.5, -3.0, 1.0) == Quadrant::LR);
    // labels follow the stated precedence on random inputs
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-5.0, 5.0);
    for (int i = 0; i < 10000; ++i) {
        double a = u(rng), b = u(rng);
        const double mean = std::max(a, b), min = std::min(a, b);
        const auto q = quadrant(mean, min, 1.0);
        if (mean - min <= 1.0)
            CHECK(q == Quadrant::Gray);
        else if (mean < 0.0)
            CHECK(q == Quadrant::LL);
        else if (min > 0.0)
            CHECK(q == Quadrant::UR);
        else
            CHECK(q == Quadrant::LR);
    }
}

TEST_CASE("quadrants only for co-jumps above the minimum size") {
    std::vector<JumpEvent> evs;
    int minute = 600;
    add_cojumps(evs, 5, 2, 3.0, -2.0, minute);
    add_cojumps(evs, 5, 3, 3.0, -2.0, minute);
    auto r = group(evs);
    compute_indicators(r.cojumps, evs);
    for (const auto& c : r.cojumps) CHECK(c.quadrant.has_value() == (c.size() >= 3));
}

TEST_CASE("size distribution") {
    std::vector<JumpEvent> evs{ev("A", 13h), ev("B", 13h), ev("A", 14h), ev("B", 14h), ev("A", 15h),
                               ev("B", 15h), ev("C", 15h)};
    auto r = group(evs);
    const auto d = size_distribution(r.cojumps);
    CHECK(d.histogram == std::map<std::size_t, std::size_t>{{2, 2}, {3, 1}});
    CHECK(d.total == 3);
    REQUIRE(d.ccdf.size() == 2);
    CHECK(d.ccdf[0] == std::pair<std::size_t, double>{2, 1.0});
    CHECK(d.ccdf[1].first == 3);
    CHECK(d.ccdf[1].second == doctest::Approx(1.0 / 3.0));

    std::mt19937_64 rng(4);
    const auto sizes = oracle::zipf_sample(1.0, 5000, 300, 5);
    std::vector<CoJump> cjs;
    for (auto s : sizes) {
        CoJump c;
        c.members.resize(s);
        cjs.push_back(c);
    }
    const auto z = size_distribution(cjs);
    double prev = 2.0;
    for (const auto& [s, p] : z.ccdf) {
        CHECK(p <= prev);
        prev = p;
    }
}

TEST_CASE("endogenous-minimum filter") {
    std::vector<CoJump> cjs(3);
    for (auto& c : cjs) {
        c.members.resize(4);
        c.sigma_size = 1.0;
    }
    cjs[0].mean_d1 = 0.5;  // min well below mean and negative
    cjs[0].min_d1 = -2.0;
    cjs[1].mean_d1 = -0.2;  // within one sigma
    cjs[1].min_d1 = -0.9;
    cjs[2].mean_d1 = 3.0;  // positive minimum
    cjs[2].min_d1 = 1.0;
    const auto d = size_distribution(cjs, SizeFilter::EndogenousMinimum);
    CHECK(d.total == 1);
}

TEST_CASE("tail exponent") {
    SUBCASE("Zipf sample") {
        const auto s = oracle::zipf_sample(1.0, 100000, 100000, 6);
        const auto f = fit_tail_exponent(s, 10, 100);
        CHECK(f.tau == doctest::Approx(1.0).epsilon(0.1));
        CHECK(f.tau_ml == doctest::Approx(1.0).epsilon(0.1));
        CHECK_FALSE(f.low_count);
        CHECK(f.range_min == 10);
        CHECK(f.range_max == 100);
    }
    SUBCASE("steeper law") {
        const auto s = oracle::zipf_sample(1.5, 200000, 100000, 7);
        const auto f = fit_tail_exponent(s, 10, 100);
        CHECK(f.tau == doctest::Approx(1.5).epsilon(0.1));
        CHECK(f.tau_ml == doctest::Approx(1.5).epsilon(0.1));
    }
    SUBCASE("standard error shrinks like n^-1/2") {
        const auto small = fit_tail_exponent(oracle::zipf_sample(1.0, 20000, 100000, 8), 10, 100);
        const auto large = fit_tail_exponent(oracle::zipf_sample(1.0, 320000, 100000, 9), 10, 100);
        const double ratio = small.stderr_ml / large.stderr_ml;
        CHECK(ratio > 3.0);
        CHECK(ratio < 5.5);
        // and the estimates themselves converge
        CHECK(std::abs(large.tau_ml - 1.0) < std::abs(small.tau_ml - 1.0) + 0.02);
    }
    SUBCASE("empty range") {
        const std::vector<std::uint64_t> s{1, 2, 3, 4};
        CHECK_THROWS_AS(fit_tail_exponent(s, 10, 100), DataError);
    }
    SUBCASE("few observations are flagged") {
        std::vector<std::uint64_t> s{10, 11, 12, 15, 20, 30, 50, 80};
        CHECK(fit_tail_exponent(s, 10, 100).low_count);
    }
}

TEST_CASE("correlation rho") {
    CHECK(*correlation_rho(std::vector<double>{0.3, 0.3, 0.3, 0.3}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(*correlation_rho(std::vector<double>{1.0, -0.25, -0.75}) == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(std::abs(*correlation_rho(std::vector<double>{0.0, 0.8, 0.0, 0.0})) < 1e-12);
    CHECK_FALSE(correlation_rho(std::vector<double>{0.0, 0.0}));
    std::mt19937_64 rng(10);
    std::normal_distribution<double> z;
    for (int rep = 0; rep < 5000; ++rep) {
        const std::size_t s = 2 + static_cast<std::size_t>(rep % 30);
        std::vector<double> a(s);
        for (double& v : a) v = z(rng) + (rep % 3 == 0 ? 2.0 : 0.0);
        const double r = *correlation_rho(a);
        CHECK(r >= -1.0 / static_cast<double>(s - 1) - 1e-12);
        CHECK(r <= 1.0 + 1e-12);
    }
}

TEST_CASE("average normalized profile") {
    std::mt19937_64 rng(11);
    auto x = oracle::gaussian_window(rng);
    x[59] = 6.0;
    double rms = 0.0;
    for (double v : x) rms += v * v;
    rms = std::sqrt(rms / 119.0);

    SUBCASE("identical members") {
        const auto p = average_normalized_profile({std::span<const double>(x), std::span<const double>(x)});
        REQUIRE(p.profile);
        for (std::size_t i = 0; i < 119; ++i) CHECK((*p.profile)[i] == doctest::Approx(x[i] / rms));
    }
    SUBCASE("opposite members cancel off-centre") {
        std::vector<double> y(x.size());
        std::transform(x.begin(), x.end(), y.begin(), [](double v) { return -v; });
        y[59] = x[59];
        const auto p = average_normalized_profile({std::span<const double>(x), std::span<const double>(y)});
        REQUIRE(p.profile);
        for (std::size_t i = 0; i < 119; ++i)
            if (i != 59) CHECK(std::abs((*p.profile)[i]) < 1e-15);
    }
    SUBCASE("zero-RMS member is skipped") {
        const std::vector<double> zero(119, 0.0);
        const auto p = average_normalized_profile({std::span<const double>(x), std::span<const double>(zero)});
        CHECK(p.used == 1);
        CHECK(p.skipped == 1);
    }
    SUBCASE("strongly correlated co-jump recovers the common profile") {
        std::vector<double> common(119);
        for (int t = -59; t <= 59; ++t) common[static_cast<std::size_t>(t + 59)] = (t > 0 ? 2.0 : 0.5) / (1.0 + std::abs(t));
        common[59] = 8.0;
        std::vector<std::vector<double>> members;
        std::normal_distribution<double> noise(0.0, 0.05);
        for (int k = 0; k < 20; ++k) {
            auto m = common;
            for (double& v : m) v += noise(rng);
            members.push_back(m);
        }
        std::vector<std::span<const double>> spans(members.begin(), members.end());
        const auto p = average_normalized_profile(spans);
        CHECK(oracle::pearson(*p.profile, common) > 0.95);
    }
}

TEST_CASE("sign alignment") {
    auto make = [](std::vector<int> signs) {
        CoJump c;
        c.members.resize(signs.size());
        double s = 0.0;
        for (int v : signs) s += v;
        c.sign_mean = s / static_cast<double>(signs.size());
        return c;
    };
    CHECK(sign_alignment({make({1, 1, 1, 1})}).at(4) == 1.0);
    CHECK(sign_alignment({make({1, -1})}).at(2) == 0.0);

    // random signs: compare with the exact folded binomial mean and its large-S limit
    std::mt19937_64 rng(12);
    std::bernoulli_distribution coin(0.5);
    const std::size_t S = 400;
    std::vector<CoJump> cjs;
    for (int k = 0; k < 4000; ++k) {
        std::vector<int> signs(S);
        for (int& v : signs) v = coin(rng) ? 1 : -1;
        cjs.push_back(make(signs));
    }
    const double got = sign_alignment(cjs).at(S);
    double exact = 0.0;
    for (std::size_t b = 0; b <= S; ++b) {
        const double logp = std::lgamma(S + 1.0) - std::lgamma(b + 1.0) - std::lgamma(S - b + 1.0) - S * std::log(2.0);
        exact += std::exp(logp) * std::abs(2.0 * static_cast<double>(b) - S) / S;
    }
    const double asymptotic = std::sqrt(2.0 / (std::numbers::pi * S));
    CHECK(exact == doctest::Approx(asymptotic).epsilon(0.01));
    const double se = std::sqrt((1.0 / S - exact * exact) / 4000.0);
    CHECK(std::abs(got - exact) < 4.0 * se);
}

TEST_CASE("co-jump sign mean and rho are filled by the indicator pass") {
    std::vector<JumpEvent> evs{ev("A", 13h, 0.1, 1), ev("B", 13h, 0.2, -1), ev("C", 13h, 0.3, 1)};
    evs[0].d3 = 0.5;
    evs[1].d3 = 0.5;
    evs[2].d3 = 0.5;
    auto r = group(evs);
    compute_indicators(r.cojumps, evs);
    CHECK(r.cojumps[0].sign_mean == doctest::Approx(1.0 / 3.0));
    CHECK(*r.cojumps[0].rho == doctest::Approx(1.0));
}
