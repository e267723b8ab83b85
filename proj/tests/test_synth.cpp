#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "jumpscatter/cojump.hpp"
#include "jumpscatter/detect.hpp"
#include "jumpscatter/score.hpp"
#include "jumpscatter/synth.hpp"
#include "oracles.hpp"

#include <cstring>
#include <numeric>

using namespace jumpscatter;

namespace {

double sample_mean(const std::vector<std::uint64_t>& s) {
    long double acc = 0.0;
    for (auto v : s) acc += static_cast<long double>(v);
    return static_cast<double>(acc / static_cast<long double>(s.size()));
}

}  // namespace

TEST_CASE("benchmark sweep shape") {
    const auto grid = asymmetry_sweep(100);
    REQUIRE(grid.size() == 100);
    CHECK(sweep_coordinate(0, 100) == -1.0);
    CHECK(sweep_coordinate(99, 100) == 1.0);
    for (const auto& p : grid) {
        CHECK(p.p_pre > 0.0);
        CHECK(p.p_pre < 3.0);
        CHECK(p.p_post > 0.0);
        CHECK(p.n_pre >= 0.0);
        CHECK(p.t_c == -0.5);
        CHECK(p.d == 0.5);
    }
}

TEST_CASE("benchmark series share one noise path and a super-threshold spike") {
    const auto s = generate_benchmark({.n_series = 20});
    REQUIRE(s.size() == 20);
    for (const auto& b : s) {
        CHECK(b.event.window.size() == 119);
        CHECK(b.event.window[59] == 8.0);
        CHECK(b.event.planted_asymmetry.has_value());
        const auto prof = power_law_profile(b.params);
        for (std::size_t i = 0; i < 119; ++i) {
            if (i == 59) continue;
            const double z0 = s[0].event.window[i] / power_law_profile(s[0].params)[i];
            CHECK(b.event.window[i] / prof[i] == doctest::Approx(z0).epsilon(1e-12));
        }
    }
}

TEST_CASE("benchmark is deterministic and seed-dependent") {
    const auto a = generate_benchmark({.seed = 3});
    const auto b = generate_benchmark({.seed = 3});
    const auto c = generate_benchmark({.seed = 4});
    bool same = true, differs = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        same = same && std::memcmp(a[i].event.window.data(), b[i].event.window.data(), 119 * sizeof(double)) == 0;
        differs = differs || a[i].event.window != c[i].event.window;
    }
    CHECK(same);
    CHECK(differs);
}

TEST_CASE("analytic asymmetry of the noiseless profiles") {
    SUBCASE("symmetric parameters with the onset at zero") {
        const PowerLawParams p{1.0, 1.0, 0.7, 0.7, 0.0, 0.5};
        CHECK(std::abs(asymmetry(power_law_profile(p))) < 0.05);
    }
    SUBCASE("no pre-jump activity") {
        for (double p_post : {0.3, 0.7, 1.5}) {
            const PowerLawParams p{0.0, 1.0, 0.7, p_post, -0.5, 0.5};
            CHECK(asymmetry(power_law_profile(p)) > 0.9);
        }
    }
    SUBCASE("sweep endpoints and monotonicity") {
        const auto s = generate_benchmark({});
        CHECK(s.front().a_jump_analytic == doctest::Approx(-1.0));
        CHECK(s.back().a_jump_analytic == doctest::Approx(1.0));
        for (std::size_t i = 1; i < s.size(); ++i) CHECK(s[i].a_jump_analytic > s[i - 1].a_jump_analytic);
        for (const auto& b : s) CHECK(b.a_jump_analytic == asymmetry(power_law_profile(b.params)));
    }
}

TEST_CASE("epsilon laws") {
    BranchingSpec u{.law = EpsilonLaw::Uniform, .eps_min = 0.1};
    CHECK(epsilon_quantile(u, 0.0) == doctest::Approx(0.1));
    CHECK(epsilon_quantile(u, 0.5) == doctest::Approx(0.55));
    BranchingSpec p{.law = EpsilonLaw::PowerLaw, .eps_min = 0.0, .gamma = 2.0};
    // CDF eps^3 on [0, 1]
    CHECK(epsilon_quantile(p, 0.125) == doctest::Approx(0.5));
    BranchingSpec f{.law = EpsilonLaw::Fixed, .eps_fixed = 0.3};
    CHECK(epsilon_quantile(f, 0.9) == 0.3);
    CHECK(parse_epsilon_law("power") == EpsilonLaw::PowerLaw);
    CHECK_THROWS_AS(parse_epsilon_law("gauss"), ConfigError);
}

TEST_CASE("branching with no offspring") {
    const auto s = simulate_branching({.law = EpsilonLaw::Fixed, .eps_fixed = 1.0, .n_avalanches = 10000});
    CHECK(std::all_of(s.sizes.begin(), s.sizes.end(), [](auto v) { return v == 1; }));
    CHECK(s.cap_hits == 0);
}

TEST_CASE("Galton-Watson mean progeny") {
    for (auto law : {OffspringLaw::Poisson, OffspringLaw::Binomial}) {
        const auto s = simulate_branching(
            {.law = EpsilonLaw::Fixed, .eps_fixed = 0.1, .offspring = law, .n_avalanches = 1'000'000, .threads = 2});
        CHECK(s.sizes.size() == 1'000'000);
        CHECK(sample_mean(s.sizes) == doctest::Approx(10.0).epsilon(0.05));
    }
}

TEST_CASE("Poisson progeny follows the Borel law") {
    const double mu = 0.9;
    const std::size_t n = 400000;
    const auto s = simulate_branching({.law = EpsilonLaw::Fixed, .eps_fixed = 1.0 - mu, .n_avalanches = n});
    std::vector<std::size_t> counts(8, 0);
    for (auto v : s.sizes)
        if (v < counts.size()) ++counts[v];
    for (std::uint64_t k = 1; k < counts.size(); ++k) {
        const double p = oracle::borel_pmf(k, mu);
        const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
        CHECK(std::abs(static_cast<double>(counts[k]) / static_cast<double>(n) - p) < 4.0 * se);
    }
}

TEST_CASE("conditional size law decays as S^-3/2") {
    const double eps = 0.05;
    const auto s = simulate_branching({.law = EpsilonLaw::Fixed, .eps_fixed = eps, .n_avalanches = 1'000'000});
    const auto hi = static_cast<std::uint64_t>(1.0 / (eps * eps) / 4.0);
    CHECK(pmf_loglog_slope(s.sizes, 5, hi) == doctest::Approx(-1.5).epsilon(0.1 / 1.5));
}

TEST_CASE("power-law epsilon densities give tau = 1 + gamma / 2") {
    for (double gamma : {1.0, 2.0}) {
        const auto s = simulate_branching(
            {.law = EpsilonLaw::PowerLaw, .eps_min = 0.0, .gamma = gamma, .n_avalanches = 1'000'000, .threads = 2});
        const auto f = fit_tail_exponent(s.sizes, 10, 100);
        CHECK(std::abs(f.tau - (1.0 + gamma / 2.0)) <= 0.15);
    }
}

TEST_CASE("cap is enforced and counted") {
    const auto s = simulate_branching(
        {.law = EpsilonLaw::Fixed, .eps_fixed = 1e-6, .n_avalanches = 2000, .max_size = 50});
    CHECK(s.cap_hits > 0);
    CHECK(std::all_of(s.sizes.begin(), s.sizes.end(), [](auto v) { return v <= 50; }));
}

TEST_CASE("branching sample does not depend on the thread count") {
    const BranchingSpec spec{.n_avalanches = 100000, .seed = 21};
    auto a = spec, b = spec;
    a.threads = 1;
    b.threads = 4;
    CHECK(simulate_branching(a).sizes == simulate_branching(b).sizes);
    auto c = spec;
    c.seed = 22;
    CHECK(simulate_branching(a).sizes != simulate_branching(c).sizes);
}

TEST_CASE("synthetic panel") {
    const PanelSpec spec{.tickers = 12, .days = 8};
    const auto p = generate_panel(spec);
    CHECK(p.grid.tickers.size() == 12);
    CHECK(p.grid.days.size() == 8);
    CHECK(p.grid.slots.size() == 390);
    CHECK(p.missing_count() == 0);
    for (auto d : p.grid.days) {
        const std::chrono::weekday wd{std::chrono::sys_days{d}};
        CHECK(wd != std::chrono::Saturday);
        CHECK(wd != std::chrono::Sunday);
    }
    const auto q = generate_panel(spec);
    CHECK(std::memcmp(p.returns.data(), q.returns.data(), p.returns.size() * sizeof(double)) == 0);

    // planted jumps and co-jumps are found by the detector
    const auto sp = deseasonalize(p);
    const auto jumps = prune_clusters(sp, detect_jumps(sp));
    auto events = extract_windows(sp, jumps).events;
    CHECK(events.size() > 10);
    const auto g = group(events);
    CHECK(std::any_of(g.cojumps.begin(), g.cojumps.end(), [](const CoJump& c) { return c.size() >= 2; }));
}
