#pragma once

#include "jumpscatter/event.hpp"
#include "jumpscatter/ingest.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace jumpscatter {

// ---- power-law benchmark ----------------------------------------------------

struct BenchmarkSpec {
    double t_c{-0.5};
    double d{0.5};
    std::size_t n_series{100};
    /// Explicit parameter list; when empty a one-parameter sweep of
    /// n_series points from pre-dominant to post-dominant activity is used.
    std::vector<PowerLawParams> grid;
    double noise_sd{1.0};
    double spike{8.0};
    std::uint64_t seed{7};
};

/// a in [-1, 1] on n points: N_pre = 1 - a, N_post = 1 + a,
/// p_pre = 0.6 + 0.2 (1 + a), p_post = 0.6 + 0.2 (1 - a).
std::vector<PowerLawParams> asymmetry_sweep(std::size_t n, double t_c = -0.5, double d = 0.5);
/// The sweep coordinate of entry i (-1 .. 1).
double sweep_coordinate(std::size_t i, std::size_t n);

struct BenchmarkSeries {
    double asymmetry_parameter{0.0};
    PowerLawParams params;
    double a_jump_analytic{0.0};  // A_jump of the noiseless profile
    JumpEvent event;
};

/// x(t) = profile(t) * z(t) for t != 0 with one shared standard-Gaussian path
/// z (scaled by noise_sd), x(0) = +spike. The Gaussian sign serves as the
/// random sign of each off-center return.
std::vector<BenchmarkSeries> generate_benchmark(const BenchmarkSpec& spec);

// ---- branching process ------------------------------------------------------

enum class EpsilonLaw { Uniform, PowerLaw, Fixed };
enum class OffspringLaw { Poisson, Binomial };

std::string to_string(EpsilonLaw law);
EpsilonLaw parse_epsilon_law(std::string_view text);
std::string to_string(OffspringLaw law);
OffspringLaw parse_offspring_law(std::string_view text);

struct BranchingSpec {
    EpsilonLaw law{EpsilonLaw::Uniform};
    /// Lower end of the epsilon support for the uniform and power laws.
    double eps_min{0.1};
    /// Exponent of the density ~ eps^gamma on [eps_min, 1].
    double gamma{0.0};
    /// Value used by the fixed law.
    double eps_fixed{0.1};
    OffspringLaw offspring{OffspringLaw::Poisson};
    /// Trials per parent for the binomial law (success rate phi / k).
    int binomial_trials{2};
    std::size_t n_avalanches{1'000'000};
    std::uint64_t max_size{10'000'000};
    std::uint64_t seed{7};
    unsigned threads{1};
};

struct BranchingSample {
    std::vector<std::uint64_t> sizes;
    std::size_t cap_hits{0};
};

/// Galton-Watson avalanches from one root with mean offspring phi = 1 - eps,
/// eps drawn per avalanche. Streams are derived per chunk of avalanches from
/// the master seed, so the sample does not depend on the thread count.
BranchingSample simulate_branching(const BranchingSpec& spec);

/// Draws eps from the configured law with the given uniform variate u in [0, 1).
double epsilon_quantile(const BranchingSpec& spec, double u);

// ---- synthetic return panel -------------------------------------------------

struct PanelSpec {
    std::size_t tickers{30};
    std::size_t days{20};
    std::string start_date{"2021-01-04"};
    double base_vol{1e-3};
    /// Expected planted jumps per ticker per day, at random in-session minutes.
    double jump_rate{0.3};
    /// Expected co-jump events per day; sizes drawn from a branching law.
    double cojump_rate{1.0};
    double jump_size{10.0};  // in local volatility units
    std::uint64_t seed{11};
};

/// Minute returns on 09:30-16:00 weekdays with a U-shaped intraday
/// volatility, power-law activity bursts around planted jumps (a random mix
/// of pre- and post-dominant profiles) and same-minute co-jumps.
ReturnPanel generate_panel(const PanelSpec& spec);

}  // namespace jumpscatter
