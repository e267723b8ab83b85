#include "jumpscatter/synth.hpp"

#include "jumpscatter/score.hpp"
#include "jumpscatter/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

namespace jumpscatter {

std::vector<PowerLawParams> asymmetry_sweep(std::size_t n, double t_c, double d) {
    std::vector<PowerLawParams> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = sweep_coordinate(i, n);
        out.push_back({1.0 - a, 1.0 + a, 0.6 + 0.2 * (1.0 + a), 0.6 + 0.2 * (1.0 - a), t_c, d});
    }
    return out;
}

double sweep_coordinate(std::size_t i, std::size_t n) {
    if (n <= 1) return 0.0;
    return -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(n - 1);
}

std::vector<BenchmarkSeries> generate_benchmark(const BenchmarkSpec& spec) {
    const auto params = spec.grid.empty() ? asymmetry_sweep(spec.n_series, spec.t_c, spec.d) : spec.grid;
    for (const auto& p : params) {
        if (p.n_pre < 0.0 || p.n_post < 0.0 || p.d < 0.0) throw ConfigError("benchmark amplitudes must be non-negative");
        if (!(p.p_pre > 0.0 && p.p_pre < 3.0 && p.p_post > 0.0 && p.p_post < 3.0))
            throw ConfigError("benchmark exponents must lie in (0, 3)");
    }
    if (!(spec.spike > 4.0)) throw ConfigError("benchmark spike must exceed the detection threshold 4");

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, spec.noise_sd);
    std::vector<double> noise(static_cast<std::size_t>(kWindowLength));
    for (auto& z : noise) z = gauss(rng);

    const Minute base = make_minute(parse_date("2000-01-03"), std::chrono::hours{12});
    std::vector<BenchmarkSeries> out;
    out.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto profile = power_law_profile(params[i]);
        std::vector<double> x(profile.size());
        for (std::size_t k = 0; k < x.size(); ++k) x[k] = profile[k] * noise[k];
        x[kHalfWindow] = spec.spike;
        char ticker[32];
        std::snprintf(ticker, sizeof ticker, "BENCH%04zu", i);
        BenchmarkSeries s;
        s.asymmetry_parameter = spec.grid.empty() ? sweep_coordinate(i, params.size()) : static_cast<double>(i);
        s.params = params[i];
        s.a_jump_analytic = asymmetry(profile);
        s.event = make_event(ticker, base + std::chrono::minutes{static_cast<long>(i)}, std::move(x));
        s.event.planted_asymmetry = s.asymmetry_parameter;
        out.push_back(std::move(s));
    }
    return out;
}

std::string to_string(EpsilonLaw law) {
    switch (law) {
        case EpsilonLaw::Uniform: return "uniform";
        case EpsilonLaw::PowerLaw: return "power";
        case EpsilonLaw::Fixed: return "fixed";
    }
    return "unknown";
}

EpsilonLaw parse_epsilon_law(std::string_view text) {
    if (text == "uniform") return EpsilonLaw::Uniform;
    if (text == "power" || text == "gamma") return EpsilonLaw::PowerLaw;
    if (text == "fixed") return EpsilonLaw::Fixed;
    throw ConfigError("unknown epsilon law '" + std::string(text) + "' (expected uniform|power|fixed)");
}

std::string to_string(OffspringLaw law) { return law == OffspringLaw::Poisson ? "poisson" : "binomial"; }

OffspringLaw parse_offspring_law(std::string_view text) {
    if (text == "poisson") return OffspringLaw::Poisson;
    if (text == "binomial") return OffspringLaw::Binomial;
    throw ConfigError("unknown offspring law '" + std::string(text) + "' (expected poisson|binomial)");
}

double epsilon_quantile(const BranchingSpec& spec, double u) {
    switch (spec.law) {
        case EpsilonLaw::Uniform: return spec.eps_min + u * (1.0 - spec.eps_min);
        case EpsilonLaw::PowerLaw: {
            const double k = spec.gamma + 1.0;
            const double lo = std::pow(spec.eps_min, k);
            return std::pow(lo + u * (1.0 - lo), 1.0 / k);
        }
        case EpsilonLaw::Fixed: return spec.eps_fixed;
    }
    return spec.eps_fixed;
}

BranchingSample simulate_branching(const BranchingSpec& spec) {
    if (!(spec.eps_min >= 0.0 && spec.eps_min < 1.0)) throw ConfigError("eps_min must lie in [0, 1)");
    if (!(spec.gamma >= 0.0)) throw ConfigError("gamma must be non-negative");
    if (spec.law == EpsilonLaw::Fixed && !(spec.eps_fixed > 0.0 && spec.eps_fixed <= 1.0))
        throw ConfigError("fixed epsilon must lie in (0, 1]");
    if (spec.max_size < 1) throw ConfigError("avalanche cap must be at least 1");
    if (spec.offspring == OffspringLaw::Binomial && spec.binomial_trials < 1)
        throw ConfigError("binomial offspring needs at least one trial per parent");

    constexpr std::size_t kChunk = 1 << 14;
    const std::size_t chunks = (spec.n_avalanches + kChunk - 1) / kChunk;
    BranchingSample out;
    out.sizes.assign(spec.n_avalanches, 0);
    std::vector<std::size_t> cap_hits(chunks, 0);

    parallel_for(chunks, spec.threads, [&](std::size_t c) {
        std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                          static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(static_cast<std::uint64_t>(c) >> 32)};
        std::mt19937_64 rng(seq);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const std::size_t begin = c * kChunk;
        const std::size_t end = std::min(spec.n_avalanches, begin + kChunk);
        for (std::size_t i = begin; i < end; ++i) {
            double eps = 0.0;
            do {
                eps = epsilon_quantile(spec, unit(rng));
            } while (!(eps > 0.0));
            const double phi = 1.0 - eps;
            std::uint64_t generation = 1;
            std::uint64_t total = 1;
            // Offspring of a whole generation are drawn at once: a sum of Z
            // i.i.d. Poisson(phi) (Binomial(k, phi/k)) is Poisson(phi Z) (Binomial(k Z, phi/k)).
            while (generation > 0 && total < spec.max_size) {
                if (phi <= 0.0) {
                    generation = 0;
                } else if (spec.offspring == OffspringLaw::Poisson) {
                    std::poisson_distribution<std::uint64_t> draw(phi * static_cast<double>(generation));
                    generation = draw(rng);
                } else {
                    const auto k = static_cast<std::uint64_t>(spec.binomial_trials);
                    std::binomial_distribution<std::uint64_t> draw(k * generation, phi / static_cast<double>(k));
                    generation = draw(rng);
                }
                total += generation;
            }
            if (total > spec.max_size || (total == spec.max_size && generation > 0)) {
                total = spec.max_size;
                ++cap_hits[c];
            }
            out.sizes[i] = total;
        }
    });
    for (auto h : cap_hits) out.cap_hits += h;
    return out;
}

ReturnPanel generate_panel(const PanelSpec& spec) {
    if (spec.tickers < 1 || spec.days < 1) throw ConfigError("synthetic panel needs at least one ticker and one day");
    if (spec.jump_rate < 0.0 || spec.cojump_rate < 0.0) throw ConfigError("jump rates must be non-negative");
    using std::chrono::minutes;

    ReturnPanel panel;
    auto& g = panel.grid;
    for (std::size_t t = 0; t < spec.tickers; ++t) {
        char name[16];
        std::snprintf(name, sizeof name, "S%03zu", t);
        g.tickers.emplace_back(name);
    }
    Date day = parse_date(spec.start_date);
    while (g.days.size() < spec.days) {
        const std::chrono::weekday wd{day};
        if (wd != std::chrono::Saturday && wd != std::chrono::Sunday) g.days.push_back(day);
        day += std::chrono::days{1};
    }
    for (int m = 9 * 60 + 31; m <= 16 * 60; ++m) g.slots.emplace_back(m);
    g.day_excluded.assign(g.days.size(), false);
    const std::size_t n_slots = g.slots.size();

    // Jumps are planted where a full window fits inside the default session.
    const SessionWindow session;
    std::vector<std::size_t> jump_slots;
    for (std::size_t s = 0; s < n_slots; ++s)
        if (session.contains(g.slots[s] - minutes{kHalfWindow}) && session.contains(g.slots[s] + minutes{kHalfWindow}))
            jump_slots.push_back(s);

    if (jump_slots.empty()) throw ConfigError("session is too short for a full jump window");

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick_slot(0, jump_slots.size() - 1);

    std::vector<double> ushape(n_slots);
    for (std::size_t s = 0; s < n_slots; ++s) {
        const double u = (static_cast<double>(s) + 0.5) / static_cast<double>(n_slots) * 2.0 - 1.0;
        ushape[s] = 0.6 + 1.2 * u * u;
    }

    struct Planted {
        std::size_t slot;
        int sign;
        double a;  // activity asymmetry in [-1, 1]
    };
    const std::size_t cells_per_ticker = g.days.size() * n_slots;
    panel.returns.assign(g.cell_count(), 0.0);
    std::vector<std::vector<std::vector<Planted>>> planted(spec.tickers, std::vector<std::vector<Planted>>(g.days.size()));

    for (std::size_t d = 0; d < g.days.size(); ++d) {
        for (std::size_t t = 0; t < spec.tickers; ++t) {
            std::poisson_distribution<int> count(spec.jump_rate);
            for (int k = count(rng); k > 0; --k)
                planted[t][d].push_back({jump_slots[pick_slot(rng)], unit(rng) < 0.5 ? -1 : 1, 2.0 * unit(rng) - 1.0});
        }
        std::poisson_distribution<int> cojumps(spec.cojump_rate);
        for (int k = cojumps(rng); k > 0; --k) {
            // Size from a subcritical branching draw, at least two stocks.
            BranchingSpec bs;
            bs.law = EpsilonLaw::Uniform;
            bs.eps_min = 0.2;
            bs.n_avalanches = 1;
            bs.seed = rng();
            const auto s = static_cast<std::size_t>(simulate_branching(bs).sizes[0]);
            const std::size_t size = std::clamp<std::size_t>(s + 1, 2, spec.tickers);
            std::vector<std::size_t> members(spec.tickers);
            for (std::size_t i = 0; i < members.size(); ++i) members[i] = i;
            std::shuffle(members.begin(), members.end(), rng);
            const std::size_t slot = jump_slots[pick_slot(rng)];
            const int common_sign = unit(rng) < 0.5 ? -1 : 1;
            const double a = 2.0 * unit(rng) - 1.0;
            for (std::size_t i = 0; i < size; ++i) {
                const int sign = unit(rng) < 0.85 ? common_sign : -common_sign;
                const double jitter = std::clamp(a + 0.2 * gauss(rng), -1.0, 1.0);
                planted[members[i]][d].push_back({slot, sign, jitter});
            }
        }
    }

    std::vector<double> activity(n_slots);
    for (std::size_t t = 0; t < spec.tickers; ++t) {
        for (std::size_t d = 0; d < g.days.size(); ++d) {
            std::fill(activity.begin(), activity.end(), 1.0);
            for (const auto& p : planted[t][d]) {
                const PowerLawParams prof{1.5 * (1.0 - p.a), 1.5 * (1.0 + p.a), 0.7, 0.7, -0.5, 0.0};
                for (int dt = -kHalfWindow; dt <= kHalfWindow; ++dt) {
                    if (dt == 0) continue;
                    const auto s = static_cast<std::ptrdiff_t>(p.slot) + dt;
                    if (s < 0 || s >= static_cast<std::ptrdiff_t>(n_slots)) continue;
                    activity[static_cast<std::size_t>(s)] += power_law_value(prof, dt);
                }
            }
            double* r = panel.returns.data() + t * cells_per_ticker + d * n_slots;
            for (std::size_t s = 0; s < n_slots; ++s) r[s] = spec.base_vol * ushape[s] * activity[s] * gauss(rng);
            for (const auto& p : planted[t][d]) r[p.slot] = p.sign * spec.jump_size * spec.base_vol * ushape[p.slot];
        }
    }
    return panel;
}

}  // namespace jumpscatter
