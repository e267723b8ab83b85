#include "jumpscatter/detect.hpp"

#include "jumpscatter/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace jumpscatter {

namespace {

// E|Z| / median|Z| for Z ~ N(0,1).
constexpr double kMeanOverMedianAbs = 0.7978845608028654 / 0.6744897501960817;

std::vector<double> estimate_periodicity(const ReturnPanel& panel, std::vector<std::string>& warnings) {
    const auto& g = panel.grid;
    std::vector<double> f(g.slots.size(), kMissing);
    std::vector<double> sample;
    for (std::size_t s = 0; s < g.slots.size(); ++s) {
        sample.clear();
        for (std::size_t t = 0; t < g.tickers.size(); ++t)
            for (std::size_t d = 0; d < g.days.size(); ++d) {
                if (!g.day_active(d)) continue;
                const double r = panel.at(t, d, s);
                if (!is_missing(r)) sample.push_back(std::abs(r));
            }
        if (sample.empty()) continue;
        double level = median(sample);
        if (level == 0.0) {
            // Mostly-flat slot: fall back to the mean, put on the median scale.
            level = mean(sample) / kMeanOverMedianAbs;
        }
        if (level > 0.0) f[s] = level;
    }
    double total = 0.0;
    std::size_t valid = 0;
    for (double v : f)
        if (!is_missing(v)) {
            total += v;
            ++valid;
        }
    if (valid == 0) throw DegenerateVolatilityError("zero dispersion: every intraday slot has zero or no returns");
    const double norm = total / static_cast<double>(valid);
    std::size_t dropped = 0;
    for (double& v : f) {
        if (is_missing(v))
            ++dropped;
        else
            v /= norm;
    }
    if (dropped > 0)
        warnings.push_back(std::to_string(dropped) + " intraday slot(s) without dispersion; their scores are undefined");
    return f;
}

}  // namespace

ScorePanel deseasonalize(const ReturnPanel& panel, const DeseasonalizeConfig& cfg) {
    const auto& g = panel.grid;
    if (g.active_day_count() < cfg.min_days)
        throw PreconditionError("deseasonalize needs at least " + std::to_string(cfg.min_days) + " active days, panel has " +
                                std::to_string(g.active_day_count()));
    if (g.slots.empty() || g.tickers.empty()) throw PreconditionError("deseasonalize: empty panel");

    ScorePanel out;
    out.grid = g;
    out.scores.assign(g.cell_count(), kMissing);
    out.local_vol.assign(g.cell_count(), kMissing);
    out.ticker_skipped.assign(g.tickers.size(), false);
    out.periodicity = estimate_periodicity(panel, out.warnings);

    const double horizon = std::max(1.0, cfg.halflife_days * static_cast<double>(g.slots.size()));
    const double alpha = 1.0 - std::exp2(-1.0 / horizon);
    const double to_sigma = std::sqrt(std::numbers::pi / 2.0);

    enum class TickerStatus { Ok, AllMissing, ZeroDispersion };
    std::vector<TickerStatus> status(g.tickers.size(), TickerStatus::Ok);

    parallel_for(g.tickers.size(), cfg.threads, [&](std::size_t t) {
        auto rescaled = [&](std::size_t d, std::size_t s) {
            const double r = panel.at(t, d, s);
            const double f = out.periodicity[s];
            return (is_missing(r) || is_missing(f)) ? kMissing : r / f;
        };
        // Seed the running mean absolute deviation from the first day with dispersion.
        double mad = 0.0;
        bool any_present = false;
        std::vector<double> day_abs;
        for (std::size_t d = 0; d < g.days.size() && mad <= 0.0; ++d) {
            if (!g.day_active(d)) continue;
            day_abs.clear();
            for (std::size_t s = 0; s < g.slots.size(); ++s) {
                const double y = rescaled(d, s);
                if (!is_missing(y)) day_abs.push_back(std::abs(y));
            }
            if (day_abs.empty()) continue;
            any_present = true;
            mad = median(day_abs) * kMeanOverMedianAbs;
            if (mad <= 0.0) mad = mean(day_abs);
        }
        if (!any_present) {
            status[t] = TickerStatus::AllMissing;
            return;
        }
        if (mad <= 0.0) {
            status[t] = TickerStatus::ZeroDispersion;
            return;
        }
        for (std::size_t d = 0; d < g.days.size(); ++d) {
            if (!g.day_active(d)) continue;
            for (std::size_t s = 0; s < g.slots.size(); ++s) {
                const double y = rescaled(d, s);
                if (is_missing(y)) continue;
                const double sigma = mad * to_sigma;
                const auto idx = g.index(t, d, s);
                out.local_vol[idx] = sigma;
                if (sigma > 0.0) out.scores[idx] = y / sigma;
                mad = (1.0 - alpha) * mad + alpha * std::min(std::abs(y), cfg.clip_k * mad);
            }
        }
    });

    std::size_t usable = 0;
    for (std::size_t t = 0; t < g.tickers.size(); ++t) {
        switch (status[t]) {
            case TickerStatus::Ok: ++usable; break;
            case TickerStatus::AllMissing:
                out.ticker_skipped[t] = true;
                out.warnings.push_back("ticker " + g.tickers[t] + " has no returns on active days; skipped");
                break;
            case TickerStatus::ZeroDispersion:
                out.ticker_skipped[t] = true;
                out.warnings.push_back("ticker " + g.tickers[t] + " has zero dispersion; skipped");
                break;
        }
    }
    if (usable == 0) throw DegenerateVolatilityError("zero dispersion: no ticker has a usable volatility estimate");
    return out;
}

ScorePanel score_panel_from_scores(PanelGrid grid, std::vector<double> scores) {
    if (scores.size() != grid.cell_count()) throw DataError("score vector does not match the grid");
    ScorePanel out;
    out.grid = std::move(grid);
    out.scores = std::move(scores);
    out.periodicity.assign(out.grid.slots.size(), 1.0);
    out.local_vol.assign(out.scores.size(), 1.0);
    out.ticker_skipped.assign(out.grid.tickers.size(), false);
    if (out.grid.day_excluded.size() != out.grid.days.size()) out.grid.day_excluded.assign(out.grid.days.size(), false);
    return out;
}

double gumbel_threshold(std::size_t n_per_day, double alpha) {
    if (n_per_day < 2) throw ConfigError("gumbel threshold needs at least two scores per day");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("gumbel significance must lie in (0, 1)");
    // max_i |Z_i| over n draws behaves like the maximum of 2n Gaussian draws in the tail.
    const double n = 2.0 * static_cast<double>(n_per_day);
    const double a = std::sqrt(2.0 * std::log(n));
    const double b = a - (std::log(std::log(n)) + std::log(4.0 * std::numbers::pi)) / (2.0 * a);
    return b - std::log(-std::log(1.0 - alpha)) / a;
}

std::vector<JumpCandidate> detect_jumps(const ScorePanel& scores, const ThresholdConfig& cfg) {
    const auto& g = scores.grid;
    double theta = cfg.theta;
    if (cfg.mode == ThresholdMode::Gumbel) {
        std::size_t n = 0;
        for (std::size_t s = 0; s < g.slots.size(); ++s)
            if (g.in_session(s)) ++n;
        theta = gumbel_threshold(n, cfg.alpha);
    }
    std::vector<JumpCandidate> out;
    for (std::size_t t = 0; t < g.tickers.size(); ++t) {
        if (!scores.ticker_skipped.empty() && scores.ticker_skipped[t]) continue;
        for (std::size_t d = 0; d < g.days.size(); ++d) {
            if (!g.day_active(d)) continue;
            for (std::size_t s = 0; s < g.slots.size(); ++s) {
                if (!g.in_session(s)) continue;
                const double x = scores.score(t, d, s);
                if (std::abs(x) > theta) out.push_back({t, d, s, x});
            }
        }
    }
    return out;
}

std::vector<JumpCandidate> prune_clusters(const ScorePanel& scores, std::vector<JumpCandidate> jumps, int window_minutes) {
    std::sort(jumps.begin(), jumps.end());
    const auto& slots = scores.grid.slots;
    std::vector<JumpCandidate> kept;
    for (const auto& j : jumps) {
        if (!kept.empty()) {
            const auto& last = kept.back();
            if (last.ticker == j.ticker && last.day == j.day &&
                (slots[j.slot] - slots[last.slot]).count() <= window_minutes)
                continue;
        }
        kept.push_back(j);
    }
    return kept;
}

std::optional<JumpEvent> extract_window(const ScorePanel& scores, const JumpCandidate& jump, const WindowConfig& cfg,
                                        WindowSkip* reason) {
    const auto& g = scores.grid;
    auto skip = [&](WindowSkip why) -> std::optional<JumpEvent> {
        if (reason) *reason = why;
        return std::nullopt;
    };
    if (reason) *reason = WindowSkip::None;
    if (jump.slot < static_cast<std::size_t>(kHalfWindow) || jump.slot + kHalfWindow >= g.slots.size())
        return skip(WindowSkip::Truncated);
    const auto first = jump.slot - kHalfWindow;
    std::vector<double> window(kWindowLength);
    for (int k = 0; k < kWindowLength; ++k) {
        const auto s = first + static_cast<std::size_t>(k);
        if (!g.in_session(s) || (g.slots[s] - g.slots[first]).count() != k) return skip(WindowSkip::Truncated);
        double x = scores.score(jump.ticker, jump.day, s);
        if (is_missing(x)) {
            if (cfg.missing == MissingPolicy::Skip) return skip(WindowSkip::Missing);
            x = 0.0;
        }
        window[static_cast<std::size_t>(k)] = x;
    }
    return make_event(g.tickers[jump.ticker], g.timestamp(jump.day, jump.slot), std::move(window));
}

ExtractionResult extract_windows(const ScorePanel& scores, const std::vector<JumpCandidate>& jumps, const WindowConfig& cfg) {
    ExtractionResult out;
    for (const auto& j : jumps) {
        WindowSkip why = WindowSkip::None;
        auto ev = extract_window(scores, j, cfg, &why);
        if (ev) {
            out.events.push_back(std::move(*ev));
        } else if (why == WindowSkip::Missing) {
            ++out.missing;
        } else {
            ++out.truncated;
        }
    }
    return out;
}

}  // namespace jumpscatter
