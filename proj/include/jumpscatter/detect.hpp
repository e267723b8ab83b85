#pragma once

#include "jumpscatter/event.hpp"
#include "jumpscatter/ingest.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace jumpscatter {

struct DeseasonalizeConfig {
    /// EWMA half-life of the local volatility, in trading days.
    double halflife_days{5.0};
    /// Absolute deviations beyond clip_k times the running mean absolute
    /// deviation are winsorized before they update the estimate.
    double clip_k{4.0};
    std::size_t min_days{3};
    unsigned threads{1};
};

/// Jump scores x = r / (f * sigma) on the panel grid.
struct ScorePanel {
    PanelGrid grid;
    std::vector<double> scores;       // per cell, NaN where undefined
    std::vector<double> periodicity;  // f, one per slot, mean 1
    std::vector<double> local_vol;    // sigma, per cell (NaN where undefined)
    std::vector<bool> ticker_skipped;
    std::vector<std::string> warnings;

    [[nodiscard]] double score(std::size_t ticker, std::size_t day, std::size_t slot) const {
        return scores[grid.index(ticker, day, slot)];
    }
};

/// Intraday periodicity is the per-slot median of |r| over active days and
/// tickers, normalized to mean one. sigma is a causal, winsorized EWMA of |r/f|
/// rescaled by sqrt(pi/2) so that x has unit variance under Gaussian residuals.
ScorePanel deseasonalize(const ReturnPanel& panel, const DeseasonalizeConfig& cfg = {});

/// Wraps precomputed scores (e.g. simulated z-scores) into a ScorePanel with f = 1, sigma = 1.
ScorePanel score_panel_from_scores(PanelGrid grid, std::vector<double> scores);

enum class ThresholdMode { Fixed, Gumbel };

struct ThresholdConfig {
    ThresholdMode mode{ThresholdMode::Fixed};
    double theta{4.0};
    /// Significance level for the Gumbel mode.
    double alpha{0.01};
};

/// Threshold on |x| such that the daily maximum of n i.i.d. |N(0,1)| scores
/// exceeds it with probability alpha (Gumbel limit of the maximum).
double gumbel_threshold(std::size_t n_per_day, double alpha);

struct JumpCandidate {
    std::size_t ticker{0};
    std::size_t day{0};
    std::size_t slot{0};
    double score{0.0};

    friend auto operator<=>(const JumpCandidate&, const JumpCandidate&) = default;
};

/// In-session cells on active days with |x| > threshold, ordered by (ticker, day, slot).
std::vector<JumpCandidate> detect_jumps(const ScorePanel& scores, const ThresholdConfig& cfg = {});

/// Keeps a jump iff no retained jump of the same ticker and day lies within
/// the preceding `window_minutes` minutes (inclusive).
std::vector<JumpCandidate> prune_clusters(const ScorePanel& scores, std::vector<JumpCandidate> jumps,
                                          int window_minutes = 60);

enum class MissingPolicy { ZeroFill, Skip };

struct WindowConfig {
    MissingPolicy missing{MissingPolicy::ZeroFill};
};

enum class WindowSkip { None, Truncated, Missing };

/// Returns the event, or nullopt with `reason` set when the window cannot be built.
std::optional<JumpEvent> extract_window(const ScorePanel& scores, const JumpCandidate& jump, const WindowConfig& cfg = {},
                                        WindowSkip* reason = nullptr);

struct ExtractionResult {
    std::vector<JumpEvent> events;
    std::size_t truncated{0};
    std::size_t missing{0};
};

ExtractionResult extract_windows(const ScorePanel& scores, const std::vector<JumpCandidate>& jumps,
                                 const WindowConfig& cfg = {});

}  // namespace jumpscatter
