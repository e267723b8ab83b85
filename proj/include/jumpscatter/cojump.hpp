#pragma once

#include "jumpscatter/event.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace jumpscatter {

enum class Quadrant { LL, LR, UR, Gray };

std::string to_string(Quadrant q);

/// Jumps of distinct tickers sharing one minute. Members index into the
/// event vector the co-jump was grouped from.
struct CoJump {
    std::size_t id{0};
    Minute minute{};
    std::vector<std::size_t> members;

    std::optional<double> mean_d1;
    std::optional<double> min_d1;
    std::optional<double> max_d1;
    std::optional<double> sigma_size;
    std::optional<double> normalized_mean;  // mean_d1 / sigma_size
    std::optional<double> normalized_min;   // min_d1 / sigma_size
    bool normalization_skipped{false};
    std::optional<Quadrant> quadrant;

    double sign_mean{0.0};
    std::optional<double> rho;
    bool news_related{false};

    [[nodiscard]] std::size_t size() const { return members.size(); }
};

struct GroupResult {
    std::vector<CoJump> cojumps;  // ordered by minute, including singles
    std::size_t dropped_groups{0};
    std::size_t dropped_jumps{0};
};

/// Partitions events by minute. Groups larger than max_size are dropped and
/// counted. Sets event.cojump_id on every retained event (cleared otherwise),
/// and fills sign_mean and the any-member news flag.
GroupResult group(std::vector<JumpEvent>& events, std::size_t max_size = 250);

struct IndicatorConfig {
    /// Co-jumps smaller than this get D1 summaries but no sigma/quadrant.
    std::size_t min_quadrant_size{3};
    /// Sizes with fewer co-jumps are pooled with the nearest sizes.
    std::size_t pool_min{5};
};

/// sigma_size per co-jump size: mean within-co-jump population standard
/// deviation of D1 over co-jumps of that size (pooled when sparse). Only
/// co-jumps with size >= min_quadrant_size and D1 on every member count.
std::map<std::size_t, double> size_sigma(const std::vector<CoJump>& cojumps, const std::vector<JumpEvent>& events,
                                         const IndicatorConfig& cfg = {});

/// Fills D1 summaries, sigma_size, normalized indicators, quadrant and rho.
void compute_indicators(std::vector<CoJump>& cojumps, const std::vector<JumpEvent>& events,
                        const IndicatorConfig& cfg = {});

/// Gray when mean - min <= sigma; otherwise LL for mean < 0, UR for min > 0, LR else.
Quadrant quadrant(double mean, double min, double sigma);

enum class SizeFilter { All, EndogenousMinimum };

struct SizeDistribution {
    std::map<std::size_t, std::size_t> histogram;
    std::vector<std::pair<std::size_t, double>> ccdf;  // (s, P(S >= s)) at observed sizes
    std::size_t total{0};
};

/// EndogenousMinimum keeps co-jumps with min D1 < 0 and min D1 < mean D1 - sigma_size.
SizeDistribution size_distribution(const std::vector<CoJump>& cojumps, SizeFilter filter = SizeFilter::All,
                                   std::size_t min_size = 1);

struct TailFit {
    double tau{0.0};
    double stderr_tau{0.0};
    double tau_ml{0.0};
    double stderr_ml{0.0};
    std::uint64_t range_min{0};
    std::uint64_t range_max{0};
    std::size_t in_range{0};
    bool low_count{false};  // fewer than 50 observations in range
    std::string method{"ccdf-least-squares"};
};

/// tau from a least-squares line through log P(S >= s) against log s over the
/// integers s in [lo, hi]; cross-checked by the maximum-likelihood exponent of a
/// discrete power law truncated to [lo, hi] (tau_ml = alpha - 1).
TailFit fit_tail_exponent(std::span<const std::uint64_t> sizes, std::uint64_t lo, std::uint64_t hi);

/// Least-squares log-log slope of the empirical probability mass over [lo, hi].
double pmf_loglog_slope(std::span<const std::uint64_t> sizes, std::uint64_t lo, std::uint64_t hi);

/// sum_{k != k'} a_k a_k' / ((S - 1) sum_k a_k^2); nullopt when every a_k is 0.
std::optional<double> correlation_rho(std::span<const double> trend_scores);

struct NormalizedProfile {
    std::optional<std::vector<double>> profile;
    std::size_t used{0};
    std::size_t skipped{0};  // members with zero RMS
};

/// Mean over members of xbar_k / rms(xbar_k).
NormalizedProfile average_normalized_profile(const std::vector<std::span<const double>>& aligned_windows);
NormalizedProfile average_normalized_profile(const CoJump& cj, const std::vector<JumpEvent>& events);

/// Per size: mean over co-jumps of |sum of member signs| / S.
std::map<std::size_t, double> sign_alignment(const std::vector<CoJump>& cojumps);

}  // namespace jumpscatter
