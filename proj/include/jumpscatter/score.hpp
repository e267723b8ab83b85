#pragma once

#include "jumpscatter/event.hpp"
#include "jumpscatter/ingest.hpp"
#include "jumpscatter/wavelet.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace jumpscatter {

// ---- D1: principal direction of the scattering features ---------------------

enum class PcaFeatures { ImaginarySecondOrder, Full };

std::string to_string(PcaFeatures f);
PcaFeatures parse_pca_features(std::string_view text);

struct DirectionConfig {
    PcaFeatures features{PcaFeatures::ImaginarySecondOrder};
    std::size_t min_samples{100};
};

struct DirectionModel {
    int scales{0};
    PcaFeatures features{PcaFeatures::ImaginarySecondOrder};
    std::vector<std::size_t> feature_indices;  // positions in the flat embedding
    std::vector<double> mean;
    std::vector<double> scale;
    std::vector<double> weights;  // unit l2 norm
    int orientation{1};
    double explained_variance{0.0};
    std::size_t rank{0};
    std::size_t fit_count{0};
    std::vector<std::string> warnings;

    [[nodiscard]] bool fitted() const { return !weights.empty(); }
};

/// Standardizes the selected features and takes the leading eigenvector of
/// their covariance. `a_jump` (same length as `embeddings`, may be empty)
/// fixes the orientation so that D1 correlates positively with A_jump.
DirectionModel fit_directions(const std::vector<std::vector<double>>& embeddings, std::span<const double> a_jump,
                              int scales, const DirectionConfig& cfg = {});

/// Fits on every event that carries an embedding and an A_jump.
DirectionModel fit_directions(const std::vector<JumpEvent>& events, int scales, const DirectionConfig& cfg = {});

double d1_score(std::span<const double> embedding, const DirectionModel& model);

// ---- handcrafted directions and asymmetry -----------------------------------

/// <xbar / ||xbar||, psi_MR>; 0 for an all-zero window.
double mr_score(std::span<const double> aligned, const FilterBank& bank);
/// <xbar / ||xbar||, psi_TR>; 0 for an all-zero window.
double trend_score(std::span<const double> aligned, const FilterBank& bank);

/// (A_post - A_pre) / (A_post + A_pre) with A_side = sum over the side of
/// |x(t)| - min_side |x|; the jump minute is excluded. 0/0 gives 0.
double asymmetry(std::span<const double> window);

// ---- power-law activity profile ---------------------------------------------

/// Model value at time t (minutes); equals d at t = t_c.
double power_law_value(const PowerLawParams& p, double t);
/// Profile on t = -half..half.
std::vector<double> power_law_profile(const PowerLawParams& p, int half = kHalfWindow);
/// sum_{t=1..half} of the post-jump excess over the baseline d.
double post_jump_tail_mass(const PowerLawParams& p, int half = kHalfWindow);

struct PowerLawFitConfig {
    double acceptable_relative_residual{0.5};
    bool include_center{false};
    double p_max{3.0};
    double t_c_bound{2.0};
    double t_c_step{0.25};
    double p_step{0.15};
    int starts{3};
    int max_iterations{2000};
};

/// Bounded least squares of the profile on |x(t)|. The linear parameters
/// (N_pre, N_post, d) are solved exactly as a non-negative least-squares
/// problem for each (t_c, p_pre, p_post); the latter are searched on a grid
/// and refined by Nelder-Mead from the best grid points.
PowerLawFit fit_power_law(std::span<const double> window, const PowerLawFitConfig& cfg = {});

// ---- per-event scoring ------------------------------------------------------

struct ScoreConfig {
    bool fit_power_law{true};
    PowerLawFitConfig powerlaw;
    unsigned threads{1};
};

/// Fills d2, d3, a_jump and (optionally) powerlaw on every event.
void score_events(std::vector<JumpEvent>& events, const FilterBank& bank, const ScoreConfig& cfg = {});

/// news_related = true iff a news item for the same ticker, or a market-wide
/// item, lies within +-tolerance minutes of the jump minute.
void match_news(std::vector<JumpEvent>& events, const NewsFeed& feed, int tolerance_minutes = 3);

// ---- classification ---------------------------------------------------------

struct QuantileConfig {
    std::vector<double> d1{0.1, 0.25, 0.35, 0.9};
    std::vector<double> d2{0.1, 0.5, 0.9};
    std::vector<double> d3{0.1, 0.5, 0.9};
    std::vector<double> grid{0.05, 0.35, 0.65, 0.95};
};

struct ClassBoundaries {
    std::vector<double> d1, d2, d3;
    std::vector<double> grid_d1, grid_d2, grid_d3;
};

/// Computes D1 from the model where missing, then assigns dataset-relative
/// quantile bins and class labels. Events without an embedding get no D1 bin.
/// Throws PreconditionError for an unfitted model or events lacking D2/D3.
ClassBoundaries classify(std::vector<JumpEvent>& events, const DirectionModel& model, const QuantileConfig& cfg = {});

Reflexivity reflexivity_from_bin(int bin);
MeanReversionLabel mean_reversion_from_bin(int bin, int bin_count);
TrendLabel trend_from_bin(int bin, int bin_count);

// ---- average profiles -------------------------------------------------------

struct ProfileBin {
    int bin{0};
    std::size_t count{0};
    std::optional<std::vector<double>> mean_abs;      // <|x(t)|>
    std::optional<std::vector<double>> mean_aligned;  // <xbar(t)>
};

/// Pointwise means per bin; bin_of returns -1 to leave an event out.
std::vector<ProfileBin> average_profiles(const std::vector<JumpEvent>& events,
                                         const std::function<int(const JumpEvent&)>& bin_of, int bin_count);

}  // namespace jumpscatter
