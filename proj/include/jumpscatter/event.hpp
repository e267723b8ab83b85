#pragma once

#include "jumpscatter/common.hpp"

#include <optional>
#include <string>
#include <vector>

namespace jumpscatter {

/// Parameters of the two-sided power-law activity profile
/// |x(t)| = 1{t<t_c} N_pre/|t-t_c|^p_pre + 1{t>t_c} N_post/|t-t_c|^p_post + d.
struct PowerLawParams {
    double n_pre{0.0};
    double n_post{0.0};
    double p_pre{0.0};
    double p_post{0.0};
    double t_c{0.0};
    double d{0.0};
};

struct PowerLawFit {
    std::optional<PowerLawParams> params;  // absent when the optimizer failed
    double residual_norm{0.0};
    double relative_residual{0.0};
    bool acceptable{false};
};

enum class Reflexivity { Anticipatory, TransitionLow, Endogenous, TransitionHigh, Exogenous };
enum class MeanReversionLabel { None, MeanRevertingOnTrend, PostJumpMeanReverting };
enum class TrendLabel { None, TrendAntiAligned, TrendAligned };

/// Quantile bins assigned by classify(); -1 means unassigned.
struct JumpLabels {
    int d1_bin{-1};
    int d2_bin{-1};
    int d3_bin{-1};
    int grid_d1{-1};
    int grid_d2{-1};
    int grid_d3{-1};
    std::optional<Reflexivity> reflexivity;
    MeanReversionLabel mean_reversion{MeanReversionLabel::None};
    TrendLabel trend{TrendLabel::None};
};

/// One detected jump and its 119-minute score window.
struct JumpEvent {
    std::string ticker;
    Minute timestamp{};
    int sign{1};                  // sign(x(0))
    std::vector<double> window;   // x(t), t = -59..59, index 59 is the jump
    std::vector<double> aligned;  // sign * x(t)

    std::optional<std::vector<double>> embedding;  // flat scattering vector
    std::optional<double> d1;
    std::optional<double> d2;
    std::optional<double> d3;
    std::optional<double> a_jump;
    std::optional<PowerLawFit> powerlaw;

    bool news_related{false};
    JumpLabels labels;
    std::optional<std::size_t> cojump_id;

    /// Set for synthetic benchmark series only.
    std::optional<double> planted_asymmetry;

    [[nodiscard]] double center() const { return window[kHalfWindow]; }
};

/// Builds window/aligned/sign from a raw 119-point window.
JumpEvent make_event(std::string ticker, Minute timestamp, std::vector<double> window);

std::string to_string(Reflexivity r);
std::string to_string(MeanReversionLabel m);
std::string to_string(TrendLabel t);

}  // namespace jumpscatter
