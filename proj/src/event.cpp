#include "jumpscatter/event.hpp"

namespace jumpscatter {

JumpEvent make_event(std::string ticker, Minute timestamp, std::vector<double> window) {
    if (window.size() != static_cast<std::size_t>(kWindowLength))
        throw DataError("jump window must have " + std::to_string(kWindowLength) + " samples, got " +
                        std::to_string(window.size()));
    JumpEvent ev;
    ev.ticker = std::move(ticker);
    ev.timestamp = timestamp;
    ev.sign = window[kHalfWindow] < 0.0 ? -1 : 1;
    ev.aligned.resize(window.size());
    for (std::size_t i = 0; i < window.size(); ++i) ev.aligned[i] = ev.sign * window[i];
    ev.window = std::move(window);
    return ev;
}

std::string to_string(Reflexivity r) {
    switch (r) {
        case Reflexivity::Anticipatory: return "anticipatory";
        case Reflexivity::TransitionLow: return "transition-low";
        case Reflexivity::Endogenous: return "endogenous";
        case Reflexivity::TransitionHigh: return "transition-high";
        case Reflexivity::Exogenous: return "exogenous";
    }
    return "unknown";
}

std::string to_string(MeanReversionLabel m) {
    switch (m) {
        case MeanReversionLabel::None: return "none";
        case MeanReversionLabel::MeanRevertingOnTrend: return "mean-reverting-on-trend";
        case MeanReversionLabel::PostJumpMeanReverting: return "post-jump-mean-reverting";
    }
    return "unknown";
}

std::string to_string(TrendLabel t) {
    switch (t) {
        case TrendLabel::None: return "none";
        case TrendLabel::TrendAntiAligned: return "trend-anti-aligned";
        case TrendLabel::TrendAligned: return "trend-aligned";
    }
    return "unknown";
}

}  // namespace jumpscatter
