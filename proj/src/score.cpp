#include "jumpscatter/score.hpp"

#include "jumpscatter/stats.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

namespace jumpscatter {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<std::size_t> select_features(int scales, PcaFeatures features) {
    if (features == PcaFeatures::ImaginarySecondOrder) return imaginary_second_order_indices(scales);
    std::vector<std::size_t> all(embedding_size(scales));
    std::iota(all.begin(), all.end(), std::size_t{0});
    return all;
}

// Pairs t with -t so that parity cancellations are exact.
double centered_inner_product(std::span<const double> x, std::span<const double> f) {
    const std::size_t half = (x.size() - 1) / 2;
    double acc = x[half] * f[half];
    for (std::size_t s = 1; s <= half; ++s) acc += x[half - s] * f[half - s] + x[half + s] * f[half + s];
    return acc;
}

double normalized_filter_score(std::span<const double> aligned, std::span<const double> filter) {
    if (aligned.size() != filter.size()) throw DataError("window length does not match the handcrafted filter");
    double ss = 0.0;
    for (double v : aligned) ss += v * v;
    if (ss == 0.0) return 0.0;
    const double norm = std::sqrt(ss);
    std::vector<double> unit(aligned.size());
    for (std::size_t i = 0; i < unit.size(); ++i) unit[i] = aligned[i] / norm;
    return centered_inner_product(unit, filter);
}

// ---- power-law fit internals ----

struct FitData {
    std::vector<double> t;
    std::vector<double> y;
    double sum_y{0.0};
    double sum_yy{0.0};
};

// Sufficient statistics of one side's basis column c(t) = |t - t_c|^-p.
struct SideStats {
    double cc{0.0};
    double c{0.0};
    double cy{0.0};
};

SideStats side_stats(const FitData& data, double t_c, double p, bool pre) {
    SideStats s;
    for (std::size_t i = 0; i < data.t.size(); ++i) {
        const double dt = data.t[i] - t_c;
        if (pre ? !(dt < 0.0) : !(dt > 0.0)) continue;
        const double v = std::pow(std::abs(dt), -p);
        s.cc += v * v;
        s.c += v;
        s.cy += v * data.y[i];
    }
    return s;
}

struct LinearSolution {
    double n_pre{0.0};
    double n_post{0.0};
    double d{0.0};
    double rss{kInf};
};

// Non-negative least squares in (N_pre, N_post, d) by enumerating supports.
// The two power-law columns never overlap, so their cross product vanishes.
LinearSolution solve_linear(const SideStats& pre, const SideStats& post, const FitData& data) {
    using Small = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;
    using SmallVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;
    const double n = static_cast<double>(data.t.size());
    const std::array<std::array<double, 3>, 3> gram{{{pre.cc, 0.0, pre.c}, {0.0, post.cc, post.c}, {pre.c, post.c, n}}};
    const std::array<double, 3> rhs{pre.cy, post.cy, data.sum_y};
    const double tol = 1e-13 * (data.sum_yy + 1e-300);

    LinearSolution best;
    best.rss = data.sum_yy;  // empty support
    // Supports ordered by size so ties keep the simplest explanation.
    static constexpr std::array<unsigned, 7> kSupports{0b100, 0b001, 0b010, 0b101, 0b110, 0b011, 0b111};
    for (unsigned mask : kSupports) {
        std::array<int, 3> idx{};
        int k = 0;
        for (int b = 0; b < 3; ++b)
            if (mask & (1u << b)) idx[static_cast<std::size_t>(k++)] = b;
        Small g(k, k);
        SmallVec r(k);
        for (int a = 0; a < k; ++a) {
            r(a) = rhs[static_cast<std::size_t>(idx[static_cast<std::size_t>(a)])];
            for (int b = 0; b < k; ++b)
                g(a, b) = gram[static_cast<std::size_t>(idx[static_cast<std::size_t>(a)])]
                              [static_cast<std::size_t>(idx[static_cast<std::size_t>(b)])];
        }
        Eigen::ColPivHouseholderQR<Small> qr(g);
        qr.setThreshold(1e-12);
        if (qr.rank() < k) continue;
        const SmallVec beta = qr.solve(r);
        bool feasible = true;
        for (int a = 0; a < k; ++a) feasible = feasible && std::isfinite(beta(a)) && beta(a) >= 0.0;
        if (!feasible) continue;
        const double rss = data.sum_yy - beta.dot(r);  // normal equations hold at beta
        if (rss < best.rss - tol) {
            LinearSolution sol;
            for (int a = 0; a < k; ++a) {
                const int which = idx[static_cast<std::size_t>(a)];
                (which == 0 ? sol.n_pre : which == 1 ? sol.n_post : sol.d) = beta(a);
            }
            sol.rss = std::max(rss, 0.0);
            best = sol;
        }
    }
    return best;
}

struct Candidate {
    std::array<double, 3> v{};  // t_c, p_pre, p_post
    double f{kInf};
};

std::array<double, 3> clamp_point(std::array<double, 3> v, const PowerLawFitConfig& cfg) {
    v[0] = std::clamp(v[0], -cfg.t_c_bound, cfg.t_c_bound);
    v[1] = std::clamp(v[1], 0.0, cfg.p_max);
    v[2] = std::clamp(v[2], 0.0, cfg.p_max);
    return v;
}

Candidate nelder_mead(const std::function<double(const std::array<double, 3>&)>& f, Candidate start,
                      const PowerLawFitConfig& cfg) {
    constexpr int kDim = 3;
    const std::array<double, 3> step{cfg.t_c_step, cfg.p_step, cfg.p_step};
    std::array<Candidate, kDim + 1> simplex;
    simplex[0] = start;
    for (int i = 0; i < kDim; ++i) {
        auto v = start.v;
        v[static_cast<std::size_t>(i)] += step[static_cast<std::size_t>(i)];
        auto c = clamp_point(v, cfg);
        if (c == start.v) {
            v[static_cast<std::size_t>(i)] -= 2.0 * step[static_cast<std::size_t>(i)];
            c = clamp_point(v, cfg);
        }
        simplex[static_cast<std::size_t>(i) + 1] = {c, f(c)};
    }
    auto eval = [&](std::array<double, 3> v) {
        v = clamp_point(v, cfg);
        return Candidate{v, f(v)};
    };
    for (int iter = 0; iter < cfg.max_iterations; ++iter) {
        std::sort(simplex.begin(), simplex.end(), [](const Candidate& a, const Candidate& b) { return a.f < b.f; });
        double size = 0.0;
        for (int i = 1; i <= kDim; ++i)
            for (int d = 0; d < kDim; ++d)
                size = std::max(size, std::abs(simplex[static_cast<std::size_t>(i)].v[static_cast<std::size_t>(d)] -
                                               simplex[0].v[static_cast<std::size_t>(d)]));
        if (size < 1e-10 || simplex[kDim].f - simplex[0].f <= 1e-16 * (std::abs(simplex[0].f) + 1e-300)) break;

        std::array<double, 3> centroid{};
        for (int i = 0; i < kDim; ++i)
            for (int d = 0; d < kDim; ++d)
                centroid[static_cast<std::size_t>(d)] += simplex[static_cast<std::size_t>(i)].v[static_cast<std::size_t>(d)] / kDim;
        auto along = [&](double coef) {
            std::array<double, 3> v{};
            for (int d = 0; d < kDim; ++d)
                v[static_cast<std::size_t>(d)] = centroid[static_cast<std::size_t>(d)] +
                                                 coef * (simplex[kDim].v[static_cast<std::size_t>(d)] - centroid[static_cast<std::size_t>(d)]);
            return eval(v);
        };
        const Candidate reflected = along(-1.0);
        if (reflected.f < simplex[0].f) {
            const Candidate expanded = along(-2.0);
            simplex[kDim] = expanded.f < reflected.f ? expanded : reflected;
        } else if (reflected.f < simplex[kDim - 1].f) {
            simplex[kDim] = reflected;
        } else {
            const Candidate contracted = reflected.f < simplex[kDim].f ? along(-0.5) : along(0.5);
            if (contracted.f < std::min(reflected.f, simplex[kDim].f)) {
                simplex[kDim] = contracted;
            } else {
                for (int i = 1; i <= kDim; ++i) {
                    std::array<double, 3> v{};
                    for (int d = 0; d < kDim; ++d)
                        v[static_cast<std::size_t>(d)] =
                            0.5 * (simplex[0].v[static_cast<std::size_t>(d)] + simplex[static_cast<std::size_t>(i)].v[static_cast<std::size_t>(d)]);
                    simplex[static_cast<std::size_t>(i)] = eval(v);
                }
            }
        }
    }
    return *std::min_element(simplex.begin(), simplex.end(), [](const Candidate& a, const Candidate& b) { return a.f < b.f; });
}

}  // namespace

std::string to_string(PcaFeatures f) { return f == PcaFeatures::Full ? "full" : "imag-second-order"; }

PcaFeatures parse_pca_features(std::string_view text) {
    if (text == "imag-second-order") return PcaFeatures::ImaginarySecondOrder;
    if (text == "full") return PcaFeatures::Full;
    throw ConfigError("unknown PCA feature set '" + std::string(text) + "' (expected imag-second-order|full)");
}

DirectionModel fit_directions(const std::vector<std::vector<double>>& embeddings, std::span<const double> a_jump,
                              int scales, const DirectionConfig& cfg) {
    if (embeddings.size() < cfg.min_samples)
        throw PreconditionError("direction fit needs at least " + std::to_string(cfg.min_samples) + " embeddings, got " +
                                std::to_string(embeddings.size()));
    if (!a_jump.empty() && a_jump.size() != embeddings.size())
        throw DataError("fit_directions: a_jump and embeddings differ in length");
    DirectionModel model;
    model.scales = scales;
    model.features = cfg.features;
    model.feature_indices = select_features(scales, cfg.features);
    model.fit_count = embeddings.size();
    const auto p = model.feature_indices.size();
    const auto n = embeddings.size();

    Eigen::MatrixXd z(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(p));
    for (std::size_t i = 0; i < n; ++i) {
        if (embeddings[i].size() != embedding_size(scales)) throw DataError("embedding has the wrong length");
        for (std::size_t k = 0; k < p; ++k) z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = embeddings[i][model.feature_indices[k]];
    }
    model.mean.resize(p);
    model.scale.resize(p);
    std::size_t constant = 0;
    std::vector<bool> is_constant(p, false);
    std::vector<double> column(n);
    for (std::size_t k = 0; k < p; ++k) {
        for (std::size_t i = 0; i < n; ++i) column[i] = z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
        model.mean[k] = mean(column);
        double s = stddev(column);
        if (!(s > 0.0)) {
            s = 1.0;
            ++constant;
            is_constant[k] = true;
        }
        model.scale[k] = s;
        for (std::size_t i = 0; i < n; ++i)
            z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = is_constant[k] ? 0.0 : (column[i] - model.mean[k]) / s;
    }
    if (constant > 0)
        model.warnings.push_back("reduced rank: " + std::to_string(constant) + " constant feature(s) carry no variance");

    const Eigen::MatrixXd cov = (z.transpose() * z) / static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) throw NumericalError("covariance eigen-decomposition failed");
    const auto& values = eig.eigenvalues();
    const double lead = values(values.size() - 1);
    const double trace = cov.trace();
    if (!(lead > 0.0)) throw NumericalError("feature covariance is zero; no principal direction");
    model.rank = 0;
    for (Eigen::Index k = 0; k < values.size(); ++k)
        if (values(k) > 1e-12 * lead) ++model.rank;
    if (model.rank < p && constant == 0)
        model.warnings.push_back("reduced rank: covariance rank " + std::to_string(model.rank) + " of " + std::to_string(p));
    model.explained_variance = lead / trace;

    Eigen::VectorXd w = eig.eigenvectors().col(values.size() - 1);
    // Constant features lie outside the nonzero subspace.
    for (std::size_t k = 0; k < p; ++k)
        if (is_constant[k]) w(static_cast<Eigen::Index>(k)) = 0.0;
    w.normalize();
    // Canonical sign before orientation: largest-magnitude weight positive.
    Eigen::Index arg = 0;
    w.cwiseAbs().maxCoeff(&arg);
    if (w(arg) < 0) w = -w;
    model.weights.assign(w.data(), w.data() + w.size());

    model.orientation = 1;
    if (!a_jump.empty()) {
        std::vector<double> raw(n);
        for (std::size_t i = 0; i < n; ++i) raw[i] = z.row(static_cast<Eigen::Index>(i)).dot(w);
        const double r = pearson(raw, a_jump);
        if (std::isfinite(r) && r < 0.0) model.orientation = -1;
        if (!std::isfinite(r) || r == 0.0) model.warnings.push_back("orientation undetermined: D1 uncorrelated with A_jump");
    } else {
        model.warnings.push_back("orientation undetermined: no A_jump supplied");
    }
    return model;
}

DirectionModel fit_directions(const std::vector<JumpEvent>& events, int scales, const DirectionConfig& cfg) {
    std::vector<std::vector<double>> emb;
    std::vector<double> a;
    for (const auto& ev : events) {
        if (!ev.embedding || !ev.a_jump) continue;
        emb.push_back(*ev.embedding);
        a.push_back(*ev.a_jump);
    }
    return fit_directions(emb, a, scales, cfg);
}

double d1_score(std::span<const double> embedding, const DirectionModel& model) {
    if (!model.fitted()) throw PreconditionError("direction model is not fitted");
    if (embedding.size() != embedding_size(model.scales)) throw DataError("embedding has the wrong length for the model");
    double acc = 0.0;
    for (std::size_t k = 0; k < model.weights.size(); ++k)
        acc += model.weights[k] * (embedding[model.feature_indices[k]] - model.mean[k]) / model.scale[k];
    return model.orientation * acc;
}

double mr_score(std::span<const double> aligned, const FilterBank& bank) {
    return normalized_filter_score(aligned, bank.mr_filter);
}

double trend_score(std::span<const double> aligned, const FilterBank& bank) {
    return normalized_filter_score(aligned, bank.tr_filter);
}

double asymmetry(std::span<const double> window) {
    if (window.size() < 3 || window.size() % 2 == 0) throw DataError("asymmetry needs an odd, centered window");
    const auto half = static_cast<std::ptrdiff_t>((window.size() - 1) / 2);
    // Both sides are summed walking away from the jump, so reversing the
    // window swaps the two sums exactly.
    auto side_mass = [&](std::ptrdiff_t direction) {
        auto at = [&](std::ptrdiff_t s) { return std::abs(window[static_cast<std::size_t>(half + direction * s)]); };
        double lo = kInf;
        for (std::ptrdiff_t s = 1; s <= half; ++s) lo = std::min(lo, at(s));
        double acc = 0.0;
        for (std::ptrdiff_t s = 1; s <= half; ++s) acc += at(s) - lo;
        return acc;
    };
    const double pre = side_mass(-1);
    const double post = side_mass(+1);
    const double total = post + pre;
    if (total == 0.0) return 0.0;
    return (post - pre) / total;
}

double power_law_value(const PowerLawParams& p, double t) {
    const double dt = t - p.t_c;
    if (dt < 0.0) return p.n_pre * std::pow(-dt, -p.p_pre) + p.d;
    if (dt > 0.0) return p.n_post * std::pow(dt, -p.p_post) + p.d;
    return p.d;
}

std::vector<double> power_law_profile(const PowerLawParams& p, int half) {
    std::vector<double> out(static_cast<std::size_t>(2 * half + 1));
    for (int t = -half; t <= half; ++t) out[static_cast<std::size_t>(t + half)] = power_law_value(p, t);
    return out;
}

double post_jump_tail_mass(const PowerLawParams& p, int half) {
    double acc = 0.0;
    for (int t = 1; t <= half; ++t) acc += power_law_value(p, t) - p.d;
    return acc;
}

PowerLawFit fit_power_law(std::span<const double> window, const PowerLawFitConfig& cfg) {
    if (window.size() < 3 || window.size() % 2 == 0) throw DataError("power-law fit needs an odd, centered window");
    if (!(cfg.t_c_step > 0.0 && cfg.p_step > 0.0 && cfg.p_max > 0.0 && cfg.t_c_bound >= 0.0))
        throw ConfigError("power-law fit: grid steps and bounds must be positive");
    const int half = static_cast<int>((window.size() - 1) / 2);
    FitData data;
    for (int t = -half; t <= half; ++t) {
        if (t == 0 && !cfg.include_center) continue;
        const double y = std::abs(window[static_cast<std::size_t>(t + half)]);
        if (!std::isfinite(y)) throw DataError("power-law fit: non-finite window value");
        data.t.push_back(t);
        data.y.push_back(y);
        data.sum_y += y;
        data.sum_yy += y * y;
    }

    PowerLawFit fit;
    const auto objective = [&](const std::array<double, 3>& v) {
        return solve_linear(side_stats(data, v[0], v[1], true), side_stats(data, v[0], v[2], false), data).rss;
    };

    // Grid: each side's statistics depend only on (t_c, own p), so cache them.
    std::vector<double> tcs, ps;
    for (int k = 0;; ++k) {
        const double v = -cfg.t_c_bound + k * cfg.t_c_step;
        if (v > cfg.t_c_bound + 1e-12) break;
        tcs.push_back(v);
    }
    for (int k = 0;; ++k) {
        const double v = k * cfg.p_step;
        if (v > cfg.p_max + 1e-12) break;
        ps.push_back(v);
    }
    std::vector<Candidate> grid;
    grid.reserve(tcs.size() * ps.size() * ps.size());
    for (double tc : tcs) {
        std::vector<SideStats> pre(ps.size()), post(ps.size());
        for (std::size_t k = 0; k < ps.size(); ++k) {
            pre[k] = side_stats(data, tc, ps[k], true);
            post[k] = side_stats(data, tc, ps[k], false);
        }
        for (std::size_t a = 0; a < ps.size(); ++a)
            for (std::size_t b = 0; b < ps.size(); ++b)
                grid.push_back({{tc, ps[a], ps[b]}, solve_linear(pre[a], post[b], data).rss});
    }
    const auto starts = std::min<std::size_t>(static_cast<std::size_t>(std::max(cfg.starts, 1)), grid.size());
    std::partial_sort(grid.begin(), grid.begin() + static_cast<std::ptrdiff_t>(starts), grid.end(),
                      [](const Candidate& a, const Candidate& b) { return a.f < b.f; });

    Candidate best;
    for (std::size_t s = 0; s < starts; ++s) {
        if (!std::isfinite(grid[s].f)) continue;
        const Candidate c = nelder_mead(objective, grid[s], cfg);
        if (c.f < best.f) best = c;
    }
    if (!std::isfinite(best.f)) {
        fit.residual_norm = kInf;
        fit.relative_residual = kInf;
        return fit;
    }
    const auto lin = solve_linear(side_stats(data, best.v[0], best.v[1], true), side_stats(data, best.v[0], best.v[2], false), data);
    PowerLawParams params{lin.n_pre, lin.n_post, best.v[1], best.v[2], best.v[0], lin.d};
    double rss = 0.0;
    for (std::size_t i = 0; i < data.t.size(); ++i) {
        const double r = data.y[i] - power_law_value(params, data.t[i]);
        rss += r * r;
    }
    fit.params = params;
    fit.residual_norm = std::sqrt(rss);
    const double ynorm = std::sqrt(data.sum_yy);
    fit.relative_residual = ynorm > 0.0 ? fit.residual_norm / ynorm : 0.0;
    fit.acceptable = fit.relative_residual < cfg.acceptable_relative_residual;
    return fit;
}

void score_events(std::vector<JumpEvent>& events, const FilterBank& bank, const ScoreConfig& cfg) {
    parallel_for(events.size(), cfg.threads, [&](std::size_t i) {
        auto& ev = events[i];
        ev.d2 = mr_score(ev.aligned, bank);
        ev.d3 = trend_score(ev.aligned, bank);
        ev.a_jump = asymmetry(ev.window);
        if (cfg.fit_power_law) ev.powerlaw = fit_power_law(ev.window, cfg.powerlaw);
    });
}

void match_news(std::vector<JumpEvent>& events, const NewsFeed& feed, int tolerance_minutes) {
    const auto tol = std::chrono::minutes{tolerance_minutes};
    for (auto& ev : events) {
        ev.news_related = false;
        auto it = std::lower_bound(feed.events.begin(), feed.events.end(), ev.timestamp - tol,
                                   [](const NewsEvent& n, Minute m) { return n.time < m; });
        for (; it != feed.events.end() && it->time <= ev.timestamp + tol; ++it) {
            if (!it->ticker || *it->ticker == ev.ticker) {
                ev.news_related = true;
                break;
            }
        }
    }
}

Reflexivity reflexivity_from_bin(int bin) {
    switch (bin) {
        case 0: return Reflexivity::Anticipatory;
        case 1: return Reflexivity::TransitionLow;
        case 2: return Reflexivity::Endogenous;
        case 3: return Reflexivity::TransitionHigh;
        default: return Reflexivity::Exogenous;
    }
}

MeanReversionLabel mean_reversion_from_bin(int bin, int bin_count) {
    if (bin == 0) return MeanReversionLabel::MeanRevertingOnTrend;
    if (bin == bin_count - 1) return MeanReversionLabel::PostJumpMeanReverting;
    return MeanReversionLabel::None;
}

TrendLabel trend_from_bin(int bin, int bin_count) {
    if (bin == 0) return TrendLabel::TrendAntiAligned;
    if (bin == bin_count - 1) return TrendLabel::TrendAligned;
    return TrendLabel::None;
}

ClassBoundaries classify(std::vector<JumpEvent>& events, const DirectionModel& model, const QuantileConfig& cfg) {
    if (!model.fitted()) throw PreconditionError("classify needs a fitted direction model");
    if (cfg.d1.size() != 4)
        throw ConfigError("D1 slicing needs exactly four quantiles (five reflexivity classes)");
    for (const auto* q : {&cfg.d1, &cfg.d2, &cfg.d3, &cfg.grid}) {
        if (q->empty()) throw ConfigError("quantile list must not be empty");
        for (std::size_t k = 0; k < q->size(); ++k) {
            if (!((*q)[k] > 0.0 && (*q)[k] < 1.0)) throw ConfigError("quantiles must lie in (0, 1)");
            if (k > 0 && (*q)[k] <= (*q)[k - 1]) throw ConfigError("quantiles must be strictly increasing");
        }
    }
    std::vector<double> d1s, d2s, d3s;
    for (auto& ev : events) {
        if (!ev.d2 || !ev.d3) throw PreconditionError("classify: event " + ev.ticker + " " + format_minute(ev.timestamp) + " has no D2/D3 score");
        if (!ev.d1 && ev.embedding) ev.d1 = d1_score(*ev.embedding, model);
        if (ev.d1) d1s.push_back(*ev.d1);
        d2s.push_back(*ev.d2);
        d3s.push_back(*ev.d3);
    }
    ClassBoundaries b;
    if (!d1s.empty()) {
        b.d1 = quantile_boundaries(d1s, cfg.d1);
        b.grid_d1 = quantile_boundaries(d1s, cfg.grid);
    }
    if (!d2s.empty()) {
        b.d2 = quantile_boundaries(d2s, cfg.d2);
        b.d3 = quantile_boundaries(d3s, cfg.d3);
        b.grid_d2 = quantile_boundaries(d2s, cfg.grid);
        b.grid_d3 = quantile_boundaries(d3s, cfg.grid);
    }
    const int d2_bins = static_cast<int>(cfg.d2.size()) + 1;
    const int d3_bins = static_cast<int>(cfg.d3.size()) + 1;
    for (auto& ev : events) {
        auto& l = ev.labels;
        l = JumpLabels{};
        if (ev.d1) {
            l.d1_bin = bin_index(*ev.d1, b.d1);
            l.grid_d1 = bin_index(*ev.d1, b.grid_d1);
            l.reflexivity = reflexivity_from_bin(l.d1_bin);
        }
        l.d2_bin = bin_index(*ev.d2, b.d2);
        l.d3_bin = bin_index(*ev.d3, b.d3);
        l.grid_d2 = bin_index(*ev.d2, b.grid_d2);
        l.grid_d3 = bin_index(*ev.d3, b.grid_d3);
        l.mean_reversion = mean_reversion_from_bin(l.d2_bin, d2_bins);
        l.trend = trend_from_bin(l.d3_bin, d3_bins);
    }
    return b;
}

std::vector<ProfileBin> average_profiles(const std::vector<JumpEvent>& events,
                                         const std::function<int(const JumpEvent&)>& bin_of, int bin_count) {
    std::vector<ProfileBin> bins(static_cast<std::size_t>(std::max(bin_count, 0)));
    std::vector<std::vector<double>> sum_abs(bins.size()), sum_aligned(bins.size());
    for (int k = 0; k < bin_count; ++k) bins[static_cast<std::size_t>(k)].bin = k;
    for (const auto& ev : events) {
        const int k = bin_of(ev);
        if (k < 0 || k >= bin_count) continue;
        const auto u = static_cast<std::size_t>(k);
        if (sum_abs[u].empty()) {
            sum_abs[u].assign(ev.window.size(), 0.0);
            sum_aligned[u].assign(ev.window.size(), 0.0);
        }
        if (ev.window.size() != sum_abs[u].size()) throw DataError("average_profiles: windows differ in length");
        for (std::size_t i = 0; i < ev.window.size(); ++i) {
            sum_abs[u][i] += std::abs(ev.window[i]);
            sum_aligned[u][i] += ev.aligned[i];
        }
        ++bins[u].count;
    }
    for (std::size_t u = 0; u < bins.size(); ++u) {
        if (bins[u].count == 0) continue;
        const double n = static_cast<double>(bins[u].count);
        for (auto& v : sum_abs[u]) v /= n;
        for (auto& v : sum_aligned[u]) v /= n;
        bins[u].mean_abs = std::move(sum_abs[u]);
        bins[u].mean_aligned = std::move(sum_aligned[u]);
    }
    return bins;
}

}  // namespace jumpscatter
