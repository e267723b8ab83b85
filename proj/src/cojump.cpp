#include "jumpscatter/cojump.hpp"

#include "jumpscatter/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace jumpscatter {

std::string to_string(Quadrant q) {
    switch (q) {
        case Quadrant::LL: return "LL";
        case Quadrant::LR: return "LR";
        case Quadrant::UR: return "UR";
        case Quadrant::Gray: return "gray";
    }
    return "unknown";
}

GroupResult group(std::vector<JumpEvent>& events, std::size_t max_size) {
    std::vector<std::size_t> order(events.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (events[a].timestamp != events[b].timestamp) return events[a].timestamp < events[b].timestamp;
        return events[a].ticker < events[b].ticker;
    });
    GroupResult out;
    for (auto& ev : events) ev.cojump_id.reset();
    for (std::size_t i = 0; i < order.size();) {
        std::size_t k = i;
        while (k < order.size() && events[order[k]].timestamp == events[order[i]].timestamp) ++k;
        const std::size_t size = k - i;
        for (std::size_t a = i + 1; a < k; ++a)
            if (events[order[a]].ticker == events[order[a - 1]].ticker)
                throw DataError("two jumps of ticker " + events[order[a]].ticker + " at " +
                                format_minute(events[order[a]].timestamp));
        if (size > max_size) {
            ++out.dropped_groups;
            out.dropped_jumps += size;
        } else {
            CoJump cj;
            cj.id = out.cojumps.size();
            cj.minute = events[order[i]].timestamp;
            int sign_sum = 0;
            for (std::size_t a = i; a < k; ++a) {
                auto& ev = events[order[a]];
                cj.members.push_back(order[a]);
                ev.cojump_id = cj.id;
                sign_sum += ev.sign;
                cj.news_related = cj.news_related || ev.news_related;
            }
            cj.sign_mean = static_cast<double>(sign_sum) / static_cast<double>(size);
            out.cojumps.push_back(std::move(cj));
        }
        i = k;
    }
    return out;
}

namespace {

std::optional<std::vector<double>> member_d1(const CoJump& cj, const std::vector<JumpEvent>& events) {
    std::vector<double> v;
    for (auto m : cj.members) {
        if (!events.at(m).d1) return std::nullopt;
        v.push_back(*events[m].d1);
    }
    if (v.empty()) return std::nullopt;
    return v;
}

}  // namespace

std::map<std::size_t, double> size_sigma(const std::vector<CoJump>& cojumps, const std::vector<JumpEvent>& events,
                                         const IndicatorConfig& cfg) {
    std::map<std::size_t, std::vector<double>> spreads;  // size -> within-co-jump std values
    for (const auto& cj : cojumps) {
        if (cj.size() < std::max<std::size_t>(cfg.min_quadrant_size, 2)) continue;
        const auto d1 = member_d1(cj, events);
        if (!d1) continue;
        spreads[cj.size()].push_back(stddev(*d1));
    }
    std::vector<std::size_t> sizes;
    for (const auto& [s, v] : spreads) sizes.push_back(s);

    std::map<std::size_t, double> out;
    for (std::size_t s : sizes) {
        // Nearest sizes first; ties broken towards the smaller size.
        auto by_distance = sizes;
        std::stable_sort(by_distance.begin(), by_distance.end(), [s](std::size_t a, std::size_t b) {
            const auto da = a > s ? a - s : s - a;
            const auto db = b > s ? b - s : s - b;
            return da < db;
        });
        double total = 0.0;
        std::size_t count = 0;
        for (std::size_t t : by_distance) {
            if (count >= cfg.pool_min) break;
            for (double v : spreads[t]) total += v;
            count += spreads[t].size();
        }
        out[s] = total / static_cast<double>(count);
    }
    return out;
}

Quadrant quadrant(double mean, double min, double sigma) {
    if (mean - min <= sigma) return Quadrant::Gray;
    if (mean < 0.0) return Quadrant::LL;
    if (min > 0.0) return Quadrant::UR;
    return Quadrant::LR;
}

void compute_indicators(std::vector<CoJump>& cojumps, const std::vector<JumpEvent>& events, const IndicatorConfig& cfg) {
    const auto sigmas = size_sigma(cojumps, events, cfg);
    for (auto& cj : cojumps) {
        cj.mean_d1.reset();
        cj.min_d1.reset();
        cj.max_d1.reset();
        cj.sigma_size.reset();
        cj.normalized_mean.reset();
        cj.normalized_min.reset();
        cj.quadrant.reset();
        cj.rho.reset();
        cj.normalization_skipped = false;
        if (const auto d1 = member_d1(cj, events)) {
            cj.mean_d1 = mean(*d1);
            const auto [lo, hi] = std::minmax_element(d1->begin(), d1->end());
            cj.min_d1 = *lo;
            cj.max_d1 = *hi;
            // Rounding in the mean can cross an extreme when all members agree.
            cj.mean_d1 = std::clamp(*cj.mean_d1, *lo, *hi);
            if (const auto it = sigmas.find(cj.size()); it != sigmas.end()) {
                cj.sigma_size = it->second;
                if (it->second > 0.0) {
                    cj.normalized_mean = *cj.mean_d1 / it->second;
                    cj.normalized_min = *cj.min_d1 / it->second;
                    cj.quadrant = quadrant(*cj.mean_d1, *cj.min_d1, it->second);
                } else {
                    cj.normalization_skipped = true;
                }
            }
        }
        if (cj.size() >= 2) {
            std::vector<double> d3;
            for (auto m : cj.members)
                if (events[m].d3) d3.push_back(*events[m].d3);
            if (d3.size() == cj.size()) cj.rho = correlation_rho(d3);
        }
    }
}

SizeDistribution size_distribution(const std::vector<CoJump>& cojumps, SizeFilter filter, std::size_t min_size) {
    SizeDistribution out;
    for (const auto& cj : cojumps) {
        if (cj.size() < min_size) continue;
        if (filter == SizeFilter::EndogenousMinimum) {
            if (!cj.mean_d1 || !cj.min_d1 || !cj.sigma_size) continue;
            if (!(*cj.min_d1 < 0.0 && *cj.min_d1 < *cj.mean_d1 - *cj.sigma_size)) continue;
        }
        ++out.histogram[cj.size()];
        ++out.total;
    }
    std::size_t remaining = out.total;
    for (const auto& [s, c] : out.histogram) {
        out.ccdf.emplace_back(s, static_cast<double>(remaining) / static_cast<double>(out.total));
        remaining -= c;
    }
    return out;
}

TailFit fit_tail_exponent(std::span<const std::uint64_t> sizes, std::uint64_t lo, std::uint64_t hi) {
    if (lo < 1 || hi < lo) throw ConfigError("tail range must satisfy 1 <= lo <= hi");
    if (hi - lo > 10'000'000) throw ConfigError("tail range is too wide");
    std::vector<std::uint64_t> sorted(sizes.begin(), sizes.end());
    std::sort(sorted.begin(), sorted.end());
    const auto first = std::lower_bound(sorted.begin(), sorted.end(), lo);
    const auto last = std::upper_bound(sorted.begin(), sorted.end(), hi);
    TailFit fit;
    fit.range_min = lo;
    fit.range_max = hi;
    fit.in_range = static_cast<std::size_t>(last - first);
    if (fit.in_range == 0) throw DataError("tail fit: no observation in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    fit.low_count = fit.in_range < 50;

    const double n = static_cast<double>(sorted.size());
    std::vector<double> xs, ys;
    for (std::uint64_t s = lo; s <= hi; ++s) {
        const auto ge = sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), s);
        if (ge == 0) break;
        xs.push_back(std::log(static_cast<double>(s)));
        ys.push_back(std::log(static_cast<double>(ge) / n));
    }
    if (xs.size() < 2) throw NumericalError("tail fit: fewer than two CCDF points in range");
    const auto line = least_squares_line(xs, ys);
    fit.tau = -line.slope;
    fit.stderr_tau = line.slope_stderr;

    // Discrete power law on [lo, hi]: the score equation E_alpha[log S] = mean log s.
    double mean_log = 0.0;
    for (auto it = first; it != last; ++it) mean_log += std::log(static_cast<double>(*it));
    mean_log /= static_cast<double>(fit.in_range);
    auto moments = [&](double alpha) {
        double z = 0.0, m1 = 0.0, m2 = 0.0;
        for (std::uint64_t s = lo; s <= hi; ++s) {
            const double ls = std::log(static_cast<double>(s));
            const double w = std::exp(-alpha * (ls - std::log(static_cast<double>(lo))));
            z += w;
            m1 += w * ls;
            m2 += w * ls * ls;
        }
        m1 /= z;
        return std::pair{m1, m2 / z - m1 * m1};
    };
    double a = -20.0, b = 40.0;
    for (int iter = 0; iter < 200 && b - a > 1e-12; ++iter) {
        const double mid = 0.5 * (a + b);
        (moments(mid).first > mean_log ? a : b) = mid;
    }
    const double alpha = 0.5 * (a + b);
    fit.tau_ml = alpha - 1.0;
    const double var = moments(alpha).second;
    fit.stderr_ml = var > 0.0 ? 1.0 / std::sqrt(static_cast<double>(fit.in_range) * var) : 0.0;
    return fit;
}

double pmf_loglog_slope(std::span<const std::uint64_t> sizes, std::uint64_t lo, std::uint64_t hi) {
    if (lo < 1 || hi < lo) throw ConfigError("pmf range must satisfy 1 <= lo <= hi");
    std::map<std::uint64_t, std::size_t> counts;
    for (auto s : sizes)
        if (s >= lo && s <= hi) ++counts[s];
    if (counts.size() < 2) throw NumericalError("pmf slope: fewer than two occupied sizes in range");
    std::vector<double> xs, ys;
    const double n = static_cast<double>(sizes.size());
    for (const auto& [s, c] : counts) {
        xs.push_back(std::log(static_cast<double>(s)));
        ys.push_back(std::log(static_cast<double>(c) / n));
    }
    return least_squares_line(xs, ys).slope;
}

std::optional<double> correlation_rho(std::span<const double> a) {
    if (a.size() < 2) throw PreconditionError("rho needs a co-jump with at least two members");
    double sum = 0.0, ss = 0.0;
    for (double v : a) {
        sum += v;
        ss += v * v;
    }
    if (ss == 0.0) return std::nullopt;
    // sum_{k != k'} a_k a_k' = (sum a)^2 - sum a^2
    return (sum * sum - ss) / (static_cast<double>(a.size() - 1) * ss);
}

NormalizedProfile average_normalized_profile(const std::vector<std::span<const double>>& aligned_windows) {
    NormalizedProfile out;
    std::vector<double> acc;
    for (const auto& w : aligned_windows) {
        double ss = 0.0;
        for (double v : w) ss += v * v;
        const double rms = std::sqrt(ss / static_cast<double>(w.size()));
        if (!(rms > 0.0)) {
            ++out.skipped;
            continue;
        }
        if (acc.empty()) acc.assign(w.size(), 0.0);
        if (w.size() != acc.size()) throw DataError("average_normalized_profile: windows differ in length");
        for (std::size_t i = 0; i < w.size(); ++i) acc[i] += w[i] / rms;
        ++out.used;
    }
    if (out.used > 0) {
        for (double& v : acc) v /= static_cast<double>(out.used);
        out.profile = std::move(acc);
    }
    return out;
}

NormalizedProfile average_normalized_profile(const CoJump& cj, const std::vector<JumpEvent>& events) {
    std::vector<std::span<const double>> windows;
    for (auto m : cj.members) windows.emplace_back(events.at(m).aligned);
    return average_normalized_profile(windows);
}

std::map<std::size_t, double> sign_alignment(const std::vector<CoJump>& cojumps) {
    std::map<std::size_t, std::pair<double, std::size_t>> acc;
    for (const auto& cj : cojumps) {
        auto& [sum, count] = acc[cj.size()];
        sum += std::abs(cj.sign_mean);
        ++count;
    }
    std::map<std::size_t, double> out;
    for (const auto& [s, v] : acc) out[s] = v.first / static_cast<double>(v.second);
    return out;
}

}  // namespace jumpscatter
