#include "jumpscatter/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace jumpscatter {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 480.0;
constexpr double kMargin = 60.0;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Axis {
    double lo{0.0};
    double hi{1.0};

    void fit(double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
};

}  // namespace

void write_scatter_svg(std::ostream& out, const ScatterPlot& plot, const std::string& config_hash) {
    Axis ax{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    Axis ay = ax;
    for (const auto& p : plot.points) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) continue;
        ax.fit(p.x);
        ay.fit(p.y);
    }
    for (double v : plot.x_lines) ax.fit(v);
    for (double v : plot.y_lines) ay.fit(v);
    if (!(ax.lo < ax.hi)) ax = {std::isfinite(ax.lo) ? ax.lo - 1.0 : -1.0, std::isfinite(ax.lo) ? ax.lo + 1.0 : 1.0};
    if (!(ay.lo < ay.hi)) ay = {std::isfinite(ay.lo) ? ay.lo - 1.0 : -1.0, std::isfinite(ay.lo) ? ay.lo + 1.0 : 1.0};
    const double pad_x = 0.05 * (ax.hi - ax.lo), pad_y = 0.05 * (ay.hi - ay.lo);
    ax.lo -= pad_x;
    ax.hi += pad_x;
    ay.lo -= pad_y;
    ay.hi += pad_y;
    auto sx = [&](double x) { return kMargin + (x - ax.lo) / (ax.hi - ax.lo) * (kWidth - 2 * kMargin); };
    auto sy = [&](double y) { return kHeight - kMargin - (y - ay.lo) / (ay.hi - ay.lo) * (kHeight - 2 * kMargin); };

    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<!-- config_hash=" << config_hash << " -->\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" viewBox=\"0 0 "
        << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << num(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">" << escape(plot.title)
        << "</text>\n";
    out << "<rect x=\"" << num(kMargin) << "\" y=\"" << num(kMargin) << "\" width=\"" << num(kWidth - 2 * kMargin)
        << "\" height=\"" << num(kHeight - 2 * kMargin) << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (double v : plot.x_lines)
        out << "<line x1=\"" << num(sx(v)) << "\" y1=\"" << num(kMargin) << "\" x2=\"" << num(sx(v)) << "\" y2=\""
            << num(kHeight - kMargin) << "\" stroke=\"#c00\" stroke-dasharray=\"4 3\"/>\n";
    for (double v : plot.y_lines)
        out << "<line x1=\"" << num(kMargin) << "\" y1=\"" << num(sy(v)) << "\" x2=\"" << num(kWidth - kMargin) << "\" y2=\""
            << num(sy(v)) << "\" stroke=\"#c00\" stroke-dasharray=\"4 3\"/>\n";
    // Axis ticks at the ends and the middle.
    for (double f : {0.0, 0.5, 1.0}) {
        const double vx = ax.lo + f * (ax.hi - ax.lo);
        const double vy = ay.lo + f * (ay.hi - ay.lo);
        out << "<text x=\"" << num(sx(vx)) << "\" y=\"" << num(kHeight - kMargin + 16) << "\" text-anchor=\"middle\">"
            << num(vx) << "</text>\n";
        out << "<text x=\"" << num(kMargin - 6) << "\" y=\"" << num(sy(vy) + 4) << "\" text-anchor=\"end\">" << num(vy)
            << "</text>\n";
    }
    out << "<text x=\"" << num(kWidth / 2) << "\" y=\"" << num(kHeight - 16) << "\" text-anchor=\"middle\">"
        << escape(plot.x_label) << "</text>\n";
    out << "<text transform=\"translate(16," << num(kHeight / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
        << escape(plot.y_label) << "</text>\n";
    // Plain points first so highlighted ones stay visible.
    for (auto style : {PointStyle::Plain, PointStyle::CoJump, PointStyle::News}) {
        const char* fill = style == PointStyle::Plain ? "#999" : style == PointStyle::CoJump ? "#1f5fbf" : "#d62728";
        out << "<g fill=\"" << fill << "\" fill-opacity=\"0.7\">\n";
        for (const auto& p : plot.points) {
            if (p.style != style || !std::isfinite(p.x) || !std::isfinite(p.y)) continue;
            out << "<circle cx=\"" << num(sx(p.x)) << "\" cy=\"" << num(sy(p.y)) << "\" r=\"2.5\"/>\n";
        }
        out << "</g>\n";
    }
    out << "</svg>\n";
}

}  // namespace jumpscatter
