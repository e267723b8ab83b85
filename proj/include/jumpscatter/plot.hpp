#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace jumpscatter {

enum class PointStyle { Plain, CoJump, News };

struct ScatterPoint {
    double x{0.0};
    double y{0.0};
    PointStyle style{PointStyle::Plain};
};

struct ScatterPlot {
    std::string title;
    std::string x_label;
    std::string y_label;
    std::vector<ScatterPoint> points;
    std::vector<double> x_lines;  // dashed guides, e.g. quantile boundaries
    std::vector<double> y_lines;
};

/// Self-contained SVG document; the hash goes into a leading comment.
void write_scatter_svg(std::ostream& out, const ScatterPlot& plot, const std::string& config_hash);

}  // namespace jumpscatter
