#ifndef WESTFEM_SVG_HPP
#define WESTFEM_SVG_HPP

#include <string>
#include <vector>

namespace westfem {

struct SvgSeries {
    std::string label;
    std::string color = "#1f6fb4";
    std::vector<double> x, y;
};

// Standalone SVG 1.1 line plot: axes, tick labels, one polyline per series.
// log_y plots log10 of positive samples and drops the rest.
void write_svg_plot(const std::string& path, const std::string& title, const std::string& x_label,
                    const std::string& y_label, const std::vector<SvgSeries>& series, bool log_y);

} // namespace westfem

#endif
