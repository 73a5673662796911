// Minimal standalone SVG line plots; no plotting library involved.

#include "westfem/svg.hpp"

#include "westfem/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace westfem {

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(4) << v;
    return os.str();
}

} // namespace

void write_svg_plot(const std::string& path, const std::string& title, const std::string& x_label,
                    const std::string& y_label, const std::vector<SvgSeries>& series, bool log_y) {
    const double W = 640, H = 420;
    const double ml = 70, mr = 20, mt = 40, mb = 50;

    std::vector<SvgSeries> data = series;
    if (log_y) {
        for (auto& s : data) {
            std::vector<double> xs, ys;
            for (std::size_t i = 0; i < s.y.size(); ++i) {
                if (s.y[i] > 0) {
                    xs.push_back(s.x[i]);
                    ys.push_back(std::log10(s.y[i]));
                }
            }
            s.x = xs;
            s.y = ys;
        }
    }

    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    bool any = false;
    for (const auto& s : data) {
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!any) {
                xmin = xmax = s.x[i];
                ymin = ymax = s.y[i];
                any = true;
            }
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    }
    if (xmax <= xmin) xmax = xmin + 1;
    if (ymax <= ymin) ymax = ymin + 1;

    auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr); };
    auto py = [&](double y) { return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb); };

    std::ofstream os(path);
    if (!os) throw ConfigError("cannot open '" + path + "' for writing");
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << W << "\" height=\""
       << H << "\" viewBox=\"0 0 " << W << " " << H << "\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title
       << "</text>\n";

    // axes
    os << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr << "\" y2=\"" << H - mb
       << "\" stroke=\"black\"/>\n"
       << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << H - mb
       << "\" stroke=\"black\"/>\n";
    const int nticks = 5;
    for (int i = 0; i <= nticks; ++i) {
        double fx = xmin + (xmax - xmin) * i / nticks;
        double fy = ymin + (ymax - ymin) * i / nticks;
        os << "<line x1=\"" << px(fx) << "\" y1=\"" << H - mb << "\" x2=\"" << px(fx) << "\" y2=\""
           << H - mb + 5 << "\" stroke=\"black\"/>\n"
           << "<text x=\"" << px(fx) << "\" y=\"" << H - mb + 20
           << "\" text-anchor=\"middle\" font-size=\"11\">" << fmt(fx) << "</text>\n"
           << "<line x1=\"" << ml - 5 << "\" y1=\"" << py(fy) << "\" x2=\"" << ml << "\" y2=\"" << py(fy)
           << "\" stroke=\"black\"/>\n"
           << "<text x=\"" << ml - 8 << "\" y=\"" << py(fy) + 4
           << "\" text-anchor=\"end\" font-size=\"11\">" << fmt(fy) << "</text>\n";
    }
    os << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 12
       << "\" text-anchor=\"middle\" font-size=\"13\">" << x_label << "</text>\n"
       << "<text x=\"16\" y=\"" << (mt + H - mb) / 2 << "\" text-anchor=\"middle\" font-size=\"13\" "
       << "transform=\"rotate(-90 16 " << (mt + H - mb) / 2 << ")\">"
       << (log_y ? "log10 " + y_label : y_label) << "</text>\n";

    int li = 0;
    for (const auto& s : data) {
        if (s.x.empty()) continue;
        os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) os << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
        os << "\"/>\n";
        os << "<text x=\"" << W - mr - 5 << "\" y=\"" << mt + 15 * (li + 1)
           << "\" text-anchor=\"end\" font-size=\"12\" fill=\"" << s.color << "\">" << s.label
           << "</text>\n";
        ++li;
    }
    os << "</svg>\n";
}

} // namespace westfem
