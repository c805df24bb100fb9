#pragma once

#include "json_io.hpp"
#include "particles.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

namespace aniso::svg {

struct PanelData {
    std::vector<particles::Vec2> points;
    std::vector<std::array<double, 2>> ellipse; ///< drawn verbatim as a closed polyline
    double dash_height = std::numeric_limits<double>::quiet_NaN(); ///< dashed lines at ±dash_height
    std::string title;
};

struct Frame {
    double xmin = -1, xmax = 1, ymin = -1, ymax = 1;
    double k = 1;          ///< pixels per data unit
    double tx = 0, ty = 0; ///< pixel = (tx + k x, ty - k y)
};

inline constexpr double canvas = 600.0;
inline constexpr double dot_radius = 1.5;

/** @brief Equal-aspect map of the data bounding box onto the canvas with a 5% margin. */
inline Frame fit_frame(const PanelData& d)
{
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    auto add = [&](double x, double y) {
        x0 = std::min(x0, x); x1 = std::max(x1, x);
        y0 = std::min(y0, y); y1 = std::max(y1, y);
    };
    for (const auto& p : d.points) add(p.x, p.y);
    for (const auto& p : d.ellipse) add(p[0], p[1]);
    if (std::isfinite(d.dash_height)) {
        add(x0 < x1 ? x0 : 0.0, d.dash_height);
        add(x0 < x1 ? x0 : 0.0, -d.dash_height);
    }
    Frame f;
    if (!(x0 <= x1)) return f;
    const double span = std::max({x1 - x0, y1 - y0, 1e-12});
    const double half = 0.5 * span * 1.1;
    const double cx = 0.5 * (x0 + x1), cy = 0.5 * (y0 + y1);
    f.xmin = cx - half; f.xmax = cx + half;
    f.ymin = cy - half; f.ymax = cy + half;
    f.k = canvas / (2.0 * half);
    f.tx = -f.k * f.xmin;
    f.ty = f.k * f.ymax;
    return f;
}

/** @brief Standalone SVG: particle dots, the predicted ellipse and the ρ₁D height dashes, in data coordinates. */
inline std::string render(const PanelData& d)
{
    using io::fmt17;
    const Frame f = fit_frame(d);
    auto px = [&](double v) { return fmt17(v / f.k); };
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"600\" height=\"600\" viewBox=\"0 0 600 600\">\n";
    os << "<rect width=\"600\" height=\"600\" fill=\"white\"/>\n";
    if (!d.title.empty()) os << "<title>" << d.title << "</title>\n";
    os << "<g transform=\"matrix(" << fmt17(f.k) << " 0 0 " << fmt17(-f.k) << ' ' << fmt17(f.tx) << ' ' << fmt17(f.ty) << ")\">\n";
    if (std::isfinite(d.dash_height)) {
        for (double y : {d.dash_height, -d.dash_height})
            os << "<line x1=\"" << fmt17(f.xmin) << "\" y1=\"" << fmt17(y) << "\" x2=\"" << fmt17(f.xmax) << "\" y2=\"" << fmt17(y)
               << "\" stroke=\"gray\" stroke-width=\"" << px(1.0) << "\" stroke-dasharray=\"" << px(6.0) << ' ' << px(4.0) << "\"/>\n";
    }
    os << "<g fill=\"black\">\n";
    const std::string r = px(dot_radius);
    for (const auto& p : d.points) os << "<circle cx=\"" << fmt17(p.x) << "\" cy=\"" << fmt17(p.y) << "\" r=\"" << r << "\"/>\n";
    os << "</g>\n";
    if (!d.ellipse.empty()) {
        os << "<polygon fill=\"none\" stroke=\"red\" stroke-width=\"" << px(1.5) << "\" points=\"";
        for (std::size_t i = 0; i < d.ellipse.size(); ++i) os << (i ? " " : "") << fmt17(d.ellipse[i][0]) << ',' << fmt17(d.ellipse[i][1]);
        os << "\"/>\n";
    }
    os << "</g>\n</svg>\n";
    return os.str();
}

} // namespace aniso::svg
