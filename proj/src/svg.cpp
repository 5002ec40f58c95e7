#include "embsig/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "embsig/error.hpp"

namespace embsig {

namespace {

struct Rgb {
    double r, g, b;
};

// Diverging blue -> near-white -> red.
constexpr Rgb kLow{0x21 / 255.0, 0x66 / 255.0, 0xac / 255.0};
constexpr Rgb kMid{0xf7 / 255.0, 0xf7 / 255.0, 0xf7 / 255.0};
constexpr Rgb kHigh{0xb2 / 255.0, 0x18 / 255.0, 0x2b / 255.0};

Rgb lerp(const Rgb& a, const Rgb& b, double t) {
    return {a.r + (b.r - a.r) * t, a.g + (b.g - a.g) * t, a.b + (b.b - a.b) * t};
}

std::string color_hex(double t) { // t in [-1, 1]
    t = std::clamp(t, -1.0, 1.0);
    const Rgb c = t < 0.0 ? lerp(kMid, kLow, -t) : lerp(kMid, kHigh, t);
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", static_cast<int>(std::lround(c.r * 255.0)),
                  static_cast<int>(std::lround(c.g * 255.0)),
                  static_cast<int>(std::lround(c.b * 255.0)));
    return buf;
}

std::string escape_xml(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string format_short(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

} // namespace

std::string heatmap_svg(const Matrix& m, const HeatmapOptions& options) {
    if (m.rows == 0 || m.cols == 0) throw data_error("heatmap_svg: empty matrix");
    if (!options.row_labels.empty() && options.row_labels.size() != m.rows) {
        throw data_error("heatmap_svg: " + std::to_string(options.row_labels.size()) +
                         " row labels for matrix " + shape_string(m));
    }
    if (!options.col_labels.empty() && options.col_labels.size() != m.cols) {
        throw data_error("heatmap_svg: " + std::to_string(options.col_labels.size()) +
                         " column labels for matrix " + shape_string(m));
    }
    require_finite(m, "heatmap_svg input");

    double lo = m.data[0], hi = m.data[0];
    for (double v : m.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    double center = 0.0, half = 1.0;
    if (options.symmetric_scale) {
        half = std::max({std::abs(lo), std::abs(hi), 1e-300});
    } else {
        center = 0.5 * (lo + hi);
        half = std::max(0.5 * (hi - lo), 1e-300);
    }

    const double cell = std::clamp(760.0 / static_cast<double>(std::max(m.rows, m.cols)), 2.0, 24.0);
    const bool labels = !options.row_labels.empty() || !options.col_labels.empty();
    const double left = labels ? 64.0 : 12.0;
    const double top = (options.title.empty() ? 12.0 : 34.0) + (labels ? 52.0 : 0.0);
    const double grid_w = cell * static_cast<double>(m.cols);
    const double grid_h = cell * static_cast<double>(m.rows);
    const double legend_w = 58.0;
    const double width = left + grid_w + legend_w + 24.0;
    const double height = top + grid_h + 16.0;
    const bool cell_titles = m.rows * m.cols <= 2500;

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    svg << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"#ffffff\"/>\n";
    if (!options.title.empty()) {
        svg << "<text x=\"" << left << "\" y=\"22\" font-family=\"sans-serif\" font-size=\"15\" "
               "fill=\"#222222\">"
            << escape_xml(options.title) << "</text>\n";
    }

    for (std::size_t r = 0; r < m.rows; ++r) {
        for (std::size_t c = 0; c < m.cols; ++c) {
            const double t = (m(r, c) - center) / half;
            svg << "<rect x=\"" << left + cell * static_cast<double>(c) << "\" y=\""
                << top + cell * static_cast<double>(r) << "\" width=\"" << cell << "\" height=\""
                << cell << "\" fill=\"" << color_hex(t) << "\"";
            if (cell_titles) {
                const std::string rl =
                    options.row_labels.empty() ? std::to_string(r) : options.row_labels[r];
                const std::string cl =
                    options.col_labels.empty() ? std::to_string(c) : options.col_labels[c];
                svg << "><title>" << escape_xml(rl) << ", " << escape_xml(cl) << " = "
                    << format_short(m(r, c)) << "</title></rect>\n";
            } else {
                svg << "/>\n";
            }
        }
    }

    if (!options.row_labels.empty()) {
        const std::size_t stride = std::max<std::size_t>(1, m.rows / 40);
        for (std::size_t r = 0; r < m.rows; r += stride) {
            svg << "<text x=\"" << left - 6.0 << "\" y=\""
                << top + cell * (static_cast<double>(r) + 0.75)
                << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\" "
                   "fill=\"#444444\">"
                << escape_xml(options.row_labels[r]) << "</text>\n";
        }
    }
    if (!options.col_labels.empty()) {
        const std::size_t stride = std::max<std::size_t>(1, m.cols / 40);
        for (std::size_t c = 0; c < m.cols; c += stride) {
            const double x = left + cell * (static_cast<double>(c) + 0.5);
            const double y = top - 6.0;
            svg << "<text x=\"" << x << "\" y=\"" << y
                << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"start\" "
                   "fill=\"#444444\" transform=\"rotate(-55 "
                << x << ' ' << y << ")\">" << escape_xml(options.col_labels[c]) << "</text>\n";
        }
    }

    // Legend: vertical gradient bar with min / center / max ticks.
    const double lx = left + grid_w + 18.0;
    const double lh = std::min(grid_h, 220.0);
    const int steps = 48;
    for (int i = 0; i < steps; ++i) {
        const double t = 1.0 - 2.0 * (static_cast<double>(i) + 0.5) / steps;
        svg << "<rect x=\"" << lx << "\" y=\"" << top + lh * i / steps << "\" width=\"12\" height=\""
            << lh / steps + 0.5 << "\" fill=\"" << color_hex(t) << "\"/>\n";
    }
    const double vmax = center + half, vmin = center - half;
    svg << "<text x=\"" << lx + 16.0 << "\" y=\"" << top + 8.0
        << "\" font-family=\"sans-serif\" font-size=\"10\" fill=\"#444444\">" << format_short(vmax)
        << "</text>\n";
    svg << "<text x=\"" << lx + 16.0 << "\" y=\"" << top + lh / 2.0 + 3.0
        << "\" font-family=\"sans-serif\" font-size=\"10\" fill=\"#444444\">" << format_short(center)
        << "</text>\n";
    svg << "<text x=\"" << lx + 16.0 << "\" y=\"" << top + lh
        << "\" font-family=\"sans-serif\" font-size=\"10\" fill=\"#444444\">" << format_short(vmin)
        << "</text>\n";
    svg << "</svg>\n";
    return svg.str();
}

void write_heatmap_svg(const std::string& path, const Matrix& m, const HeatmapOptions& options) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot open '" + path + "' for writing");
    out << heatmap_svg(m, options);
    if (!out) throw data_error("failed while writing heatmap to '" + path + "'");
}

} // namespace embsig
