#pragma once

// Minimal self-contained SVG rendering for matrix heatmaps.  Uses a
// blue-white-red diverging colormap, symmetric around zero by default.

#include <string>
#include <vector>

#include "embsig/linalg.hpp"

namespace embsig {

struct HeatmapOptions {
    std::string title;
    std::vector<std::string> row_labels; // optional; sizes must match when set
    std::vector<std::string> col_labels;
    bool symmetric_scale = true; // color range [-m, m] with m = max |value|
};

std::string heatmap_svg(const Matrix& m, const HeatmapOptions& options = {});

void write_heatmap_svg(const std::string& path, const Matrix& m,
                       const HeatmapOptions& options = {});

} // namespace embsig
