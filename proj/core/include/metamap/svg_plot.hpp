#pragma once

#include <string>
#include <vector>

namespace metamap::svg {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::string color = "#1f77b4";
    bool markers = false;
};

struct Plot {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool log_x = false;
    bool log_y = false;
    int width = 720;
    int height = 440;
};

/// Polyline chart with axes, ticks and a legend. Non-finite points (and
/// non-positive ones on log axes) are skipped.
std::string render(const Plot& plot, const std::vector<Series>& series);

}  // namespace metamap::svg
