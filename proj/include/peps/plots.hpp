#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "peps/harness.hpp"

namespace peps {

/// Per instance: identification rate with +-2 standard-error bands, mean
/// rejection draws per step, and wall time per step, as SVG. Output is a pure
/// function of the rows. Returns the written paths.
std::vector<std::filesystem::path> emit_plots(
    const std::vector<MetricRow>& rows, const std::filesystem::path& out_dir);

/// A single line chart; exposed for testing.
struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> band;  // half-width; empty for no band
};
std::string render_svg(const std::string& title, const std::string& y_label,
                       const std::vector<Series>& series);

}  // namespace peps
