#pragma once

#include <optional>
#include <string>

#include "posegen/evaluate.hpp"

namespace posegen::io {

/// Minimal vector-graphics rendering of a density curve with an optional
/// ground-truth marker line. Tests assert on the companion data table, not
/// on the SVG.
void write_density_svg(const std::string& path, const eval::DensityCurve& curve,
                       std::optional<double> ground_truth, const std::string& x_label);

/// Two-column table (grid coordinate, density), '#' header comments.
void write_density_table(const std::string& path, const eval::DensityCurve& curve,
                         std::optional<double> ground_truth);

}  // namespace posegen::io
