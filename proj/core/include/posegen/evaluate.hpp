#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "posegen/geometry.hpp"
#include "posegen/scene.hpp"

namespace posegen::eval {

/// (translation threshold in scene units, rotation threshold in degrees).
using Threshold = std::pair<double, double>;

struct RecallSpec {
    std::vector<Threshold> thresholds = {{0.1, 10.0}, {0.2, 15.0}, {0.3, 20.0}};
    double gamma = 0.05;  // required sample ratio

    void validate() const {
        if (thresholds.empty()) throw ConfigError("recall thresholds must be non-empty");
        for (const auto& [t, r] : thresholds)
            if (!(t > 0 && r > 0)) throw ConfigError("recall thresholds must be positive");
        if (!(gamma > 0 && gamma <= 1)) throw ConfigError("gamma must be in (0, 1]");
    }
};

/// Samples within both components of the threshold of the ground truth.
std::int64_t within_count(const std::vector<geo::Pose>& samples, const geo::Pose& ground_truth,
                          const Threshold& threshold);

/// True positive iff at least ratio gamma of the samples fall within the
/// joint translation/rotation threshold of the ground-truth pose.
bool recall_single(const std::vector<geo::Pose>& samples, const geo::Pose& ground_truth,
                   const Threshold& threshold, double gamma);

/// Fraction of true positives per threshold; per_query[q][t] indexes query q,
/// threshold t.
std::vector<double> recall_aggregate(const std::vector<std::vector<bool>>& per_query);

/// Arithmetic mean translation, chordal L2 mean rotation. Propagates
/// DegenerateMean for dispersed sample sets.
geo::Pose point_estimate(const std::vector<geo::Pose>& samples);

/// Component-wise medians of pose distances. Even-count median is the
/// lower-middle element.
std::pair<double, double> median_errors(const std::vector<geo::Pose>& estimates,
                                        const std::vector<geo::Pose>& ground_truths);

double median_lower(std::vector<double> values);

struct DensityCurve {
    std::vector<double> grid;     // ascending coordinates
    std::vector<double> density;  // non-negative
    double bandwidth = 0;
};

/// Translation coordinates of the samples along one axis (0..2).
std::vector<double> translation_axis_values(const std::vector<geo::Pose>& samples, int axis);

/// Uniform grid spanning the samples plus `margin_bandwidths` Silverman
/// bandwidths on each side.
std::vector<double> make_grid(const std::vector<double>& values, std::size_t count,
                              double margin_bandwidths = 5.0);

/// Silverman's rule 1.06 * sigma * n^(-1/5); zero for degenerate spread.
double silverman_bandwidth(const std::vector<double>& values);

/// Gaussian kernel density of scalar values on a grid. bandwidth <= 0 picks
/// Silverman's rule; zero-spread input falls back to 1e-3 * grid span.
DensityCurve kde_1d(const std::vector<double>& values, const std::vector<double>& grid,
                    double bandwidth = 0);

/// KDE of a translation-axis marginal of pose samples.
DensityCurve kde_marginal(const std::vector<geo::Pose>& samples, int axis,
                          const std::vector<double>& grid, double bandwidth = 0);

/// Local maxima of a density curve (strictly above both neighbors).
std::vector<std::size_t> local_maxima(const DensityCurve& curve);

struct ModeCoverage {
    std::int64_t covered = 0;          // modes with mass >= gamma_mode
    std::vector<double> mass;          // per-mode sample mass
};

/// Per-mode sample mass: fraction of samples within the joint threshold of
/// the mode region's nearest pose. A mode counts as covered when its mass
/// reaches gamma_mode.
ModeCoverage mode_coverage(const std::vector<geo::Pose>& samples, const scene::SceneSpec& scene,
                           const scene::ModeSet& modes, const Threshold& threshold,
                           double gamma_mode);

}  // namespace posegen::eval
