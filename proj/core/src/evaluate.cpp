#include "posegen/evaluate.hpp"

#include <algorithm>
#include <cmath>

namespace posegen::eval {

std::int64_t within_count(const std::vector<geo::Pose>& samples, const geo::Pose& ground_truth,
                          const Threshold& threshold) {
    std::int64_t n = 0;
    for (const geo::Pose& s : samples) {
        const auto [dt, dr] = geo::pose_distance(s, ground_truth);
        if (dt <= threshold.first && dr <= threshold.second) ++n;
    }
    return n;
}

bool recall_single(const std::vector<geo::Pose>& samples, const geo::Pose& ground_truth,
                   const Threshold& threshold, double gamma) {
    if (samples.empty()) throw EmptySamples("recall_single with no samples");
    const double ratio = static_cast<double>(within_count(samples, ground_truth, threshold)) /
                         static_cast<double>(samples.size());
    return ratio >= gamma;
}

std::vector<double> recall_aggregate(const std::vector<std::vector<bool>>& per_query) {
    if (per_query.empty()) throw EmptySamples("recall_aggregate with no queries");
    const std::size_t n_thresholds = per_query.front().size();
    std::vector<double> recall(n_thresholds, 0.0);
    for (const auto& flags : per_query) {
        if (flags.size() != n_thresholds)
            throw LengthMismatch("per-query recall rows have inconsistent widths");
        for (std::size_t t = 0; t < n_thresholds; ++t)
            if (flags[t]) recall[t] += 1.0;
    }
    for (double& r : recall) r /= static_cast<double>(per_query.size());
    return recall;
}

geo::Pose point_estimate(const std::vector<geo::Pose>& samples) {
    if (samples.empty()) throw EmptySamples("point_estimate with no samples");
    geo::Pose est;
    est.translation.setZero();
    std::vector<geo::Mat3> rotations;
    rotations.reserve(samples.size());
    for (const geo::Pose& s : samples) {
        est.translation += s.translation;
        rotations.push_back(s.rotation);
    }
    est.translation /= static_cast<double>(samples.size());
    est.rotation = geo::chordal_l2_mean(rotations);
    return est;
}

double median_lower(std::vector<double> values) {
    if (values.empty()) throw EmptySamples("median of no values");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : values[n / 2 - 1];
}

std::pair<double, double> median_errors(const std::vector<geo::Pose>& estimates,
                                        const std::vector<geo::Pose>& ground_truths) {
    if (estimates.size() != ground_truths.size())
        throw LengthMismatch("estimates and ground truths differ in length");
    if (estimates.empty()) throw EmptySamples("median_errors with no pairs");
    std::vector<double> terr, rerr;
    terr.reserve(estimates.size());
    rerr.reserve(estimates.size());
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        const auto [dt, dr] = geo::pose_distance(estimates[i], ground_truths[i]);
        terr.push_back(dt);
        rerr.push_back(dr);
    }
    return {median_lower(std::move(terr)), median_lower(std::move(rerr))};
}

std::vector<double> translation_axis_values(const std::vector<geo::Pose>& samples, int axis) {
    if (axis < 0 || axis > 2) throw ConfigError("translation axis must be 0, 1 or 2");
    std::vector<double> v;
    v.reserve(samples.size());
    for (const geo::Pose& s : samples) v.push_back(s.translation[axis]);
    return v;
}

double silverman_bandwidth(const std::vector<double>& values) {
    const std::size_t n = values.size();
    if (n < 2) return 0.0;
    double mean = 0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double sigma = std::sqrt(ss / static_cast<double>(n - 1));
    return 1.06 * sigma * std::pow(static_cast<double>(n), -0.2);
}

std::vector<double> make_grid(const std::vector<double>& values, std::size_t count,
                              double margin_bandwidths) {
    if (values.empty()) throw EmptySamples("make_grid with no values");
    if (count < 2) throw ConfigError("grid needs at least 2 points");
    const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
    double lo = *lo_it, hi = *hi_it;
    double h = silverman_bandwidth(values);
    if (h <= 0) h = std::max(1e-3, 1e-3 * std::abs(lo));  // spike fallback span
    lo -= margin_bandwidths * h;
    hi += margin_bandwidths * h;
    std::vector<double> grid(count);
    for (std::size_t i = 0; i < count; ++i)
        grid[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
    return grid;
}

DensityCurve kde_1d(const std::vector<double>& values, const std::vector<double>& grid,
                    double bandwidth) {
    if (values.empty()) throw EmptySamples("kde of no samples");
    if (grid.size() < 2) throw ConfigError("kde grid needs at least 2 points");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1])) throw ConfigError("kde grid must be strictly ascending");

    double h = bandwidth;
    if (h <= 0) h = silverman_bandwidth(values);
    if (h <= 0) h = 1e-3 * (grid.back() - grid.front());  // zero spread: narrow spike

    DensityCurve curve;
    curve.grid = grid;
    curve.bandwidth = h;
    curve.density.resize(grid.size(), 0.0);
    const double norm = 1.0 / (static_cast<double>(values.size()) * h * std::sqrt(2.0 * M_PI));
    for (std::size_t i = 0; i < grid.size(); ++i) {
        double acc = 0;
        for (double v : values) {
            const double z = (grid[i] - v) / h;
            acc += std::exp(-0.5 * z * z);
        }
        curve.density[i] = acc * norm;
    }
    return curve;
}

DensityCurve kde_marginal(const std::vector<geo::Pose>& samples, int axis,
                          const std::vector<double>& grid, double bandwidth) {
    return kde_1d(translation_axis_values(samples, axis), grid, bandwidth);
}

std::vector<std::size_t> local_maxima(const DensityCurve& curve) {
    std::vector<std::size_t> peaks;
    for (std::size_t i = 1; i + 1 < curve.density.size(); ++i)
        if (curve.density[i] > curve.density[i - 1] && curve.density[i] > curve.density[i + 1])
            peaks.push_back(i);
    return peaks;
}

ModeCoverage mode_coverage(const std::vector<geo::Pose>& samples, const scene::SceneSpec& scene,
                           const scene::ModeSet& modes, const Threshold& threshold,
                           double gamma_mode) {
    if (modes.regions.empty()) throw EmptySamples("mode_coverage with no modes");
    if (samples.empty()) throw EmptySamples("mode_coverage with no samples");

    ModeCoverage cov;
    cov.mass.resize(modes.regions.size(), 0.0);
    for (const geo::Pose& s : samples) {
        for (std::size_t k = 0; k < modes.regions.size(); ++k) {
            const geo::Pose near = scene::nearest_pose(scene, modes.regions[k], s);
            const auto [dt, dr] = geo::pose_distance(s, near);
            if (dt <= threshold.first && dr <= threshold.second) cov.mass[k] += 1.0;
        }
    }
    for (std::size_t k = 0; k < cov.mass.size(); ++k) {
        cov.mass[k] /= static_cast<double>(samples.size());
        if (cov.mass[k] >= gamma_mode) cov.covered += 1;
    }
    return cov;
}

}  // namespace posegen::eval
