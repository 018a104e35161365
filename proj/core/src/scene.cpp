#include "posegen/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace posegen::scene {

namespace {

constexpr double kCoordTol = 1e-9;
constexpr double kLateralTol = 1e-6;
constexpr double kColorTol = 0.1;

double color_distance(const Color& a, const Color& b) {
    const double dr = a[0] - b[0], dg = a[1] - b[1], db = a[2] - b[2];
    return std::sqrt(dr * dr + dg * dg + db * db);
}

}  // namespace

void SceneSpec::validate() const {
    if (segments.size() < 3)
        throw InvalidScene("need at least 3 segments, got " + std::to_string(segments.size()));
    if (palette.empty()) throw InvalidScene("empty palette");
    if (feature_dim < 3 || feature_dim % 3 != 0)
        throw InvalidScene("feature_dim must be a positive multiple of 3");
    if (!(trajectory.length > 0)) throw InvalidScene("trajectory length must be positive");
    if (std::abs(trajectory.direction.norm() - 1.0) > 1e-9)
        throw InvalidScene("trajectory direction must be unit length");
    if (!geo::is_rotation(trajectory.base_rotation))
        throw InvalidScene("base rotation is not in SO(3)");

    for (std::size_t i = 0; i < palette.size(); ++i)
        for (std::size_t j = i + 1; j < palette.size(); ++j)
            if (color_distance(palette[i], palette[j]) == 0.0)
                throw InvalidScene("palette entries " + std::to_string(i) + " and " +
                                   std::to_string(j) + " are identical");

    double expect = 0.0;
    for (std::size_t i = 0; i < segments.size(); ++i) {
        const Segment& s = segments[i];
        if (s.color < 0 || s.color >= static_cast<int>(palette.size()))
            throw InvalidScene("segment " + std::to_string(i) + " references missing color " +
                               std::to_string(s.color));
        if (std::abs(s.t0 - expect) > kCoordTol || !(s.t1 > s.t0))
            throw InvalidScene("segments must be disjoint and cover the trajectory");
        expect = s.t1;
    }
    if (std::abs(expect - trajectory.length) > kCoordTol)
        throw InvalidScene("segments do not cover the full trajectory");
}

bool SceneSpec::is_ambiguous() const {
    std::vector<int> count(palette.size(), 0);
    for (const Segment& s : segments) count[s.color] += 1;
    return std::any_of(count.begin(), count.end(), [](int c) { return c >= 2; });
}

SceneSpec build_tricolor_scene(std::uint64_t seed, const SceneOptions& options) {
    if (options.segment_count < 3)
        throw InvalidScene("segment count must be >= 3, got " +
                           std::to_string(options.segment_count));
    if (static_cast<std::int64_t>(options.pattern.size()) != options.segment_count)
        throw InvalidScene("pattern length " + std::to_string(options.pattern.size()) +
                           " does not match segment count " +
                           std::to_string(options.segment_count));
    for (int c : options.pattern)
        if (c < 0 || c >= static_cast<int>(options.palette.size()))
            throw InvalidScene("pattern references missing color " + std::to_string(c));
    if (options.orientation == OrientationProfile::PerSegmentYaw &&
        static_cast<std::int64_t>(options.yaw_degrees.size()) != options.segment_count)
        throw InvalidScene("per-segment yaw list must match segment count");

    SceneSpec scene;
    scene.seed = seed;
    scene.trajectory.length = options.length;
    scene.palette = options.palette;
    scene.orientation = options.orientation;
    scene.sigma_obs = options.sigma_obs;
    scene.feature_dim = options.feature_dim;

    const double h = options.length / static_cast<double>(options.segment_count);
    for (std::int64_t i = 0; i < options.segment_count; ++i) {
        Segment s;
        s.t0 = h * static_cast<double>(i);
        s.t1 = (i + 1 == options.segment_count) ? options.length
                                                : h * static_cast<double>(i + 1);
        s.color = options.pattern[i];
        if (options.orientation == OrientationProfile::PerSegmentYaw)
            s.yaw_deg = options.yaw_degrees[i];
        scene.segments.push_back(s);
    }
    scene.validate();
    return scene;
}

std::size_t segment_at(const SceneSpec& scene, double s) {
    if (s < -kCoordTol || s > scene.trajectory.length + kCoordTol)
        throw OffTrajectory("coordinate " + std::to_string(s) + " outside [0, " +
                            std::to_string(scene.trajectory.length) + "]");
    for (std::size_t i = 0; i < scene.segments.size(); ++i) {
        if (s < scene.segments[i].t1) return i;
    }
    return scene.segments.size() - 1;  // trajectory end
}

geo::Pose pose_at_in_segment(const SceneSpec& scene, double s, std::size_t segment_index) {
    geo::Pose p;
    p.translation = scene.trajectory.start + s * scene.trajectory.direction;
    p.rotation = scene.trajectory.base_rotation;
    if (scene.orientation == OrientationProfile::PerSegmentYaw) {
        const Segment& seg = scene.segments[segment_index];
        p.rotation = geo::axis_angle_deg(geo::Vec3::UnitZ(), seg.yaw_deg) * p.rotation;
    }
    return p;
}

geo::Pose pose_at(const SceneSpec& scene, double s) {
    return pose_at_in_segment(scene, s, segment_at(scene, s));
}

double trajectory_coordinate(const SceneSpec& scene, const geo::Pose& pose) {
    const geo::Vec3 rel = pose.translation - scene.trajectory.start;
    const double s = rel.dot(scene.trajectory.direction);
    const double lateral = (rel - s * scene.trajectory.direction).norm();
    if (lateral > kLateralTol)
        throw OffTrajectory("pose is " + std::to_string(lateral) + " off the trajectory line");
    if (s < -kLateralTol || s > scene.trajectory.length + kLateralTol)
        throw OffTrajectory("pose coordinate " + std::to_string(s) + " outside the trajectory");
    return std::clamp(s, 0.0, scene.trajectory.length);
}

Observation render_observation(const SceneSpec& scene, const geo::Pose& pose,
                               std::uint64_t noise_seed) {
    const double s = trajectory_coordinate(scene, pose);
    const Color& color = scene.palette[scene.segments[segment_at(scene, s)].color];

    Observation obs;
    obs.features.resize(static_cast<std::size_t>(scene.feature_dim));
    for (std::int64_t k = 0; k < scene.feature_dim; ++k)
        obs.features[k] = color[k % 3];
    if (scene.sigma_obs > 0) {
        Rng rng(noise_seed);
        for (double& f : obs.features)
            f = std::clamp(f + scene.sigma_obs * rng.normal(), -0.5, 1.5);
    }
    return obs;
}

Dataset generate_dataset(const SceneSpec& scene, std::int64_t n_samples, double spacing,
                         std::uint64_t seed, const std::string& split) {
    if (n_samples < 1) throw InvalidScene("n_samples must be >= 1");
    if (split != "train" && split != "test")
        throw InvalidScene("split must be 'train' or 'test', got '" + split + "'");
    const double h = spacing > 0 ? spacing : scene.trajectory.length / static_cast<double>(n_samples);
    const double offset = split == "train" ? 0.5 * h : h;  // test shifted by h/2

    Dataset ds;
    ds.split = split;
    ds.seed = seed;
    Rng rng(seed);
    for (std::int64_t i = 0; i < n_samples; ++i) {
        const double s = offset + h * static_cast<double>(i);
        if (s > scene.trajectory.length + kCoordTol)
            throw InvalidScene("sample coordinate " + std::to_string(s) +
                               " exceeds the trajectory; reduce n_samples or spacing");
        Sample sample;
        sample.coordinate = std::min(s, scene.trajectory.length);
        sample.pose = pose_at(scene, sample.coordinate);
        sample.obs = render_observation(scene, sample.pose, rng.next_u64());
        ds.samples.push_back(std::move(sample));
    }
    return ds;
}

Color fold_features(const SceneSpec& scene, const Observation& obs) {
    if (static_cast<std::int64_t>(obs.features.size()) != scene.feature_dim)
        throw ShapeMismatch("observation has " + std::to_string(obs.features.size()) +
                            " features, scene expects " + std::to_string(scene.feature_dim));
    Color c = {0, 0, 0};
    const std::int64_t reps = scene.feature_dim / 3;
    for (std::int64_t k = 0; k < scene.feature_dim; ++k) c[k % 3] += obs.features[k];
    for (double& v : c) v /= static_cast<double>(reps);
    return c;
}

ModeSet true_mode_set(const SceneSpec& scene, const Observation& obs) {
    const Color c = fold_features(scene, obs);

    int best = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < scene.palette.size(); ++i) {
        const double d = color_distance(c, scene.palette[i]);
        if (d < best_dist) {
            best_dist = d;
            best = static_cast<int>(i);
        }
    }
    if (best_dist > kColorTol)
        throw UnknownColor("observation color (" + std::to_string(c[0]) + ", " +
                           std::to_string(c[1]) + ", " + std::to_string(c[2]) +
                           ") matches no palette color within " + std::to_string(kColorTol));

    ModeSet modes;
    modes.color = best;
    for (std::size_t i = 0; i < scene.segments.size(); ++i) {
        const Segment& seg = scene.segments[i];
        if (seg.color != best) continue;
        ModeRegion r;
        r.segment_index = i;
        r.t0 = seg.t0;
        r.t1 = seg.t1;
        r.center = pose_at_in_segment(scene, 0.5 * (seg.t0 + seg.t1), i);
        modes.regions.push_back(r);
    }
    return modes;
}

geo::Pose nearest_pose(const SceneSpec& scene, const ModeRegion& region,
                       const geo::Pose& query) {
    const geo::Vec3 rel = query.translation - scene.trajectory.start;
    const double s = std::clamp(rel.dot(scene.trajectory.direction), region.t0, region.t1);
    return pose_at_in_segment(scene, s, region.segment_index);
}

}  // namespace posegen::scene
