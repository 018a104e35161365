#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "posegen/geometry.hpp"

namespace posegen::scene {

using Color = std::array<double, 3>;

enum class OrientationProfile { Fixed, PerSegmentYaw };

/// One pose interval along the trajectory, colored from the palette.
/// Intervals are left-closed; the final segment also owns the trajectory end.
struct Segment {
    double t0 = 0;
    double t1 = 0;
    int color = 0;       // palette index
    double yaw_deg = 0;  // used by the PerSegmentYaw profile
};

struct TrajectorySpec {
    geo::Vec3 start = geo::Vec3::Zero();
    geo::Vec3 direction = geo::Vec3::UnitX();
    double length = 3.0;
    /// Camera orientation for the Fixed profile; default faces world +y.
    geo::Mat3 base_rotation = (geo::Mat3() << 1, 0, 0, 0, 0, 1, 0, -1, 0).finished();
};

struct SceneSpec {
    TrajectorySpec trajectory;
    std::vector<Segment> segments;
    std::vector<Color> palette;
    OrientationProfile orientation = OrientationProfile::Fixed;
    double sigma_obs = 0.01;
    std::int64_t feature_dim = 3;
    std::uint64_t seed = 0;

    void validate() const;  // throws InvalidScene
    bool is_ambiguous() const;
};

struct SceneOptions {
    std::int64_t segment_count = 3;
    std::vector<int> pattern = {0, 1, 0};  // palette index per segment
    std::vector<Color> palette = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    double length = 3.0;
    OrientationProfile orientation = OrientationProfile::Fixed;
    std::vector<double> yaw_degrees;  // per segment, PerSegmentYaw only
    double sigma_obs = 0.01;
    std::int64_t feature_dim = 3;
};

/// Default: length-3 trajectory along +x, camera facing +y, three equal
/// segments colored (red, green, red) so red is ambiguous and green unique.
SceneSpec build_tricolor_scene(std::uint64_t seed, const SceneOptions& options = {});

/// Observation feature vector: the segment color replicated to feature_dim,
/// optionally with clamped additive Gaussian noise.
struct Observation {
    std::vector<double> features;
};

struct Sample {
    Observation obs;
    geo::Pose pose;
    double coordinate = 0;  // trajectory coordinate
};

struct Dataset {
    std::vector<Sample> samples;
    std::string split;  // "train" or "test"
    std::uint64_t seed = 0;
};

/// Index of the segment owning coordinate s (left-closed intervals, final
/// segment owns the trajectory end). Throws OffTrajectory outside [0, length].
std::size_t segment_at(const SceneSpec& scene, double s);

/// Camera pose at trajectory coordinate s, orientation per profile.
geo::Pose pose_at(const SceneSpec& scene, double s);

/// Pose at coordinate s using a specific segment's orientation (for boundary
/// coordinates of mode regions).
geo::Pose pose_at_in_segment(const SceneSpec& scene, double s, std::size_t segment_index);

/// Trajectory coordinate of a pose; throws OffTrajectory when the pose is
/// more than 1e-6 lateral from the trajectory line or outside its extent.
double trajectory_coordinate(const SceneSpec& scene, const geo::Pose& pose);

Observation render_observation(const SceneSpec& scene, const geo::Pose& pose,
                               std::uint64_t noise_seed);

/// Uniformly spaced poses: train at segment midpoint convention
/// (i + 0.5) * spacing, test offset by half a spacing. spacing <= 0 means
/// length / n_samples.
Dataset generate_dataset(const SceneSpec& scene, std::int64_t n_samples, double spacing,
                         std::uint64_t seed, const std::string& split);

/// Pose-space region sharing the query color: trajectory interval plus its
/// center pose.
struct ModeRegion {
    std::size_t segment_index = 0;
    double t0 = 0;
    double t1 = 0;
    geo::Pose center;
};

struct ModeSet {
    int color = 0;  // palette index
    std::vector<ModeRegion> regions;
};

/// Fold replicated features back to RGB (channel means).
Color fold_features(const SceneSpec& scene, const Observation& obs);

/// Ground-truth posterior modes for an observation: every segment whose
/// palette color is within 0.1 (RGB Euclidean) of the observation color.
ModeSet true_mode_set(const SceneSpec& scene, const Observation& obs);

/// Pose of the region nearest to the query (projection of the query onto the
/// region's trajectory interval, with the region's own orientation).
geo::Pose nearest_pose(const SceneSpec& scene, const ModeRegion& region,
                       const geo::Pose& query);

}  // namespace posegen::scene
