#include <doctest.h>

#include <cmath>
#include <set>

#include "posegen/scene.hpp"

using namespace posegen;

TEST_SUITE("scenes") {

TEST_CASE("default tri-color scene: red/green/red with an ambiguous red") {
    const scene::SceneSpec s = scene::build_tricolor_scene(1, {});
    REQUIRE(s.segments.size() == 3);
    CHECK(s.segments[0].color == 0);
    CHECK(s.segments[1].color == 1);
    CHECK(s.segments[2].color == 0);
    CHECK(s.trajectory.length == doctest::Approx(3.0));
    CHECK(s.is_ambiguous());

    scene::Observation red;
    red.features = {1.0, 0.0, 0.0};
    CHECK(scene::true_mode_set(s, red).regions.size() == 2);
}

TEST_CASE("all-distinct pattern has singleton mode sets") {
    scene::SceneOptions opts;
    opts.pattern = {0, 1, 2};
    const scene::SceneSpec s = scene::build_tricolor_scene(1, opts);
    CHECK_FALSE(s.is_ambiguous());
    for (int color = 0; color < 3; ++color) {
        scene::Observation obs;
        obs.features = {s.palette[color][0], s.palette[color][1], s.palette[color][2]};
        CHECK(scene::true_mode_set(s, obs).regions.size() == 1);
    }
}

TEST_CASE("fully repeated pattern has three regions") {
    scene::SceneOptions opts;
    opts.pattern = {0, 0, 0};
    const scene::SceneSpec s = scene::build_tricolor_scene(1, opts);
    scene::Observation obs;
    obs.features = {1.0, 0.0, 0.0};
    CHECK(scene::true_mode_set(s, obs).regions.size() == 3);
}

TEST_CASE("invalid options are rejected") {
    scene::SceneOptions opts;
    opts.pattern = {0, 1, 5};  // missing color
    CHECK_THROWS_AS(scene::build_tricolor_scene(1, opts), InvalidScene);

    opts = {};
    opts.segment_count = 2;
    opts.pattern = {0, 1};
    CHECK_THROWS_AS(scene::build_tricolor_scene(1, opts), InvalidScene);

    opts = {};
    opts.pattern = {0, 1};  // length mismatch with segment_count = 3
    CHECK_THROWS_AS(scene::build_tricolor_scene(1, opts), InvalidScene);
}

TEST_CASE("render_observation: noiseless color and boundary ownership") {
    scene::SceneOptions opts;
    opts.sigma_obs = 0;
    const scene::SceneSpec s = scene::build_tricolor_scene(1, opts);

    const scene::Observation mid = scene::render_observation(s, scene::pose_at(s, 0.5), 0);
    CHECK(mid.features == std::vector<double>{1.0, 0.0, 0.0});

    // boundary coordinate belongs to the right (left-closed intervals)
    const scene::Observation edge = scene::render_observation(s, scene::pose_at(s, 1.0), 0);
    CHECK(edge.features == std::vector<double>{0.0, 1.0, 0.0});

    // trajectory end belongs to the final segment
    const scene::Observation end = scene::render_observation(s, scene::pose_at(s, 3.0), 0);
    CHECK(end.features == std::vector<double>{1.0, 0.0, 0.0});
}

TEST_CASE("render_observation: seeded noise is deterministic and clamped") {
    const scene::SceneSpec s = scene::build_tricolor_scene(1, {});
    const geo::Pose p = scene::pose_at(s, 0.25);
    const scene::Observation a = scene::render_observation(s, p, 42);
    const scene::Observation b = scene::render_observation(s, p, 42);
    CHECK(a.features == b.features);
    CHECK(a.features != std::vector<double>{1.0, 0.0, 0.0});  // noise applied
    for (double f : a.features) {
        CHECK(f >= -0.5);
        CHECK(f <= 1.5);
    }
}

TEST_CASE("render_observation rejects off-trajectory poses") {
    const scene::SceneSpec s = scene::build_tricolor_scene(1, {});
    geo::Pose p = scene::pose_at(s, 0.5);
    p.translation[1] += 0.01;  // lateral offset
    CHECK_THROWS_AS(scene::render_observation(s, p, 0), OffTrajectory);
    CHECK_THROWS_AS(scene::pose_at(s, 3.5), OffTrajectory);
}

TEST_CASE("generate_dataset: midpoint convention and half-spacing test offset") {
    const scene::SceneSpec s = scene::build_tricolor_scene(1, {});
    const scene::Dataset train = scene::generate_dataset(s, 3, 0, 1, "train");
    REQUIRE(train.samples.size() == 3);
    CHECK(train.samples[0].coordinate == doctest::Approx(0.5));
    CHECK(train.samples[1].coordinate == doctest::Approx(1.5));
    CHECK(train.samples[2].coordinate == doctest::Approx(2.5));

    const scene::Dataset test = scene::generate_dataset(s, 3, 0, 2, "test");
    std::set<double> train_coords, test_coords;
    for (const auto& x : train.samples) train_coords.insert(x.coordinate);
    for (const auto& x : test.samples) {
        CHECK(train_coords.count(x.coordinate) == 0);  // disjoint splits
        test_coords.insert(x.coordinate);
    }
    CHECK(test_coords == std::set<double>{1.0, 2.0, 3.0});
}

TEST_CASE("generate_dataset: noiseless records self-render") {
    scene::SceneOptions opts;
    opts.sigma_obs = 0;
    const scene::SceneSpec s = scene::build_tricolor_scene(1, opts);
    const scene::Dataset ds = scene::generate_dataset(s, 12, 0, 3, "train");
    for (const auto& sample : ds.samples)
        CHECK(scene::render_observation(s, sample.pose, 0).features == sample.obs.features);
}

TEST_CASE("generate_dataset is bitwise deterministic per seed") {
    const scene::SceneSpec s = scene::build_tricolor_scene(1, {});
    const scene::Dataset a = scene::generate_dataset(s, 20, 0, 7, "train");
    const scene::Dataset b = scene::generate_dataset(s, 20, 0, 7, "train");
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        CHECK(a.samples[i].obs.features == b.samples[i].obs.features);
        CHECK(a.samples[i].coordinate == b.samples[i].coordinate);
    }
}

TEST_CASE("true_mode_set rejects colors far from the palette") {
    const scene::SceneSpec s = scene::build_tricolor_scene(1, {});
    scene::Observation obs;
    obs.features = {0.5, 0.5, 0.5};
    CHECK_THROWS_AS(scene::true_mode_set(s, obs), UnknownColor);
}

TEST_CASE("every dataset pose lies in exactly one region of its own mode set") {
    const scene::SceneSpec s = scene::build_tricolor_scene(1, {});
    const scene::Dataset ds = scene::generate_dataset(s, 30, 0, 9, "train");
    for (const auto& sample : ds.samples) {
        const scene::ModeSet modes = scene::true_mode_set(s, sample.obs);
        int containing = 0;
        for (const auto& r : modes.regions)
            if (sample.coordinate >= r.t0 && sample.coordinate <= r.t1) ++containing;
        CHECK(containing == 1);
    }
}

TEST_CASE("mode region count equals a brute-force segment recount") {
    Rng rng(55);
    for (int trial = 0; trial < 20; ++trial) {
        scene::SceneOptions opts;
        const int n = 3 + static_cast<int>(rng.below(4));
        opts.segment_count = n;
        opts.pattern.clear();
        for (int i = 0; i < n; ++i)
            opts.pattern.push_back(static_cast<int>(rng.below(3)));
        const scene::SceneSpec s = scene::build_tricolor_scene(trial, opts);
        for (int color = 0; color < 3; ++color) {
            int count = 0;
            for (const auto& seg : s.segments)
                if (seg.color == color) ++count;
            if (count == 0) continue;
            scene::Observation obs;
            obs.features = {s.palette[color][0], s.palette[color][1], s.palette[color][2]};
            CHECK(scene::true_mode_set(s, obs).regions.size() ==
                  static_cast<std::size_t>(count));
        }
    }
}

TEST_CASE("per-segment yaw orientation profile") {
    scene::SceneOptions opts;
    opts.orientation = scene::OrientationProfile::PerSegmentYaw;
    opts.yaw_degrees = {0.0, 30.0, -30.0};
    const scene::SceneSpec s = scene::build_tricolor_scene(1, opts);
    const geo::Pose a = scene::pose_at(s, 0.5);
    const geo::Pose b = scene::pose_at(s, 1.5);
    CHECK(geo::geodesic_angle(a.rotation, b.rotation) == doctest::Approx(30.0));

    // region's nearest pose keeps the region's own orientation at shared
    // boundary coordinates
    scene::Observation green;
    green.features = {0.0, 1.0, 0.0};
    const scene::ModeSet modes = scene::true_mode_set(s, green);
    geo::Pose query = scene::pose_at(s, 2.5);
    const geo::Pose near = scene::nearest_pose(s, modes.regions[0], query);
    CHECK(geo::geodesic_angle(near.rotation, b.rotation) == doctest::Approx(0.0));
    CHECK(near.translation[0] == doctest::Approx(2.0));
}

TEST_CASE("replicated feature dimensions fold back to RGB") {
    scene::SceneOptions opts;
    opts.feature_dim = 6;
    opts.sigma_obs = 0;
    const scene::SceneSpec s = scene::build_tricolor_scene(1, opts);
    const scene::Observation obs = scene::render_observation(s, scene::pose_at(s, 0.1), 0);
    REQUIRE(obs.features.size() == 6);
    CHECK(obs.features == std::vector<double>{1, 0, 0, 1, 0, 0});
    const scene::Color c = scene::fold_features(s, obs);
    CHECK(c == scene::Color{1.0, 0.0, 0.0});
}

}  // TEST_SUITE
