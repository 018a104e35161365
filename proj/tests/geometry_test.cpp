#include <doctest.h>

#include <cmath>

#include "posegen/geometry.hpp"
#include "test_helpers.hpp"

using namespace posegen;

TEST_SUITE("geometry") {

TEST_CASE("rot6d_to_matrix identity cases") {
    geo::Vec6 v;
    v << 1, 0, 0, 0, 1, 0;
    CHECK(testutil::max_abs_diff(geo::rot6d_to_matrix(v), geo::Mat3::Identity()) == 0.0);

    v << 2, 0, 0, 0, 3, 0;  // normalization invariance
    CHECK(testutil::max_abs_diff(geo::rot6d_to_matrix(v), geo::Mat3::Identity()) == 0.0);

    v << 1, 0, 0, 1, 1, 0;  // Gram-Schmidt removes the parallel component
    CHECK(testutil::max_abs_diff(geo::rot6d_to_matrix(v), geo::Mat3::Identity()) <= 1e-15);
}

TEST_CASE("rot6d_to_matrix matches an independent Gram-Schmidt oracle") {
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
        const geo::Vec6 v = testutil::random_rot6(rng);
        const geo::Mat3 r = geo::rot6d_to_matrix(v);
        CHECK(testutil::max_abs_diff(r, testutil::gram_schmidt_oracle(v)) <= 1e-12);
        CHECK(geo::is_rotation(r, 1e-9));
    }
}

TEST_CASE("rot6d_to_matrix rejects degenerate input") {
    geo::Vec6 v;
    v << 0, 0, 0, 0, 1, 0;
    CHECK_THROWS_AS(geo::rot6d_to_matrix(v), DegenerateRotation6D);
    v << 1, 0, 0, 2, 0, 0;  // a2 parallel to a1
    CHECK_THROWS_AS(geo::rot6d_to_matrix(v), DegenerateRotation6D);
    v << 1e-9, 0, 0, 0, 1, 0;
    CHECK_THROWS_AS(geo::rot6d_to_matrix(v), DegenerateRotation6D);
}

TEST_CASE("matrix_to_rot6d reads the first two columns") {
    geo::Vec6 expect;
    expect << 1, 0, 0, 0, 1, 0;
    CHECK((geo::matrix_to_rot6d(geo::Mat3::Identity()) - expect).norm() == 0.0);

    const geo::Mat3 rz = geo::axis_angle_deg(geo::Vec3::UnitZ(), 90.0);
    expect << 0, 1, 0, -1, 0, 0;
    CHECK((geo::matrix_to_rot6d(rz) - expect).norm() <= 1e-15);
}

TEST_CASE("rot6d round trip is identity on SO(3)") {
    Rng rng(11);
    for (int i = 0; i < 500; ++i) {
        const geo::Mat3 r = geo::random_rotation(rng);
        const geo::Mat3 rt = geo::rot6d_to_matrix(geo::matrix_to_rot6d(r));
        CHECK(testutil::max_abs_diff(r, rt) <= 1e-9);
    }
}

TEST_CASE("rot6d_to_matrix outputs stay orthonormal over random draws") {
    Rng rng(13);
    for (int i = 0; i < 1000; ++i) {
        const geo::Mat3 r = geo::rot6d_to_matrix(testutil::random_rot6(rng));
        const geo::Mat3 gram = r.transpose() * r - geo::Mat3::Identity();
        CHECK(gram.cwiseAbs().maxCoeff() <= 1e-6);
        CHECK(std::abs(r.determinant() - 1.0) <= 1e-6);
    }
}

TEST_CASE("geodesic_angle anchor values") {
    const geo::Mat3 i = geo::Mat3::Identity();
    CHECK(geo::geodesic_angle(i, i) == doctest::Approx(0.0));
    CHECK(geo::geodesic_angle(i, geo::axis_angle_deg(geo::Vec3::UnitZ(), 90)) ==
          doctest::Approx(90.0));
    CHECK(geo::geodesic_angle(i, geo::axis_angle_deg(geo::Vec3::UnitX(), 180)) ==
          doctest::Approx(180.0));
}

TEST_CASE("geodesic_angle is symmetric, bounded, zero iff equal") {
    Rng rng(17);
    for (int i = 0; i < 200; ++i) {
        const geo::Mat3 a = geo::random_rotation(rng);
        const geo::Mat3 b = geo::random_rotation(rng);
        const double ab = geo::geodesic_angle(a, b);
        CHECK(ab == doctest::Approx(geo::geodesic_angle(b, a)).epsilon(1e-12));
        CHECK(ab >= 0.0);
        CHECK(ab <= 180.0);
        CHECK(geo::geodesic_angle(a, a) <= 1e-5);
    }
}

TEST_CASE("chordal_l2_mean trivial cases") {
    Rng rng(19);
    const geo::Mat3 r = geo::random_rotation(rng);
    CHECK(testutil::max_abs_diff(geo::chordal_l2_mean({r}), r) <= 1e-12);

    const geo::Mat3 plus = geo::axis_angle_deg(geo::Vec3::UnitZ(), 40);
    const geo::Mat3 minus = geo::axis_angle_deg(geo::Vec3::UnitZ(), -40);
    CHECK(testutil::max_abs_diff(geo::chordal_l2_mean({plus, minus}), geo::Mat3::Identity()) <=
          1e-12);
}

TEST_CASE("chordal_l2_mean rejects antipodal inputs") {
    geo::Mat3 flip = geo::Mat3::Identity();
    flip(1, 1) = -1;
    flip(2, 2) = -1;
    CHECK_THROWS_AS(geo::chordal_l2_mean({geo::Mat3::Identity(), flip}), DegenerateMean);
}

TEST_CASE("chordal_l2_mean is left-equivariant") {
    Rng rng(23);
    for (int i = 0; i < 50; ++i) {
        // cluster the inputs around a base rotation so the mean stays
        // well-conditioned
        std::vector<geo::Mat3> rs;
        const geo::Mat3 base = geo::random_rotation(rng);
        for (int k = 0; k < 4; ++k)
            rs.push_back(geo::axis_angle_deg(geo::Vec3(rng.normal(), rng.normal(), rng.normal()),
                                             40 * rng.uniform01()) *
                         base);
        const geo::Mat3 q = geo::random_rotation(rng);
        std::vector<geo::Mat3> qrs;
        for (const auto& m : rs) qrs.push_back(q * m);
        CHECK(testutil::max_abs_diff(geo::chordal_l2_mean(qrs), q * geo::chordal_l2_mean(rs)) <=
              1e-9);
    }
}

TEST_CASE("chordal_l2_mean agrees with a brute-force grid minimizer") {
    Rng rng(29);
    for (int i = 0; i < 2; ++i) {
        std::vector<geo::Mat3> rs;
        for (int k = 0; k < 3; ++k) rs.push_back(geo::random_rotation(rng));
        const geo::Mat3 mean = geo::chordal_l2_mean(rs);
        const geo::Mat3 oracle = testutil::grid_chordal_oracle(rs, rng, 200000, 50000);
        CHECK(geo::geodesic_angle(mean, oracle) <= 2.0);
    }
}

TEST_CASE("pose_distance") {
    geo::Pose a, b;
    CHECK(geo::pose_distance(a, b) == std::pair<double, double>{0.0, 0.0});

    b.translation = geo::Vec3(3, 4, 0);
    auto [dt, dr] = geo::pose_distance(a, b);
    CHECK(dt == doctest::Approx(5.0));
    CHECK(dr == doctest::Approx(0.0));

    b.translation.setZero();
    b.rotation = geo::axis_angle_deg(geo::Vec3::UnitZ(), 90);
    auto [dt2, dr2] = geo::pose_distance(a, b);
    CHECK(dt2 == doctest::Approx(0.0));
    CHECK(dr2 == doctest::Approx(90.0));
}

}  // TEST_SUITE
