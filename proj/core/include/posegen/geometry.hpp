#pragma once

#include <Eigen/Dense>
#include <array>
#include <utility>
#include <vector>

#include "posegen/errors.hpp"
#include "posegen/rng.hpp"

namespace posegen::geo {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;

/// Rigid transform in SE(3). All geometry runs in 64-bit floats regardless
/// of training precision.
struct Pose {
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();
};

/// Network-side pose representation: first two rotation-matrix columns
/// (possibly unnormalized when produced by the network) plus translation.
struct PoseVec9 {
    Vec6 rot6 = (Vec6() << 1, 0, 0, 0, 1, 0).finished();
    Vec3 trans = Vec3::Zero();

    std::array<double, 9> flat() const {
        return {rot6[0], rot6[1], rot6[2], rot6[3], rot6[4], rot6[5],
                trans[0], trans[1], trans[2]};
    }
};

inline constexpr double kRot6Epsilon = 1e-8;

/// Gram-Schmidt recovery of a rotation matrix from the 6D representation.
/// Columns of the result are (b1, b2, b1 x b2).
/// Throws DegenerateRotation6D when either embedded vector collapses.
Mat3 rot6d_to_matrix(const Vec6& rot6);

/// First two columns of R, concatenated. Inverse of rot6d_to_matrix on SO(3).
Vec6 matrix_to_rot6d(const Mat3& rotation);

/// SO(3) geodesic distance in degrees, in [0, 180].
double geodesic_angle(const Mat3& r1, const Mat3& r2);

/// Rotation minimizing the summed squared Frobenius distances, computed by
/// projecting the arithmetic mean onto SO(3). Throws DegenerateMean when the
/// mean matrix is rank-deficient (antipodal or fully dispersed inputs).
Mat3 chordal_l2_mean(const std::vector<Mat3>& rotations);

/// (translation distance, rotation angle in degrees).
std::pair<double, double> pose_distance(const Pose& p1, const Pose& p2);

bool is_rotation(const Mat3& r, double tol = 1e-6);

/// Uniform random rotation (Shoemake quaternion method), for tests and grid
/// oracles.
Mat3 random_rotation(Rng& rng);

/// Rotation by `degrees` about a (unit or not) axis.
Mat3 axis_angle_deg(const Vec3& axis, double degrees);

}  // namespace posegen::geo
