#include "posegen/geometry.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

namespace posegen::geo {

Mat3 rot6d_to_matrix(const Vec6& rot6) {
    const Vec3 a1 = rot6.head<3>();
    const Vec3 a2 = rot6.tail<3>();

    const double n1 = a1.norm();
    if (n1 <= kRot6Epsilon)
        throw DegenerateRotation6D("first basis vector has norm " + std::to_string(n1));
    const Vec3 b1 = a1 / n1;

    const Vec3 u2 = a2 - b1.dot(a2) * b1;
    const double n2 = u2.norm();
    if (n2 <= kRot6Epsilon)
        throw DegenerateRotation6D("second basis vector collapses under Gram-Schmidt, residual norm " +
                                   std::to_string(n2));
    const Vec3 b2 = u2 / n2;
    const Vec3 b3 = b1.cross(b2);

    Mat3 r;
    r.col(0) = b1;
    r.col(1) = b2;
    r.col(2) = b3;
    return r;
}

Vec6 matrix_to_rot6d(const Mat3& rotation) {
    Vec6 v;
    v.head<3>() = rotation.col(0);
    v.tail<3>() = rotation.col(1);
    return v;
}

double geodesic_angle(const Mat3& r1, const Mat3& r2) {
    const double tr = (r1.transpose() * r2).trace();
    const double c = std::clamp((tr - 1.0) / 2.0, -1.0, 1.0);
    return std::acos(c) * 180.0 / M_PI;
}

Mat3 chordal_l2_mean(const std::vector<Mat3>& rotations) {
    if (rotations.empty()) throw EmptySamples("chordal_l2_mean of empty list");

    Mat3 mean = Mat3::Zero();
    for (const Mat3& r : rotations) mean += r;
    mean /= static_cast<double>(rotations.size());

    Eigen::JacobiSVD<Mat3> svd(mean, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vec3 sigma = svd.singularValues();  // descending
    if (sigma[1] + sigma[2] <= 1e-9)
        throw DegenerateMean("mean rotation matrix is rank-deficient (sigma2+sigma3 = " +
                             std::to_string(sigma[1] + sigma[2]) + ")");

    const Mat3 u = svd.matrixU();
    const Mat3 v = svd.matrixV();
    Mat3 d = Mat3::Identity();
    d(2, 2) = (u * v.transpose()).determinant();
    return u * d * v.transpose();
}

std::pair<double, double> pose_distance(const Pose& p1, const Pose& p2) {
    return {(p1.translation - p2.translation).norm(),
            geodesic_angle(p1.rotation, p2.rotation)};
}

bool is_rotation(const Mat3& r, double tol) {
    const Mat3 gram = r.transpose() * r - Mat3::Identity();
    return gram.cwiseAbs().maxCoeff() <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

Mat3 random_rotation(Rng& rng) {
    // Shoemake: uniform quaternion from three uniforms
    const double u1 = rng.uniform01();
    const double u2 = rng.uniform01();
    const double u3 = rng.uniform01();
    const double s1 = std::sqrt(1.0 - u1), s2 = std::sqrt(u1);
    const Eigen::Quaterniond q(s2 * std::cos(2.0 * M_PI * u3),
                               s1 * std::sin(2.0 * M_PI * u2),
                               s1 * std::cos(2.0 * M_PI * u2),
                               s2 * std::sin(2.0 * M_PI * u3));
    return q.toRotationMatrix();
}

Mat3 axis_angle_deg(const Vec3& axis, double degrees) {
    return Eigen::AngleAxisd(degrees * M_PI / 180.0, axis.normalized()).toRotationMatrix();
}

}  // namespace posegen::geo
