#include "reachkit/so3.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace reachkit {

Rotation Rotation::from_matrix(const Eigen::Matrix3d& m) {
    const double ortho = (m.transpose() * m - Eigen::Matrix3d::Identity()).norm();
    if (ortho > 1e-10) {
        throw std::invalid_argument("Rotation: matrix not orthonormal, |R^T R - I|_F = " +
                                    std::to_string(ortho));
    }
    if (std::abs(m.determinant() - 1.0) > 1e-10) {
        throw std::invalid_argument("Rotation: determinant is not +1");
    }
    return Rotation(m, 0);
}

GeodesicBall::GeodesicBall(const Rotation& c, double r) : center(c), radius(r) {
    if (!(r >= 0.0) || r >= M_PI / 2.0) {
        throw RadiusTooLarge("GeodesicBall: radius " + std::to_string(r) +
                             " outside [0, pi/2)");
    }
}

namespace so3 {

namespace {
constexpr double kSmallAngle = 1e-6;
constexpr double kAnglePiTol = 1e-7;
}  // namespace

Rotation exp(const AxisAngle& w) {
    const double theta2 = w.squaredNorm();
    const double theta = std::sqrt(theta2);
    double a, b;  // sin(t)/t and (1-cos(t))/t^2
    if (theta < kSmallAngle) {
        a = 1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0;
        b = 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0;
    } else {
        a = std::sin(theta) / theta;
        b = (1.0 - std::cos(theta)) / theta2;
    }
    const Eigen::Matrix3d k = hat(w);
    return Rotation::from_matrix_unchecked(Eigen::Matrix3d::Identity() + a * k + b * (k * k));
}

double angle(const Rotation& r) {
    const Eigen::Matrix3d& m = r.matrix();
    const double s = 0.5 * vee(m).norm();
    const double c = 0.5 * (m.trace() - 1.0);
    return std::atan2(s, c);
}

AxisAngle log(const Rotation& r) {
    const double theta = angle(r);
    if (theta > M_PI - kAnglePiTol) {
        throw AngleAtPi("so3::log: rotation angle " + std::to_string(theta) +
                        " within tolerance of pi");
    }
    const Eigen::Vector3d v = vee(r.matrix());
    if (theta < kSmallAngle) {
        const double t2 = theta * theta;
        // series of theta / (2 sin(theta))
        return (0.5 + t2 / 12.0 + 7.0 * t2 * t2 / 720.0) * v;
    }
    return (theta / (2.0 * std::sin(theta))) * v;
}

double distance(const Rotation& r1, const Rotation& r2) {
    return angle(Rotation::from_matrix_unchecked(r1.matrix().transpose() * r2.matrix()));
}

Rotation geodesic(const Rotation& r0, const Rotation& r1, double t) {
    const AxisAngle w = log(Rotation::from_matrix_unchecked(r0.matrix().transpose() * r1.matrix()));
    return r0 * exp(t * w);
}

std::vector<Eigen::Vector3d> fibonacci_sphere(int count) {
    // golden-angle spiral; layout is a pure function of count
    std::vector<Eigen::Vector3d> dirs;
    dirs.reserve(static_cast<std::size_t>(count));
    const double golden_angle = M_PI * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < count; ++i) {
        const double z = 1.0 - 2.0 * (i + 0.5) / count;
        const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden_angle * i;
        dirs.emplace_back(rho * std::cos(phi), rho * std::sin(phi), z);
    }
    return dirs;
}

std::vector<Rotation> sample_ball_boundary(const GeodesicBall& ball, int count) {
    if (count < 4) {
        throw std::invalid_argument("sample_ball_boundary: count must be >= 4");
    }
    std::vector<Rotation> out;
    out.reserve(static_cast<std::size_t>(count));
    for (const Eigen::Vector3d& d : fibonacci_sphere(count)) {
        out.push_back(ball.center * exp(ball.radius * d));
    }
    return out;
}

Rotation project(const Eigen::Matrix3d& m) {
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Eigen::Matrix3d u = svd.matrixU();
    Eigen::Matrix3d v = svd.matrixV();
    Eigen::Matrix3d r = u * v.transpose();
    if (r.determinant() < 0.0) {
        u.col(2) *= -1.0;
        r = u * v.transpose();
    }
    return Rotation::from_matrix_unchecked(r);
}

}  // namespace so3
}  // namespace reachkit
