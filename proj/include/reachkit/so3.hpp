#ifndef REACHKIT_SO3_HPP
#define REACHKIT_SO3_HPP

#include <Eigen/Core>
#include <vector>

#include "reachkit/errors.hpp"

namespace reachkit {

// Axis-angle coordinate of so(3), in radians. Canonical representatives
// satisfy |w| <= pi.
using AxisAngle = Eigen::Vector3d;

// Element of SO(3), stored as an orthonormal 3x3 matrix with det +1.
class Rotation {
   public:
    Rotation() : m_(Eigen::Matrix3d::Identity()) {}

    // Validates orthonormality and determinant to 1e-10 (Frobenius).
    static Rotation from_matrix(const Eigen::Matrix3d& m);

    // Trusted constructor for matrices produced by exp/products/projection.
    static Rotation from_matrix_unchecked(const Eigen::Matrix3d& m) { return Rotation(m, 0); }

    static Rotation identity() { return Rotation(); }

    const Eigen::Matrix3d& matrix() const { return m_; }

    Rotation inverse() const { return Rotation(m_.transpose(), 0); }

    Rotation operator*(const Rotation& rhs) const { return Rotation(m_ * rhs.m_, 0); }

    Eigen::Vector3d operator*(const Eigen::Vector3d& v) const { return m_ * v; }

   private:
    Rotation(const Eigen::Matrix3d& m, int) : m_(m) {}
    Eigen::Matrix3d m_;
};

// Geodesic ball on SO(3). Radii below pi/2 keep the ball strongly convex.
struct GeodesicBall {
    Rotation center;
    double radius = 0.0;  // rad

    GeodesicBall() = default;
    GeodesicBall(const Rotation& c, double r);
};

namespace so3 {

inline Eigen::Matrix3d hat(const Eigen::Vector3d& w) {
    Eigen::Matrix3d m;
    m << 0.0, -w.z(), w.y(), w.z(), 0.0, -w.x(), -w.y(), w.x(), 0.0;
    return m;
}

inline Eigen::Vector3d vee(const Eigen::Matrix3d& m) {
    return {m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1)};
}

// Rodrigues formula; series coefficients below |w| = 1e-6.
Rotation exp(const AxisAngle& w);

// Principal logarithm, |result| <= pi. Throws AngleAtPi when the rotation
// angle is numerically at pi (no unique axis).
AxisAngle log(const Rotation& r);

// Rotation angle of r in [0, pi]; well defined at pi, unlike log().
double angle(const Rotation& r);

// Geodesic (bi-invariant) distance: |log(r1^T r2)|, equal to the
// Frobenius form (1/sqrt(2))|log|_F.
double distance(const Rotation& r1, const Rotation& r2);

// Point at parameter t on the minimizing geodesic from r0 to r1.
Rotation geodesic(const Rotation& r0, const Rotation& r1, double t);

// Deterministic Fibonacci-lattice directions on the unit sphere.
std::vector<Eigen::Vector3d> fibonacci_sphere(int count);

// Deterministic samples on the boundary of a geodesic ball (count >= 4).
std::vector<Rotation> sample_ball_boundary(const GeodesicBall& ball, int count);

// Nearest rotation in Frobenius norm (polar projection via SVD).
Rotation project(const Eigen::Matrix3d& m);

}  // namespace so3
}  // namespace reachkit

#endif  // REACHKIT_SO3_HPP
