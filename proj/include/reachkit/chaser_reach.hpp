#ifndef REACHKIT_CHASER_REACH_HPP
#define REACHKIT_CHASER_REACH_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "reachkit/geometry.hpp"

namespace reachkit {

// Thrust-controlled point-mass chaser with per-axis thrust bound u_lim, an
// axis-wise velocity limit v_lim, and a zero-order-hold control grid of
// `segments` pieces of length dt spanning `horizon`.
struct ChaserModel {
    double mass = 1.0;       // kg
    Eigen::Vector3d x0 = Eigen::Vector3d::Zero();  // m
    Eigen::Vector3d v0 = Eigen::Vector3d::Zero();  // m/s
    double u_lim = 1.0;      // N, per axis
    double v_lim = 1.0;      // m/s, per axis
    double dt = 1.0;         // s
    double horizon = 1.0;    // s
    int segments = 1;        // N

    void validate() const;  // throws ConfigError
};

// Ball of radius `radius` around a nominal control sequence, sampled along
// `directions` (unit rows, deterministic Fibonacci set for a given M).
struct ControlTube {
    Eigen::MatrixXd nominal;     // N x 3 [N]
    double radius = 0.0;         // R_delta [N]
    Eigen::MatrixXd directions;  // M x 3, unit rows

    static ControlTube make(const Eigen::MatrixXd& nominal, double radius, int m_samples);
};

// Sampled state set at one grid time: row k is (position, velocity) of cover
// sample k. epsilon is the configured hull padding.
struct ReachSnapshot {
    double time = 0.0;         // s
    Eigen::MatrixXd points;    // M x 6
    double epsilon = 0.0;      // m
};

// Prolate spheroid {x : (x-c)^T E^-1 (x-c) <= 1} with cached principal axis.
// RTC instances remember their construction foci.
class Ellipsoid {
  public:
    Ellipsoid(const Eigen::Vector3d& center, const Eigen::Vector3d& axis, double semi_major,
              double semi_minor, const Eigen::Vector3d& f0, const Eigen::Vector3d& f1);

    const Eigen::Vector3d& center() const { return center_; }
    const Eigen::Vector3d& axis() const { return axis_; }
    double semi_major() const { return semi_major_; }
    double semi_minor() const { return semi_minor_; }
    std::pair<Eigen::Vector3d, Eigen::Vector3d> foci() const { return {f0_, f1_}; }
    bool degenerate() const { return semi_minor_ <= 0.0; }

    // E = b^2 I + (a^2 - b^2) dd^T (rank deficient when degenerate)
    Eigen::Matrix3d shape() const;
    Eigen::Matrix3d inverse_shape() const;  // throws std::domain_error when degenerate

    // max over the set of dir . x, and its attaining boundary point
    double support(const Eigen::Vector3d& dir) const;
    Eigen::Vector3d support_point(const Eigen::Vector3d& dir) const;

    // deterministic boundary points (support points of a Fibonacci dir set)
    std::vector<Eigen::Vector3d> boundary_points(int count) const;

  private:
    Eigen::Vector3d center_, axis_, f0_, f1_;
    double semi_major_, semi_minor_;
};

// One inter-snapshot coverage: the M transfer ellipsoids and the outer
// halfspace hull of their union.
struct RtcInterval {
    double t0 = 0.0, t1 = 0.0;
    std::vector<Ellipsoid> tubes;
    std::vector<geom::Plane> hull;
};

struct Rtc {
    std::vector<RtcInterval> intervals;
};

// Flow bound l_t and the componentwise discrete velocity backoff
// v_sup = v_lim - dt/2 * a_sup.
struct LipschitzBound {
    double l_t = 0.0;          // m/s
    Eigen::Vector3d v_sup = Eigen::Vector3d::Zero();  // m/s
};

struct Theorem1Report {
    int trials = 0;
    long long points_checked = 0;
    int violations = 0;
    double worst_margin = -std::numeric_limits<double>::infinity();
};

// The M sampled boundary sequences of the tube: sequence k applies
// nominal_j + radius * directions_k on every segment. The nominal sequence
// itself is available as tube.nominal.
std::vector<Eigen::MatrixXd> control_cover(const ControlTube& tube);

// Exact ZOH discretization of the double integrator; rows are t_0..t_N,
// columns (position, velocity).
Eigen::MatrixXd rollout(const ChaserModel& model, const Eigen::MatrixXd& controls);

// Closed-form state tau seconds into a segment that starts at `state` with
// control u held.
Eigen::Matrix<double, 6, 1> state_within_segment(const ChaserModel& model,
                                                 const Eigen::Matrix<double, 6, 1>& state,
                                                 const Eigen::Vector3d& u, double tau);

// Rollout of every cover sequence, sliced per grid time.
std::vector<ReachSnapshot> reach_snapshots(const ChaserModel& model, const ControlTube& tube,
                                           double eps);

// Throws InfeasibleBackoff when the backoff empties the velocity box.
LipschitzBound lipschitz_bound(const ChaserModel& model, const Eigen::Vector3d& a_sup);

// Two-focus transfer ellipsoid between consecutive sample positions,
// inflated axis-wise by eps. Throws FlowBoundViolated when the chord
// exceeds l_t * dt (+1e-9).
Ellipsoid rtc_ellipsoid(const Eigen::Vector3d& x_i, const Eigen::Vector3d& x_next, double l_t,
                        double dt, double eps);

// Per-interval ellipsoids plus outer hulls; hull planes come from a convex
// hull of ellipsoid boundary samples (>= directions_per_ellipsoid each) with
// every plane offset to the exact support of the ellipsoid union, so the
// hull is a provable outer approximation.
Rtc build_rtc(const std::vector<ReachSnapshot>& snapshots, double l_t, double eps,
              int directions_per_ellipsoid = 64);

// Monte-Carlo falsification: random interior tube controls, densely
// integrated (substep dt/100), every position checked against its interval
// hull. Margins > 1e-9 count as violations. Deterministic per (seed, trial).
Theorem1Report audit_theorem1(const ChaserModel& model, const ControlTube& tube, const Rtc& rtc,
                              int trials, std::uint64_t seed);

}  // namespace reachkit

#endif  // REACHKIT_CHASER_REACH_HPP
