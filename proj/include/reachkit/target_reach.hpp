#ifndef REACHKIT_TARGET_REACH_HPP
#define REACHKIT_TARGET_REACH_HPP

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "reachkit/geometry.hpp"
#include "reachkit/so3.hpp"

namespace reachkit {

// Free-tumbling target: principal inertia, initial body rate, center of mass
// in the work frame, and the grasp point in the body frame.
struct TargetModel {
    Eigen::Vector3d inertia;   // principal moments (diagonal of J) [kg m^2]
    Eigen::Vector3d omega0;    // initial angular velocity, body frame [rad/s]
    Eigen::Vector3d r_center;  // target center of mass, work frame [m]
    Eigen::Vector3d p_grasp;   // grasp point, body frame [m]

    void validate() const;  // throws ConfigError
};

// Finite sample of an orientation set. delta is the cover fineness measured
// against a dense deterministic probe grid of the covered ball.
struct OrientationCover {
    std::vector<Rotation> samples;  // samples[0] is the ball center
    double delta = 0.0;             // rad
};

// Convex polytope around the reachable grasp-point patch, in the work frame.
// Plane convention matches geom::Plane: inside means p . x + h <= 0.
struct GraspPolytope {
    std::vector<Eigen::Vector3d> vertices;
    std::vector<geom::Plane> halfspaces;
};

// One RK4 step of the free rigid body
//   J w' = (J w) x w,   R' = R w^
// with polar reprojection of R onto SO(3). Returns the updated pair.
std::pair<Rotation, Eigen::Vector3d> euler_step(const Rotation& r, const Eigen::Vector3d& omega,
                                                const TargetModel& model, double dt);

// Ball center plus `count` deterministic boundary samples (count >= 4 unless
// the radius is zero, which collapses to the single center sample).
OrientationCover build_cover(const GeodesicBall& ball, int count);

// Integrates every cover sample through the rigid-body flow, internal
// substep <= 0.05 s, and snapshots at the (strictly increasing, 0-based)
// grid times. Sample order is preserved.
std::vector<std::pair<double, std::vector<Rotation>>> propagate_cover(
    const OrientationCover& cover, const TargetModel& model, const std::vector<double>& t_grid);

// Karcher mean under the geodesic metric, by tangent-space fixed point.
// Throws SpreadTooLarge when a pair of inputs approaches distance pi (the
// tangent representation loses uniqueness there) and NoConvergence if the
// iteration cap is hit before the gradient tolerance.
Rotation frechet_mean(const std::vector<Rotation>& rotations);

// Minimal enclosing geodesic ball: Frechet-mean center, radius = max
// distance to an input. Throws NotStronglyConvex when that radius reaches
// pi/2 (the ball is no longer strongly convex).
GeodesicBall megb(const std::vector<Rotation>& rotations);

// Ball guaranteed to contain the exact final orientation set. The body rate
// of a free rigid body does not depend on attitude, so the final set is the
// initial ball right-translated by the nominal flow; padding the MEGB radius
// by its center's offset from the nominal final orientation covers that
// translate in full.
GeodesicBall cover_final_set(const GeodesicBall& initial_ball, const Rotation& nominal_final,
                             const GeodesicBall& final_megb);

// Outer polytope for the grasp-point patch
//   { r_center + ball.center exp(w^) p_grasp : |w| <= ball.radius }.
// facet_count - 1 planes tangent to the sphere of radius |p_grasp| at rim
// directions plus one cap-base plane; the construction yields exactly
// facet_count vertices (apex + rim ring). A zero-radius ball degenerates to
// a tight box of edge 1e-6 around the single reachable point. Containment
// of the patch is self-audited with 10^4 deterministic samples.
GraspPolytope lift_to_polytope(const GeodesicBall& ball, const TargetModel& model,
                               int facet_count);

}  // namespace reachkit

#endif  // REACHKIT_TARGET_REACH_HPP
