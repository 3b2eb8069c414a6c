#ifndef REACHKIT_RGOCP_HPP
#define REACHKIT_RGOCP_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "reachkit/chaser_reach.hpp"
#include "reachkit/geometry.hpp"
#include "reachkit/nlp.hpp"
#include "reachkit/target_reach.hpp"

namespace reachkit {

// Obstacle-free halfspace {x : p . x + h <= 0}. Normals are re-normalized to
// unit length on ingest, so any positive scaling of (p, h) describes the
// same region.
using Halfspace = geom::Plane;

// Full problem instance: chaser, tumbling target with its initial attitude
// ball, the lifted grasp polytope the chaser must cover, and the admissible
// state region.
struct Scenario {
    ChaserModel chaser;
    TargetModel target;
    Rotation attitude0 = Rotation::identity();  // target attitude ball center
    double attitude_radius = 0.0;               // rad

    GraspPolytope target_polytope;  // work frame
    int target_vertices = 0;        // must equal target_polytope.vertices.size()

    std::vector<Halfspace> obstacles;
    Eigen::Vector3d x_min = Eigen::Vector3d::Constant(-1.0);  // m
    Eigen::Vector3d x_max = Eigen::Vector3d::Constant(1.0);   // m

    double nominal_tol = 0.05;  // m, endpoint tolerance of the nominal rollout
    double eps = 0.0;           // m, cover reconstruction pad
    int cover_size = 32;        // control-tube boundary samples
    double w_rdelta = 0.12;     // objective weight on the tube radius

    void validate() const;  // throws ConfigError
};

// Decision variables of the finite-dimensional program: nominal controls,
// tube radius, and the convex-combination weights tying every target vertex
// to the final cover positions.
struct Decision {
    Eigen::MatrixXd u;       // N x 3 [N]
    double r_delta = 0.0;    // [N]
    Eigen::MatrixXd lambda;  // target_vertices x cover_size
};

// Variable and constraint-row layout of the assembled program. Row blocks
// appear in the order of the offset accessors; all indices are stable so
// residual slices can be attributed to a constraint family.
struct NlpLayout {
    int segments = 0;
    int cover_size = 0;
    int target_vertices = 0;
    int n_obstacles = 0;

    int n_vars = 0;
    int control_rows = 0;
    int state_rows = 0;
    int velocity_rows = 0;
    int obstacle_rows = 0;
    int endpoint_rows = 0;
    int containment_rows = 0;
    int rowsum_rows = 0;

    int control_offset() const { return 0; }
    int state_offset() const { return control_rows; }
    int velocity_offset() const { return control_rows + state_rows; }
    int obstacle_offset() const { return control_rows + state_rows + velocity_rows; }
    int endpoint_offset() const { return control_rows + state_rows + velocity_rows + obstacle_rows; }
    int n_ineq() const { return endpoint_offset() + endpoint_rows; }
    int n_eq() const { return containment_rows + rowsum_rows; }

    int u_index(int segment, int axis) const { return 3 * segment + axis; }
    int r_index() const { return 3 * segments; }
    int lambda_index(int vertex, int sample) const {
        return 3 * segments + 1 + vertex * cover_size + sample;
    }
};

struct AssembledNlp {
    NLPProblem problem;
    NlpLayout layout;
    Eigen::Vector3d y_nom = Eigen::Vector3d::Zero();  // nominal grasp endpoint
    Eigen::Vector3d v_sup = Eigen::Vector3d::Zero();  // discrete velocity bound
};

Eigen::VectorXd pack_decision(const Decision& d, const NlpLayout& layout);
Decision unpack_decision(const Eigen::VectorXd& z, const NlpLayout& layout);

// Worst residual per constraint family at the solution; inequality entries
// are signed margins (feasible <= 0 up to solver tolerance), equality
// entries absolute values.
struct ResidualReport {
    double control = 0.0;
    double state_box = 0.0;
    double velocity = 0.0;
    double obstacles = 0.0;
    double endpoint = 0.0;
    double containment = 0.0;
    double row_sum = 0.0;

    double max_violation() const;
};

// Inequality rows sitting on their boundary (|margin| <= 1e-6) per family,
// plus the weight entries pinned at zero.
struct ActiveSet {
    int control = 0;
    int state_box = 0;
    int velocity = 0;
    int obstacles = 0;
    bool endpoint = false;
    int lambda_at_zero = 0;
};

struct Solution {
    Decision decision;
    std::vector<ReachSnapshot> snapshots;
    Rtc rtc;
    double objective = 0.0;
    ResidualReport residuals;
    ActiveSet active;
    Eigen::Vector3d nominal_endpoint = Eigen::Vector3d::Zero();
    Eigen::Vector3d y_nom = Eigen::Vector3d::Zero();
    Theorem1Report theorem1;
    SolveResult solver;
};

// Solver settings sized for this program family: the cover couples every
// weight row to the shared controls, so the inner solver needs a deeper
// history and a bigger iteration budget than the generic defaults.
inline SolveOptions rgocp_solver_defaults() {
    SolveOptions opts;
    opts.max_inner = 3000;
    opts.memory = 25;
    return opts;
}

struct RgocpOptions {
    SolveOptions solver = rgocp_solver_defaults();
    int audit_trials = 1000;
    std::uint64_t audit_seed = 0x7c61a2f0u;
    int hull_directions = 64;
};

struct ValidationReport {
    int trials = 0;
    double worst_miss = 0.0;       // chaser endpoint vs realized grasp point
    double worst_linearity = 0.0;  // endpoint vs combination of cover endpoints
    int grasp_outside = 0;         // realized grasp points outside the polytope
    int endpoint_outside = 0;      // chaser endpoints outside the polytope
};

// Row i of the result is y_i - sum_j lambda_ij x_j; a zero residual with
// nonnegative row-stochastic lambda certifies that every target vertex lies
// in the convex hull of the final cover positions.
Eigen::MatrixXd containment_residual(const Eigen::MatrixXd& lambda,
                                     const Eigen::MatrixXd& x_final, const Eigen::MatrixXd& y);

// Support-function margin of the ellipsoid against the halfspace: p . c +
// sqrt(p^T E p) + h, nonpositive iff the entire ellipsoid satisfies it.
double ellipsoid_halfspace_margin(const Ellipsoid& e, const Halfspace& hs);

// Grasp point of the uncertainty-free target: attitude0 carried through the
// rigid-body flow for `horizon` seconds, applied to the grasp offset.
Eigen::Vector3d nominal_grasp_point(const TargetModel& target, const Rotation& attitude0,
                                    double horizon);

// Minimum-energy transfer to the nominal grasp point, uniform weights, and a
// tenth of the thrust bound as the starting tube radius.
Decision initial_decision(const Scenario& scenario);

// Builds the smooth program over (U, R_delta, Lambda): control rows keep the
// whole tube inside the per-axis thrust bound, state and velocity boxes hold
// for every cover sample at every grid time, every transfer ellipsoid stays
// inside the obstacle-free halfspaces, the target vertices are convex
// combinations of the final cover positions, and the nominal endpoint lands
// within nominal_tol of the nominal grasp point (enforced with a 0.1 percent
// internal margin so feasibility slack cannot breach the stated tolerance).
AssembledNlp assemble_nlp(const Scenario& scenario);

// Assembles, solves, rebuilds snapshots and RTC from the optimum, and runs
// the containment and Theorem-1 audits. Throws Infeasible or NoConvergence
// with the worst residual when the solver does not converge.
Solution solve_rgocp(const Scenario& scenario, const RgocpOptions& opts = {});

// Min distance from a target-polytope vertex to the boundary of the final
// snapshot hull; near zero when the two boundaries touch.
double boundary_touch_distance(const Solution& solution, const Scenario& scenario);

// Monte-Carlo end-to-end audit: draw a target attitude in the ball, realize
// the matched convex-combination control, and compare the resulting chaser
// endpoint against the grasp point it was supposed to meet.
ValidationReport validate_solution(const Solution& solution, const Scenario& scenario, int trials,
                                   std::uint64_t seed = 0x56a11d01u);

}  // namespace reachkit

#endif  // REACHKIT_RGOCP_HPP
