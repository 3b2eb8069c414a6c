#ifndef REACHKIT_GEOMETRY_HPP
#define REACHKIT_GEOMETRY_HPP

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "reachkit/kernels.hpp"

namespace reachkit::geom {

// Halfspace {x : p . x + h <= 0} with |p| = 1. margin() > 0 means outside.
struct Plane {
    Eigen::Vector3d p;
    double h = 0.0;

    double margin(const Eigen::Vector3d& x) const { return p.dot(x) + h; }
};

// Convex hull of a 3-d point cloud. faces index into vertices with outward
// orientation; planes[i] matches faces[i] and its offset is tightened to the
// exact support of the input cloud, so every input point satisfies
// margin <= 0 regardless of pivoting tolerances.
struct Hull {
    std::vector<Eigen::Vector3d> vertices;
    std::vector<std::array<int, 3>> faces;
    std::vector<Plane> planes;
};

// Quickhull. Throws std::invalid_argument for fewer than 4 points or an
// affinely degenerate cloud.
Hull convex_hull(const std::vector<Eigen::Vector3d>& points);

double hull_volume(const Hull& hull);

kernels::PlaneSoA to_soa(const std::vector<Plane>& planes);

// max_j planes[j].margin(x); -inf for an empty set
double max_margin(const std::vector<Plane>& planes, const Eigen::Vector3d& x);

// Fan of tetrahedra covering a convex polytope, used to express interior
// points as convex combinations of the polytope's vertices.
class TetFan {
  public:
    explicit TetFan(const Hull& hull);

    // Convex weights w over hull vertices with sum(w)=1, sum(w_i v_i) ~= x.
    // Points within `tol` of the boundary are accepted; farther outside
    // throws std::domain_error.
    std::vector<double> decompose(const Eigen::Vector3d& x, double tol = 1e-9) const;

    const Hull& hull() const { return hull_; }

  private:
    struct Tet {
        std::array<int, 3> face;      // base triangle, vertex ids
        Eigen::Matrix3d inv;          // maps x - apex to barycentric coords of the base
    };

    Hull hull_;
    Eigen::Vector3d apex_;            // vertex centroid
    std::vector<Tet> tets_;
};

}  // namespace reachkit::geom

#endif  // REACHKIT_GEOMETRY_HPP
