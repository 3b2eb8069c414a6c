#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "reachkit/errors.hpp"
#include "reachkit/kernels.hpp"
#include "reachkit/rng.hpp"
#include "reachkit/target_reach.hpp"

namespace reachkit {

namespace {

constexpr double kMaxSubstep = 0.05;      // s
constexpr double kMeanTol = 1e-10;        // rad, tangent-mean norm
constexpr int kMeanMaxIter = 200;
constexpr double kPairSpreadLimit = std::numbers::pi - 1e-6;

Eigen::Vector3d body_accel(const Eigen::Vector3d& omega, const Eigen::Vector3d& inertia) {
    const Eigen::Vector3d momentum = inertia.cwiseProduct(omega);
    return momentum.cross(omega).cwiseQuotient(inertia);
}

// Cover fineness: sup over the ball of the distance to the nearest sample.
// Deterministic coarse grid over radial shells of Fibonacci directions,
// then local ascent around the worst pockets; a small inflation covers the
// residual grid resolution.
double estimate_fineness(const GeodesicBall& ball, const std::vector<Rotation>& samples) {
    const auto nearest = [&](const Eigen::Vector3d& w) {
        const Rotation probe = ball.center * so3::exp(w);
        double best = std::numeric_limits<double>::infinity();
        for (const Rotation& s : samples) best = std::min(best, so3::distance(probe, s));
        return best;
    };

    const auto dirs = so3::fibonacci_sphere(400);
    struct Pocket {
        double value;
        Eigen::Vector3d w;
    };
    std::vector<Pocket> pockets;
    for (int shell = 1; shell <= 8; ++shell) {
        const double rad = ball.radius * shell / 8.0;
        for (const auto& d : dirs) {
            const Eigen::Vector3d w = rad * d;
            pockets.push_back({nearest(w), w});
        }
    }
    std::partial_sort(pockets.begin(), pockets.begin() + 6, pockets.end(),
                      [](const Pocket& a, const Pocket& b) { return a.value > b.value; });

    double delta = pockets.front().value;
    for (int p = 0; p < 6; ++p) {
        Eigen::Vector3d w = pockets[p].w;
        double range = ball.radius * 0.15;
        for (int level = 0; level < 6; ++level) {
            Eigen::Vector3d best_w = w;
            double best_v = nearest(w);
            for (int ix = -2; ix <= 2; ++ix)
                for (int iy = -2; iy <= 2; ++iy)
                    for (int iz = -2; iz <= 2; ++iz) {
                        Eigen::Vector3d cand =
                            w + range / 2.0 * Eigen::Vector3d(ix, iy, iz);
                        const double len = cand.norm();
                        if (len > ball.radius) cand *= ball.radius / len;
                        const double v = nearest(cand);
                        if (v > best_v) {
                            best_v = v;
                            best_w = cand;
                        }
                    }
            w = best_w;
            range *= 0.5;
        }
        delta = std::max(delta, nearest(w));
    }
    return delta + 0.005 * ball.radius;
}

}  // namespace

void TargetModel::validate() const {
    if (!(inertia.minCoeff() > 0.0))
        throw ConfigError("target model: inertia diagonal entries must be positive");
    if (!inertia.allFinite() || !omega0.allFinite() || !r_center.allFinite() ||
        !p_grasp.allFinite())
        throw ConfigError("target model: non-finite field");
}

std::pair<Rotation, Eigen::Vector3d> euler_step(const Rotation& r, const Eigen::Vector3d& omega,
                                                const TargetModel& model, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("euler_step: dt must be positive");
    const Eigen::Matrix3d& m = r.matrix();

    const Eigen::Matrix3d k1_r = m * so3::hat(omega);
    const Eigen::Vector3d k1_w = body_accel(omega, model.inertia);

    const Eigen::Vector3d w2 = omega + 0.5 * dt * k1_w;
    const Eigen::Matrix3d k2_r = (m + 0.5 * dt * k1_r) * so3::hat(w2);
    const Eigen::Vector3d k2_w = body_accel(w2, model.inertia);

    const Eigen::Vector3d w3 = omega + 0.5 * dt * k2_w;
    const Eigen::Matrix3d k3_r = (m + 0.5 * dt * k2_r) * so3::hat(w3);
    const Eigen::Vector3d k3_w = body_accel(w3, model.inertia);

    const Eigen::Vector3d w4 = omega + dt * k3_w;
    const Eigen::Matrix3d k4_r = (m + dt * k3_r) * so3::hat(w4);
    const Eigen::Vector3d k4_w = body_accel(w4, model.inertia);

    const Eigen::Matrix3d raw = m + dt / 6.0 * (k1_r + 2.0 * k2_r + 2.0 * k3_r + k4_r);
    const Eigen::Vector3d w_next = omega + dt / 6.0 * (k1_w + 2.0 * k2_w + 2.0 * k3_w + k4_w);
    return {so3::project(raw), w_next};
}

OrientationCover build_cover(const GeodesicBall& ball, int count) {
    if (count < 1) throw std::invalid_argument("build_cover: count must be positive");

    OrientationCover cover;
    cover.samples.push_back(ball.center);
    if (ball.radius <= 0.0) {
        cover.delta = 0.0;
        return cover;
    }
    for (const Rotation& r : so3::sample_ball_boundary(ball, count)) cover.samples.push_back(r);

    cover.delta = estimate_fineness(ball, cover.samples);
    return cover;
}

std::vector<std::pair<double, std::vector<Rotation>>> propagate_cover(
    const OrientationCover& cover, const TargetModel& model,
    const std::vector<double>& t_grid) {
    if (t_grid.empty()) throw std::invalid_argument("propagate_cover: empty time grid");
    if (std::abs(t_grid.front()) > 1e-9)
        throw std::invalid_argument("propagate_cover: time grid must start at 0");
    for (std::size_t i = 1; i < t_grid.size(); ++i) {
        if (!(t_grid[i] > t_grid[i - 1]))
            throw std::invalid_argument("propagate_cover: time grid must be strictly increasing");
    }

    std::vector<std::pair<double, std::vector<Rotation>>> out;
    out.reserve(t_grid.size());
    out.emplace_back(t_grid.front(), cover.samples);

    std::vector<Rotation> rs = cover.samples;
    std::vector<Eigen::Vector3d> ws(rs.size(), model.omega0);
    for (std::size_t i = 1; i < t_grid.size(); ++i) {
        const double gap = t_grid[i] - t_grid[i - 1];
        const int nsub = std::max(1, static_cast<int>(std::ceil(gap / kMaxSubstep - 1e-12)));
        const double h = gap / nsub;
        for (int s = 0; s < nsub; ++s) {
            for (std::size_t k = 0; k < rs.size(); ++k) {
                std::tie(rs[k], ws[k]) = euler_step(rs[k], ws[k], model, h);
            }
        }
        out.emplace_back(t_grid[i], rs);
    }
    return out;
}

Rotation frechet_mean(const std::vector<Rotation>& rotations) {
    if (rotations.empty()) throw std::invalid_argument("frechet_mean: empty input");
    if (rotations.size() == 1) return rotations.front();

    for (std::size_t i = 0; i < rotations.size(); ++i) {
        for (std::size_t j = i + 1; j < rotations.size(); ++j) {
            if (so3::distance(rotations[i], rotations[j]) >= kPairSpreadLimit)
                throw SpreadTooLarge("frechet_mean: pairwise distance too close to pi");
        }
    }

    // Chordal (projected arithmetic) mean as the starting point.
    Eigen::Matrix3d acc = Eigen::Matrix3d::Zero();
    for (const Rotation& r : rotations) acc += r.matrix();
    Rotation center = so3::project(acc / static_cast<double>(rotations.size()));
    if (!center.matrix().allFinite()) center = rotations.front();

    const double inv_n = 1.0 / static_cast<double>(rotations.size());
    for (int it = 0; it < kMeanMaxIter; ++it) {
        Eigen::Vector3d tangent = Eigen::Vector3d::Zero();
        for (const Rotation& r : rotations) tangent += so3::log(center.inverse() * r);
        tangent *= inv_n;
        if (tangent.norm() < kMeanTol) return center;
        center = center * so3::exp(tangent);
    }
    throw NoConvergence("frechet_mean: no convergence after 200 iterations");
}

GeodesicBall megb(const std::vector<Rotation>& rotations) {
    const Rotation center = frechet_mean(rotations);
    double radius = 0.0;
    for (const Rotation& r : rotations) radius = std::max(radius, so3::distance(center, r));
    if (radius >= std::numbers::pi / 2.0)
        throw NotStronglyConvex("megb: enclosing radius reached pi/2");
    return GeodesicBall(center, radius);
}

GeodesicBall cover_final_set(const GeodesicBall& initial_ball, const Rotation& nominal_final,
                             const GeodesicBall& final_megb) {
    const double offset = so3::distance(final_megb.center, nominal_final);
    const double radius = std::max(final_megb.radius, offset + initial_ball.radius);
    if (radius >= std::numbers::pi / 2.0)
        throw NotStronglyConvex("cover_final_set: padded radius reached pi/2");
    return GeodesicBall(final_megb.center, radius);
}

GraspPolytope lift_to_polytope(const GeodesicBall& ball, const TargetModel& model,
                               int facet_count) {
    const double r = model.p_grasp.norm();
    if (!(r > 0.0)) throw ConfigError("lift_to_polytope: p_grasp must be nonzero");
    if (facet_count < 4) throw std::invalid_argument("lift_to_polytope: need >= 4 facets");

    const Eigen::Vector3d c = model.r_center;
    GraspPolytope poly;

    if (ball.radius < 1e-12) {
        // Single reachable point: emit a tight axis-aligned box around it.
        const Eigen::Vector3d y0 = c + ball.center * model.p_grasp;
        const double half = 5e-7;
        for (const double sx : {-half, half})
            for (const double sy : {-half, half})
                for (const double sz : {-half, half})
                    poly.vertices.push_back(y0 + Eigen::Vector3d(sx, sy, sz));
        for (int axis = 0; axis < 3; ++axis) {
            Eigen::Vector3d p = Eigen::Vector3d::Zero();
            p[axis] = 1.0;
            poly.halfspaces.push_back({p, -(y0[axis] + half)});
            poly.halfspaces.push_back({-p, y0[axis] - half});
        }
        return poly;
    }

    // The patch is the spherical cap of angular radius ball.radius around
    // a = center * p_grasp / |p_grasp| on the sphere S(c, r): a rotation of
    // angle <= rho moves a unit vector by an angle <= rho. Planes tangent to
    // the sphere at rim directions, plus the cap base, enclose it; small
    // outward pads keep rim points strictly interior under roundoff.
    const double rho = ball.radius;
    const double pad_ring = 1e-9 * r;
    const double pad_base = 1e-7 * r;
    const Eigen::Vector3d a = ball.center * (model.p_grasp / r);

    Eigen::Vector3d seed = Eigen::Vector3d::UnitX();
    if (std::abs(a.x()) > 0.9) seed = Eigen::Vector3d::UnitY();
    const Eigen::Vector3d e1 = a.cross(seed).normalized();
    const Eigen::Vector3d e2 = a.cross(e1);

    const int ring = facet_count - 1;
    std::vector<Eigen::Vector3d> dirs(ring);
    for (int i = 0; i < ring; ++i) {
        const double phi = 2.0 * std::numbers::pi * i / ring;
        dirs[i] = std::cos(rho) * a + std::sin(rho) * (std::cos(phi) * e1 + std::sin(phi) * e2);
    }

    for (const auto& d : dirs) poly.halfspaces.push_back({d, -(d.dot(c) + r + pad_ring)});
    poly.halfspaces.push_back({-a, a.dot(c) + r * std::cos(rho) - pad_base});

    // All ring planes pass through the cone apex; the base plane cuts the
    // remaining ring of vertices. facet_count vertices total.
    poly.vertices.push_back(c + (r + pad_ring) / std::cos(rho) * a);
    for (int i = 0; i < ring; ++i) {
        Eigen::Matrix3d lhs;
        lhs.row(0) = dirs[i].transpose();
        lhs.row(1) = dirs[(i + 1) % ring].transpose();
        lhs.row(2) = a.transpose();
        const Eigen::Vector3d rhs(r + pad_ring, r + pad_ring, r * std::cos(rho) - pad_base);
        poly.vertices.push_back(c + lhs.colPivHouseholderQr().solve(rhs));
    }

    const kernels::PlaneSoA soa = geom::to_soa(poly.halfspaces);
    for (const auto& v : poly.vertices) {
        if (kernels::max_plane_margin(soa, v.x(), v.y(), v.z()) > 1e-9)
            throw std::logic_error("lift_to_polytope: vertex escapes its halfspaces");
    }

    // Self-audit: random patch points must land strictly inside.
    Rng rng(0x11f7c0de);
    for (int t = 0; t < 10000; ++t) {
        const Eigen::Vector3d y = c + ball.center * (so3::exp(rng.in_ball(rho)) * model.p_grasp);
        if (kernels::max_plane_margin(soa, y.x(), y.y(), y.z()) >= 0.0)
            throw std::logic_error("lift_to_polytope: patch sample escaped the polytope");
    }
    return poly;
}

}  // namespace reachkit
