#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "reachkit/geometry.hpp"
#include "reachkit/rng.hpp"
#include "reachkit/so3.hpp"

using namespace reachkit;
using geom::Hull;

namespace {

std::vector<Eigen::Vector3d> cube_corners(double half) {
    std::vector<Eigen::Vector3d> pts;
    for (const double sx : {-half, half})
        for (const double sy : {-half, half})
            for (const double sz : {-half, half}) pts.emplace_back(sx, sy, sz);
    return pts;
}

void check_hull_invariants(const Hull& hull, const std::vector<Eigen::Vector3d>& inputs) {
    // Triangulated convex polyhedron: V - E + F = 2 with 3F = 2E.
    CHECK(hull.faces.size() == 2 * hull.vertices.size() - 4);
    CHECK(hull.planes.size() == hull.faces.size());

    // Every input point is on or inside every support-tightened plane.
    for (const auto& p : inputs) {
        CHECK(geom::max_margin(hull.planes, p) <= 1e-12);
    }

    // Each hull vertex coincides with some input point.
    for (const auto& v : hull.vertices) {
        double best = 1e300;
        for (const auto& p : inputs) best = std::min(best, (v - p).norm());
        CHECK(best <= 1e-12);
    }

    // Plane normals are unit and point outward from the vertex centroid.
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    for (const auto& v : hull.vertices) centroid += v;
    centroid /= static_cast<double>(hull.vertices.size());
    for (const auto& pl : hull.planes) {
        CHECK(pl.p.norm() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(pl.margin(centroid) < 0.0);
    }
}

}  // namespace

TEST_CASE("hull of a cube") {
    auto pts = cube_corners(1.0);
    // sprinkle interior points that must not become vertices
    Rng rng(7);
    for (int i = 0; i < 40; ++i) pts.push_back(rng.in_ball(0.9));

    const Hull hull = geom::convex_hull(pts);
    CHECK(hull.vertices.size() == 8);
    CHECK(hull.faces.size() == 12);
    CHECK(geom::hull_volume(hull) == doctest::Approx(8.0).epsilon(1e-12));
    check_hull_invariants(hull, pts);

    // Membership by plane margins agrees with the combinatorial oracle.
    const auto corners = cube_corners(1.0);
    for (int i = 0; i < 500; ++i) {
        const Eigen::Vector3d q = rng.in_ball(2.0);
        const bool inside = geom::max_margin(hull.planes, q) <= 1e-9;
        CHECK(inside == oracles::in_hull_bruteforce(corners, q));
    }
}

TEST_CASE("hull of a random cloud agrees with the brute-force oracle") {
    Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<Eigen::Vector3d> pts;
        for (int i = 0; i < 10; ++i) pts.push_back(rng.in_ball(3.0));
        const Hull hull = geom::convex_hull(pts);
        check_hull_invariants(hull, pts);
        for (int i = 0; i < 100; ++i) {
            const Eigen::Vector3d q = rng.in_ball(3.5);
            const double margin = geom::max_margin(hull.planes, q);
            if (std::abs(margin) < 1e-8) continue;  // too close to call either way
            CHECK((margin < 0.0) == oracles::in_hull_bruteforce(pts, q));
        }
    }
}

TEST_CASE("hull volume of the unit tetrahedron") {
    const std::vector<Eigen::Vector3d> pts = {
        {0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    const Hull hull = geom::convex_hull(pts);
    CHECK(hull.vertices.size() == 4);
    CHECK(geom::hull_volume(hull) == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("hull of dense sphere samples (near-coplanar stress)") {
    const double radius = 2.5;
    std::vector<Eigen::Vector3d> pts;
    for (const auto& d : so3::fibonacci_sphere(2000)) pts.push_back(radius * d);
    const Hull hull = geom::convex_hull(pts);
    check_hull_invariants(hull, pts);
    const double ball = 4.0 / 3.0 * std::numbers::pi * radius * radius * radius;
    CHECK(geom::hull_volume(hull) <= ball);
    CHECK(geom::hull_volume(hull) >= 0.99 * ball);
}

TEST_CASE("degenerate inputs are rejected") {
    CHECK_THROWS_AS(geom::convex_hull({{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}), std::invalid_argument);
    // coplanar cloud
    std::vector<Eigen::Vector3d> flat;
    Rng rng(9);
    for (int i = 0; i < 30; ++i) flat.emplace_back(rng.uniform(-1, 1), rng.uniform(-1, 1), 0.0);
    CHECK_THROWS_AS(geom::convex_hull(flat), std::invalid_argument);
    // collinear cloud
    std::vector<Eigen::Vector3d> line;
    for (int i = 0; i < 10; ++i) line.emplace_back(0.1 * i, 0.2 * i, -0.3 * i);
    CHECK_THROWS_AS(geom::convex_hull(line), std::invalid_argument);
    // all duplicates
    std::vector<Eigen::Vector3d> dup(10, Eigen::Vector3d(1, 2, 3));
    CHECK_THROWS_AS(geom::convex_hull(dup), std::invalid_argument);
}

TEST_CASE("duplicated points collapse cleanly") {
    auto pts = cube_corners(0.5);
    const auto base = pts;
    for (const auto& p : base) {
        pts.push_back(p);
        pts.push_back(p + Eigen::Vector3d(1e-15, -1e-15, 0));
    }
    const Hull hull = geom::convex_hull(pts);
    CHECK(hull.vertices.size() == 8);
    CHECK(geom::hull_volume(hull) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("TetFan decomposes interior points into convex weights") {
    const auto pts = cube_corners(1.0);
    const Hull hull = geom::convex_hull(pts);
    const geom::TetFan fan(hull);

    Rng rng(10);
    for (int i = 0; i < 300; ++i) {
        Eigen::Vector3d x(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1));
        const auto w = fan.decompose(x);
        REQUIRE(w.size() == hull.vertices.size());
        double sum = 0.0;
        Eigen::Vector3d recon = Eigen::Vector3d::Zero();
        for (std::size_t k = 0; k < w.size(); ++k) {
            CHECK(w[k] >= 0.0);
            sum += w[k];
            recon += w[k] * hull.vertices[k];
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        CHECK((recon - x).norm() <= 1e-9);
    }

    // Vertices and face centers are valid inputs.
    for (const auto& v : hull.vertices) {
        const auto w = fan.decompose(v, 1e-9);
        Eigen::Vector3d recon = Eigen::Vector3d::Zero();
        for (std::size_t k = 0; k < w.size(); ++k) recon += w[k] * hull.vertices[k];
        CHECK((recon - v).norm() <= 1e-8);
    }

    CHECK_THROWS_AS(fan.decompose({5, 0, 0}), std::domain_error);
    CHECK_THROWS_AS(fan.decompose({1.001, 0, 0}, 1e-6), std::domain_error);
}

TEST_CASE("TetFan on a random polytope") {
    Rng rng(11);
    std::vector<Eigen::Vector3d> pts;
    for (int i = 0; i < 30; ++i) pts.push_back(rng.in_ball(2.0));
    const Hull hull = geom::convex_hull(pts);
    const geom::TetFan fan(hull);

    // Random convex combinations of hull vertices must decompose and
    // reconstruct.
    for (int rep = 0; rep < 200; ++rep) {
        Eigen::Vector3d x = Eigen::Vector3d::Zero();
        double total = 0.0;
        std::vector<double> coeff(hull.vertices.size());
        for (auto& c : coeff) c = rng.uniform(0.0, 1.0), total += c;
        for (std::size_t k = 0; k < coeff.size(); ++k) x += coeff[k] / total * hull.vertices[k];
        const auto w = fan.decompose(x, 1e-8);
        Eigen::Vector3d recon = Eigen::Vector3d::Zero();
        for (std::size_t k = 0; k < w.size(); ++k) recon += w[k] * hull.vertices[k];
        CHECK((recon - x).norm() <= 1e-8);
    }
}

TEST_CASE("to_soa keeps plane order and values") {
    std::vector<geom::Plane> planes;
    planes.push_back({Eigen::Vector3d(1, 0, 0), -1.0});
    planes.push_back({Eigen::Vector3d(0, 1, 0), 2.0});
    const auto soa = geom::to_soa(planes);
    REQUIRE(soa.size() == 2);
    CHECK(soa.nx[0] == 1.0);
    CHECK(soa.h[1] == 2.0);
    CHECK(geom::max_margin(planes, {0.5, 0.5, 0}) == doctest::Approx(2.5));
}
