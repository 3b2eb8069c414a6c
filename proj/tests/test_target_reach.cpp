#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "reachkit/errors.hpp"
#include "reachkit/geometry.hpp"
#include "reachkit/target_reach.hpp"

using namespace reachkit;

namespace {

TargetModel headline_target() {
    TargetModel m;
    m.inertia = {29.2, 30.0, 38.4};
    m.omega0 = {0.0, 0.0698, 0.0};
    m.r_center = {5.5, 0.0, 0.0};
    m.p_grasp = {1.0, 0.0, 0.0};
    return m;
}

std::vector<double> grid(double horizon, double dt) {
    std::vector<double> t;
    for (double x = 0.0; x <= horizon + 1e-9; x += dt) t.push_back(x);
    return t;
}

}  // namespace

TEST_CASE("euler_step: zero rate leaves the attitude unchanged") {
    const TargetModel m = headline_target();
    const Rotation r0 = so3::exp({0.3, -0.1, 0.8});
    const auto [r1, w1] = euler_step(r0, Eigen::Vector3d::Zero(), m, 0.05);
    CHECK((r1.matrix() - r0.matrix()).norm() < 1e-15);
    CHECK(w1.norm() == 0.0);
}

TEST_CASE("euler_step: principal-axis spin is an equilibrium") {
    const TargetModel m = headline_target();
    Rotation r = Rotation::identity();
    Eigen::Vector3d w = m.omega0;
    for (int i = 0; i < 100; ++i) {
        std::tie(r, w) = euler_step(r, w, m, 0.05);
        CHECK((w - m.omega0).norm() < 1e-10);
    }
    // attitude advanced about body-y by |omega| * t
    const double expect = m.omega0.y() * 100 * 0.05;
    CHECK(so3::distance(Rotation::identity(), r) == doctest::Approx(expect).epsilon(1e-9));
    const AxisAngle axis = so3::log(r);
    CHECK((axis.normalized() - Eigen::Vector3d::UnitY()).norm() < 1e-9);
}

TEST_CASE("euler_step conserves energy and momentum magnitude") {
    TargetModel m = headline_target();
    // generic tumble, all axes excited
    m.omega0 = {0.11, -0.23, 0.17};
    Rotation r = Rotation::identity();
    Eigen::Vector3d w = m.omega0;
    const double e0 = w.dot(m.inertia.cwiseProduct(w));
    const double h0 = m.inertia.cwiseProduct(w).norm();
    for (int i = 0; i < 3000; ++i) std::tie(r, w) = euler_step(r, w, m, 0.01);
    const double e1 = w.dot(m.inertia.cwiseProduct(w));
    const double h1 = m.inertia.cwiseProduct(w).norm();
    CHECK(std::abs(e1 - e0) / e0 < 1e-8);
    CHECK(std::abs(h1 - h0) / h0 < 1e-8);
    // attitude stayed on the manifold
    CHECK((r.matrix().transpose() * r.matrix() - Eigen::Matrix3d::Identity()).norm() < 1e-12);
}

TEST_CASE("euler_step matches a fine-step reference") {
    TargetModel m = headline_target();
    m.omega0 = {0.2, 0.05, -0.12};
    Rotation coarse = so3::exp({0.1, 0.2, 0.3});
    Rotation fine = coarse;
    Eigen::Vector3d wc = m.omega0, wf = m.omega0;
    for (int i = 0; i < 40; ++i) std::tie(coarse, wc) = euler_step(coarse, wc, m, 0.05);
    for (int i = 0; i < 2000; ++i) std::tie(fine, wf) = euler_step(fine, wf, m, 0.001);
    CHECK(so3::distance(coarse, fine) < 1e-9);
    CHECK((wc - wf).norm() < 1e-10);
}

TEST_CASE("build_cover: zero radius collapses to the center") {
    const GeodesicBall ball(so3::exp({0.4, 0.0, 0.1}), 0.0);
    const OrientationCover cover = build_cover(ball, 30);
    REQUIRE(cover.samples.size() == 1);
    CHECK(so3::distance(cover.samples[0], ball.center) == 0.0);
    CHECK(cover.delta == 0.0);
}

TEST_CASE("build_cover: headline cover has count+1 samples inside the ball") {
    const GeodesicBall ball(Rotation::identity(), 0.17);
    const OrientationCover cover = build_cover(ball, 30);
    REQUIRE(cover.samples.size() == 31);
    for (const Rotation& s : cover.samples) {
        CHECK(so3::distance(ball.center, s) <= 0.17 + 1e-12);
    }
    // samples[0] is the center, the rest sit on the boundary
    CHECK(so3::distance(cover.samples[0], ball.center) == 0.0);
    for (std::size_t i = 1; i < cover.samples.size(); ++i) {
        CHECK(so3::distance(ball.center, cover.samples[i]) == doctest::Approx(0.17).epsilon(1e-12));
    }
    CHECK(cover.delta > 0.0);
    CHECK(cover.delta <= 0.17);
}

TEST_CASE("build_cover: delta audit matches an independent probe and shrinks with count") {
    const GeodesicBall ball(so3::exp({-0.2, 0.5, 0.1}), 0.17);
    double last = 1e9;
    for (const int count : {8, 16, 32, 64}) {
        const OrientationCover cover = build_cover(ball, count);
        // statistical audit of the cover invariant with an independent stream
        Rng rng(1234 + count);
        for (int t = 0; t < 2000; ++t) {
            const Rotation probe = ball.center * so3::exp(rng.in_ball(0.17));
            double nearest = 1e9;
            for (const Rotation& s : cover.samples)
                nearest = std::min(nearest, so3::distance(probe, s));
            CHECK(nearest <= cover.delta + 1e-3);
        }
        CHECK(cover.delta < last);
        last = cover.delta;
    }
}

TEST_CASE("propagate_cover: trivial grid returns the cover") {
    const GeodesicBall ball(Rotation::identity(), 0.1);
    const OrientationCover cover = build_cover(ball, 8);
    const auto traj = propagate_cover(cover, headline_target(), {0.0});
    REQUIRE(traj.size() == 1);
    CHECK(traj[0].first == 0.0);
    REQUIRE(traj[0].second.size() == cover.samples.size());
    for (std::size_t i = 0; i < cover.samples.size(); ++i)
        CHECK(so3::distance(traj[0].second[i], cover.samples[i]) == 0.0);
}

TEST_CASE("propagate_cover: rigid co-rotation preserves pairwise distances") {
    const GeodesicBall ball(Rotation::identity(), 0.17);
    const OrientationCover cover = build_cover(ball, 12);
    const TargetModel m = headline_target();  // principal-axis spin
    const auto traj = propagate_cover(cover, m, grid(30.0, 1.0));
    REQUIRE(traj.size() == 31);

    const auto& first = traj.front().second;
    const auto& last = traj.back().second;
    for (std::size_t i = 0; i < first.size(); ++i) {
        for (std::size_t j = i + 1; j < first.size(); ++j) {
            CHECK(so3::distance(first[i], first[j]) ==
                  doctest::Approx(so3::distance(last[i], last[j])).epsilon(1e-6));
        }
    }
}

TEST_CASE("propagate_cover rejects bad grids") {
    const OrientationCover cover = build_cover(GeodesicBall(Rotation::identity(), 0.1), 8);
    const TargetModel m = headline_target();
    CHECK_THROWS_AS(propagate_cover(cover, m, {}), std::invalid_argument);
    CHECK_THROWS_AS(propagate_cover(cover, m, {1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(propagate_cover(cover, m, {0.0, 2.0, 2.0}), std::invalid_argument);
}

TEST_CASE("frechet_mean basics") {
    const Rotation r = so3::exp({0.2, -0.7, 0.4});
    CHECK(so3::distance(frechet_mean({r}), r) == 0.0);

    const Rotation plus = so3::exp({0.3, 0.0, 0.0});
    const Rotation minus = so3::exp({-0.3, 0.0, 0.0});
    CHECK(so3::distance(frechet_mean({plus, minus}), Rotation::identity()) < 1e-8);
}

TEST_CASE("frechet_mean matches the grid-search oracle on random clusters") {
    Rng rng(55);
    for (int trial = 0; trial < 25; ++trial) {
        const Rotation base = oracles::random_rotation(rng);
        std::vector<Rotation> cluster;
        for (int i = 0; i < 8; ++i) cluster.push_back(base * so3::exp(rng.in_ball(0.2)));
        const Rotation mean = frechet_mean(cluster);
        const Rotation ref = oracles::frechet_grid_search(cluster, base, 0.25);
        CHECK(so3::distance(mean, ref) < 1e-3);
    }
}

TEST_CASE("frechet_mean is equivariant under a common left rotation") {
    Rng rng(56);
    const Rotation q = so3::exp({1.1, -0.4, 0.7});
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<Rotation> cluster, moved;
        const Rotation base = oracles::random_rotation(rng);
        for (int i = 0; i < 6; ++i) {
            cluster.push_back(base * so3::exp(rng.in_ball(0.3)));
            moved.push_back(q * cluster.back());
        }
        CHECK(so3::distance(frechet_mean(moved), q * frechet_mean(cluster)) < 1e-8);
    }
}

TEST_CASE("frechet_mean rejects near-antipodal spreads") {
    const std::vector<Rotation> bad = {Rotation::identity(),
                                       so3::exp({std::numbers::pi - 1e-9, 0.0, 0.0})};
    CHECK_THROWS_AS((void)frechet_mean(bad), SpreadTooLarge);
}

TEST_CASE("megb encloses inputs minimally") {
    Rng rng(57);
    for (int trial = 0; trial < 20; ++trial) {
        const Rotation base = oracles::random_rotation(rng);
        std::vector<Rotation> cluster;
        for (int i = 0; i < 10; ++i) cluster.push_back(base * so3::exp(rng.in_ball(0.25)));
        const GeodesicBall ball = megb(cluster);
        double worst = 0.0;
        for (const Rotation& r : cluster) {
            const double d = so3::distance(ball.center, r);
            CHECK(d <= ball.radius + 1e-12);
            worst = std::max(worst, d);
        }
        // minimality: some input sits on the boundary
        CHECK(worst >= ball.radius - 1e-6);
    }
}

TEST_CASE("megb symmetric pair") {
    const GeodesicBall ball = megb({so3::exp({0.3, 0, 0}), so3::exp({-0.3, 0, 0})});
    CHECK(so3::distance(ball.center, Rotation::identity()) < 1e-8);
    CHECK(ball.radius == doctest::Approx(0.3).epsilon(1e-8));

    const GeodesicBall single = megb({so3::exp({0.4, 0.1, 0})});
    CHECK(single.radius == 0.0);
}

TEST_CASE("megb raises NotStronglyConvex for wide spreads") {
    // Three rotations about one axis at mutual 120 degrees: the mean lands on
    // one of them, the other two sit 2.094 rad away, past pi/2.
    const double third = 2.0 * std::numbers::pi / 3.0;
    const std::vector<Rotation> wide = {Rotation::identity(), so3::exp({third, 0.0, 0.0}),
                                        so3::exp({-third, 0.0, 0.0})};
    CHECK_THROWS_AS((void)megb(wide), NotStronglyConvex);
}

TEST_CASE("cover_final_set pads the MEGB to the translated initial ball") {
    const GeodesicBall initial(Rotation::identity(), 0.17);
    const Rotation nominal_final = so3::exp({0.0, 2.094, 0.0});
    // pretend the sample MEGB came out slightly offset and undersized
    const GeodesicBall sample_megb(nominal_final * so3::exp({0.01, 0.0, 0.0}), 0.16);
    const GeodesicBall safe = cover_final_set(initial, nominal_final, sample_megb);
    CHECK(safe.radius == doctest::Approx(0.17 + 0.01).epsilon(1e-9));
    // every point of the true final ball is inside the returned ball
    Rng rng(58);
    for (int t = 0; t < 2000; ++t) {
        const Rotation truth = so3::exp(rng.in_ball(0.17)) * nominal_final;
        CHECK(so3::distance(safe.center, truth) <= safe.radius + 1e-12);
    }
}

TEST_CASE("lift_to_polytope: zero radius gives a tight box") {
    const TargetModel m = headline_target();
    const Rotation att = so3::exp({0.0, 0.7, 0.0});
    const GraspPolytope poly = lift_to_polytope(GeodesicBall(att, 0.0), m, 8);
    REQUIRE(poly.vertices.size() == 8);
    REQUIRE(poly.halfspaces.size() == 6);
    const Eigen::Vector3d y0 = m.r_center + att * m.p_grasp;
    for (const auto& v : poly.vertices) {
        CHECK((v - y0).cwiseAbs().maxCoeff() == doctest::Approx(5e-7).epsilon(1e-9));
    }
    CHECK(geom::max_margin(poly.halfspaces, y0) < 0.0);
}

TEST_CASE("lift_to_polytope: headline final set encloses Monte-Carlo patch samples") {
    const TargetModel m = headline_target();
    const Rotation att = so3::exp({0.0, 2.094, 0.0});  // nominal attitude at 30 s
    const GeodesicBall ball(att, 0.17);
    const GraspPolytope poly = lift_to_polytope(ball, m, 8);
    REQUIRE(poly.vertices.size() == 8);
    REQUIRE(poly.halfspaces.size() == 8);

    // vertex/halfspace consistency (type invariant)
    for (const auto& v : poly.vertices) CHECK(geom::max_margin(poly.halfspaces, v) <= 1e-9);

    Rng rng(59);
    for (int t = 0; t < 10000; ++t) {
        const Eigen::Vector3d y = m.r_center + att * (so3::exp(rng.in_ball(0.17)) * m.p_grasp);
        CHECK(geom::max_margin(poly.halfspaces, y) < 0.0);
    }
}

TEST_CASE("lift_to_polytope volume shrinks with the ball radius") {
    const TargetModel m = headline_target();
    double last = 1e9;
    for (const double rho : {0.17, 0.1, 0.05}) {
        const GraspPolytope poly = lift_to_polytope(GeodesicBall(Rotation::identity(), rho), m, 8);
        const double vol = geom::hull_volume(geom::convex_hull(poly.vertices));
        CHECK(vol < last);
        last = vol;
    }
}

TEST_CASE("lift_to_polytope input validation") {
    TargetModel m = headline_target();
    CHECK_THROWS_AS(lift_to_polytope(GeodesicBall(Rotation::identity(), 0.1), m, 3),
                    std::invalid_argument);
    m.p_grasp = Eigen::Vector3d::Zero();
    CHECK_THROWS_AS(lift_to_polytope(GeodesicBall(Rotation::identity(), 0.1), m, 8), ConfigError);
}

TEST_CASE("TargetModel validation") {
    TargetModel m = headline_target();
    m.validate();
    m.inertia.y() = 0.0;
    CHECK_THROWS_AS(m.validate(), ConfigError);
}

TEST_CASE("full target pipeline: cover, propagate, megb, lift is conservative") {
    const TargetModel m = headline_target();
    const GeodesicBall initial(Rotation::identity(), 0.17);
    const OrientationCover cover = build_cover(initial, 30);
    const auto traj = propagate_cover(cover, m, grid(30.0, 1.0));

    // MEGB radius stays near the initial radius (isometric co-rotation).
    const GeodesicBall final_megb = megb(traj.back().second);
    CHECK(final_megb.radius < 0.25);

    const GeodesicBall safe =
        cover_final_set(initial, traj.back().second[0], final_megb);
    const GraspPolytope poly = lift_to_polytope(safe, m, 8);

    // independent end-to-end conservatism audit
    Rng rng(60);
    int violations = 0;
    for (int t = 0; t < 2000; ++t) {
        Rotation r = so3::exp(rng.in_ball(0.17));
        Eigen::Vector3d w = m.omega0;
        for (int s = 0; s < 600; ++s) std::tie(r, w) = euler_step(r, w, m, 0.05);
        const Eigen::Vector3d y = m.r_center + r * m.p_grasp;
        if (geom::max_margin(poly.halfspaces, y) >= 0.0) ++violations;
    }
    CHECK(violations == 0);
}
