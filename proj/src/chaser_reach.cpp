#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "reachkit/chaser_reach.hpp"
#include "reachkit/errors.hpp"
#include "reachkit/rng.hpp"
#include "reachkit/so3.hpp"

namespace reachkit {

void ChaserModel::validate() const {
    if (!(mass > 0.0)) throw ConfigError("chaser model: mass must be positive");
    if (!(dt > 0.0)) throw ConfigError("chaser model: dt must be positive");
    if (!(u_lim > 0.0)) throw ConfigError("chaser model: u_lim must be positive");
    if (!(v_lim > 0.0)) throw ConfigError("chaser model: v_lim must be positive");
    if (segments < 1) throw ConfigError("chaser model: need at least one segment");
    if (std::abs(segments * dt - horizon) > 1e-9)
        throw ConfigError("chaser model: segments * dt must equal horizon");
    if (!x0.allFinite() || !v0.allFinite()) throw ConfigError("chaser model: non-finite state");
}

ControlTube ControlTube::make(const Eigen::MatrixXd& nominal, double radius, int m_samples) {
    if (nominal.cols() != 3) throw std::invalid_argument("ControlTube: nominal must be N x 3");
    if (!(radius >= 0.0)) throw std::invalid_argument("ControlTube: radius must be >= 0");
    if (m_samples < 4) throw std::invalid_argument("ControlTube: need at least 4 directions");
    ControlTube tube;
    tube.nominal = nominal;
    tube.radius = radius;
    tube.directions.resize(m_samples, 3);
    const auto dirs = so3::fibonacci_sphere(m_samples);
    for (int k = 0; k < m_samples; ++k) tube.directions.row(k) = dirs[k].transpose();
    return tube;
}

std::vector<Eigen::MatrixXd> control_cover(const ControlTube& tube) {
    if (tube.directions.rows() < 4)
        throw std::invalid_argument("control_cover: need at least 4 directions");
    std::vector<Eigen::MatrixXd> cover;
    cover.reserve(tube.directions.rows());
    for (int k = 0; k < tube.directions.rows(); ++k) {
        Eigen::MatrixXd u = tube.nominal;
        u.rowwise() += tube.radius * tube.directions.row(k);
        cover.push_back(std::move(u));
    }
    return cover;
}

Eigen::MatrixXd rollout(const ChaserModel& model, const Eigen::MatrixXd& controls) {
    if (controls.rows() != model.segments || controls.cols() != 3)
        throw std::invalid_argument("rollout: controls must be segments x 3");
    Eigen::MatrixXd traj(model.segments + 1, 6);
    Eigen::Vector3d x = model.x0, v = model.v0;
    traj.row(0) << x.transpose(), v.transpose();
    const double dt = model.dt;
    for (int j = 0; j < model.segments; ++j) {
        const Eigen::Vector3d a = controls.row(j).transpose() / model.mass;
        x += v * dt + 0.5 * a * dt * dt;
        v += a * dt;
        traj.row(j + 1) << x.transpose(), v.transpose();
    }
    return traj;
}

Eigen::Matrix<double, 6, 1> state_within_segment(const ChaserModel& model,
                                                 const Eigen::Matrix<double, 6, 1>& state,
                                                 const Eigen::Vector3d& u, double tau) {
    const Eigen::Vector3d a = u / model.mass;
    Eigen::Matrix<double, 6, 1> out;
    out.head<3>() = state.head<3>() + state.tail<3>() * tau + 0.5 * a * tau * tau;
    out.tail<3>() = state.tail<3>() + a * tau;
    return out;
}

std::vector<ReachSnapshot> reach_snapshots(const ChaserModel& model, const ControlTube& tube,
                                           double eps) {
    const auto cover = control_cover(tube);
    const int m = static_cast<int>(cover.size());
    std::vector<Eigen::MatrixXd> trajs;
    trajs.reserve(m);
    for (const auto& u : cover) trajs.push_back(rollout(model, u));

    std::vector<ReachSnapshot> snaps(model.segments + 1);
    for (int i = 0; i <= model.segments; ++i) {
        snaps[i].time = i * model.dt;
        snaps[i].epsilon = eps;
        snaps[i].points.resize(m, 6);
        for (int k = 0; k < m; ++k) snaps[i].points.row(k) = trajs[k].row(i);
    }
    return snaps;
}

LipschitzBound lipschitz_bound(const ChaserModel& model, const Eigen::Vector3d& a_sup) {
    if (!(a_sup.minCoeff() >= 0.0))
        throw std::invalid_argument("lipschitz_bound: a_sup must be nonnegative");
    LipschitzBound b;
    b.v_sup = Eigen::Vector3d::Constant(model.v_lim) - 0.5 * model.dt * a_sup;
    if (!(b.v_sup.minCoeff() > 0.0))
        throw InfeasibleBackoff("lipschitz_bound: velocity backoff leaves no feasible band");
    b.l_t = model.v_lim;
    return b;
}

Ellipsoid::Ellipsoid(const Eigen::Vector3d& center, const Eigen::Vector3d& axis,
                     double semi_major, double semi_minor, const Eigen::Vector3d& f0,
                     const Eigen::Vector3d& f1)
    : center_(center), axis_(axis.normalized()), f0_(f0), f1_(f1),
      semi_major_(semi_major), semi_minor_(semi_minor) {
    if (!(semi_major >= semi_minor) || !(semi_minor >= 0.0))
        throw std::invalid_argument("Ellipsoid: need semi_major >= semi_minor >= 0");
}

Eigen::Matrix3d Ellipsoid::shape() const {
    const double b2 = semi_minor_ * semi_minor_;
    const double a2 = semi_major_ * semi_major_;
    return b2 * Eigen::Matrix3d::Identity() + (a2 - b2) * (axis_ * axis_.transpose());
}

Eigen::Matrix3d Ellipsoid::inverse_shape() const {
    if (degenerate()) throw std::domain_error("Ellipsoid: degenerate, no inverse shape");
    const double ib2 = 1.0 / (semi_minor_ * semi_minor_);
    const double ia2 = 1.0 / (semi_major_ * semi_major_);
    return ib2 * Eigen::Matrix3d::Identity() + (ia2 - ib2) * (axis_ * axis_.transpose());
}

double Ellipsoid::support(const Eigen::Vector3d& dir) const {
    const double along = dir.dot(axis_);
    const double qf = semi_minor_ * semi_minor_ * (dir.squaredNorm() - along * along) +
                      semi_major_ * semi_major_ * along * along;
    return dir.dot(center_) + std::sqrt(std::max(qf, 0.0));
}

Eigen::Vector3d Ellipsoid::support_point(const Eigen::Vector3d& dir) const {
    const double along = dir.dot(axis_);
    const double qf = semi_minor_ * semi_minor_ * (dir.squaredNorm() - along * along) +
                      semi_major_ * semi_major_ * along * along;
    if (qf <= 0.0) return center_;
    const Eigen::Vector3d e_dir = shape() * dir;
    return center_ + e_dir / std::sqrt(qf);
}

std::vector<Eigen::Vector3d> Ellipsoid::boundary_points(int count) const {
    std::vector<Eigen::Vector3d> pts;
    pts.reserve(count);
    for (const auto& d : so3::fibonacci_sphere(count)) pts.push_back(support_point(d));
    return pts;
}

Ellipsoid rtc_ellipsoid(const Eigen::Vector3d& x_i, const Eigen::Vector3d& x_next, double l_t,
                        double dt, double eps) {
    if (!(l_t > 0.0) || !(dt > 0.0))
        throw std::invalid_argument("rtc_ellipsoid: l_t and dt must be positive");
    if (!(eps >= 0.0)) throw std::invalid_argument("rtc_ellipsoid: eps must be >= 0");
    const double chord = (x_next - x_i).norm();
    const double a0 = 0.5 * l_t * dt;
    if (chord > l_t * dt + 1e-9)
        throw FlowBoundViolated("rtc_ellipsoid: consecutive states exceed the flow bound");
    const double half_chord = std::min(0.5 * chord, a0);
    const double b0 = std::sqrt(std::max(a0 * a0 - half_chord * half_chord, 0.0));
    Eigen::Vector3d axis = x_next - x_i;
    if (chord < 1e-15) axis = Eigen::Vector3d::UnitX();
    return Ellipsoid(0.5 * (x_i + x_next), axis, a0 + eps, b0 + eps, x_i, x_next);
}

Rtc build_rtc(const std::vector<ReachSnapshot>& snapshots, double l_t, double eps,
              int directions_per_ellipsoid) {
    if (snapshots.size() < 2) throw std::invalid_argument("build_rtc: need >= 2 snapshots");
    if (directions_per_ellipsoid < 64)
        throw std::invalid_argument("build_rtc: need >= 64 directions per ellipsoid");

    Rtc rtc;
    rtc.intervals.reserve(snapshots.size() - 1);
    for (std::size_t i = 0; i + 1 < snapshots.size(); ++i) {
        const auto& sa = snapshots[i];
        const auto& sb = snapshots[i + 1];
        if (sa.points.rows() != sb.points.rows())
            throw std::invalid_argument("build_rtc: snapshot sample counts differ");
        RtcInterval iv;
        iv.t0 = sa.time;
        iv.t1 = sb.time;
        const double dt = sb.time - sa.time;
        std::vector<Eigen::Vector3d> cloud;
        for (int k = 0; k < sa.points.rows(); ++k) {
            const Eigen::Vector3d p0 = sa.points.row(k).head<3>();
            const Eigen::Vector3d p1 = sb.points.row(k).head<3>();
            iv.tubes.push_back(rtc_ellipsoid(p0, p1, l_t, dt, eps));
            for (const auto& q : iv.tubes.back().boundary_points(directions_per_ellipsoid))
                cloud.push_back(q);
        }

        // Facet geometry from the sampled cloud; every offset is then pushed
        // out to the exact support of the ellipsoid union, which makes the
        // hull an outer approximation independent of sampling density.
        const geom::Hull hull = geom::convex_hull(cloud);
        iv.hull.reserve(hull.planes.size());
        for (const auto& pl : hull.planes) {
            double support = -std::numeric_limits<double>::infinity();
            for (const auto& e : iv.tubes) support = std::max(support, e.support(pl.p));
            iv.hull.push_back({pl.p, -support});
        }
        rtc.intervals.push_back(std::move(iv));
    }
    return rtc;
}

Theorem1Report audit_theorem1(const ChaserModel& model, const ControlTube& tube, const Rtc& rtc,
                              int trials, std::uint64_t seed) {
    if (static_cast<int>(rtc.intervals.size()) != model.segments)
        throw std::invalid_argument("audit_theorem1: rtc does not match the model grid");
    Theorem1Report report;
    report.trials = trials;
    if (trials <= 0) return report;

    std::vector<kernels::PlaneSoA> soa;
    soa.reserve(rtc.intervals.size());
    for (const auto& iv : rtc.intervals) soa.push_back(geom::to_soa(iv.hull));

    constexpr int kSubsteps = 100;
    std::vector<double> px(kSubsteps + 1), py(kSubsteps + 1), pz(kSubsteps + 1),
        margins(kSubsteps + 1);

    for (int trial = 0; trial < trials; ++trial) {
        Rng rng = Rng::for_trial(seed, static_cast<std::uint64_t>(trial));
        Eigen::Matrix<double, 6, 1> state;
        state << model.x0, model.v0;
        for (int j = 0; j < model.segments; ++j) {
            const Eigen::Vector3d u =
                tube.nominal.row(j).transpose() + rng.in_ball(tube.radius);
            for (int s = 0; s <= kSubsteps; ++s) {
                const double tau = model.dt * s / kSubsteps;
                const auto st = state_within_segment(model, state, u, tau);
                px[s] = st[0];
                py[s] = st[1];
                pz[s] = st[2];
            }
            kernels::batch_max_plane_margin(soa[j], px, py, pz, margins);
            for (int s = 0; s <= kSubsteps; ++s) {
                report.worst_margin = std::max(report.worst_margin, margins[s]);
                if (margins[s] > 1e-9) ++report.violations;
            }
            report.points_checked += kSubsteps + 1;
            state = state_within_segment(model, state, u, model.dt);
        }
    }
    return report;
}

}  // namespace reachkit
