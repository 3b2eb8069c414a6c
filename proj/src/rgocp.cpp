#include "reachkit/rgocp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "reachkit/rng.hpp"
#include "reachkit/so3.hpp"

namespace reachkit {

namespace {

using RowMat3 = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using RowMatX = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Immutable data shared by the program evaluators. Positions and velocities
// of every cover sample are affine in (U, R_delta):
//   x_k(t_j) = base_x(j) + sum_l p_coef(j,l) u_l + R a(j) s_k
//   v_k(t_j) = v0 + (dt/m) sum_{l<j} u_l + R b(j) s_k
struct EvalContext {
    NlpLayout lay;
    double dt = 0.0, mass = 0.0, u_lim = 0.0, w_rdelta = 0.0, eps = 0.0;
    double nominal_tol_sq = 0.0;  // squared, with the internal margin applied
    double a0 = 0.0;              // rtc semi-major before inflation
    Eigen::Vector3d x_min, x_max, v_sup, v0, y_nom;
    Eigen::MatrixXd p_coef;  // (N+1) x N
    Eigen::VectorXd a_coef;  // N+1
    Eigen::VectorXd b_coef;  // N+1
    Eigen::MatrixXd base_x;  // (N+1) x 3
    Eigen::MatrixXd dirs;    // M x 3
    Eigen::MatrixXd y;       // M_target x 3
    std::vector<Halfspace> obstacles;  // unit normals
};

Eigen::Map<const RowMat3> map_u(const EvalContext& c, const Eigen::VectorXd& z) {
    return {z.data(), c.lay.segments, 3};
}

Eigen::Map<const RowMatX> map_lambda(const EvalContext& c, const Eigen::VectorXd& z) {
    return {z.data() + c.lay.r_index() + 1, c.lay.target_vertices, c.lay.cover_size};
}

void flows(const EvalContext& c, const Eigen::Map<const RowMat3>& u, Eigen::MatrixXd& pu,
           Eigen::MatrixXd& vu) {
    pu.noalias() = c.p_coef * u;
    vu.resize(c.lay.segments + 1, 3);
    vu.row(0).setZero();
    for (int j = 1; j <= c.lay.segments; ++j)
        vu.row(j) = vu.row(j - 1) + (c.dt / c.mass) * u.row(j - 1);
}

// Support margin of the transfer spheroid spanned by foci (f0, f1) against a
// unit halfspace, with gradients in the foci. The radicand is clamped so the
// evaluator stays finite when an iterate stretches a chord past the flow
// bound; derivative terms through the clamp are dropped there.
struct ObstacleMargin {
    double value = 0.0;
    Eigen::Vector3d df0 = Eigen::Vector3d::Zero();
    Eigen::Vector3d df1 = Eigen::Vector3d::Zero();
};

ObstacleMargin obstacle_margin(const Eigen::Vector3d& f0, const Eigen::Vector3d& f1,
                               const Halfspace& hs, double a0, double eps, bool want_grad) {
    const double a = a0 + eps;
    const Eigen::Vector3d u = f1 - f0;
    const double n2 = u.squaredNorm();
    const double q = hs.p.dot(u);
    const double s = std::sqrt(std::max(a0 * a0 - 0.25 * n2, 0.0));
    const double b = s + eps;
    const double t2 = n2 > 1e-18 ? q * q / n2 : 0.0;
    const double phi = b * b + (a * a - b * b) * t2;
    const double root = std::sqrt(std::max(phi, 1e-300));

    ObstacleMargin out;
    out.value = 0.5 * hs.p.dot(f0 + f1) + root + hs.h;
    if (!want_grad) return out;

    Eigen::Vector3d dphi = Eigen::Vector3d::Zero();
    const double db2_dn2 = s > 1e-9 * std::max(a0, 1e-12) ? -b / (4.0 * s) : 0.0;
    if (n2 > 1e-18) {
        dphi = db2_dn2 * (1.0 - t2) * 2.0 * u +
               (a * a - b * b) * (2.0 * q / n2 * hs.p - 2.0 * q * q / (n2 * n2) * u);
    }
    const Eigen::Vector3d dval = dphi / (2.0 * root);
    out.df0 = 0.5 * hs.p - dval;
    out.df1 = 0.5 * hs.p + dval;
    return out;
}

double eval_objective(const EvalContext& c, const Eigen::VectorXd& z, Eigen::VectorXd* grad) {
    const auto u = map_u(c, z);
    const double r = z[c.lay.r_index()];
    if (grad) {
        grad->setZero(c.lay.n_vars);
        for (int j = 0; j < c.lay.segments; ++j)
            for (int axis = 0; axis < 3; ++axis)
                (*grad)[c.lay.u_index(j, axis)] = 2.0 * c.dt * u(j, axis);
        (*grad)[c.lay.r_index()] = c.w_rdelta;
    }
    return c.dt * u.squaredNorm() + c.w_rdelta * r;
}

Eigen::MatrixXd final_positions(const EvalContext& c, const Eigen::MatrixXd& pu, double r) {
    const int n = c.lay.segments;
    Eigen::MatrixXd xf(c.lay.cover_size, 3);
    const Eigen::RowVector3d xbase = c.base_x.row(n) + pu.row(n);
    for (int k = 0; k < c.lay.cover_size; ++k)
        xf.row(k) = xbase + (r * c.a_coef[n]) * c.dirs.row(k);
    return xf;
}

Eigen::VectorXd eval_eq(const EvalContext& c, const Eigen::VectorXd& z) {
    const auto u = map_u(c, z);
    const auto lam = map_lambda(c, z);
    const double r = z[c.lay.r_index()];
    Eigen::MatrixXd pu, vu;
    flows(c, u, pu, vu);
    const Eigen::MatrixXd xf = final_positions(c, pu, r);

    const int mt = c.lay.target_vertices;
    Eigen::VectorXd ce(c.lay.n_eq());
    for (int i = 0; i < mt; ++i) {
        ce.segment<3>(3 * i) = (c.y.row(i) - lam.row(i) * xf).transpose();
        ce[3 * mt + i] = lam.row(i).sum() - 1.0;
    }
    return ce;
}

Eigen::VectorXd eval_eq_jtv(const EvalContext& c, const Eigen::VectorXd& z,
                            const Eigen::VectorXd& v) {
    const auto u = map_u(c, z);
    const auto lam = map_lambda(c, z);
    const double r = z[c.lay.r_index()];
    Eigen::MatrixXd pu, vu;
    flows(c, u, pu, vu);
    const Eigen::MatrixXd xf = final_positions(c, pu, r);

    const int n = c.lay.segments, m = c.lay.cover_size, mt = c.lay.target_vertices;
    Eigen::VectorXd g = Eigen::VectorXd::Zero(c.lay.n_vars);
    Eigen::Vector3d wsum = Eigen::Vector3d::Zero();
    double gr = 0.0;
    for (int i = 0; i < mt; ++i) {
        const Eigen::Vector3d vi = v.segment<3>(3 * i);
        for (int k = 0; k < m; ++k)
            g[c.lay.lambda_index(i, k)] = -xf.row(k).dot(vi.transpose()) + v[3 * mt + i];
        wsum += lam.row(i).sum() * vi;
        const Eigen::RowVector3d mixi = lam.row(i) * c.dirs;
        gr -= c.a_coef[n] * mixi.dot(vi.transpose());
    }
    for (int l = 0; l < n; ++l)
        for (int axis = 0; axis < 3; ++axis)
            g[c.lay.u_index(l, axis)] -= c.p_coef(n, l) * wsum[axis];
    g[c.lay.r_index()] = gr;
    return g;
}

Eigen::VectorXd eval_ineq(const EvalContext& c, const Eigen::VectorXd& z) {
    const auto u = map_u(c, z);
    const double r = z[c.lay.r_index()];
    Eigen::MatrixXd pu, vu;
    flows(c, u, pu, vu);

    const int n = c.lay.segments, m = c.lay.cover_size;
    const int n_obs = static_cast<int>(c.obstacles.size());
    Eigen::VectorXd g(c.lay.n_ineq());
    int idx = 0;
    for (int j = 0; j < n; ++j)
        for (int axis = 0; axis < 3; ++axis) {
            g[idx++] = u(j, axis) + r - c.u_lim;
            g[idx++] = -u(j, axis) + r - c.u_lim;
        }
    for (int j = 0; j <= n; ++j)
        for (int k = 0; k < m; ++k) {
            const Eigen::RowVector3d x =
                c.base_x.row(j) + pu.row(j) + (r * c.a_coef[j]) * c.dirs.row(k);
            for (int axis = 0; axis < 3; ++axis) {
                g[idx++] = c.x_min[axis] + c.eps - x[axis];
                g[idx++] = x[axis] - (c.x_max[axis] - c.eps);
            }
        }
    for (int j = 0; j <= n; ++j)
        for (int k = 0; k < m; ++k) {
            const Eigen::RowVector3d vel =
                c.v0.transpose() + vu.row(j) + (r * c.b_coef[j]) * c.dirs.row(k);
            for (int axis = 0; axis < 3; ++axis) {
                g[idx++] = -vel[axis] - c.v_sup[axis];
                g[idx++] = vel[axis] - c.v_sup[axis];
            }
        }
    if (n_obs > 0) {
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < m; ++k) {
                const Eigen::Vector3d f0 =
                    (c.base_x.row(i) + pu.row(i) + (r * c.a_coef[i]) * c.dirs.row(k)).transpose();
                const Eigen::Vector3d f1 =
                    (c.base_x.row(i + 1) + pu.row(i + 1) + (r * c.a_coef[i + 1]) * c.dirs.row(k))
                        .transpose();
                for (int o = 0; o < n_obs; ++o)
                    g[idx++] = obstacle_margin(f0, f1, c.obstacles[o], c.a0, c.eps, false).value;
            }
    }
    const Eigen::RowVector3d xn = c.base_x.row(n) + pu.row(n);
    g[idx++] = (xn.transpose() - c.y_nom).squaredNorm() - c.nominal_tol_sq;
    return g;
}

Eigen::VectorXd eval_ineq_jtv(const EvalContext& c, const Eigen::VectorXd& z,
                              const Eigen::VectorXd& v) {
    const auto u = map_u(c, z);
    const double r = z[c.lay.r_index()];
    Eigen::MatrixXd pu, vu;
    flows(c, u, pu, vu);

    const int n = c.lay.segments, m = c.lay.cover_size;
    const int n_obs = static_cast<int>(c.obstacles.size());
    Eigen::VectorXd g = Eigen::VectorXd::Zero(c.lay.n_vars);
    Eigen::MatrixXd pos_w = Eigen::MatrixXd::Zero(n + 1, 3);  // weights on x(t_j)
    Eigen::MatrixXd vel_w = Eigen::MatrixXd::Zero(n + 1, 3);  // weights on v(t_j)
    double gr = 0.0;
    int idx = 0;
    for (int j = 0; j < n; ++j)
        for (int axis = 0; axis < 3; ++axis) {
            const double wp = v[idx++], wm = v[idx++];
            g[c.lay.u_index(j, axis)] += wp - wm;
            gr += wp + wm;
        }
    for (int j = 0; j <= n; ++j)
        for (int k = 0; k < m; ++k)
            for (int axis = 0; axis < 3; ++axis) {
                const double w = v[idx + 1] - v[idx];
                idx += 2;
                pos_w(j, axis) += w;
                gr += w * c.a_coef[j] * c.dirs(k, axis);
            }
    for (int j = 0; j <= n; ++j)
        for (int k = 0; k < m; ++k)
            for (int axis = 0; axis < 3; ++axis) {
                const double w = v[idx + 1] - v[idx];
                idx += 2;
                vel_w(j, axis) += w;
                gr += w * c.b_coef[j] * c.dirs(k, axis);
            }
    if (n_obs > 0) {
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < m; ++k) {
                bool any = false;
                for (int o = 0; o < n_obs; ++o)
                    if (v[idx + o] != 0.0) {
                        any = true;
                        break;
                    }
                if (!any) {
                    idx += n_obs;
                    continue;
                }
                const Eigen::Vector3d f0 =
                    (c.base_x.row(i) + pu.row(i) + (r * c.a_coef[i]) * c.dirs.row(k)).transpose();
                const Eigen::Vector3d f1 =
                    (c.base_x.row(i + 1) + pu.row(i + 1) + (r * c.a_coef[i + 1]) * c.dirs.row(k))
                        .transpose();
                for (int o = 0; o < n_obs; ++o) {
                    const double w = v[idx++];
                    if (w == 0.0) continue;
                    const ObstacleMargin om =
                        obstacle_margin(f0, f1, c.obstacles[o], c.a0, c.eps, true);
                    pos_w.row(i) += w * om.df0.transpose();
                    pos_w.row(i + 1) += w * om.df1.transpose();
                    gr += w * (c.a_coef[i] * om.df0.dot(c.dirs.row(k).transpose()) +
                               c.a_coef[i + 1] * om.df1.dot(c.dirs.row(k).transpose()));
                }
            }
    }
    {
        const double w = v[idx++];
        if (w != 0.0) {
            const Eigen::RowVector3d xn = c.base_x.row(n) + pu.row(n);
            pos_w.row(n) += w * 2.0 * (xn - c.y_nom.transpose());
        }
    }

    const Eigen::MatrixXd gu = c.p_coef.transpose() * pos_w;  // N x 3
    Eigen::MatrixXd suff = vel_w;                             // suffix sums over j
    for (int j = n - 1; j >= 0; --j) suff.row(j) += suff.row(j + 1);
    for (int l = 0; l < n; ++l)
        for (int axis = 0; axis < 3; ++axis)
            g[c.lay.u_index(l, axis)] += gu(l, axis) + c.dt / c.mass * suff(l + 1, axis);
    g[c.lay.r_index()] += gr;
    return g;
}

}  // namespace

void Scenario::validate() const {
    chaser.validate();
    target.validate();
    if (!(attitude_radius >= 0.0) || attitude_radius >= std::numbers::pi / 2)
        throw ConfigError("scenario: attitude_radius must lie in [0, pi/2)");
    const int mt = static_cast<int>(target_polytope.vertices.size());
    if (target_vertices != mt)
        throw ConfigError("scenario: target_vertices does not match the polytope vertex count");
    if (mt < 1 || (mt > 1 && mt < 4))
        throw ConfigError("scenario: target polytope needs one vertex or at least four");
    for (int axis = 0; axis < 3; ++axis) {
        if (!(x_min[axis] < x_max[axis]))
            throw ConfigError("scenario: x_min must be strictly below x_max");
        if (!(x_min[axis] + eps < x_max[axis] - eps))
            throw ConfigError("scenario: state box is empty after the eps shrink");
    }
    for (const auto& vert : target_polytope.vertices)
        for (int axis = 0; axis < 3; ++axis)
            if (vert[axis] < x_min[axis] || vert[axis] > x_max[axis])
                throw ConfigError("scenario: target polytope vertex outside the state box");
    for (const auto& hs : obstacles)
        if (hs.p.norm() < 1e-12) throw ConfigError("scenario: obstacle plane has a zero normal");
    if (!(eps >= 0.0)) throw ConfigError("scenario: eps must be nonnegative");
    if (!(nominal_tol > 0.0)) throw ConfigError("scenario: nominal_tol must be positive");
    if (cover_size < 4) throw ConfigError("scenario: cover_size must be at least 4");
    if (!(w_rdelta > 0.0)) throw ConfigError("scenario: w_rdelta must be positive");
}

double ResidualReport::max_violation() const {
    double v = std::max({0.0, control, state_box, velocity, endpoint, containment, row_sum});
    if (std::isfinite(obstacles)) v = std::max(v, obstacles);
    return v;
}

Eigen::MatrixXd containment_residual(const Eigen::MatrixXd& lambda,
                                     const Eigen::MatrixXd& x_final, const Eigen::MatrixXd& y) {
    if (lambda.rows() != y.rows() || lambda.cols() != x_final.rows() || x_final.cols() != 3 ||
        y.cols() != 3)
        throw ConfigError("containment_residual: inconsistent shapes");
    return y - lambda * x_final;
}

double ellipsoid_halfspace_margin(const Ellipsoid& e, const Halfspace& hs) {
    return e.support(hs.p) + hs.h;
}

Eigen::Vector3d nominal_grasp_point(const TargetModel& target, const Rotation& attitude0,
                                    double horizon) {
    if (!(horizon > 0.0)) throw ConfigError("nominal_grasp_point: horizon must be positive");
    OrientationCover cover;
    cover.samples = {attitude0};
    const auto path = propagate_cover(cover, target, {0.0, horizon});
    return target.r_center + path.back().second.front() * target.p_grasp;
}

Eigen::VectorXd pack_decision(const Decision& d, const NlpLayout& lay) {
    if (d.u.rows() != lay.segments || d.u.cols() != 3 || d.lambda.rows() != lay.target_vertices ||
        d.lambda.cols() != lay.cover_size)
        throw ConfigError("pack_decision: shapes do not match the layout");
    Eigen::VectorXd z(lay.n_vars);
    for (int j = 0; j < lay.segments; ++j)
        for (int axis = 0; axis < 3; ++axis) z[lay.u_index(j, axis)] = d.u(j, axis);
    z[lay.r_index()] = d.r_delta;
    for (int i = 0; i < lay.target_vertices; ++i)
        for (int k = 0; k < lay.cover_size; ++k) z[lay.lambda_index(i, k)] = d.lambda(i, k);
    return z;
}

Decision unpack_decision(const Eigen::VectorXd& z, const NlpLayout& lay) {
    if (z.size() != lay.n_vars) throw ConfigError("unpack_decision: wrong vector size");
    Decision d;
    d.u.resize(lay.segments, 3);
    for (int j = 0; j < lay.segments; ++j)
        for (int axis = 0; axis < 3; ++axis) d.u(j, axis) = z[lay.u_index(j, axis)];
    d.r_delta = z[lay.r_index()];
    d.lambda.resize(lay.target_vertices, lay.cover_size);
    for (int i = 0; i < lay.target_vertices; ++i)
        for (int k = 0; k < lay.cover_size; ++k) d.lambda(i, k) = z[lay.lambda_index(i, k)];
    return d;
}

Decision initial_decision(const Scenario& scenario) {
    scenario.validate();
    const ChaserModel& ch = scenario.chaser;
    const Eigen::Vector3d y_nom =
        nominal_grasp_point(scenario.target, scenario.attitude0, ch.horizon);
    const Eigen::Vector3d transfer = y_nom - (ch.x0 + ch.horizon * ch.v0);

    const int n = ch.segments;
    Eigen::VectorXd pn(n);
    double denom = 0.0;
    for (int l = 0; l < n; ++l) {
        pn[l] = ch.dt * ch.dt / ch.mass * (n - l - 0.5);
        denom += pn[l] * pn[l];
    }
    Decision d;
    d.u.resize(n, 3);
    for (int l = 0; l < n; ++l)
        d.u.row(l) = (pn[l] / denom * transfer)
                         .cwiseMax(-ch.u_lim)
                         .cwiseMin(ch.u_lim)
                         .transpose();
    d.r_delta = 0.1 * ch.u_lim;
    d.lambda = Eigen::MatrixXd::Constant(scenario.target_vertices, scenario.cover_size,
                                         1.0 / scenario.cover_size);
    return d;
}

AssembledNlp assemble_nlp(const Scenario& scenario) {
    scenario.validate();
    const ChaserModel& ch = scenario.chaser;
    const int n = ch.segments, m = scenario.cover_size, mt = scenario.target_vertices;

    auto ctx = std::make_shared<EvalContext>();
    NlpLayout& lay = ctx->lay;
    lay.segments = n;
    lay.cover_size = m;
    lay.target_vertices = mt;
    lay.n_obstacles = static_cast<int>(scenario.obstacles.size());
    lay.n_vars = 3 * n + 1 + mt * m;
    lay.control_rows = 6 * n;
    lay.state_rows = 6 * (n + 1) * m;
    lay.velocity_rows = 6 * (n + 1) * m;
    lay.obstacle_rows = n * m * lay.n_obstacles;
    lay.endpoint_rows = 1;
    lay.containment_rows = 3 * mt;
    lay.rowsum_rows = mt;

    ctx->dt = ch.dt;
    ctx->mass = ch.mass;
    ctx->u_lim = ch.u_lim;
    ctx->w_rdelta = scenario.w_rdelta;
    ctx->eps = scenario.eps;
    const double shrunk = 0.999 * scenario.nominal_tol;
    ctx->nominal_tol_sq = shrunk * shrunk;
    const LipschitzBound lip = lipschitz_bound(ch, Eigen::Vector3d::Constant(ch.u_lim / ch.mass));
    ctx->v_sup = lip.v_sup;
    ctx->a0 = 0.5 * lip.l_t * ch.dt;
    ctx->x_min = scenario.x_min;
    ctx->x_max = scenario.x_max;
    ctx->v0 = ch.v0;
    ctx->y_nom = nominal_grasp_point(scenario.target, scenario.attitude0, ch.horizon);

    ctx->p_coef = Eigen::MatrixXd::Zero(n + 1, n);
    ctx->a_coef.resize(n + 1);
    ctx->b_coef.resize(n + 1);
    ctx->base_x.resize(n + 1, 3);
    for (int j = 0; j <= n; ++j) {
        ctx->a_coef[j] = ch.dt * ch.dt * j * j / (2.0 * ch.mass);
        ctx->b_coef[j] = j * ch.dt / ch.mass;
        ctx->base_x.row(j) = (ch.x0 + j * ch.dt * ch.v0).transpose();
        for (int l = 0; l < j; ++l) ctx->p_coef(j, l) = ch.dt * ch.dt / ch.mass * (j - l - 0.5);
    }
    ctx->dirs = ControlTube::make(Eigen::MatrixXd::Zero(n, 3), 0.0, m).directions;
    ctx->y.resize(mt, 3);
    for (int i = 0; i < mt; ++i) ctx->y.row(i) = scenario.target_polytope.vertices[i].transpose();
    ctx->obstacles.reserve(scenario.obstacles.size());
    for (const auto& hs : scenario.obstacles) {
        const double norm = hs.p.norm();
        ctx->obstacles.push_back({hs.p / norm, hs.h / norm});
    }

    AssembledNlp out;
    out.layout = lay;
    out.y_nom = ctx->y_nom;
    out.v_sup = ctx->v_sup;

    NLPProblem& p = out.problem;
    p.n_vars = lay.n_vars;
    p.lower.resize(lay.n_vars);
    p.upper.resize(lay.n_vars);
    for (int j = 0; j < n; ++j)
        for (int axis = 0; axis < 3; ++axis) {
            p.lower[lay.u_index(j, axis)] = -ch.u_lim;
            p.upper[lay.u_index(j, axis)] = ch.u_lim;
        }
    p.lower[lay.r_index()] = 0.0;
    p.upper[lay.r_index()] = ch.u_lim;
    for (int i = 0; i < mt; ++i)
        for (int k = 0; k < m; ++k) {
            p.lower[lay.lambda_index(i, k)] = 0.0;
            p.upper[lay.lambda_index(i, k)] = 1.0;
        }
    p.objective = [ctx](const Eigen::VectorXd& z, Eigen::VectorXd* grad) {
        return eval_objective(*ctx, z, grad);
    };
    p.n_eq = lay.n_eq();
    p.eq = [ctx](const Eigen::VectorXd& z) { return eval_eq(*ctx, z); };
    p.eq_jtv = [ctx](const Eigen::VectorXd& z, const Eigen::VectorXd& v) {
        return eval_eq_jtv(*ctx, z, v);
    };
    p.n_ineq = lay.n_ineq();
    p.ineq = [ctx](const Eigen::VectorXd& z) { return eval_ineq(*ctx, z); };
    p.ineq_jtv = [ctx](const Eigen::VectorXd& z, const Eigen::VectorXd& v) {
        return eval_ineq_jtv(*ctx, z, v);
    };
    p.validate();
    return out;
}

Solution solve_rgocp(const Scenario& scenario, const RgocpOptions& opts) {
    AssembledNlp assembled = assemble_nlp(scenario);
    const Eigen::VectorXd z0 = pack_decision(initial_decision(scenario), assembled.layout);
    const SolveResult res = minimize(assembled.problem, z0, opts.solver);
    if (res.status != SolveStatus::Converged) {
        char detail[128];
        std::snprintf(detail, sizeof(detail), ", violation %.3e, stationarity %.3e",
                      res.max_violation, res.stationarity);
        if (res.status == SolveStatus::Infeasible)
            throw Infeasible("rgocp: no feasible point at tolerance" + std::string(detail));
        throw NoConvergence("rgocp: iteration cap reached" + std::string(detail));
    }

    Solution sol;
    sol.decision = unpack_decision(res.x_opt, assembled.layout);
    sol.objective = res.objective;
    sol.solver = res;
    sol.y_nom = assembled.y_nom;

    const ControlTube tube =
        ControlTube::make(sol.decision.u, sol.decision.r_delta, scenario.cover_size);
    sol.snapshots = reach_snapshots(scenario.chaser, tube, scenario.eps);
    const LipschitzBound lip = lipschitz_bound(
        scenario.chaser, Eigen::Vector3d::Constant(scenario.chaser.u_lim / scenario.chaser.mass));
    sol.rtc = build_rtc(sol.snapshots, lip.l_t, scenario.eps, opts.hull_directions);
    sol.theorem1 =
        audit_theorem1(scenario.chaser, tube, sol.rtc, opts.audit_trials, opts.audit_seed);

    const Eigen::MatrixXd nominal = rollout(scenario.chaser, sol.decision.u);
    sol.nominal_endpoint = nominal.row(scenario.chaser.segments).head<3>().transpose();

    const Eigen::VectorXd g = assembled.problem.ineq(res.x_opt);
    const Eigen::VectorXd ce = assembled.problem.eq(res.x_opt);
    const NlpLayout& lay = assembled.layout;
    const auto block_max = [&g](int offset, int rows) {
        double best = -std::numeric_limits<double>::infinity();
        for (int i = offset; i < offset + rows; ++i) best = std::max(best, g[i]);
        return best;
    };
    const auto block_active = [&g](int offset, int rows) {
        int count = 0;
        for (int i = offset; i < offset + rows; ++i)
            if (std::abs(g[i]) <= 1e-6) ++count;
        return count;
    };
    sol.residuals.control = block_max(lay.control_offset(), lay.control_rows);
    sol.residuals.state_box = block_max(lay.state_offset(), lay.state_rows);
    sol.residuals.velocity = block_max(lay.velocity_offset(), lay.velocity_rows);
    sol.residuals.obstacles = block_max(lay.obstacle_offset(), lay.obstacle_rows);
    sol.residuals.endpoint = g[lay.endpoint_offset()];
    sol.residuals.containment = ce.head(lay.containment_rows).cwiseAbs().maxCoeff();
    sol.residuals.row_sum = ce.tail(lay.rowsum_rows).cwiseAbs().maxCoeff();
    sol.active.control = block_active(lay.control_offset(), lay.control_rows);
    sol.active.state_box = block_active(lay.state_offset(), lay.state_rows);
    sol.active.velocity = block_active(lay.velocity_offset(), lay.velocity_rows);
    sol.active.obstacles = block_active(lay.obstacle_offset(), lay.obstacle_rows);
    sol.active.endpoint = std::abs(g[lay.endpoint_offset()]) <= 1e-6;
    for (int i = 0; i < lay.target_vertices; ++i)
        for (int k = 0; k < lay.cover_size; ++k)
            if (res.x_opt[lay.lambda_index(i, k)] <= 1e-8) ++sol.active.lambda_at_zero;
    return sol;
}

double boundary_touch_distance(const Solution& solution, const Scenario& scenario) {
    const Eigen::MatrixXd& fin = solution.snapshots.back().points;
    std::vector<Eigen::Vector3d> cloud;
    cloud.reserve(fin.rows());
    for (int k = 0; k < fin.rows(); ++k) cloud.push_back(fin.row(k).head<3>().transpose());

    double best = std::numeric_limits<double>::infinity();
    try {
        const geom::Hull hull = geom::convex_hull(cloud);
        for (const auto& y : scenario.target_polytope.vertices)
            best = std::min(best, std::abs(geom::max_margin(hull.planes, y)));
    } catch (const std::invalid_argument&) {
        // final set collapsed to (numerically) a point
        Eigen::Vector3d center = Eigen::Vector3d::Zero();
        for (const auto& x : cloud) center += x;
        center /= static_cast<double>(cloud.size());
        for (const auto& y : scenario.target_polytope.vertices)
            best = std::min(best, (y - center).norm());
    }
    return best;
}

ValidationReport validate_solution(const Solution& solution, const Scenario& scenario, int trials,
                                   std::uint64_t seed) {
    scenario.validate();
    ValidationReport rep;
    if (trials <= 0) return rep;
    rep.trials = trials;

    const int n = scenario.chaser.segments;
    const int m = scenario.cover_size;
    const int mt = scenario.target_vertices;
    const Eigen::MatrixXd& fin = solution.snapshots.back().points;
    Eigen::MatrixXd xf(m, 3);
    for (int k = 0; k < m; ++k) xf.row(k) = fin.row(k).head<3>();
    const Eigen::MatrixXd dirs =
        ControlTube::make(Eigen::MatrixXd::Zero(n, 3), 0.0, m).directions;
    // renormalize the weight rows: the solver leaves them summing to one only
    // up to feasibility tolerance, and realized controls must be convex
    Eigen::MatrixXd lam = solution.decision.lambda;
    for (int i = 0; i < mt; ++i) {
        const double row_sum = lam.row(i).sum();
        if (!(row_sum > 0.5))
            throw ConfigError("validate_solution: weight row does not sum near one");
        lam.row(i) /= row_sum;
    }
    const Eigen::MatrixXd mix = lam * dirs;        // per-vertex direction
    const Eigen::MatrixXd vertex_end = lam * xf;   // per-vertex endpoint

    std::unique_ptr<geom::TetFan> fan;
    std::vector<int> to_original;
    if (mt >= 4) {
        const geom::Hull hull = geom::convex_hull(scenario.target_polytope.vertices);
        fan = std::make_unique<geom::TetFan>(hull);
        to_original.reserve(hull.vertices.size());
        for (const auto& hv : hull.vertices) {
            int match = -1;
            for (int i = 0; i < mt; ++i)
                if ((hv - scenario.target_polytope.vertices[i]).norm() < 1e-9) {
                    match = i;
                    break;
                }
            if (match < 0) throw ConfigError("validate_solution: hull vertex has no polytope match");
            to_original.push_back(match);
        }
    }

    for (int trial = 0; trial < trials; ++trial) {
        Rng rng = Rng::for_trial(seed, static_cast<std::uint64_t>(trial));
        const Eigen::Vector3d w = scenario.attitude_radius > 0.0
                                      ? rng.in_ball(scenario.attitude_radius)
                                      : Eigen::Vector3d::Zero();
        OrientationCover start;
        start.samples = {scenario.attitude0 * so3::exp(w)};
        const auto path = propagate_cover(start, scenario.target, {0.0, scenario.chaser.horizon});
        const Eigen::Vector3d grasp =
            scenario.target.r_center + path.back().second.front() * scenario.target.p_grasp;

        if (geom::max_margin(scenario.target_polytope.halfspaces, grasp) > 1e-9)
            ++rep.grasp_outside;

        Eigen::VectorXd weights = Eigen::VectorXd::Zero(mt);
        if (mt == 1) {
            weights[0] = 1.0;
        } else {
            try {
                const std::vector<double> hw = fan->decompose(grasp, 1e-9);
                for (std::size_t h = 0; h < hw.size(); ++h) weights[to_original[h]] += hw[h];
            } catch (const std::domain_error&) {
                ++rep.grasp_outside;
                continue;
            }
        }

        const Eigen::Vector3d sbar = (weights.transpose() * mix).transpose();
        Eigen::MatrixXd controls = solution.decision.u;
        controls.rowwise() += (solution.decision.r_delta * sbar).transpose();
        const Eigen::MatrixXd traj = rollout(scenario.chaser, controls);
        const Eigen::Vector3d endpoint = traj.row(n).head<3>().transpose();
        const Eigen::Vector3d combo = (weights.transpose() * vertex_end).transpose();

        rep.worst_linearity = std::max(rep.worst_linearity, (endpoint - combo).norm());
        rep.worst_miss = std::max(rep.worst_miss, (endpoint - grasp).norm());
        if (geom::max_margin(scenario.target_polytope.halfspaces, endpoint) > 1e-5)
            ++rep.endpoint_outside;
    }
    return rep;
}

}  // namespace reachkit
