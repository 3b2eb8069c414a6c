#include "reachkit/nlp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <string>

namespace reachkit {

namespace {

constexpr double kArmijoSlope = 1e-4;
constexpr int kMaxBacktracks = 40;

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) throw EvaluatorFailure(std::string(what) + " produced a non-finite value");
}

void require_vector(const Eigen::VectorXd& v, int expected, const char* what) {
    if (v.size() != expected)
        throw EvaluatorFailure(std::string(what) + " returned " + std::to_string(v.size()) +
                               " entries, expected " + std::to_string(expected));
    if (!v.allFinite()) throw EvaluatorFailure(std::string(what) + " produced a non-finite value");
}

Eigen::VectorXd clamp_box(const Eigen::VectorXd& x, const NLPProblem& p) {
    return x.cwiseMax(p.lower).cwiseMin(p.upper);
}

// Value, gradient, and raw constraint values of the augmented Lagrangian
//   f + lam.c + mu/2 |c|^2 + 1/(2 mu) sum_i (max(0, nu_i + mu g_i)^2 - nu_i^2)
struct AlPoint {
    double al = 0.0;
    double obj = 0.0;
    Eigen::VectorXd obj_grad;
    Eigen::VectorXd grad;
    Eigen::VectorXd ceq;
    Eigen::VectorXd gin;
};

AlPoint eval_al(const NLPProblem& p, const Eigen::VectorXd& x, const Eigen::VectorXd& lam,
                const Eigen::VectorXd& nu, double mu) {
    AlPoint pt;
    pt.obj_grad.setZero(p.n_vars);
    pt.obj = p.objective(x, &pt.obj_grad);
    require_finite(pt.obj, "objective");
    require_vector(pt.obj_grad, p.n_vars, "objective gradient");
    pt.al = pt.obj;
    pt.grad = pt.obj_grad;
    if (p.n_eq > 0) {
        pt.ceq = p.eq(x);
        require_vector(pt.ceq, p.n_eq, "equality constraints");
        const Eigen::VectorXd w = lam + mu * pt.ceq;
        pt.al += lam.dot(pt.ceq) + 0.5 * mu * pt.ceq.squaredNorm();
        const Eigen::VectorXd jt = p.eq_jtv(x, w);
        require_vector(jt, p.n_vars, "equality J^T v");
        pt.grad += jt;
    }
    if (p.n_ineq > 0) {
        pt.gin = p.ineq(x);
        require_vector(pt.gin, p.n_ineq, "inequality constraints");
        const Eigen::VectorXd w = (nu + mu * pt.gin).cwiseMax(0.0);
        pt.al += (w.squaredNorm() - nu.squaredNorm()) / (2.0 * mu);
        const Eigen::VectorXd jt = p.ineq_jtv(x, w);
        require_vector(jt, p.n_vars, "inequality J^T v");
        pt.grad += jt;
    }
    require_finite(pt.al, "augmented Lagrangian");
    return pt;
}

double projected_gradient_norm(const NLPProblem& p, const Eigen::VectorXd& x,
                               const Eigen::VectorXd& grad) {
    return (clamp_box(x - grad, p) - x).cwiseAbs().maxCoeff();
}

// Zero out coordinates pinned at a bound with the gradient pushing outward;
// quasi-Newton curvature from those coordinates would poison the direction.
Eigen::VectorXd masked_gradient(const NLPProblem& p, const Eigen::VectorXd& x,
                                const Eigen::VectorXd& grad) {
    Eigen::VectorXd g = grad;
    for (int i = 0; i < p.n_vars; ++i) {
        if ((x[i] <= p.lower[i] && g[i] > 0.0) || (x[i] >= p.upper[i] && g[i] < 0.0)) g[i] = 0.0;
    }
    return g;
}

struct Pair {
    Eigen::VectorXd s, y;
    double rho;
};

Eigen::VectorXd lbfgs_direction(const std::deque<Pair>& hist, const Eigen::VectorXd& g) {
    Eigen::VectorXd q = g;
    std::vector<double> alpha(hist.size());
    for (int i = static_cast<int>(hist.size()) - 1; i >= 0; --i) {
        alpha[i] = hist[i].rho * hist[i].s.dot(q);
        q -= alpha[i] * hist[i].y;
    }
    if (!hist.empty()) {
        const Pair& last = hist.back();
        q *= last.s.dot(last.y) / last.y.squaredNorm();
    }
    for (std::size_t i = 0; i < hist.size(); ++i) {
        const double beta = hist[i].rho * hist[i].y.dot(q);
        q += (alpha[i] - beta) * hist[i].s;
    }
    return -q;
}

struct InnerOutcome {
    Eigen::VectorXd x;
    AlPoint point;
    int iterations = 0;
};

InnerOutcome solve_inner(const NLPProblem& p, const Eigen::VectorXd& x0,
                         const Eigen::VectorXd& lam, const Eigen::VectorXd& nu, double mu,
                         double tol, int max_iter, int memory) {
    InnerOutcome out;
    out.x = clamp_box(x0, p);
    out.point = eval_al(p, out.x, lam, nu, mu);
    std::deque<Pair> hist;

    for (int iter = 0; iter < max_iter; ++iter) {
        if (projected_gradient_norm(p, out.x, out.point.grad) <= tol) break;
        const Eigen::VectorXd gm = masked_gradient(p, out.x, out.point.grad);

        Eigen::VectorXd d = lbfgs_direction(hist, gm);
        for (int i = 0; i < p.n_vars; ++i)
            if (gm[i] == 0.0 && out.point.grad[i] != 0.0) d[i] = 0.0;
        if (d.dot(gm) > -1e-14 * d.norm() * gm.norm()) d = -gm;

        bool accepted = false;
        for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
            double step = 1.0;
            for (int bt = 0; bt < kMaxBacktracks; ++bt) {
                const Eigen::VectorXd xt = clamp_box(out.x + step * d, p);
                const Eigen::VectorXd dx = xt - out.x;
                const double slope = out.point.grad.dot(dx);
                if (dx.cwiseAbs().maxCoeff() == 0.0) break;
                if (slope < 0.0) {
                    AlPoint trial = eval_al(p, xt, lam, nu, mu);
                    if (trial.al <= out.point.al + kArmijoSlope * slope) {
                        const Eigen::VectorXd y = trial.grad - out.point.grad;
                        const double sy = dx.dot(y);
                        if (sy > 1e-10 * dx.norm() * y.norm()) {
                            hist.push_back({dx, y, 1.0 / sy});
                            if (static_cast<int>(hist.size()) > memory) hist.pop_front();
                        }
                        out.x = xt;
                        out.point = std::move(trial);
                        accepted = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if (!accepted) {
                if (hist.empty()) break;
                hist.clear();  // stale curvature; retry as steepest descent
                d = -gm;
            }
        }
        ++out.iterations;
        if (!accepted) break;  // no decrease direction left at this precision
    }
    return out;
}

// Deterministic probe weights for Jacobian-product audits; mixed signs and
// magnitudes so a wrong row rarely cancels.
Eigen::VectorXd probe_weights(int m, int which) {
    Eigen::VectorXd v(m);
    for (int i = 0; i < m; ++i)
        v[i] = (which == 0) ? 1.1 + std::sin(0.7 * i + 0.3) : std::cos(1.3 * i + 0.5);
    return v;
}

}  // namespace

void NLPProblem::validate() const {
    if (n_vars <= 0) throw ConfigError("nlp: n_vars must be positive");
    if (lower.size() != n_vars || upper.size() != n_vars)
        throw ConfigError("nlp: bound vectors must have n_vars entries");
    for (int i = 0; i < n_vars; ++i)
        if (!(lower[i] <= upper[i])) throw ConfigError("nlp: lower bound exceeds upper bound");
    if (!objective) throw ConfigError("nlp: objective evaluator missing");
    if (n_eq < 0 || n_ineq < 0) throw ConfigError("nlp: negative constraint count");
    if (n_eq > 0 && (!eq || !eq_jtv)) throw ConfigError("nlp: equality evaluators missing");
    if (n_ineq > 0 && (!ineq || !ineq_jtv)) throw ConfigError("nlp: inequality evaluators missing");
}

const char* to_string(SolveStatus status) {
    switch (status) {
        case SolveStatus::Converged: return "converged";
        case SolveStatus::Infeasible: return "infeasible";
        case SolveStatus::IterationCap: return "iteration_cap";
    }
    return "unknown";
}

SolveResult minimize(const NLPProblem& problem, const Eigen::VectorXd& x0,
                     const SolveOptions& opts) {
    problem.validate();
    if (x0.size() != problem.n_vars) throw ConfigError("nlp: x0 has wrong size");

    SolveResult res;
    res.x_opt = clamp_box(x0, problem);
    res.eq_multipliers = Eigen::VectorXd::Zero(problem.n_eq);
    res.ineq_multipliers = Eigen::VectorXd::Zero(problem.n_ineq);

    // Equality rows built from physical quantities can carry norms far above
    // the objective curvature, which makes the penalty term needlessly
    // ill-conditioned. Equilibrate them toward unit norm (row norms probed at
    // the start point); the convergence test and the returned multipliers
    // stay in true units.
    Eigen::VectorXd eq_scale = Eigen::VectorXd::Ones(problem.n_eq);
    NLPProblem scaled = problem;
    if (problem.n_eq > 0) {
        for (int r = 0; r < problem.n_eq; ++r) {
            Eigen::VectorXd probe = Eigen::VectorXd::Zero(problem.n_eq);
            probe[r] = 1.0;
            eq_scale[r] = std::clamp(problem.eq_jtv(res.x_opt, probe).norm(), 1.0, 1e6);
        }
        const auto base_eq = problem.eq;
        const auto base_jtv = problem.eq_jtv;
        scaled.eq = [base_eq, eq_scale](const Eigen::VectorXd& x) -> Eigen::VectorXd {
            return base_eq(x).cwiseQuotient(eq_scale);
        };
        scaled.eq_jtv = [base_jtv, eq_scale](const Eigen::VectorXd& x,
                                             const Eigen::VectorXd& v) -> Eigen::VectorXd {
            return base_jtv(x, v.cwiseQuotient(eq_scale));
        };
    }
    const auto finish = [&res, &eq_scale, &problem](SolveStatus status) -> SolveResult& {
        res.status = status;
        if (problem.n_eq > 0)
            res.eq_multipliers = res.eq_multipliers.cwiseQuotient(eq_scale).eval();
        return res;
    };

    const bool unconstrained = problem.n_eq == 0 && problem.n_ineq == 0;
    double mu = opts.mu_init;
    double best_violation = std::numeric_limits<double>::infinity();
    double prev_violation = std::numeric_limits<double>::infinity();
    int stagnant_at_cap = 0;
    int capped_stagnant = 0;

    for (int outer = 0; outer < opts.max_outer; ++outer) {
        double inner_tol = std::max(1e-2 * std::pow(0.2, outer), 0.1 * opts.stationarity_tol);
        if (unconstrained) inner_tol = 0.1 * opts.stationarity_tol;
        else if (prev_violation <= 10.0 * opts.feasibility_tol)
            inner_tol = 0.01 * opts.stationarity_tol;

        const double merit_start =
            eval_al(scaled, res.x_opt, res.eq_multipliers, res.ineq_multipliers, mu).al;
        InnerOutcome inner = solve_inner(scaled, res.x_opt, res.eq_multipliers,
                                         res.ineq_multipliers, mu, inner_tol, opts.max_inner,
                                         opts.memory);
        res.x_opt = inner.x;
        res.iterations += inner.iterations;
        res.objective = inner.point.obj;

        // violation in true units: the scaled residuals are only internal
        double violation = 0.0;
        if (problem.n_eq > 0)
            violation = inner.point.ceq.cwiseProduct(eq_scale).cwiseAbs().maxCoeff();
        if (problem.n_ineq > 0) violation = std::max(violation, inner.point.gin.maxCoeff());
        res.max_violation = violation;

        // first-order multiplier update, safeguarded
        if (problem.n_eq > 0)
            res.eq_multipliers = (res.eq_multipliers + mu * inner.point.ceq)
                                     .cwiseMax(-opts.multiplier_limit)
                                     .cwiseMin(opts.multiplier_limit);
        if (problem.n_ineq > 0)
            res.ineq_multipliers = (res.ineq_multipliers + mu * inner.point.gin)
                                       .cwiseMax(0.0)
                                       .cwiseMin(opts.multiplier_limit);

        // stationarity of the ordinary Lagrangian at the updated multipliers
        Eigen::VectorXd grad_l = inner.point.obj_grad;
        if (problem.n_eq > 0) grad_l += scaled.eq_jtv(res.x_opt, res.eq_multipliers);
        if (problem.n_ineq > 0) grad_l += problem.ineq_jtv(res.x_opt, res.ineq_multipliers);
        res.stationarity = projected_gradient_norm(problem, res.x_opt, grad_l);

        res.trace.push_back({mu, merit_start, inner.point.al, violation, res.stationarity,
                             inner.iterations});

        if (violation <= opts.feasibility_tol && res.stationarity <= opts.stationarity_tol)
            return finish(SolveStatus::Converged);

        const bool inner_capped = inner.iterations >= opts.max_inner;
        if (violation <= 10.0 * opts.feasibility_tol) {
            // nearly feasible: hold the penalty so the multiplier updates keep
            // contracting the residual, and back it off only when it is large
            // enough to starve the inner solver
            if (inner_capped) mu = std::max(opts.mu_init, 0.1 * mu);
            capped_stagnant = 0;
        } else if (mu >= opts.mu_cap) {
            stagnant_at_cap = (violation > 0.9 * best_violation) ? stagnant_at_cap + 1 : 0;
            if (stagnant_at_cap >= 3) return finish(SolveStatus::Infeasible);
        } else if (violation > 0.25 * prev_violation) {
            // poor contraction: raise the penalty, but only when the inner
            // solver actually finished its subproblem; growing on top of an
            // under-solved subproblem compounds the conditioning trouble
            if (!inner_capped || ++capped_stagnant >= 3) {
                mu = std::min(mu * opts.mu_growth, opts.mu_cap);
                capped_stagnant = 0;
            }
        } else {
            capped_stagnant = 0;
        }
        best_violation = std::min(best_violation, violation);
        prev_violation = violation;
    }
    return finish(res.max_violation > opts.feasibility_tol ? SolveStatus::Infeasible
                                                            : SolveStatus::IterationCap);
}

double check_gradients(const NLPProblem& problem, const Eigen::VectorXd& x, double h) {
    problem.validate();
    if (x.size() != problem.n_vars) throw ConfigError("nlp: x has wrong size");
    if (!(h > 0.0)) throw ConfigError("nlp: step must be positive");

    Eigen::VectorXd grad(problem.n_vars);
    problem.objective(x, &grad);

    Eigen::VectorXd eq_probe[2], in_probe[2], eq_jt[2], in_jt[2];
    for (int w = 0; w < 2; ++w) {
        if (problem.n_eq > 0) {
            eq_probe[w] = probe_weights(problem.n_eq, w);
            eq_jt[w] = problem.eq_jtv(x, eq_probe[w]);
        }
        if (problem.n_ineq > 0) {
            in_probe[w] = probe_weights(problem.n_ineq, w);
            in_jt[w] = problem.ineq_jtv(x, in_probe[w]);
        }
    }

    double worst = 0.0;
    Eigen::VectorXd xp = x, xm = x;
    for (int k = 0; k < problem.n_vars; ++k) {
        xp[k] = x[k] + h;
        xm[k] = x[k] - h;
        const double fd = (problem.objective(xp, nullptr) - problem.objective(xm, nullptr)) /
                          (2.0 * h);
        worst = std::max(worst, std::abs(fd - grad[k]) / std::max(1.0, std::abs(grad[k])));
        if (problem.n_eq > 0) {
            const Eigen::VectorXd cp = problem.eq(xp), cm = problem.eq(xm);
            for (int w = 0; w < 2; ++w) {
                const double fdw = (eq_probe[w].dot(cp) - eq_probe[w].dot(cm)) / (2.0 * h);
                worst = std::max(worst,
                                 std::abs(fdw - eq_jt[w][k]) / std::max(1.0, std::abs(eq_jt[w][k])));
            }
        }
        if (problem.n_ineq > 0) {
            const Eigen::VectorXd gp = problem.ineq(xp), gm = problem.ineq(xm);
            for (int w = 0; w < 2; ++w) {
                const double fdw = (in_probe[w].dot(gp) - in_probe[w].dot(gm)) / (2.0 * h);
                worst = std::max(worst,
                                 std::abs(fdw - in_jt[w][k]) / std::max(1.0, std::abs(in_jt[w][k])));
            }
        }
        xp[k] = x[k];
        xm[k] = x[k];
    }
    return worst;
}

}  // namespace reachkit
