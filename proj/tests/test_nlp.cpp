#include <cmath>
#include <cstring>
#include <limits>

#include "doctest.h"
#include "reachkit/errors.hpp"
#include "reachkit/nlp.hpp"

using namespace reachkit;

namespace {

const double kInf = std::numeric_limits<double>::infinity();

NLPProblem unconstrained_quadratic(const Eigen::VectorXd& c) {
    NLPProblem p;
    p.n_vars = static_cast<int>(c.size());
    p.lower = Eigen::VectorXd::Constant(p.n_vars, -kInf);
    p.upper = Eigen::VectorXd::Constant(p.n_vars, kInf);
    p.objective = [c](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
        if (g) *g = 2.0 * (x - c);
        return (x - c).squaredNorm();
    };
    return p;
}

}  // namespace

TEST_CASE("validation rejects malformed problems") {
    NLPProblem p;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = unconstrained_quadratic(Eigen::Vector3d(1, 2, 3));
    p.validate();
    p.n_eq = 2;  // evaluators missing
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p.n_eq = 0;
    p.lower[0] = 1.0;
    p.upper[0] = 0.0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("unconstrained quadratic lands on the center") {
    const Eigen::VectorXd c = Eigen::Vector3d(0.3, -1.2, 4.0);
    const auto res = minimize(unconstrained_quadratic(c), Eigen::VectorXd::Zero(3));
    CHECK(res.status == SolveStatus::Converged);
    CHECK((res.x_opt - c).norm() < 1e-8);
    CHECK(res.objective < 1e-15);
    CHECK(res.max_violation == 0.0);
}

TEST_CASE("Rosenbrock inside a box") {
    NLPProblem p;
    p.n_vars = 2;
    p.lower = Eigen::Vector2d(-0.5, -0.5);
    p.upper = Eigen::Vector2d(1.5, 1.5);
    p.objective = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
        const double a = 1.0 - x[0], b = x[1] - x[0] * x[0];
        if (g) {
            (*g)[0] = -2.0 * a - 400.0 * x[0] * b;
            (*g)[1] = 200.0 * b;
        }
        return a * a + 100.0 * b * b;
    };
    const auto res = minimize(p, Eigen::Vector2d(-0.4, 1.2));
    CHECK(res.status == SolveStatus::Converged);
    CHECK((res.x_opt - Eigen::Vector2d(1, 1)).norm() < 1e-5);
}

TEST_CASE("bound-clipped quadratic stops at the corner") {
    NLPProblem p = unconstrained_quadratic(Eigen::Vector2d(2.0, 2.0));
    p.lower = Eigen::Vector2d(0.0, 0.0);
    p.upper = Eigen::Vector2d(1.0, 1.0);
    const auto res = minimize(p, Eigen::Vector2d(0.2, 0.3));
    CHECK(res.status == SolveStatus::Converged);
    CHECK((res.x_opt - Eigen::Vector2d(1, 1)).norm() < 1e-8);
}

TEST_CASE("single equality: analytic KKT point") {
    // min |x|^2 s.t. a.x = 1  ->  x* = a/|a|^2
    const Eigen::Vector3d a(1.0, 2.0, -2.0);
    NLPProblem p = unconstrained_quadratic(Eigen::Vector3d::Zero());
    p.n_eq = 1;
    p.eq = [a](const Eigen::VectorXd& x) {
        return Eigen::VectorXd::Constant(1, a.dot(x.head<3>()) - 1.0);
    };
    p.eq_jtv = [a](const Eigen::VectorXd&, const Eigen::VectorXd& v) {
        return Eigen::VectorXd(v[0] * a);
    };
    const auto res = minimize(p, Eigen::Vector3d(0.5, 0.5, 0.5));
    CHECK(res.status == SolveStatus::Converged);
    CHECK((res.x_opt - a / a.squaredNorm()).norm() < 1e-6);
    // KKT multiplier: 2x* + lambda a = 0 -> lambda = -2/|a|^2
    CHECK(res.eq_multipliers[0] == doctest::Approx(-2.0 / a.squaredNorm()).epsilon(1e-4));
}

TEST_CASE("active inequality at its boundary") {
    // min x1 s.t. x1 >= 0.5 on [0,1]^2
    NLPProblem p;
    p.n_vars = 2;
    p.lower = Eigen::Vector2d(0.0, 0.0);
    p.upper = Eigen::Vector2d(1.0, 1.0);
    p.objective = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
        if (g) *g = Eigen::Vector2d(1.0, 0.0);
        return x[0];
    };
    p.n_ineq = 1;
    p.ineq = [](const Eigen::VectorXd& x) { return Eigen::VectorXd::Constant(1, 0.5 - x[0]); };
    p.ineq_jtv = [](const Eigen::VectorXd&, const Eigen::VectorXd& v) {
        return Eigen::VectorXd(Eigen::Vector2d(-v[0], 0.0));
    };
    const auto res = minimize(p, Eigen::Vector2d(0.9, 0.4));
    CHECK(res.status == SolveStatus::Converged);
    CHECK(res.x_opt[0] == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(res.ineq_multipliers[0] > 0.1);  // active, multiplier near 1
}

TEST_CASE("two inequalities with an analytic vertex") {
    // min |x|^2 s.t. x0 + x1 >= 1  ->  (0.5, 0.5)
    NLPProblem p = unconstrained_quadratic(Eigen::Vector2d::Zero());
    p.n_ineq = 1;
    p.ineq = [](const Eigen::VectorXd& x) {
        return Eigen::VectorXd::Constant(1, 1.0 - x[0] - x[1]);
    };
    p.ineq_jtv = [](const Eigen::VectorXd&, const Eigen::VectorXd& v) {
        return Eigen::VectorXd(Eigen::Vector2d(-v[0], -v[0]));
    };
    const auto res = minimize(p, Eigen::Vector2d(2.0, -1.0));
    CHECK(res.status == SolveStatus::Converged);
    CHECK((res.x_opt - Eigen::Vector2d(0.5, 0.5)).norm() < 1e-6);
}

TEST_CASE("contradictory equalities report Infeasible") {
    NLPProblem p = unconstrained_quadratic(Eigen::Vector2d::Zero());
    const Eigen::Vector2d a(1.0, 1.0);
    p.n_eq = 2;
    p.eq = [a](const Eigen::VectorXd& x) {
        Eigen::VectorXd c(2);
        c[0] = a.dot(x);
        c[1] = a.dot(x) - 1.0;
        return c;
    };
    p.eq_jtv = [a](const Eigen::VectorXd&, const Eigen::VectorXd& v) {
        return Eigen::VectorXd((v[0] + v[1]) * a);
    };
    const auto res = minimize(p, Eigen::Vector2d(0.0, 0.0));
    CHECK(res.status == SolveStatus::Infeasible);
    CHECK(res.max_violation > 0.4);  // the two planes sit 1 apart
}

TEST_CASE("merit decreases within every outer pass") {
    const Eigen::Vector3d a(1.0, 2.0, -2.0);
    NLPProblem p = unconstrained_quadratic(Eigen::Vector3d(1, 1, 1));
    p.n_eq = 1;
    p.eq = [a](const Eigen::VectorXd& x) {
        return Eigen::VectorXd::Constant(1, a.dot(x.head<3>()) - 1.0);
    };
    p.eq_jtv = [a](const Eigen::VectorXd&, const Eigen::VectorXd& v) {
        return Eigen::VectorXd(v[0] * a);
    };
    const auto res = minimize(p, Eigen::Vector3d(2.0, -3.0, 0.2));
    CHECK(res.status == SolveStatus::Converged);
    REQUIRE(!res.trace.empty());
    for (const auto& t : res.trace) CHECK(t.merit_end <= t.merit_start + 1e-12);
}

TEST_CASE("identical inputs give bitwise-identical results") {
    const Eigen::Vector3d a(0.3, -1.0, 2.0);
    NLPProblem p = unconstrained_quadratic(Eigen::Vector3d(1, 2, 3));
    p.n_ineq = 1;
    p.ineq = [a](const Eigen::VectorXd& x) {
        return Eigen::VectorXd::Constant(1, a.dot(x.head<3>()) - 0.5);
    };
    p.ineq_jtv = [a](const Eigen::VectorXd&, const Eigen::VectorXd& v) {
        return Eigen::VectorXd(v[0] * a);
    };
    const Eigen::Vector3d x0(0.1, 0.1, 0.1);
    const auto r1 = minimize(p, x0);
    const auto r2 = minimize(p, x0);
    CHECK(r1.iterations == r2.iterations);
    CHECK(std::memcmp(r1.x_opt.data(), r2.x_opt.data(), sizeof(double) * 3) == 0);
    CHECK(r1.objective == r2.objective);
}

TEST_CASE("non-finite evaluator output raises EvaluatorFailure") {
    NLPProblem p;
    p.n_vars = 1;
    p.lower = Eigen::VectorXd::Constant(1, -kInf);
    p.upper = Eigen::VectorXd::Constant(1, kInf);
    p.objective = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
        if (g) (*g)[0] = 1.0 / x[0];
        return std::log(x[0]);  // NaN for x <= 0
    };
    CHECK_THROWS_AS(minimize(p, Eigen::VectorXd::Constant(1, -1.0)), EvaluatorFailure);
}

TEST_CASE("check_gradients accepts a correct quadratic") {
    const Eigen::Vector3d a(1.0, -2.0, 0.5);
    NLPProblem p = unconstrained_quadratic(Eigen::Vector3d(0.5, 0.5, 0.5));
    p.n_eq = 1;
    p.eq = [a](const Eigen::VectorXd& x) {
        return Eigen::VectorXd::Constant(1, a.dot(x.head<3>()) - 1.0);
    };
    p.eq_jtv = [a](const Eigen::VectorXd&, const Eigen::VectorXd& v) {
        return Eigen::VectorXd(v[0] * a);
    };
    CHECK(check_gradients(p, Eigen::Vector3d(0.2, -0.3, 0.7), 1e-6) < 1e-6);
}

TEST_CASE("check_gradients flags a corrupted Jacobian product") {
    const Eigen::Vector3d a(1.0, -2.0, 0.5);
    NLPProblem p = unconstrained_quadratic(Eigen::Vector3d::Zero());
    p.n_ineq = 1;
    p.ineq = [a](const Eigen::VectorXd& x) {
        return Eigen::VectorXd::Constant(1, a.dot(x.head<3>()));
    };
    p.ineq_jtv = [a](const Eigen::VectorXd&, const Eigen::VectorXd& v) {
        Eigen::Vector3d jt = v[0] * a;
        jt[1] *= 1.01;  // planted 1 percent error
        return Eigen::VectorXd(jt);
    };
    CHECK(check_gradients(p, Eigen::Vector3d(0.2, -0.3, 0.7), 1e-6) > 1e-3);
}

TEST_CASE("finite-difference error shrinks quadratically in h") {
    NLPProblem p;
    p.n_vars = 2;
    p.lower = Eigen::VectorXd::Constant(2, -kInf);
    p.upper = Eigen::VectorXd::Constant(2, kInf);
    // smooth non-quadratic so the h^2 truncation term dominates
    p.objective = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
        if (g) *g = Eigen::Vector2d(std::exp(x[0]), 3.0 * std::cos(3.0 * x[1]));
        return std::exp(x[0]) + std::sin(3.0 * x[1]);
    };
    const Eigen::Vector2d x(0.4, 0.7);
    const double e3 = check_gradients(p, x, 1e-3);
    const double e4 = check_gradients(p, x, 1e-4);
    const double e5 = check_gradients(p, x, 1e-5);
    CHECK(e3 / e4 > 20.0);
    CHECK(e3 / e4 < 500.0);
    if (e5 > 1e-12) CHECK(e4 / e5 > 20.0);  // above the roundoff floor
}
