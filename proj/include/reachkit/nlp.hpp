#ifndef REACHKIT_NLP_HPP
#define REACHKIT_NLP_HPP

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "reachkit/errors.hpp"

namespace reachkit {

// Smooth constrained program
//     min f(x)   s.t.   c(x) = 0,   g(x) <= 0,   lower <= x <= upper.
// Jacobians enter through transpose products J^T v, which is all the solver
// needs and keeps large sparse problems cheap. Evaluators must be pure and
// deterministic; non-finite outputs raise EvaluatorFailure.
struct NLPProblem {
    int n_vars = 0;
    Eigen::VectorXd lower;  // entries may be -inf
    Eigen::VectorXd upper;  // entries may be +inf

    // returns f(x); writes the gradient through `grad` when non-null
    std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)> objective;

    int n_eq = 0;
    std::function<Eigen::VectorXd(const Eigen::VectorXd& x)> eq;
    std::function<Eigen::VectorXd(const Eigen::VectorXd& x, const Eigen::VectorXd& v)> eq_jtv;

    int n_ineq = 0;
    std::function<Eigen::VectorXd(const Eigen::VectorXd& x)> ineq;
    std::function<Eigen::VectorXd(const Eigen::VectorXd& x, const Eigen::VectorXd& v)> ineq_jtv;

    void validate() const;  // throws ConfigError on inconsistent shapes
};

enum class SolveStatus { Converged, Infeasible, IterationCap };

const char* to_string(SolveStatus status);

// One outer (multiplier) iteration of the solve, kept for diagnostics. The
// inner minimizer only ever accepts descent steps, so merit_end <=
// merit_start holds per entry.
struct OuterTrace {
    double mu = 0.0;
    double merit_start = 0.0;
    double merit_end = 0.0;
    double violation = 0.0;
    double stationarity = 0.0;
    int inner_iterations = 0;
};

struct SolveResult {
    Eigen::VectorXd x_opt;
    double objective = 0.0;
    double max_violation = 0.0;
    double stationarity = 0.0;
    int iterations = 0;  // total inner iterations across all outer passes
    SolveStatus status = SolveStatus::IterationCap;
    Eigen::VectorXd eq_multipliers;
    Eigen::VectorXd ineq_multipliers;
    std::vector<OuterTrace> trace;
};

struct SolveOptions {
    double feasibility_tol = 1e-6;
    double stationarity_tol = 1e-5;
    int max_outer = 50;
    int max_inner = 500;
    double mu_init = 10.0;
    double mu_growth = 10.0;
    double mu_cap = 1e10;
    double multiplier_limit = 1e8;
    int memory = 10;  // quasi-Newton history length
};

// Augmented-Lagrangian outer loop with a projected limited-memory
// quasi-Newton inner solve. Deterministic: identical inputs give
// bitwise-identical results.
SolveResult minimize(const NLPProblem& problem, const Eigen::VectorXd& x0,
                     const SolveOptions& opts = {});

// Central-difference audit of the supplied gradient and J^T products at x.
// Returns the worst relative error over objective-gradient components and
// probe-weighted Jacobian rows.
double check_gradients(const NLPProblem& problem, const Eigen::VectorXd& x, double h);

}  // namespace reachkit

#endif  // REACHKIT_NLP_HPP
