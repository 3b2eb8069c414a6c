#ifndef REACHKIT_ERRORS_HPP
#define REACHKIT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace reachkit {

// Rotation angle at (or numerically indistinguishable from) pi: the log map
// has no unique principal value there.
struct AngleAtPi : std::runtime_error {
    explicit AngleAtPi(const std::string& what) : std::runtime_error(what) {}
};

// Sample spread too large for a unique tangent-space representation.
struct SpreadTooLarge : std::runtime_error {
    explicit SpreadTooLarge(const std::string& what) : std::runtime_error(what) {}
};

// Enclosing ball radius reached pi/2, outside the strong-convexity regime.
struct NotStronglyConvex : std::runtime_error {
    explicit NotStronglyConvex(const std::string& what) : std::runtime_error(what) {}
};

struct RadiusTooLarge : std::runtime_error {
    explicit RadiusTooLarge(const std::string& what) : std::runtime_error(what) {}
};

// Fixed-point or solver iteration hit its cap without meeting tolerance.
struct NoConvergence : std::runtime_error {
    explicit NoConvergence(const std::string& what) : std::runtime_error(what) {}
};

// Consecutive states further apart than the Lipschitz flow bound allows.
struct FlowBoundViolated : std::runtime_error {
    explicit FlowBoundViolated(const std::string& what) : std::runtime_error(what) {}
};

// Velocity backoff v_lim - dt/2 * a_sup came out nonpositive.
struct InfeasibleBackoff : std::runtime_error {
    explicit InfeasibleBackoff(const std::string& what) : std::runtime_error(what) {}
};

// Bad or inconsistent scenario configuration.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// An NLP evaluator produced a non-finite value.
struct EvaluatorFailure : std::runtime_error {
    explicit EvaluatorFailure(const std::string& what) : std::runtime_error(what) {}
};

// The constrained program admits no feasible point at solver tolerance.
struct Infeasible : std::runtime_error {
    explicit Infeasible(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace reachkit

#endif  // REACHKIT_ERRORS_HPP
