#include <cmath>
#include <limits>

#include "reachkit/kernels.hpp"

// Reference kernels. Plain loops, one operation order, no contraction
// (enforced by the build flags); the AVX2 variants replicate this order
// lane-wise so both backends produce bitwise identical results.

namespace reachkit::kernels::scalar {

double max_plane_margin(const PlaneSoA& planes, double px, double py, double pz) {
    double best = -std::numeric_limits<double>::infinity();
    const std::size_t n = planes.size();
    for (std::size_t j = 0; j < n; ++j) {
        const double m = ((planes.nx[j] * px + planes.ny[j] * py) + planes.nz[j] * pz) + planes.h[j];
        if (m > best) best = m;
    }
    return best;
}

void batch_max_plane_margin(const PlaneSoA& planes, std::span<const double> px,
                            std::span<const double> py, std::span<const double> pz,
                            std::span<double> out) {
    for (std::size_t i = 0; i < px.size(); ++i) {
        out[i] = scalar::max_plane_margin(planes, px[i], py[i], pz[i]);
    }
}

void two_focus_sums(std::span<const double> px, std::span<const double> py,
                    std::span<const double> pz, const double f0[3], const double f1[3],
                    std::span<double> out) {
    for (std::size_t i = 0; i < px.size(); ++i) {
        const double a0 = px[i] - f0[0];
        const double b0 = py[i] - f0[1];
        const double c0 = pz[i] - f0[2];
        const double a1 = px[i] - f1[0];
        const double b1 = py[i] - f1[1];
        const double c1 = pz[i] - f1[2];
        out[i] = std::sqrt((a0 * a0 + b0 * b0) + c0 * c0) +
                 std::sqrt((a1 * a1 + b1 * b1) + c1 * c1);
    }
}

double max_dot(std::span<const double> px, std::span<const double> py, std::span<const double> pz,
               double dx, double dy, double dz) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < px.size(); ++i) {
        const double d = (px[i] * dx + py[i] * dy) + pz[i] * dz;
        if (d > best) best = d;
    }
    return best;
}

}  // namespace reachkit::kernels::scalar
