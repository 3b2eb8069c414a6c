#ifndef REACHKIT_KERNELS_HPP
#define REACHKIT_KERNELS_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

// Data-parallel inner loops for the containment audits: point-vs-halfspace
// margins, two-focus distance sums, and support values over point clouds.
// A scalar reference implementation always exists; an AVX2 variant is
// selected at runtime when the CPU supports it. Both are compiled without
// FP contraction so results agree bitwise and can be equivalence-tested.

namespace reachkit::kernels {

enum class Backend { scalar, avx2 };

// Halfspaces in structure-of-arrays form. Margin of point p against plane j
// is nx[j]*px + ny[j]*py + nz[j]*pz + h[j]; inside means all margins <= 0.
struct PlaneSoA {
    std::vector<double> nx, ny, nz, h;

    std::size_t size() const { return nx.size(); }
    void add(double nx_, double ny_, double nz_, double h_) {
        nx.push_back(nx_);
        ny.push_back(ny_);
        nz.push_back(nz_);
        h.push_back(h_);
    }
};

// Backend currently used by the dispatching entry points below.
Backend active_backend();
const char* backend_name(Backend b);
bool avx2_supported();

// Force a backend (tests and the REACHKIT_KERNELS=scalar|avx2 env override).
// Throws std::runtime_error if the requested backend is unavailable.
void force_backend(Backend b);

// max_j margin(planes_j, p); -inf when the plane set is empty.
double max_plane_margin(const PlaneSoA& planes, double px, double py, double pz);

// out[i] = max_j margin(planes_j, point_i)
void batch_max_plane_margin(const PlaneSoA& planes, std::span<const double> px,
                            std::span<const double> py, std::span<const double> pz,
                            std::span<double> out);

// out[i] = |p_i - f0| + |p_i - f1|
void two_focus_sums(std::span<const double> px, std::span<const double> py,
                    std::span<const double> pz, const double f0[3], const double f1[3],
                    std::span<double> out);

// support value max_i d . p_i over a point cloud; -inf when empty
double max_dot(std::span<const double> px, std::span<const double> py,
               std::span<const double> pz, double dx, double dy, double dz);

// Per-backend entry points, used directly by the equivalence tests.
namespace scalar {
double max_plane_margin(const PlaneSoA&, double, double, double);
void batch_max_plane_margin(const PlaneSoA&, std::span<const double>, std::span<const double>,
                            std::span<const double>, std::span<double>);
void two_focus_sums(std::span<const double>, std::span<const double>, std::span<const double>,
                    const double[3], const double[3], std::span<double>);
double max_dot(std::span<const double>, std::span<const double>, std::span<const double>, double,
               double, double);
}  // namespace scalar

#ifdef __x86_64__
namespace avx2 {
double max_plane_margin(const PlaneSoA&, double, double, double);
void batch_max_plane_margin(const PlaneSoA&, std::span<const double>, std::span<const double>,
                            std::span<const double>, std::span<double>);
void two_focus_sums(std::span<const double>, std::span<const double>, std::span<const double>,
                    const double[3], const double[3], std::span<double>);
double max_dot(std::span<const double>, std::span<const double>, std::span<const double>, double,
               double, double);
}  // namespace avx2
#endif

}  // namespace reachkit::kernels

#endif  // REACHKIT_KERNELS_HPP
