#include <cstdlib>
#include <stdexcept>
#include <string>

#include "reachkit/kernels.hpp"

namespace reachkit::kernels {

namespace {

Backend detect_backend() {
    if (const char* env = std::getenv("REACHKIT_KERNELS")) {
        const std::string want(env);
        if (want == "scalar") return Backend::scalar;
        if (want == "avx2") {
            if (!avx2_supported())
                throw std::runtime_error("REACHKIT_KERNELS=avx2 but CPU lacks AVX2");
            return Backend::avx2;
        }
        throw std::runtime_error("unknown REACHKIT_KERNELS value: " + want);
    }
    return avx2_supported() ? Backend::avx2 : Backend::scalar;
}

Backend& backend_slot() {
    static Backend b = detect_backend();
    return b;
}

}  // namespace

bool avx2_supported() {
#if defined(__x86_64__) && defined(REACHKIT_HAVE_AVX2)
    return __builtin_cpu_supports("avx2") != 0;
#else
    return false;
#endif
}

Backend active_backend() { return backend_slot(); }

const char* backend_name(Backend b) { return b == Backend::avx2 ? "avx2" : "scalar"; }

void force_backend(Backend b) {
    if (b == Backend::avx2 && !avx2_supported())
        throw std::runtime_error("AVX2 backend unavailable on this CPU/build");
    backend_slot() = b;
}

#if defined(__x86_64__) && defined(REACHKIT_HAVE_AVX2)
#define REACHKIT_DISPATCH(fn, ...) \
    return active_backend() == Backend::avx2 ? avx2::fn(__VA_ARGS__) : scalar::fn(__VA_ARGS__)
#define REACHKIT_DISPATCH_VOID(fn, ...)                                            \
    if (active_backend() == Backend::avx2) {                                       \
        avx2::fn(__VA_ARGS__);                                                     \
    } else {                                                                       \
        scalar::fn(__VA_ARGS__);                                                   \
    }
#else
#define REACHKIT_DISPATCH(fn, ...) return scalar::fn(__VA_ARGS__)
#define REACHKIT_DISPATCH_VOID(fn, ...) scalar::fn(__VA_ARGS__)
#endif

double max_plane_margin(const PlaneSoA& planes, double px, double py, double pz) {
    REACHKIT_DISPATCH(max_plane_margin, planes, px, py, pz);
}

void batch_max_plane_margin(const PlaneSoA& planes, std::span<const double> px,
                            std::span<const double> py, std::span<const double> pz,
                            std::span<double> out) {
    REACHKIT_DISPATCH_VOID(batch_max_plane_margin, planes, px, py, pz, out);
}

void two_focus_sums(std::span<const double> px, std::span<const double> py,
                    std::span<const double> pz, const double f0[3], const double f1[3],
                    std::span<double> out) {
    REACHKIT_DISPATCH_VOID(two_focus_sums, px, py, pz, f0, f1, out);
}

double max_dot(std::span<const double> px, std::span<const double> py, std::span<const double> pz,
               double dx, double dy, double dz) {
    REACHKIT_DISPATCH(max_dot, px, py, pz, dx, dy, dz);
}

}  // namespace reachkit::kernels
