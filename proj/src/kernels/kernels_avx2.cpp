#ifdef __x86_64__

#include <immintrin.h>

#include <cmath>
#include <limits>

#include "reachkit/kernels.hpp"

// AVX2 variants. Every lane performs the same multiply/add sequence as the
// scalar reference (explicit mul/add intrinsics, no FMA) and max-reductions
// are order-insensitive over finite doubles, so outputs match the scalar
// backend bitwise. Tails run the scalar code.

namespace reachkit::kernels::avx2 {

namespace {

double hmax(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d m2 = _mm_max_pd(lo, hi);
    const __m128d m1 = _mm_max_sd(m2, _mm_unpackhi_pd(m2, m2));
    return _mm_cvtsd_f64(m1);
}

}  // namespace

double max_plane_margin(const PlaneSoA& planes, double px, double py, double pz) {
    const std::size_t n = planes.size();
    const __m256d vx = _mm256_set1_pd(px);
    const __m256d vy = _mm256_set1_pd(py);
    const __m256d vz = _mm256_set1_pd(pz);
    __m256d vbest = _mm256_set1_pd(-std::numeric_limits<double>::infinity());
    std::size_t j = 0;
    for (; j + 4 <= n; j += 4) {
        const __m256d nx = _mm256_loadu_pd(planes.nx.data() + j);
        const __m256d ny = _mm256_loadu_pd(planes.ny.data() + j);
        const __m256d nz = _mm256_loadu_pd(planes.nz.data() + j);
        const __m256d h = _mm256_loadu_pd(planes.h.data() + j);
        __m256d m = _mm256_add_pd(_mm256_mul_pd(nx, vx), _mm256_mul_pd(ny, vy));
        m = _mm256_add_pd(m, _mm256_mul_pd(nz, vz));
        m = _mm256_add_pd(m, h);
        vbest = _mm256_max_pd(vbest, m);
    }
    double best = hmax(vbest);
    for (; j < n; ++j) {
        const double m = ((planes.nx[j] * px + planes.ny[j] * py) + planes.nz[j] * pz) + planes.h[j];
        if (m > best) best = m;
    }
    return best;
}

void batch_max_plane_margin(const PlaneSoA& planes, std::span<const double> px,
                            std::span<const double> py, std::span<const double> pz,
                            std::span<double> out) {
    const std::size_t n = px.size();
    const std::size_t np = planes.size();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vx = _mm256_loadu_pd(px.data() + i);
        const __m256d vy = _mm256_loadu_pd(py.data() + i);
        const __m256d vz = _mm256_loadu_pd(pz.data() + i);
        __m256d vbest = _mm256_set1_pd(-std::numeric_limits<double>::infinity());
        for (std::size_t j = 0; j < np; ++j) {
            const __m256d nx = _mm256_set1_pd(planes.nx[j]);
            const __m256d ny = _mm256_set1_pd(planes.ny[j]);
            const __m256d nz = _mm256_set1_pd(planes.nz[j]);
            const __m256d h = _mm256_set1_pd(planes.h[j]);
            __m256d m = _mm256_add_pd(_mm256_mul_pd(nx, vx), _mm256_mul_pd(ny, vy));
            m = _mm256_add_pd(m, _mm256_mul_pd(nz, vz));
            m = _mm256_add_pd(m, h);
            vbest = _mm256_max_pd(vbest, m);
        }
        _mm256_storeu_pd(out.data() + i, vbest);
    }
    for (; i < n; ++i) {
        out[i] = scalar::max_plane_margin(planes, px[i], py[i], pz[i]);
    }
}

void two_focus_sums(std::span<const double> px, std::span<const double> py,
                    std::span<const double> pz, const double f0[3], const double f1[3],
                    std::span<double> out) {
    const std::size_t n = px.size();
    const __m256d f0x = _mm256_set1_pd(f0[0]);
    const __m256d f0y = _mm256_set1_pd(f0[1]);
    const __m256d f0z = _mm256_set1_pd(f0[2]);
    const __m256d f1x = _mm256_set1_pd(f1[0]);
    const __m256d f1y = _mm256_set1_pd(f1[1]);
    const __m256d f1z = _mm256_set1_pd(f1[2]);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vx = _mm256_loadu_pd(px.data() + i);
        const __m256d vy = _mm256_loadu_pd(py.data() + i);
        const __m256d vz = _mm256_loadu_pd(pz.data() + i);
        const __m256d a0 = _mm256_sub_pd(vx, f0x);
        const __m256d b0 = _mm256_sub_pd(vy, f0y);
        const __m256d c0 = _mm256_sub_pd(vz, f0z);
        const __m256d a1 = _mm256_sub_pd(vx, f1x);
        const __m256d b1 = _mm256_sub_pd(vy, f1y);
        const __m256d c1 = _mm256_sub_pd(vz, f1z);
        const __m256d q0 = _mm256_add_pd(
            _mm256_add_pd(_mm256_mul_pd(a0, a0), _mm256_mul_pd(b0, b0)), _mm256_mul_pd(c0, c0));
        const __m256d q1 = _mm256_add_pd(
            _mm256_add_pd(_mm256_mul_pd(a1, a1), _mm256_mul_pd(b1, b1)), _mm256_mul_pd(c1, c1));
        const __m256d s = _mm256_add_pd(_mm256_sqrt_pd(q0), _mm256_sqrt_pd(q1));
        _mm256_storeu_pd(out.data() + i, s);
    }
    if (i < n) {
        scalar::two_focus_sums(px.subspan(i), py.subspan(i), pz.subspan(i), f0, f1,
                               out.subspan(i));
    }
}

double max_dot(std::span<const double> px, std::span<const double> py, std::span<const double> pz,
               double dx, double dy, double dz) {
    const std::size_t n = px.size();
    const __m256d vdx = _mm256_set1_pd(dx);
    const __m256d vdy = _mm256_set1_pd(dy);
    const __m256d vdz = _mm256_set1_pd(dz);
    __m256d vbest = _mm256_set1_pd(-std::numeric_limits<double>::infinity());
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vx = _mm256_loadu_pd(px.data() + i);
        const __m256d vy = _mm256_loadu_pd(py.data() + i);
        const __m256d vz = _mm256_loadu_pd(pz.data() + i);
        __m256d d = _mm256_add_pd(_mm256_mul_pd(vx, vdx), _mm256_mul_pd(vy, vdy));
        d = _mm256_add_pd(d, _mm256_mul_pd(vz, vdz));
        vbest = _mm256_max_pd(vbest, d);
    }
    double best = hmax(vbest);
    for (; i < n; ++i) {
        const double d = (px[i] * dx + py[i] * dy) + pz[i] * dz;
        if (d > best) best = d;
    }
    return best;
}

}  // namespace reachkit::kernels::avx2

#endif  // __x86_64__
