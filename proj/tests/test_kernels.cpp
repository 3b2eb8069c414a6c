#include <cmath>
#include <cstring>
#include <limits>
#include <vector>

#include "doctest.h"
#include "reachkit/kernels.hpp"
#include "reachkit/rng.hpp"

using namespace reachkit;
using kernels::PlaneSoA;

namespace {

struct Cloud {
    std::vector<double> x, y, z;
};

Cloud random_cloud(Rng& rng, std::size_t n, double amp) {
    Cloud c;
    for (std::size_t i = 0; i < n; ++i) {
        c.x.push_back(rng.uniform(-amp, amp));
        c.y.push_back(rng.uniform(-amp, amp));
        c.z.push_back(rng.uniform(-amp, amp));
    }
    return c;
}

PlaneSoA random_planes(Rng& rng, std::size_t n, double amp) {
    PlaneSoA p;
    for (std::size_t i = 0; i < n; ++i) {
        const Eigen::Vector3d d = rng.unit_vector();
        p.add(d.x(), d.y(), d.z(), rng.uniform(-amp, amp));
    }
    return p;
}

bool bitwise_equal(double a, double b) {
    return std::memcmp(&a, &b, sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("scalar margins match a naive implementation") {
    Rng rng(101);
    const PlaneSoA planes = random_planes(rng, 37, 5.0);
    for (int rep = 0; rep < 200; ++rep) {
        const double px = rng.uniform(-10, 10), py = rng.uniform(-10, 10),
                     pz = rng.uniform(-10, 10);
        double naive = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < planes.size(); ++j) {
            naive = std::max(naive,
                             planes.nx[j] * px + planes.ny[j] * py + planes.nz[j] * pz +
                                 planes.h[j]);
        }
        CHECK(kernels::scalar::max_plane_margin(planes, px, py, pz) ==
              doctest::Approx(naive).epsilon(1e-14));
    }
}

TEST_CASE("empty inputs give -inf") {
    const PlaneSoA none;
    CHECK(kernels::scalar::max_plane_margin(none, 1, 2, 3) ==
          -std::numeric_limits<double>::infinity());
    CHECK(kernels::max_dot({}, {}, {}, 1, 0, 0) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("two_focus_sums matches hypot arithmetic") {
    Rng rng(102);
    const Cloud c = random_cloud(rng, 257, 8.0);
    const double f0[3] = {1.0, -2.0, 0.5};
    const double f1[3] = {-0.5, 3.0, 1.5};
    std::vector<double> out(c.x.size());
    kernels::scalar::two_focus_sums(c.x, c.y, c.z, f0, f1, out);
    for (std::size_t i = 0; i < c.x.size(); ++i) {
        const Eigen::Vector3d p(c.x[i], c.y[i], c.z[i]);
        const double want = (p - Eigen::Vector3d(f0[0], f0[1], f0[2])).norm() +
                            (p - Eigen::Vector3d(f1[0], f1[1], f1[2])).norm();
        CHECK(out[i] == doctest::Approx(want).epsilon(1e-14));
    }
}

TEST_CASE("max_dot matches a naive support computation") {
    Rng rng(103);
    const Cloud c = random_cloud(rng, 301, 4.0);
    for (int rep = 0; rep < 100; ++rep) {
        const Eigen::Vector3d d = rng.unit_vector();
        double naive = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < c.x.size(); ++i) {
            naive = std::max(naive, c.x[i] * d.x() + c.y[i] * d.y() + c.z[i] * d.z());
        }
        CHECK(kernels::scalar::max_dot(c.x, c.y, c.z, d.x(), d.y(), d.z()) ==
              doctest::Approx(naive).epsilon(1e-14));
    }
}

TEST_CASE("avx2 backend is bitwise identical to scalar") {
    if (!kernels::avx2_supported()) {
        MESSAGE("AVX2 not available; skipping equivalence checks");
        return;
    }
#ifdef __x86_64__
    Rng rng(104);
    // Sizes straddle the 4-lane width to exercise vector body and tails.
    for (const std::size_t np : {0u, 1u, 3u, 4u, 5u, 8u, 31u, 64u, 257u}) {
        for (const std::size_t npts : {1u, 2u, 4u, 7u, 128u, 1001u}) {
            const PlaneSoA planes = random_planes(rng, np, 50.0);
            const Cloud c = random_cloud(rng, npts, 50.0);
            const double f0[3] = {rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)};
            const double f1[3] = {rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5)};

            std::vector<double> m_s(npts), m_v(npts), s_s(npts), s_v(npts);
            kernels::scalar::batch_max_plane_margin(planes, c.x, c.y, c.z, m_s);
            kernels::avx2::batch_max_plane_margin(planes, c.x, c.y, c.z, m_v);
            kernels::scalar::two_focus_sums(c.x, c.y, c.z, f0, f1, s_s);
            kernels::avx2::two_focus_sums(c.x, c.y, c.z, f0, f1, s_v);
            for (std::size_t i = 0; i < npts; ++i) {
                CHECK(bitwise_equal(m_s[i], m_v[i]));
                CHECK(bitwise_equal(s_s[i], s_v[i]));
            }

            const Eigen::Vector3d d = rng.unit_vector();
            CHECK(bitwise_equal(kernels::scalar::max_dot(c.x, c.y, c.z, d.x(), d.y(), d.z()),
                                kernels::avx2::max_dot(c.x, c.y, c.z, d.x(), d.y(), d.z())));
            CHECK(bitwise_equal(kernels::scalar::max_plane_margin(planes, c.x[0], c.y[0], c.z[0]),
                                kernels::avx2::max_plane_margin(planes, c.x[0], c.y[0], c.z[0])));
        }
    }
#endif
}

TEST_CASE("force_backend switches the dispatching entry points") {
    const kernels::Backend original = kernels::active_backend();

    kernels::force_backend(kernels::Backend::scalar);
    CHECK(kernels::active_backend() == kernels::Backend::scalar);
    PlaneSoA planes;
    planes.add(1, 0, 0, -2.0);
    CHECK(kernels::max_plane_margin(planes, 5, 0, 0) == doctest::Approx(3.0));

    if (kernels::avx2_supported()) {
        kernels::force_backend(kernels::Backend::avx2);
        CHECK(kernels::active_backend() == kernels::Backend::avx2);
        CHECK(kernels::max_plane_margin(planes, 5, 0, 0) == doctest::Approx(3.0));
    } else {
        CHECK_THROWS(kernels::force_backend(kernels::Backend::avx2));
    }
    kernels::force_backend(original);
}

TEST_CASE("backend names") {
    CHECK(std::string(kernels::backend_name(kernels::Backend::scalar)) == "scalar");
    CHECK(std::string(kernels::backend_name(kernels::Backend::avx2)) == "avx2");
}
