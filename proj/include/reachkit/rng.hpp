#ifndef REACHKIT_RNG_HPP
#define REACHKIT_RNG_HPP

#include <Eigen/Core>
#include <cmath>
#include <cstdint>

namespace reachkit {

// Deterministic 64-bit generator (splitmix64). Audits derive one stream per
// trial from (seed, trial index), so reports do not depend on evaluation
// order or thread schedule.
class Rng {
   public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    static Rng for_trial(std::uint64_t seed, std::uint64_t trial) {
        // decorrelate the per-trial substreams
        Rng r(seed ^ (0x9e3779b97f4a7c15ULL * (trial + 1)));
        r.next_u64();
        return r;
    }

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() {
        // Box-Muller; one value per call keeps the stream layout simple
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    Eigen::Vector3d unit_vector() {
        Eigen::Vector3d v;
        do {
            v = Eigen::Vector3d(normal(), normal(), normal());
        } while (v.norm() < 1e-12);
        return v.normalized();
    }

    // uniform over the solid ball of given radius
    Eigen::Vector3d in_ball(double radius) {
        return unit_vector() * (radius * std::cbrt(uniform()));
    }

   private:
    std::uint64_t state_;
};

}  // namespace reachkit

#endif  // REACHKIT_RNG_HPP
