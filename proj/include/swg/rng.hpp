#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

#include "swg/common.hpp"

namespace swg {

// Counter-addressed random stream. Stream (seed, index) is an independent
// substream: work item i always draws from stream (seed, i) no matter how
// work is scheduled, which is what makes simulations and restarts
// reproducible under any thread count. The engine is mt19937_64 (bit-exact
// across platforms by specification); the variate transforms below are
// hand-rolled for the same reason.
class RngStream {
  public:
    RngStream(std::uint64_t seed, std::uint64_t index)
        : engine_(mix(seed ^ mix(index + 0x9e3779b97f4a7c15ULL))) {}

    // Uniform on the open interval (0, 1).
    double uniform() {
        const std::uint64_t x = engine_();
        return (static_cast<double>(x >> 11) + 0.5) * (1.0 / 9007199254740992.0);
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller, caching the paired draw.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586477 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double sd) { return mean + sd * normal(); }

    // Exponential with the given mean.
    double exponential_mean(double mean) { return -std::log(uniform()) * mean; }

    // Index drawn from the given (normalized) probability vector by a
    // cumulative walk; numerical spill lands on the last positive entry.
    int discrete(std::span<const double> probs) {
        const double u = uniform();
        double c = 0.0;
        int last_positive = -1;
        for (size_t i = 0; i < probs.size(); ++i) {
            if (probs[i] > 0.0) last_positive = static_cast<int>(i);
            c += probs[i];
            if (u < c) return static_cast<int>(i);
        }
        if (last_positive < 0)
            throw InvalidParameterError("discrete draw from an all-zero probability vector");
        return last_positive;
    }

  private:
    static std::uint64_t mix(std::uint64_t z) {
        // splitmix64 finalizer
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace swg
