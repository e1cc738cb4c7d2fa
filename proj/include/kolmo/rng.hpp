#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace kolmo {

/// Deterministic RNG with explicit stream derivation.  Substreams are split
/// off with splitmix64 so parallel or stratified loops stay reproducible
/// regardless of execution order.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(mix(seed)) {}

    Rng split(std::uint64_t streamId) const {
        return Rng(mix(seed_ ^ mix(streamId + 0x9e3779b97f4a7c15ULL)));
    }

    double uniform() {
        return (engine_() >> 11) * (1.0 / 9007199254740992.0);  // [0,1) with 53 bits
    }

    /// Box-Muller, hand-rolled for bit-identical results across platforms.
    double gaussian() {
        if (haveSpare_) {
            haveSpare_ = false;
            return spare_;
        }
        double u1 = uniform(), u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * M_PI * u2;
        spare_ = r * std::sin(a);
        haveSpare_ = true;
        return r * std::cos(a);
    }

    std::uint64_t raw() { return engine_(); }

private:
    static std::uint64_t mix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    std::uint64_t seed_ = 0;
    std::mt19937_64 engine_;
    bool haveSpare_ = false;
    double spare_ = 0.0;
};

}  // namespace kolmo
