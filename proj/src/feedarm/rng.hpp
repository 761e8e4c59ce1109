#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace feedarm {

// Counter-based generator: every draw is a pure function of (seed, stream, counter),
// so results are identical across platforms and independent streams can be split off
// without sharing state.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) : seed_(seed), stream_(stream) {}

    static std::uint64_t mix(std::uint64_t x) {
        x += 0x9E3779B97F4A7C15ULL;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }

    std::uint64_t bits_at(std::uint64_t counter) const {
        return mix(mix(seed_ ^ mix(stream_ + 0x632BE59BD9B4E019ULL)) + counter);
    }

    // Uniform in [0, 1) with 53 random bits.
    double uniform_at(std::uint64_t counter) const {
        return static_cast<double>(bits_at(counter) >> 11) * 0x1.0p-53;
    }

    double uniform() { return uniform_at(counter_++); }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller; consumes two counters per draw.
    double normal(double mean = 0.0, double stddev = 1.0) {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(2.0 * std::numbers::pi * u2);
    }

    CounterRng split(std::uint64_t stream) const { return CounterRng(seed_, mix(stream_ ^ mix(stream))); }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
};

}  // namespace feedarm
