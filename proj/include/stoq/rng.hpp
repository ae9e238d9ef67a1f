#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace stoq {

// Counter-based generator: every draw is a pure function of
// (seed, stream, counter), so trajectories are reproducible regardless of
// how an ensemble is scheduled.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream) : key_(mix(seed ^ mix(stream + 0x632be59bd9b4e019ULL))) {}

    static constexpr std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t bits_at(std::uint64_t counter) const { return mix(key_ ^ mix(counter)); }

    // uniform on (0, 1)
    double uniform_at(std::uint64_t counter) const {
        return (static_cast<double>(bits_at(counter) >> 11) + 0.5) * 0x1.0p-53;
    }

    // Standard normal as a function of an index: Box-Muller on two counters.
    double normal_at(std::uint64_t index) const {
        const double u1 = uniform_at(2 * index);
        const double u2 = uniform_at(2 * index + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    // Sequential interface over the same counters.
    double uniform() { return uniform_at(counter_++); }
    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }
    double exponential(double rate) { return -std::log(uniform()) / rate; }

    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

// Wiener increments dW ~ N(0, dt) indexed by step.
class NoiseStream {
public:
    NoiseStream(std::uint64_t seed, std::uint64_t stream, double dt)
        : rng_(seed, stream), sqrt_dt_(std::sqrt(dt)), seed_(seed), stream_(stream) {}

    double increment(std::uint64_t step) const { return sqrt_dt_ * rng_.normal_at(step); }

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream() const { return stream_; }

private:
    CounterRng rng_;
    double sqrt_dt_;
    std::uint64_t seed_;
    std::uint64_t stream_;
};

}  // namespace stoq
