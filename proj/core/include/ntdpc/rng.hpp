#pragma once

#include <cmath>
#include <cstdint>

namespace ntdpc {

// Counter-based generator: every sample is a pure function of
// (seed, stream, counter), so trajectories are reproducible and
// parallel runs never share state.

constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t seed_combine(std::uint64_t a, std::uint64_t b) {
    return mix64(a ^ mix64(b + 0x632be59bd9b4e019ULL));
}

class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t seed() const { return seed_; }

    // Uniform in (0, 1]; never 0 so log() is safe.
    double uniform01(std::uint64_t stream, std::uint64_t counter) const {
        const std::uint64_t bits = mix64(seed_ + mix64(stream + mix64(counter)));
        return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
    }

    // Uniform in [-amplitude, amplitude).
    double uniform_sym(std::uint64_t stream, std::uint64_t counter, double amplitude) const {
        return amplitude * (2.0 * uniform01(stream, counter) - 1.0 - 0x1.0p-53);
    }

    // Standard normal via Box-Muller on two counter slots.
    double normal(std::uint64_t stream, std::uint64_t counter) const {
        const double u1 = uniform01(stream, 2 * counter);
        const double u2 = uniform01(stream, 2 * counter + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

private:
    std::uint64_t seed_;
};

// Stream ids keep independent sample sources from colliding.
namespace rng_stream {
constexpr std::uint64_t pe_input = 0x5045u;      // persistently exciting input
constexpr std::uint64_t data_noise = 0xDA7Au;    // measurement noise during collection
constexpr std::uint64_t loop_noise = 0x100Fu;    // measurement noise in closed loop
constexpr std::uint64_t mc_run = 0x4D43u;        // per-run seed derivation
}  // namespace rng_stream

}  // namespace ntdpc
