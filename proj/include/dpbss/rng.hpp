#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>

namespace dpbss {

// SplitMix64 finalizer. Spreads raw seeds before they reach the engine and
// derives per-stream seeds for multi-chain runs.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Seed for stream `stream` of a run keyed by `base`. Pure function of its
// inputs, so parallel chains are reproducible regardless of thread schedule.
inline std::uint64_t derive_stream_seed(std::uint64_t base, std::uint64_t stream) {
    return splitmix64(base + 0x9e3779b97f4a7c15ULL * (stream + 1));
}

// Deterministic RNG. All draws go through the helpers below rather than
// std:: distributions (whose output is implementation-defined), so traces
// are bit-identical for a given seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1) with 53-bit resolution.
    double next_double() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Uniform on [-a, a).
    double next_symmetric(double a) { return (2.0 * next_double() - 1.0) * a; }

    // Uniform integer in [0, bound); rejection sampling, no modulo bias.
    std::uint64_t next_index(std::uint64_t bound) {
        if (bound == 0)
            throw std::invalid_argument("Rng::next_index: bound must be positive");
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = engine_();
            if (r >= threshold)
                return r % bound;
        }
    }

private:
    std::mt19937_64 engine_;
};

} // namespace dpbss
