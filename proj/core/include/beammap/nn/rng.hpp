#pragma once

#include <cstdint>
#include <random>

namespace beammap::nn {

// Deterministic RNG. The engine sequence is fixed by the standard and the
// uniform/normal transforms are implemented here, so identical seeds give
// bit-identical draws on every platform. std::*_distribution is avoided on
// purpose: its output is implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    // Independent substream k of a master seed. Streams with different ids
    // never share state, so per-item draws do not depend on processing order.
    static Rng stream(std::uint64_t master_seed, std::uint64_t stream_id);

    std::uint64_t next_u64();

    double uniform();                      // [0, 1), 53-bit resolution
    double uniform(double lo, double hi);  // [lo, hi)
    double normal();                       // N(0, 1), Box-Muller
    double normal(double mean, double stddev);
    std::size_t uniform_index(std::size_t n);  // {0, ..., n-1}, unbiased

private:
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// SplitMix64 finalizer; used for seed derivation and stable hashing.
std::uint64_t splitmix64(std::uint64_t x);

}  // namespace beammap::nn
