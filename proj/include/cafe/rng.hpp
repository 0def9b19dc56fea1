#pragma once

// Portable pseudo-random streams.
//
// The engine is std::mt19937_64, whose output sequence is fixed by the
// standard. The distribution layer is implemented here instead of using
// <random> distributions, whose algorithms vary between standard libraries.

#include <cstdint>
#include <random>

namespace cafe {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform();

    /// Standard normal draw (Marsaglia polar method, one value per call).
    double normal();

    double normal(double mean, double std) { return mean + std * normal(); }

    /// Uniform integer in [0, n). Unbiased via rejection. Requires n > 0.
    std::uint64_t below(std::uint64_t n);

    /// Seed for an independent stream keyed by (seed, stream), using splitmix64 mixing.
    static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

private:
    std::mt19937_64 engine_;
};

}  // namespace cafe
