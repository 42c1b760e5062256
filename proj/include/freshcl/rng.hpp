#pragma once

#include "freshcl/matrix.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace freshcl {

// xoshiro256** (Blackman/Vigna) seeded through splitmix64. The same seed
// produces the same stream on every platform, which is what makes whole
// runs byte-reproducible.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();

    // Uniform in [0, 1), 53-bit resolution.
    double next_double();
    // Uniform in (0, 1]; safe as a log() argument.
    double next_open_double();
    // Uniform integer in [0, n).
    std::uint64_t next_index(std::uint64_t n);

    const std::array<std::uint64_t, 4>& state() const { return state_; }

private:
    std::array<std::uint64_t, 4> state_;
};

std::uint64_t splitmix64(std::uint64_t& x);

// Box-Muller over the seeded stream; two uniforms consumed per sample.
std::vector<double> gaussian(Rng& rng, std::size_t n, double mean, double stddev);

Matrix gaussian_matrix(Rng& rng, std::size_t rows, std::size_t cols, double mean = 0.0,
                       double stddev = 1.0);

} // namespace freshcl
