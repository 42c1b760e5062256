#include "freshcl/rng.hpp"
#include "freshcl/errors.hpp"

#include <cmath>
#include <numbers>

namespace freshcl {

namespace {

inline std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

} // namespace

std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

Rng::Rng(std::uint64_t seed) {
    std::uint64_t x = seed;
    for (auto& s : state_) s = splitmix64(x);
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double Rng::next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::next_open_double() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

std::uint64_t Rng::next_index(std::uint64_t n) {
    if (n == 0) {
        throw ParameterError("next_index requires n > 0");
    }
    return next_u64() % n;
}

std::vector<double> gaussian(Rng& rng, std::size_t n, double mean, double stddev) {
    if (stddev < 0.0) {
        throw ParameterError("gaussian stddev must be nonnegative");
    }
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double u1 = rng.next_open_double();
        const double u2 = rng.next_double();
        const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
        out[i] = mean + stddev * z;
    }
    return out;
}

Matrix gaussian_matrix(Rng& rng, std::size_t rows, std::size_t cols, double mean, double stddev) {
    return Matrix(rows, cols, gaussian(rng, rows * cols, mean, stddev));
}

} // namespace freshcl
