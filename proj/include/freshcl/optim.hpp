#pragma once

#include "freshcl/matrix.hpp"

#include <cstdint>

namespace freshcl {

struct AdamWParams {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
};

struct AdamWState {
    AdamWState() = default;
    AdamWState(std::size_t rows, std::size_t cols)
        : first_moment(rows, cols), second_moment(rows, cols) {}

    std::uint64_t step = 0;
    Matrix first_moment;
    Matrix second_moment;
};

// Decoupled weight decay (applied before the moment update), bias-corrected
// moments. Mutates param and state in place.
void adamw_step(Matrix& param, const Matrix& grad, AdamWState& state, const AdamWParams& hp);

} // namespace freshcl
