#pragma once

#include "freshcl/matrix.hpp"
#include "freshcl/rng.hpp"

#include <cstddef>
#include <vector>

namespace freshcl {

// K unit pseudo-target vectors in d dimensions (columns of `targets`),
// pairwise inner product -1/(K-1), columns summing to zero. Fixed once
// generated; classes are aligned to its columns, never the other way round.
struct EtfFrame {
    std::size_t dim = 0;
    std::size_t num_targets = 0;
    Matrix targets; // dim x num_targets
};

struct EtfReport {
    double max_gram_deviation = 0.0;
    double max_norm_deviation = 0.0;
    double column_sum_norm = 0.0;
    bool within_tolerance = false;
};

// W = sqrt(K/(K-1)) * U * (I - 11^T/K) with U a random d x K orthonormal
// basis from QR of a Gaussian draw. Requires 2 <= k <= d.
EtfFrame generate_etf(std::size_t d, std::size_t k, Rng& rng);

// Measures the frame against the ideal Gram matrix
// (K/(K-1)) I - (1/(K-1)) 11^T. Pure diagnosis.
EtfReport validate_etf(const EtfFrame& frame, double tol = 1e-9);

// 0.5 * (w_y . mu_hat - 1)^2 for a unit feature mu_hat.
double dr_loss(const std::vector<double>& feature_hat, const EtfFrame& frame,
               std::size_t label_index);

// Gradient of dr_loss(normalize(feature)) w.r.t. the raw feature:
// (s - 1)/||mu|| * (w_y - s * mu_hat), which is tangent to the sphere.
std::vector<double> dr_loss_grad(const std::vector<double>& feature, const EtfFrame& frame,
                                 std::size_t label_index);

} // namespace freshcl
