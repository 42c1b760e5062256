#pragma once

#include "freshcl/matrix.hpp"
#include "freshcl/optim.hpp"
#include "freshcl/rng.hpp"

#include <vector>

namespace freshcl {

// Sparse gating over experts: exactly k_top nonzero weights, softmax-
// normalized among the selected logits, everything else exactly zero.
struct GatingResult {
    std::vector<int> selected;   // k_top expert indices, descending logit order
    std::vector<double> weights; // length n_experts, nonzero only at selected
    std::vector<double> logits;  // raw router outputs
};

struct RouterGrad {
    Matrix d_weights;
    std::vector<double> d_bias;
};

// One router per task: a single linear layer with bias over backbone
// features. Frozen once its task completes.
struct Router {
    Router() = default;
    Router(int task_id, std::size_t d_in, std::size_t n_experts, Rng& rng);

    GatingResult gate(const std::vector<double>& feature, std::size_t k_top) const;

    // d(sum_j G_j L_j)/d(router params) given the per-expert losses at the
    // selected experts, in selection order. Unselected logits get zero
    // gradient (hard top-k).
    RouterGrad gate_grad(const std::vector<double>& feature, const GatingResult& gating,
                         const std::vector<double>& selected_losses) const;

    std::size_t n_experts() const { return weights.rows(); }

    int task_id = 0;
    Matrix weights; // n_experts x d_in
    std::vector<double> bias;
    bool frozen = false;
    AdamWState opt_weights;
    AdamWState opt_bias;
};

} // namespace freshcl
