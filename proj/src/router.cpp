#include "freshcl/router.hpp"
#include "freshcl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace freshcl {

Router::Router(int task_id_, std::size_t d_in, std::size_t n_experts, Rng& rng)
    : task_id(task_id_) {
    if (n_experts == 0 || d_in == 0) {
        throw ParameterError("router requires n_experts >= 1 and d_in >= 1");
    }
    weights = gaussian_matrix(rng, n_experts, d_in, 0.0, 1.0 / std::sqrt(static_cast<double>(d_in)));
    bias.assign(n_experts, 0.0);
    opt_weights = AdamWState(n_experts, d_in);
    opt_bias = AdamWState(1, n_experts);
}

GatingResult Router::gate(const std::vector<double>& feature, std::size_t k_top) const {
    const std::size_t n = n_experts();
    if (k_top < 1 || k_top > n) {
        throw ParameterError("gate requires 1 <= k_top <= n_experts");
    }
    GatingResult result;
    result.logits = matvec(weights, feature);
    for (std::size_t i = 0; i < n; ++i) result.logits[i] += bias[i];

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    // Descending logit, ties to the lower index.
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (result.logits[a] != result.logits[b]) return result.logits[a] > result.logits[b];
        return a < b;
    });
    result.selected.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k_top));

    std::vector<double> top_logits(k_top);
    for (std::size_t i = 0; i < k_top; ++i) top_logits[i] = result.logits[result.selected[i]];
    const std::vector<double> probs = softmax(top_logits);

    result.weights.assign(n, 0.0);
    for (std::size_t i = 0; i < k_top; ++i) result.weights[result.selected[i]] = probs[i];
    return result;
}

RouterGrad Router::gate_grad(const std::vector<double>& feature, const GatingResult& gating,
                             const std::vector<double>& selected_losses) const {
    if (selected_losses.size() != gating.selected.size()) {
        throw ContractError("gate_grad upstream losses must match the selected count");
    }
    double weighted_sum = 0.0;
    for (std::size_t i = 0; i < gating.selected.size(); ++i) {
        weighted_sum += gating.weights[gating.selected[i]] * selected_losses[i];
    }

    RouterGrad grad;
    grad.d_weights = Matrix(weights.rows(), weights.cols());
    grad.d_bias.assign(n_experts(), 0.0);
    for (std::size_t i = 0; i < gating.selected.size(); ++i) {
        const int j = gating.selected[i];
        const double g = gating.weights[j];
        const double d_logit = g * (selected_losses[i] - weighted_sum);
        grad.d_bias[j] = d_logit;
        for (std::size_t c = 0; c < weights.cols(); ++c) {
            grad.d_weights.at(j, c) = d_logit * feature[c];
        }
    }
    return grad;
}

} // namespace freshcl
