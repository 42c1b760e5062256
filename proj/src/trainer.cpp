#include "freshcl/trainer.hpp"
#include "freshcl/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>

namespace freshcl {

ModelState init_model(const TrainConfig& config, Rng& rng) {
    if (config.n_experts < 1) {
        throw ParameterError("config requires n_experts >= 1");
    }
    if (config.k_top < 1 || config.k_top > config.n_experts) {
        throw ParameterError("config requires 1 <= k_top <= n_experts");
    }
    if (config.k_freeze < 0 || config.k_freeze > config.n_experts) {
        throw ParameterError("config requires 0 <= k_freeze <= n_experts");
    }
    if (config.iterations < 1 || config.batch_size < 1) {
        throw ParameterError("config requires iterations >= 1 and batch_size >= 1");
    }
    ModelState state;
    state.experts.reserve(config.n_experts);
    for (int i = 0; i < config.n_experts; ++i) {
        state.experts.emplace_back(i, config.d_in, config.d_out, rng);
    }
    state.usage_at_task_start.assign(config.n_experts, 0);
    return state;
}

SampleLossResult sample_loss(const ModelState& state, int task_id,
                             const std::vector<double>& feature, int class_id, int k_top) {
    const auto reg = state.class_registry.find(class_id);
    if (reg == state.class_registry.end()) {
        throw RegistryError("class " + std::to_string(class_id) + " is not registered");
    }
    const auto router_it = state.routers.find(task_id);
    if (router_it == state.routers.end()) {
        throw StateError("no router for task " + std::to_string(task_id));
    }
    const std::size_t col = static_cast<std::size_t>(reg->second);

    SampleLossResult result;
    result.gating = router_it->second.gate(feature, static_cast<std::size_t>(k_top));
    for (int idx : result.gating.selected) {
        const Expert& expert = state.experts[static_cast<std::size_t>(idx)];
        const double g = result.gating.weights[static_cast<std::size_t>(idx)];
        const double dr = dr_loss(expert.project(feature), expert.frame, col);
        result.terms.push_back({idx, g, dr});
        result.loss += g * dr;
    }
    return result;
}

Matrix expert_grad(const Expert& expert, const std::vector<double>& feature, std::size_t label_col,
                   double g_weight) {
    if (g_weight == 0.0) {
        return Matrix(expert.projection.rows(), expert.projection.cols());
    }
    const std::vector<double> pre = matvec(expert.projection, feature);
    std::vector<double> d_pre = dr_loss_grad(pre, expert.frame, label_col);
    for (double& v : d_pre) v *= g_weight;
    return outer(d_pre, feature);
}

SampleGrads sample_grads(const ModelState& state, int task_id, const std::vector<double>& feature,
                         int class_id, int k_top) {
    const SampleLossResult fwd = sample_loss(state, task_id, feature, class_id, k_top);
    const std::size_t col = static_cast<std::size_t>(state.class_registry.at(class_id));
    const Router& router = state.routers.at(task_id);

    SampleGrads grads;
    grads.loss = fwd.loss;
    grads.gating = fwd.gating;

    std::vector<double> selected_losses;
    selected_losses.reserve(fwd.terms.size());
    for (const SampleLossTerm& term : fwd.terms) {
        selected_losses.push_back(term.dr);
        const Expert& expert = state.experts[static_cast<std::size_t>(term.expert)];
        grads.expert_d_projection.emplace_back(term.expert,
                                               expert_grad(expert, feature, col, term.gate_weight));
    }
    RouterGrad rg = router.gate_grad(feature, fwd.gating, selected_losses);
    grads.router_d_weights = std::move(rg.d_weights);
    grads.router_d_bias = std::move(rg.d_bias);
    return grads;
}

namespace {

void scale_in_place(Matrix& m, double s) {
    double* p = m.data();
    for (std::size_t i = 0; i < m.size(); ++i) p[i] *= s;
}

void add_in_place(Matrix& acc, const Matrix& g) {
    double* a = acc.data();
    const double* b = g.data();
    for (std::size_t i = 0; i < acc.size(); ++i) a[i] += b[i];
}

} // namespace

TrainLog train_task(ModelState& state, const TaskDataset& dataset, const TrainConfig& config,
                    Rng& rng) {
    if (state.experts.size() != static_cast<std::size_t>(config.n_experts)) {
        throw ContractError("model was initialized with a different expert count");
    }
    if (dataset.train.empty()) {
        throw ParameterError("train_task requires a nonempty train split");
    }
    for (int c : dataset.class_ids) {
        if (state.class_registry.count(c)) {
            throw RegistryError("class " + std::to_string(c) + " is already registered");
        }
    }
    if (state.class_registry.size() + dataset.class_ids.size() >
        static_cast<std::size_t>(config.d_out)) {
        throw CapacityError("registering task " + std::to_string(dataset.task_id) +
                            " would exceed the " + std::to_string(config.d_out) +
                            "-class target capacity");
    }
    if (state.routers.count(dataset.task_id)) {
        throw StateError("task " + std::to_string(dataset.task_id) + " was already trained");
    }

    for (std::size_t i = 0; i < state.experts.size(); ++i) {
        state.usage_at_task_start[i] = state.experts[i].usage_count;
    }
    for (int c : dataset.class_ids) {
        const int col = static_cast<int>(state.class_registry.size());
        state.class_registry.emplace(c, col);
        state.class_task.emplace(c, dataset.task_id);
    }
    state.task_classes.emplace(dataset.task_id, dataset.class_ids);
    state.routers.emplace(dataset.task_id,
                          Router(dataset.task_id, config.d_in, config.n_experts, rng));
    Router& router = state.routers.at(dataset.task_id);

    const AdamWParams hp = config.adamw();
    const std::size_t n_train = dataset.train.size();
    const double inv_batch = 1.0 / static_cast<double>(config.batch_size);

    TrainLog log;
    log.task_id = dataset.task_id;
    log.iterations.reserve(config.iterations);

    Matrix acc_router_w(router.weights.rows(), router.weights.cols());
    Matrix acc_router_b(1, router.bias.size());
    std::vector<Matrix> acc_expert(state.experts.size());
    std::vector<bool> expert_touched(state.experts.size());

    for (int iter = 0; iter < config.iterations; ++iter) {
        std::fill(acc_router_w.data(), acc_router_w.data() + acc_router_w.size(), 0.0);
        std::fill(acc_router_b.data(), acc_router_b.data() + acc_router_b.size(), 0.0);
        std::fill(expert_touched.begin(), expert_touched.end(), false);

        IterationLog ilog;
        ilog.iteration = iter;
        ilog.selection_counts.assign(state.experts.size(), 0);
        double loss_sum = 0.0;

        for (int b = 0; b < config.batch_size; ++b) {
            const Sample& sample = dataset.train[rng.next_index(n_train)];
            SampleGrads grads =
                sample_grads(state, dataset.task_id, sample.feature, sample.class_id, config.k_top);
            loss_sum += grads.loss;

            add_in_place(acc_router_w, grads.router_d_weights);
            for (std::size_t j = 0; j < grads.router_d_bias.size(); ++j) {
                acc_router_b.at(0, j) += grads.router_d_bias[j];
            }
            for (auto& [idx, d_proj] : grads.expert_d_projection) {
                const std::size_t e = static_cast<std::size_t>(idx);
                ilog.selection_counts[e] += 1;
                if (!expert_touched[e]) {
                    acc_expert[e] = std::move(d_proj);
                    expert_touched[e] = true;
                } else {
                    add_in_place(acc_expert[e], d_proj);
                }
            }
        }

        scale_in_place(acc_router_w, inv_batch);
        scale_in_place(acc_router_b, inv_batch);
        adamw_step(router.weights, acc_router_w, router.opt_weights, hp);
        Matrix bias_param(1, router.bias.size(), router.bias);
        adamw_step(bias_param, acc_router_b, router.opt_bias, hp);
        router.bias = bias_param.values();

        for (std::size_t e = 0; e < state.experts.size(); ++e) {
            if (!expert_touched[e]) continue;
            Expert& expert = state.experts[e];
            expert.record_usage(ilog.selection_counts[e]);
            if (expert.frozen()) continue;
            scale_in_place(acc_expert[e], inv_batch);
            adamw_step(expert.projection, acc_expert[e], expert.opt_state, hp);
        }

        ilog.mean_loss = loss_sum * inv_batch;
        log.iterations.push_back(std::move(ilog));
    }

    std::vector<std::vector<double>> features;
    features.reserve(n_train);
    for (const Sample& s : dataset.train) features.push_back(s.feature);
    state.prototypes.prototypes[dataset.task_id] = build_prototype(features);
    state.prototypes.counts[dataset.task_id] = n_train;

    state.current_task = dataset.task_id;
    return log;
}

void finalize_task(ModelState& state, int k_freeze) {
    if (state.current_task < 0) {
        throw StateError("finalize_task before any task was trained");
    }
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < state.experts.size(); ++i) {
        if (!state.experts[i].frozen()) candidates.push_back(i);
    }
    std::sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
        const std::uint64_t da = state.experts[a].usage_count - state.usage_at_task_start[a];
        const std::uint64_t db = state.experts[b].usage_count - state.usage_at_task_start[b];
        if (da != db) return da > db;
        return a < b;
    });
    const std::size_t n_freeze = std::min(candidates.size(), static_cast<std::size_t>(
                                                                 std::max(k_freeze, 0)));
    for (std::size_t i = 0; i < n_freeze; ++i) {
        state.experts[candidates[i]].freeze();
    }
    state.routers.at(state.current_task).frozen = true;
}

void write_training_log_csv(const TrainLog& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open training log for writing: " + path);
    }
    out << "iteration,mean_loss";
    const std::size_t n = log.iterations.empty() ? 0 : log.iterations[0].selection_counts.size();
    for (std::size_t e = 0; e < n; ++e) out << ",sel_" << e;
    out << '\n';
    char buf[64];
    for (const IterationLog& il : log.iterations) {
        std::snprintf(buf, sizeof(buf), "%.17g", il.mean_loss);
        out << il.iteration << ',' << buf;
        for (std::uint64_t c : il.selection_counts) out << ',' << c;
        out << '\n';
    }
    if (!out) {
        throw IoError("failed writing training log: " + path);
    }
}

} // namespace freshcl
