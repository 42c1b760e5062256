#include "freshcl/pipeline.hpp"
#include "freshcl/errors.hpp"

#include <algorithm>
#include <cmath>

namespace freshcl {

SequenceRunResult run_sequence(const std::vector<TaskDataset>& datasets,
                               const TrainConfig& config) {
    Rng rng(config.seed);
    ModelState state = init_model(config, rng);

    SequenceRunResult result;
    result.states.reserve(datasets.size());
    for (const TaskDataset& ds : datasets) {
        result.logs.push_back(train_task(state, ds, config, rng));
        finalize_task(state, config.k_freeze);
        result.states.push_back(state);
    }
    return result;
}

SequenceMetrics evaluate_run(const SequenceRunResult& run, const std::vector<TaskDataset>& datasets,
                             int k_top) {
    SequenceMetrics metrics;
    metrics.accuracy_oracle = evaluate_sequence(run.states, datasets, k_top, IdMode::oracle);
    metrics.accuracy_pseudo = evaluate_sequence(run.states, datasets, k_top, IdMode::pseudo);
    metrics.a_last_oracle = last_accuracy(metrics.accuracy_oracle);
    metrics.a_last_pseudo = last_accuracy(metrics.accuracy_pseudo);
    metrics.forgetting_oracle = forgetting(metrics.accuracy_oracle);
    if (!metrics.forgetting_oracle.empty()) {
        double sum = 0.0;
        for (double f : metrics.forgetting_oracle) sum += f;
        metrics.mean_forgetting_oracle = sum / static_cast<double>(metrics.forgetting_oracle.size());
    }
    const ModelState& final_state = run.states.back();
    for (const TaskDataset& ds : datasets) {
        metrics.separation.push_back(separation_report(final_state, ds, k_top));
    }
    return metrics;
}

std::vector<AblationRow> run_ablation(const SequenceSpec& base_spec, const TrainConfig& base_config,
                                      const std::vector<int>& expert_counts, int n_seeds) {
    if (expert_counts.empty()) {
        throw ParameterError("ablation needs at least one expert count");
    }
    if (n_seeds < 1) {
        throw ParameterError("ablation needs at least one seed");
    }

    std::vector<AblationRow> rows;
    for (int n : expert_counts) {
        AblationRow row;
        row.n_experts = n;
        // Only the expert count varies; k_top and k_freeze are clamped to
        // what a pool of n experts can support.
        row.k_freeze = std::min(base_config.k_freeze, n);
        double forgetting_sum = 0.0;
        for (int s = 0; s < n_seeds; ++s) {
            SequenceSpec spec = base_spec;
            spec.seed = base_spec.seed + static_cast<std::uint64_t>(s);
            TrainConfig cfg = base_config;
            cfg.seed = spec.seed;
            cfg.n_experts = n;
            cfg.k_top = std::min(base_config.k_top, n);
            cfg.k_freeze = row.k_freeze;

            const std::vector<TaskDataset> datasets = gen_sequence(spec);
            const SequenceRunResult run = run_sequence(datasets, cfg);
            const SequenceMetrics metrics = evaluate_run(run, datasets, cfg.k_top);
            row.a_last_per_seed.push_back(metrics.a_last_oracle);
            forgetting_sum += metrics.mean_forgetting_oracle;
        }
        double a_sum = 0.0;
        for (double a : row.a_last_per_seed) a_sum += a;
        row.mean_a_last = a_sum / static_cast<double>(n_seeds);
        row.mean_forgetting = forgetting_sum / static_cast<double>(n_seeds);
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace freshcl
