#pragma once

#include "freshcl/eval.hpp"

#include <vector>

namespace freshcl {

// Trains the task sequence in order (train + freeze per task), keeping a
// model snapshot after each task.
struct SequenceRunResult {
    std::vector<ModelState> states; // snapshot after each finalized task
    std::vector<TrainLog> logs;
};

SequenceRunResult run_sequence(const std::vector<TaskDataset>& datasets, const TrainConfig& config);

struct SequenceMetrics {
    AccuracyMatrix accuracy_oracle;
    AccuracyMatrix accuracy_pseudo;
    double a_last_oracle = 0.0;
    double a_last_pseudo = 0.0;
    std::vector<double> forgetting_oracle;
    double mean_forgetting_oracle = 0.0;
    std::vector<SeparationReport> separation; // per task, on the final state
};

SequenceMetrics evaluate_run(const SequenceRunResult& run, const std::vector<TaskDataset>& datasets,
                             int k_top);

struct AblationRow {
    int n_experts = 0;
    int k_freeze = 0;
    std::vector<double> a_last_per_seed;
    double mean_a_last = 0.0;
    double mean_forgetting = 0.0;
};

std::vector<AblationRow> run_ablation(const SequenceSpec& base_spec, const TrainConfig& base_config,
                                      const std::vector<int>& expert_counts, int n_seeds);

} // namespace freshcl
