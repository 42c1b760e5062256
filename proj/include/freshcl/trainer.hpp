#pragma once

#include "freshcl/data.hpp"
#include "freshcl/expert.hpp"
#include "freshcl/router.hpp"
#include "freshcl/taskid.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace freshcl {

struct TrainConfig {
    int n_experts = 22;
    int k_top = 2;
    int k_freeze = 2;
    int iterations = 1000;
    int batch_size = 32;
    double lr = 1e-3;
    std::uint64_t seed = 1;
    int d_in = 64;
    int d_out = 64;

    AdamWParams adamw() const {
        AdamWParams hp;
        hp.lr = lr;
        return hp;
    }
};

// Everything that persists across tasks. The class registry maps global
// class ids to frame columns, assigned consecutively in task-arrival order;
// it may never outgrow the number of targets (d_out).
struct ModelState {
    std::vector<Expert> experts;
    std::map<int, Router> routers;       // task_id -> router
    std::map<int, int> class_registry;   // global class id -> frame column
    std::map<int, int> class_task;       // global class id -> owning task
    std::map<int, std::vector<int>> task_classes; // task_id -> class ids
    TaskPrototypeBank prototypes;
    int current_task = -1;
    std::vector<std::uint64_t> usage_at_task_start;
};

struct IterationLog {
    int iteration = 0;
    double mean_loss = 0.0;
    std::vector<std::uint64_t> selection_counts; // per expert, this iteration
};

struct TrainLog {
    int task_id = 0;
    std::vector<IterationLog> iterations;
};

struct SampleLossTerm {
    int expert = 0;
    double gate_weight = 0.0;
    double dr = 0.0;
};

struct SampleLossResult {
    double loss = 0.0;
    GatingResult gating;
    std::vector<SampleLossTerm> terms; // selection order
};

// Per-sample gradients of the gated mixture loss w.r.t. every trainable
// tensor it touches. Shared by the training loop and the gradient checks.
struct SampleGrads {
    double loss = 0.0;
    GatingResult gating;
    Matrix router_d_weights;
    std::vector<double> router_d_bias;
    std::vector<std::pair<int, Matrix>> expert_d_projection; // selection order
};

ModelState init_model(const TrainConfig& config, Rng& rng);

// sum over selected experts of G_i * dr_loss(project_i(x), frame_i, col(y)).
SampleLossResult sample_loss(const ModelState& state, int task_id,
                             const std::vector<double>& feature, int class_id, int k_top);

SampleGrads sample_grads(const ModelState& state, int task_id, const std::vector<double>& feature,
                         int class_id, int k_top);

// g_weight * dr_loss_grad(P x) outer x.
Matrix expert_grad(const Expert& expert, const std::vector<double>& feature, std::size_t label_col,
                   double g_weight);

// Registers the task's classes, creates its router, runs the configured
// number of batched iterations (gradients averaged over the batch), records
// expert usage, and stores the task prototype. Touches no other task's data.
TrainLog train_task(ModelState& state, const TaskDataset& dataset, const TrainConfig& config,
                    Rng& rng);

// Freezes the k_freeze not-yet-frozen experts with the highest usage accrued
// during the task just trained (ties to the lower index), plus the task's
// router.
void finalize_task(ModelState& state, int k_freeze);

void write_training_log_csv(const TrainLog& log, const std::string& path);

} // namespace freshcl
