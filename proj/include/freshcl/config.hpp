#pragma once

#include "freshcl/data.hpp"
#include "freshcl/trainer.hpp"

#include <string>
#include <vector>

namespace freshcl {

// Flat run configuration shared by every CLI command. JSON on disk; CLI
// flags override file values; parse -> dump -> parse is a fixpoint.
struct RunConfig {
    // sequence
    int n_tasks = 3;
    int classes_per_task = 4;
    int d_in = 64;
    int d_out = 0; // 0 means: match d_in
    int samples_per_class_train = 100;
    int samples_per_class_test = 20;
    double noise_sigma = 0.05;
    double inter_class_min_angle_deg = 60.0;
    bool inter_task_rotation = true;

    // training
    int n_experts = 22;
    int k_top = 2;
    int k_freeze = 2;
    int iterations = 1000;
    int batch_size = 32;
    double lr = 1e-3;
    std::uint64_t seed = 1;

    // run plumbing
    std::string id_mode = "both"; // oracle | pseudo | both
    std::string output_dir = "out";
    std::string checkpoint_path; // defaults to output_dir when empty
    std::vector<int> ablation_expert_counts = {1, 2, 4, 8};
    int ablation_seeds = 5;

    SequenceSpec sequence_spec() const;
    TrainConfig train_config() const;
    std::string checkpoint_dir() const { return checkpoint_path.empty() ? output_dir : checkpoint_path; }
};

std::string dump_config(const RunConfig& config);
RunConfig parse_config(const std::string& json_text);
RunConfig load_config_file(const std::string& path);

} // namespace freshcl
