#pragma once

#include "freshcl/rng.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace freshcl {

struct Sample {
    std::vector<double> feature;
    int class_id = 0;
};

// One task of the synthetic benchmark: unit-norm feature clusters with a
// globally disjoint label range.
struct TaskDataset {
    int task_id = 0;
    std::vector<int> class_ids;
    std::vector<Sample> train;
    std::vector<Sample> test;
    std::uint64_t domain_seed = 0;
};

struct SequenceSpec {
    int n_tasks = 3;
    int classes_per_task = 4;
    int d_in = 64;
    int samples_per_class_train = 100;
    int samples_per_class_test = 20;
    double noise_sigma = 0.05;
    double inter_class_min_angle_deg = 60.0;
    bool inter_task_rotation = true;
    std::uint64_t seed = 1;
};

// Draws per-task class mean directions on the unit sphere (rejection
// sampled to keep pairwise angles above the minimum), optionally applies a
// task-specific random orthogonal map as the domain shift, then samples
// normalize(mean + sigma * noise) around each mean.
std::vector<TaskDataset> gen_sequence(const SequenceSpec& spec);

// CSV: header "dim,<d>", rows "task_id,class_id,split,f_1,...,f_d" with 17
// significant digits, lossless on round trip.
void save_dataset(const TaskDataset& ds, const std::string& path);
TaskDataset load_dataset(const std::string& path);

} // namespace freshcl
