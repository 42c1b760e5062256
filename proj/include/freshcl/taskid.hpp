#pragma once

#include <cstdint>
#include <map>
#include <vector>

namespace freshcl {

// Nearest-prototype task identifier: one unit mean-feature vector per
// trained task, matched by cosine similarity at inference time.
struct TaskPrototypeBank {
    std::map<int, std::vector<double>> prototypes; // task_id -> unit vector
    std::map<int, std::uint64_t> counts;           // task_id -> samples used

    bool empty() const { return prototypes.empty(); }
};

// normalize(mean(features)).
std::vector<double> build_prototype(const std::vector<std::vector<double>>& features);

// argmax over tasks of cosine(feature, prototype); ties to the lower id.
int identify_task(const TaskPrototypeBank& bank, const std::vector<double>& feature);

} // namespace freshcl
