#include "freshcl/taskid.hpp"
#include "freshcl/errors.hpp"
#include "freshcl/matrix.hpp"

namespace freshcl {

std::vector<double> build_prototype(const std::vector<std::vector<double>>& features) {
    if (features.empty()) {
        throw ParameterError("build_prototype requires at least one feature");
    }
    std::vector<double> mean(features[0].size(), 0.0);
    for (const auto& f : features) {
        if (f.size() != mean.size()) {
            throw DimensionError("build_prototype features must share one dimension");
        }
        for (std::size_t i = 0; i < f.size(); ++i) mean[i] += f[i];
    }
    for (double& v : mean) v /= static_cast<double>(features.size());
    return l2_normalize(mean);
}

int identify_task(const TaskPrototypeBank& bank, const std::vector<double>& feature) {
    if (bank.empty()) {
        throw StateError("identify_task on an empty prototype bank");
    }
    const std::vector<double> q = l2_normalize(feature);
    int best_task = bank.prototypes.begin()->first;
    double best_cos = -2.0;
    for (const auto& [task, proto] : bank.prototypes) {
        const double c = dot(q, proto);
        if (c > best_cos) {
            best_cos = c;
            best_task = task;
        }
    }
    return best_task;
}

} // namespace freshcl
