#pragma once

#include "freshcl/data.hpp"
#include "freshcl/trainer.hpp"

#include <optional>
#include <string>
#include <vector>

namespace freshcl {

enum class IdMode { oracle, pseudo };

// a[t_trained][t_eval] for t_eval <= t_trained: test accuracy on task
// t_eval after finishing training on task t_trained.
struct AccuracyMatrix {
    std::vector<std::vector<double>> rows;

    std::size_t n_tasks() const { return rows.size(); }
    double at(std::size_t t_trained, std::size_t t_eval) const {
        return rows[t_trained][t_eval];
    }
};

struct SeparationReport {
    double within_class_cosine = 0.0;
    double between_class_cosine = 0.0;
    double separation_gap = 0.0;
};

// Resolve the task (given id or nearest prototype), gate with that task's
// router, then score each of the task's classes by the gating-weighted dot
// between the class target and the expert embedding. Ties to the lower
// class id. The query is normalized first, so positive scaling of the
// feature cannot change the decision.
int predict(const ModelState& state, const std::vector<double>& feature, int k_top,
            std::optional<int> oracle_task_id);

double task_accuracy(const ModelState& state, const TaskDataset& dataset, int k_top, IdMode mode);

AccuracyMatrix evaluate_sequence(const std::vector<ModelState>& states_after_each_task,
                                 const std::vector<TaskDataset>& datasets, int k_top, IdMode mode);

// Mean of the final row.
double last_accuracy(const AccuracyMatrix& m);

// Per task tau < T-1: max_t a[t][tau] - a[T-1][tau].
std::vector<double> forgetting(const AccuracyMatrix& m);

SeparationReport separation_from_embeddings(const std::vector<std::vector<double>>& embeddings,
                                            const std::vector<int>& labels);

// Embeds each test feature through its top-1 routed expert (the task's own
// router) and reports mean within/between class cosines.
SeparationReport separation_report(const ModelState& state, const TaskDataset& dataset, int k_top);

void write_accuracy_matrix_csv(const AccuracyMatrix& m, const std::string& path);
AccuracyMatrix read_accuracy_matrix_csv(const std::string& path);

} // namespace freshcl
