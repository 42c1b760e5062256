#include "freshcl/eval.hpp"
#include "freshcl/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace freshcl {

int predict(const ModelState& state, const std::vector<double>& feature, int k_top,
            std::optional<int> oracle_task_id) {
    if (state.routers.empty()) {
        throw StateError("predict on an untrained model");
    }
    const std::vector<double> query = l2_normalize(feature);
    const int task = oracle_task_id ? *oracle_task_id : identify_task(state.prototypes, query);
    const auto router_it = state.routers.find(task);
    if (router_it == state.routers.end()) {
        throw StateError("no router for task " + std::to_string(task));
    }
    const auto classes_it = state.task_classes.find(task);
    if (classes_it == state.task_classes.end() || classes_it->second.empty()) {
        throw StateError("no classes registered for task " + std::to_string(task));
    }

    const GatingResult gating = router_it->second.gate(query, static_cast<std::size_t>(k_top));
    std::vector<std::vector<double>> embeddings;
    embeddings.reserve(gating.selected.size());
    for (int idx : gating.selected) {
        embeddings.push_back(state.experts[static_cast<std::size_t>(idx)].project(query));
    }

    int best_class = classes_it->second.front();
    double best_score = -std::numeric_limits<double>::infinity();
    for (int c : classes_it->second) {
        const std::size_t col = static_cast<std::size_t>(state.class_registry.at(c));
        double score = 0.0;
        for (std::size_t i = 0; i < gating.selected.size(); ++i) {
            const int idx = gating.selected[i];
            const Expert& expert = state.experts[static_cast<std::size_t>(idx)];
            score += gating.weights[static_cast<std::size_t>(idx)] *
                     dot(column(expert.frame.targets, col), embeddings[i]);
        }
        if (score > best_score) {
            best_score = score;
            best_class = c;
        }
    }
    return best_class;
}

double task_accuracy(const ModelState& state, const TaskDataset& dataset, int k_top, IdMode mode) {
    if (dataset.test.empty()) {
        throw ParameterError("task_accuracy requires a nonempty test split");
    }
    std::size_t correct = 0;
    for (const Sample& s : dataset.test) {
        const std::optional<int> oracle =
            (mode == IdMode::oracle) ? std::optional<int>(dataset.task_id) : std::nullopt;
        if (predict(state, s.feature, k_top, oracle) == s.class_id) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(dataset.test.size());
}

AccuracyMatrix evaluate_sequence(const std::vector<ModelState>& states_after_each_task,
                                 const std::vector<TaskDataset>& datasets, int k_top, IdMode mode) {
    if (states_after_each_task.size() != datasets.size()) {
        throw StateError("need one model snapshot per task");
    }
    AccuracyMatrix m;
    m.rows.resize(datasets.size());
    for (std::size_t t = 0; t < datasets.size(); ++t) {
        m.rows[t].resize(t + 1, 0.0);
        for (std::size_t tau = 0; tau <= t; ++tau) {
            m.rows[t][tau] = task_accuracy(states_after_each_task[t], datasets[tau], k_top, mode);
        }
    }
    return m;
}

double last_accuracy(const AccuracyMatrix& m) {
    const std::size_t t = m.n_tasks();
    if (t == 0 || m.rows.back().size() != t) {
        throw StateError("last_accuracy requires a complete final row");
    }
    double sum = 0.0;
    for (double a : m.rows.back()) sum += a;
    return sum / static_cast<double>(t);
}

std::vector<double> forgetting(const AccuracyMatrix& m) {
    const std::size_t t = m.n_tasks();
    if (t == 0 || m.rows.back().size() != t) {
        throw StateError("forgetting requires a complete final row");
    }
    std::vector<double> out;
    for (std::size_t tau = 0; tau + 1 < t; ++tau) {
        double best = 0.0;
        for (std::size_t row = tau; row < t; ++row) {
            best = std::max(best, m.rows[row][tau]);
        }
        out.push_back(best - m.rows[t - 1][tau]);
    }
    return out;
}

SeparationReport separation_from_embeddings(const std::vector<std::vector<double>>& embeddings,
                                            const std::vector<int>& labels) {
    if (embeddings.size() != labels.size()) {
        throw DimensionError("one label per embedding required");
    }
    double within_sum = 0.0, between_sum = 0.0;
    std::size_t within_n = 0, between_n = 0;
    for (std::size_t i = 0; i < embeddings.size(); ++i) {
        for (std::size_t j = i + 1; j < embeddings.size(); ++j) {
            const double c = dot(embeddings[i], embeddings[j]);
            if (labels[i] == labels[j]) {
                within_sum += c;
                ++within_n;
            } else {
                between_sum += c;
                ++between_n;
            }
        }
    }
    SeparationReport report;
    report.within_class_cosine = within_n ? within_sum / static_cast<double>(within_n) : 0.0;
    report.between_class_cosine = between_n ? between_sum / static_cast<double>(between_n) : 0.0;
    report.separation_gap = report.within_class_cosine - report.between_class_cosine;
    return report;
}

SeparationReport separation_report(const ModelState& state, const TaskDataset& dataset, int k_top) {
    const auto router_it = state.routers.find(dataset.task_id);
    if (router_it == state.routers.end()) {
        throw StateError("no router for task " + std::to_string(dataset.task_id));
    }
    std::vector<std::vector<double>> embeddings;
    std::vector<int> labels;
    embeddings.reserve(dataset.test.size());
    for (const Sample& s : dataset.test) {
        const GatingResult gating = router_it->second.gate(s.feature, static_cast<std::size_t>(k_top));
        const Expert& top = state.experts[static_cast<std::size_t>(gating.selected.front())];
        embeddings.push_back(top.project(s.feature));
        labels.push_back(s.class_id);
    }
    return separation_from_embeddings(embeddings, labels);
}

void write_accuracy_matrix_csv(const AccuracyMatrix& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open accuracy matrix for writing: " + path);
    }
    out << "t_trained";
    for (std::size_t tau = 0; tau < m.n_tasks(); ++tau) out << ",task" << tau;
    out << '\n';
    char buf[64];
    for (std::size_t t = 0; t < m.n_tasks(); ++t) {
        out << t;
        for (std::size_t tau = 0; tau < m.n_tasks(); ++tau) {
            out << ',';
            if (tau < m.rows[t].size()) {
                std::snprintf(buf, sizeof(buf), "%.17g", m.rows[t][tau]);
                out << buf;
            }
        }
        out << '\n';
    }
    if (!out) {
        throw IoError("failed writing accuracy matrix: " + path);
    }
}

AccuracyMatrix read_accuracy_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open accuracy matrix: " + path);
    }
    AccuracyMatrix m;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 || line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        bool first = true;
        while (std::getline(ss, cell, ',')) {
            if (first) {
                first = false;
                continue;
            }
            if (cell.empty()) continue;
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str()) {
                throw ParseError("malformed accuracy value '" + cell + "'", line_no);
            }
            row.push_back(v);
        }
        m.rows.push_back(std::move(row));
    }
    return m;
}

} // namespace freshcl
