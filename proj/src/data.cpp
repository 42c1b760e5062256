#include "freshcl/data.hpp"
#include "freshcl/errors.hpp"
#include "freshcl/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace freshcl {

namespace {

constexpr int kMaxRejections = 10000;

std::vector<double> unit_direction(Rng& rng, std::size_t d) {
    return l2_normalize(gaussian(rng, d, 0.0, 1.0));
}

std::vector<std::vector<double>> draw_class_means(Rng& rng, const SequenceSpec& spec) {
    const double max_cos = std::cos(spec.inter_class_min_angle_deg * std::numbers::pi / 180.0);
    std::vector<std::vector<double>> means;
    int rejections = 0;
    while (means.size() < static_cast<std::size_t>(spec.classes_per_task)) {
        std::vector<double> candidate = unit_direction(rng, spec.d_in);
        bool ok = true;
        for (const auto& m : means) {
            if (dot(candidate, m) >= max_cos) {
                ok = false;
                break;
            }
        }
        if (ok) {
            means.push_back(std::move(candidate));
        } else if (++rejections >= kMaxRejections) {
            throw InfeasibleSpecError("infeasible-spec: class mean rejection sampling exhausted");
        }
    }
    return means;
}

Sample make_sample(Rng& rng, const std::vector<double>& mean, double sigma, int class_id) {
    std::vector<double> noise = gaussian(rng, mean.size(), 0.0, 1.0);
    std::vector<double> f(mean.size());
    for (std::size_t i = 0; i < mean.size(); ++i) f[i] = mean[i] + sigma * noise[i];
    return Sample{l2_normalize(f), class_id};
}

} // namespace

std::vector<TaskDataset> gen_sequence(const SequenceSpec& spec) {
    if (spec.n_tasks < 1 || spec.classes_per_task < 1 || spec.d_in < 1 ||
        spec.samples_per_class_train < 1 || spec.samples_per_class_test < 0 ||
        spec.noise_sigma < 0.0) {
        throw ParameterError("invalid sequence spec");
    }
    if (static_cast<long long>(spec.n_tasks) * spec.classes_per_task > spec.d_in) {
        throw InfeasibleSpecError(
            "infeasible-spec: n_tasks * classes_per_task exceeds the target capacity d_in");
    }

    std::uint64_t seed_state = spec.seed;
    std::vector<TaskDataset> tasks;
    tasks.reserve(spec.n_tasks);
    for (int t = 0; t < spec.n_tasks; ++t) {
        TaskDataset ds;
        ds.task_id = t;
        ds.domain_seed = splitmix64(seed_state);
        Rng rng(ds.domain_seed);

        std::vector<std::vector<double>> means = draw_class_means(rng, spec);
        if (spec.inter_task_rotation) {
            const Matrix rot = thin_qr_q(gaussian_matrix(rng, spec.d_in, spec.d_in));
            for (auto& m : means) m = matvec(rot, m);
        }

        for (int c = 0; c < spec.classes_per_task; ++c) {
            ds.class_ids.push_back(t * spec.classes_per_task + c);
        }
        for (int c = 0; c < spec.classes_per_task; ++c) {
            for (int i = 0; i < spec.samples_per_class_train; ++i) {
                ds.train.push_back(make_sample(rng, means[c], spec.noise_sigma, ds.class_ids[c]));
            }
        }
        for (int c = 0; c < spec.classes_per_task; ++c) {
            for (int i = 0; i < spec.samples_per_class_test; ++i) {
                ds.test.push_back(make_sample(rng, means[c], spec.noise_sigma, ds.class_ids[c]));
            }
        }
        tasks.push_back(std::move(ds));
    }
    return tasks;
}

void save_dataset(const TaskDataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open dataset file for writing: " + path);
    }
    const std::size_t dim = ds.train.empty() ? (ds.test.empty() ? 0 : ds.test[0].feature.size())
                                             : ds.train[0].feature.size();
    out << "dim," << dim << "\n";
    char buf[64];
    auto write_rows = [&](const std::vector<Sample>& rows, const char* split) {
        for (const Sample& s : rows) {
            out << ds.task_id << ',' << s.class_id << ',' << split;
            for (double v : s.feature) {
                std::snprintf(buf, sizeof(buf), "%.17g", v);
                out << ',' << buf;
            }
            out << '\n';
        }
    };
    write_rows(ds.train, "train");
    write_rows(ds.test, "test");
    if (!out) {
        throw IoError("failed writing dataset file: " + path);
    }
}

TaskDataset load_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open dataset file: " + path);
    }
    std::string line;
    std::size_t line_no = 1;
    if (!std::getline(in, line)) {
        throw ParseError("empty dataset file", line_no);
    }
    std::size_t dim = 0;
    if (std::sscanf(line.c_str(), "dim,%zu", &dim) != 1 || dim == 0) {
        throw ParseError("expected header 'dim,<d>'", line_no);
    }

    TaskDataset ds;
    std::set<int> classes;
    bool first_row = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        auto next_cell = [&](const char* what) {
            if (!std::getline(ss, cell, ',')) {
                throw ParseError(std::string("missing field: ") + what, line_no);
            }
            return cell;
        };
        int task_id, class_id;
        try {
            task_id = std::stoi(next_cell("task_id"));
            class_id = std::stoi(next_cell("class_id"));
        } catch (const std::exception&) {
            throw ParseError("non-numeric id field", line_no);
        }
        const std::string split = next_cell("split");
        if (split != "train" && split != "test") {
            throw ParseError("split must be 'train' or 'test'", line_no);
        }
        Sample s;
        s.class_id = class_id;
        while (std::getline(ss, cell, ',')) {
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str() || *end != '\0') {
                throw ParseError("malformed feature value '" + cell + "'", line_no);
            }
            s.feature.push_back(v);
        }
        if (s.feature.size() != dim) {
            throw ParseError("row has " + std::to_string(s.feature.size()) + " features, expected " +
                                 std::to_string(dim),
                             line_no);
        }
        if (first_row) {
            ds.task_id = task_id;
            first_row = false;
        } else if (task_id != ds.task_id) {
            throw ParseError("mixed task ids in one dataset file", line_no);
        }
        classes.insert(class_id);
        (split == "train" ? ds.train : ds.test).push_back(std::move(s));
    }
    if (first_row) {
        throw ParseError("dataset file has no sample rows", line_no);
    }
    ds.class_ids.assign(classes.begin(), classes.end());
    return ds;
}

} // namespace freshcl
