#include "freshcl/pipeline.hpp"
#include "freshcl/selfcheck.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace freshcl;

namespace {

Matrix matrix_from_array(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw py::value_error("expected a 2-d array");
    const auto r = static_cast<std::size_t>(a.shape(0));
    const auto c = static_cast<std::size_t>(a.shape(1));
    std::vector<double> data(a.data(), a.data() + r * c);
    return Matrix(r, c, std::move(data));
}

py::array_t<double> array_from_matrix(const Matrix& m) {
    py::array_t<double> a({m.rows(), m.cols()});
    std::copy(m.data(), m.data() + m.size(), a.mutable_data());
    return a;
}

py::array_t<double> features_array(const std::vector<Sample>& samples) {
    const std::size_t n = samples.size();
    const std::size_t d = n ? samples[0].feature.size() : 0;
    py::array_t<double> a({n, d});
    double* out = a.mutable_data();
    for (std::size_t i = 0; i < n; ++i)
        std::copy(samples[i].feature.begin(), samples[i].feature.end(), out + i * d);
    return a;
}

std::vector<int> labels_vector(const std::vector<Sample>& samples) {
    std::vector<int> out;
    out.reserve(samples.size());
    for (const Sample& s : samples) out.push_back(s.class_id);
    return out;
}

} // namespace

PYBIND11_MODULE(freshcl, m) {
    m.doc() = "Continual learning with fixed simplex-ETF targets and a mixture of "
              "projection experts";

    py::class_<Rng>(m, "Rng")
        .def(py::init<std::uint64_t>(), py::arg("seed"))
        .def("next_u64", &Rng::next_u64)
        .def("uniform", &Rng::next_double)
        .def("gaussian",
             [](Rng& rng, std::size_t n, double mean, double stddev) {
                 return gaussian(rng, n, mean, stddev);
             },
             py::arg("n"), py::arg("mean") = 0.0, py::arg("stddev") = 1.0);

    m.def("l2_normalize", &l2_normalize, py::arg("v"));
    m.def("softmax", &softmax, py::arg("logits"));
    m.def(
        "matmul",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& b) {
            return array_from_matrix(matmul(matrix_from_array(a), matrix_from_array(b)));
        },
        py::arg("a"), py::arg("b"));

    m.def(
        "generate_etf",
        [](std::size_t d, std::size_t k, std::uint64_t seed) {
            Rng rng(seed);
            return array_from_matrix(generate_etf(d, k, rng).targets);
        },
        py::arg("d"), py::arg("k"), py::arg("seed") = 1, "d x k matrix of unit pseudo targets");
    m.def(
        "validate_etf",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& targets,
           double tol) {
            Matrix t = matrix_from_array(targets);
            EtfFrame frame{t.rows(), t.cols(), std::move(t)};
            const EtfReport rep = validate_etf(frame, tol);
            py::dict out;
            out["max_gram_deviation"] = rep.max_gram_deviation;
            out["max_norm_deviation"] = rep.max_norm_deviation;
            out["column_sum_norm"] = rep.column_sum_norm;
            out["within_tolerance"] = rep.within_tolerance;
            return out;
        },
        py::arg("targets"), py::arg("tol") = 1e-9);
    m.def(
        "dr_loss",
        [](const std::vector<double>& feature_hat,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& targets,
           std::size_t label) {
            Matrix t = matrix_from_array(targets);
            EtfFrame frame{t.rows(), t.cols(), std::move(t)};
            return dr_loss(feature_hat, frame, label);
        },
        py::arg("feature_hat"), py::arg("targets"), py::arg("label"));
    m.def(
        "dr_loss_grad",
        [](const std::vector<double>& feature,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& targets,
           std::size_t label) {
            Matrix t = matrix_from_array(targets);
            EtfFrame frame{t.rows(), t.cols(), std::move(t)};
            return dr_loss_grad(feature, frame, label);
        },
        py::arg("feature"), py::arg("targets"), py::arg("label"));

    m.def(
        "gate",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& weights,
           const std::vector<double>& bias, const std::vector<double>& feature, std::size_t k_top) {
            Router router;
            router.weights = matrix_from_array(weights);
            router.bias = bias;
            const GatingResult g = router.gate(feature, k_top);
            return py::make_tuple(g.selected, g.weights, g.logits);
        },
        py::arg("weights"), py::arg("bias"), py::arg("feature"), py::arg("k_top"),
        "-> (selected, gating weights, raw logits)");

    py::class_<SequenceSpec>(m, "SequenceSpec")
        .def(py::init<>())
        .def_readwrite("n_tasks", &SequenceSpec::n_tasks)
        .def_readwrite("classes_per_task", &SequenceSpec::classes_per_task)
        .def_readwrite("d_in", &SequenceSpec::d_in)
        .def_readwrite("samples_per_class_train", &SequenceSpec::samples_per_class_train)
        .def_readwrite("samples_per_class_test", &SequenceSpec::samples_per_class_test)
        .def_readwrite("noise_sigma", &SequenceSpec::noise_sigma)
        .def_readwrite("inter_class_min_angle_deg", &SequenceSpec::inter_class_min_angle_deg)
        .def_readwrite("inter_task_rotation", &SequenceSpec::inter_task_rotation)
        .def_readwrite("seed", &SequenceSpec::seed);

    py::class_<TaskDataset>(m, "TaskDataset")
        .def_readonly("task_id", &TaskDataset::task_id)
        .def_readonly("class_ids", &TaskDataset::class_ids)
        .def_property_readonly("train_features",
                               [](const TaskDataset& ds) { return features_array(ds.train); })
        .def_property_readonly("train_labels",
                               [](const TaskDataset& ds) { return labels_vector(ds.train); })
        .def_property_readonly("test_features",
                               [](const TaskDataset& ds) { return features_array(ds.test); })
        .def_property_readonly("test_labels",
                               [](const TaskDataset& ds) { return labels_vector(ds.test); });

    m.def("gen_sequence", &gen_sequence, py::arg("spec"));
    m.def("save_dataset", &save_dataset, py::arg("dataset"), py::arg("path"));
    m.def("load_dataset", &load_dataset, py::arg("path"));

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("n_experts", &TrainConfig::n_experts)
        .def_readwrite("k_top", &TrainConfig::k_top)
        .def_readwrite("k_freeze", &TrainConfig::k_freeze)
        .def_readwrite("iterations", &TrainConfig::iterations)
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("lr", &TrainConfig::lr)
        .def_readwrite("seed", &TrainConfig::seed)
        .def_readwrite("d_in", &TrainConfig::d_in)
        .def_readwrite("d_out", &TrainConfig::d_out);

    py::class_<SeparationReport>(m, "SeparationReport")
        .def_readonly("within_class_cosine", &SeparationReport::within_class_cosine)
        .def_readonly("between_class_cosine", &SeparationReport::between_class_cosine)
        .def_readonly("separation_gap", &SeparationReport::separation_gap);

    py::class_<SequenceMetrics>(m, "SequenceMetrics")
        .def_property_readonly("accuracy_oracle",
                               [](const SequenceMetrics& s) { return s.accuracy_oracle.rows; })
        .def_property_readonly("accuracy_pseudo",
                               [](const SequenceMetrics& s) { return s.accuracy_pseudo.rows; })
        .def_readonly("a_last_oracle", &SequenceMetrics::a_last_oracle)
        .def_readonly("a_last_pseudo", &SequenceMetrics::a_last_pseudo)
        .def_readonly("forgetting_oracle", &SequenceMetrics::forgetting_oracle)
        .def_readonly("mean_forgetting_oracle", &SequenceMetrics::mean_forgetting_oracle)
        .def_readonly("separation", &SequenceMetrics::separation);

    m.def(
        "train_and_evaluate",
        [](const std::vector<TaskDataset>& datasets, const TrainConfig& config) {
            const SequenceRunResult run = run_sequence(datasets, config);
            return evaluate_run(run, datasets, config.k_top);
        },
        py::arg("datasets"), py::arg("config"),
        "Train the sequence task by task, then report accuracy/forgetting/separation");

    m.def("selfcheck", []() {
        py::list out;
        for (const CheckResult& r : run_selfcheck()) {
            py::dict d;
            d["name"] = r.name;
            d["pass"] = r.pass;
            d["metric"] = r.metric;
            d["detail"] = r.detail;
            out.append(d);
        }
        return out;
    });
}
