#include "freshcl/config.hpp"
#include "freshcl/errors.hpp"

#include <json.hpp>

#include <fstream>

namespace freshcl {

using nlohmann::json;

SequenceSpec RunConfig::sequence_spec() const {
    SequenceSpec spec;
    spec.n_tasks = n_tasks;
    spec.classes_per_task = classes_per_task;
    spec.d_in = d_in;
    spec.samples_per_class_train = samples_per_class_train;
    spec.samples_per_class_test = samples_per_class_test;
    spec.noise_sigma = noise_sigma;
    spec.inter_class_min_angle_deg = inter_class_min_angle_deg;
    spec.inter_task_rotation = inter_task_rotation;
    spec.seed = seed;
    return spec;
}

TrainConfig RunConfig::train_config() const {
    TrainConfig cfg;
    cfg.n_experts = n_experts;
    cfg.k_top = k_top;
    cfg.k_freeze = k_freeze;
    cfg.iterations = iterations;
    cfg.batch_size = batch_size;
    cfg.lr = lr;
    cfg.seed = seed;
    cfg.d_in = d_in;
    cfg.d_out = d_out > 0 ? d_out : d_in;
    return cfg;
}

std::string dump_config(const RunConfig& c) {
    json j;
    j["n_tasks"] = c.n_tasks;
    j["classes_per_task"] = c.classes_per_task;
    j["d_in"] = c.d_in;
    j["d_out"] = c.d_out;
    j["samples_per_class_train"] = c.samples_per_class_train;
    j["samples_per_class_test"] = c.samples_per_class_test;
    j["noise_sigma"] = c.noise_sigma;
    j["inter_class_min_angle_deg"] = c.inter_class_min_angle_deg;
    j["inter_task_rotation"] = c.inter_task_rotation;
    j["n_experts"] = c.n_experts;
    j["k_top"] = c.k_top;
    j["k_freeze"] = c.k_freeze;
    j["iterations"] = c.iterations;
    j["batch_size"] = c.batch_size;
    j["lr"] = c.lr;
    j["seed"] = c.seed;
    j["id_mode"] = c.id_mode;
    j["output_dir"] = c.output_dir;
    j["checkpoint_path"] = c.checkpoint_path;
    j["ablation_expert_counts"] = c.ablation_expert_counts;
    j["ablation_seeds"] = c.ablation_seeds;
    return j.dump(2);
}

RunConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw IoError(std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig c;
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) j.at(key).get_to(field);
    };
    get("n_tasks", c.n_tasks);
    get("classes_per_task", c.classes_per_task);
    get("d_in", c.d_in);
    get("d_out", c.d_out);
    get("samples_per_class_train", c.samples_per_class_train);
    get("samples_per_class_test", c.samples_per_class_test);
    get("noise_sigma", c.noise_sigma);
    get("inter_class_min_angle_deg", c.inter_class_min_angle_deg);
    get("inter_task_rotation", c.inter_task_rotation);
    get("n_experts", c.n_experts);
    get("k_top", c.k_top);
    get("k_freeze", c.k_freeze);
    get("iterations", c.iterations);
    get("batch_size", c.batch_size);
    get("lr", c.lr);
    get("seed", c.seed);
    get("id_mode", c.id_mode);
    get("output_dir", c.output_dir);
    get("checkpoint_path", c.checkpoint_path);
    get("ablation_expert_counts", c.ablation_expert_counts);
    get("ablation_seeds", c.ablation_seeds);
    if (c.id_mode != "oracle" && c.id_mode != "pseudo" && c.id_mode != "both") {
        throw ParameterError("id_mode must be oracle, pseudo, or both");
    }
    return c;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config file: " + path);
    }
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config(text);
}

} // namespace freshcl
