#include "freshcl/checkpoint.hpp"
#include "freshcl/config.hpp"
#include "freshcl/errors.hpp"
#include "freshcl/pipeline.hpp"
#include "freshcl/selfcheck.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace freshcl;

namespace {

struct Manifest {
    std::vector<std::string> dataset_paths; // resolved, training order
    SequenceSpec spec;
};

void write_manifest(const RunConfig& cfg, const std::vector<std::string>& filenames,
                    const fs::path& path) {
    json j;
    j["datasets"] = filenames;
    json s;
    const SequenceSpec spec = cfg.sequence_spec();
    s["n_tasks"] = spec.n_tasks;
    s["classes_per_task"] = spec.classes_per_task;
    s["d_in"] = spec.d_in;
    s["samples_per_class_train"] = spec.samples_per_class_train;
    s["samples_per_class_test"] = spec.samples_per_class_test;
    s["noise_sigma"] = spec.noise_sigma;
    s["inter_class_min_angle_deg"] = spec.inter_class_min_angle_deg;
    s["inter_task_rotation"] = spec.inter_task_rotation;
    s["seed"] = spec.seed;
    j["sequence"] = s;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write manifest: " + path.string());
    out << j.dump(2) << '\n';
}

Manifest read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingArtifactError("cannot open manifest: " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw IoError("manifest is not valid JSON: " + std::string(e.what()));
    }
    Manifest m;
    for (const auto& p : j.at("datasets")) {
        m.dataset_paths.push_back((path.parent_path() / p.get<std::string>()).string());
    }
    const json& s = j.at("sequence");
    m.spec.n_tasks = s.value("n_tasks", m.spec.n_tasks);
    m.spec.classes_per_task = s.value("classes_per_task", m.spec.classes_per_task);
    m.spec.d_in = s.value("d_in", m.spec.d_in);
    m.spec.samples_per_class_train = s.value("samples_per_class_train", m.spec.samples_per_class_train);
    m.spec.samples_per_class_test = s.value("samples_per_class_test", m.spec.samples_per_class_test);
    m.spec.noise_sigma = s.value("noise_sigma", m.spec.noise_sigma);
    m.spec.inter_class_min_angle_deg =
        s.value("inter_class_min_angle_deg", m.spec.inter_class_min_angle_deg);
    m.spec.inter_task_rotation = s.value("inter_task_rotation", m.spec.inter_task_rotation);
    m.spec.seed = s.value("seed", m.spec.seed);
    return m;
}

std::vector<TaskDataset> load_manifest_datasets(const Manifest& m) {
    std::vector<TaskDataset> datasets;
    datasets.reserve(m.dataset_paths.size());
    for (const std::string& p : m.dataset_paths) {
        if (!fs::exists(p)) throw MissingArtifactError("dataset listed in manifest missing: " + p);
        datasets.push_back(load_dataset(p));
    }
    return datasets;
}

int cmd_gen_data(const RunConfig& cfg) {
    const std::vector<TaskDataset> datasets = gen_sequence(cfg.sequence_spec());
    fs::create_directories(cfg.output_dir);
    std::vector<std::string> filenames;
    for (const TaskDataset& ds : datasets) {
        const std::string name = "task" + std::to_string(ds.task_id) + ".csv";
        save_dataset(ds, (fs::path(cfg.output_dir) / name).string());
        filenames.push_back(name);
    }
    write_manifest(cfg, filenames, fs::path(cfg.output_dir) / "manifest.json");
    std::printf("generated %d tasks x %d classes, d=%d (%d train / %d test per class) -> %s\n",
                cfg.n_tasks, cfg.classes_per_task, cfg.d_in, cfg.samples_per_class_train,
                cfg.samples_per_class_test, cfg.output_dir.c_str());
    return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& manifest_arg) {
    const fs::path manifest_path =
        manifest_arg.empty() ? fs::path(cfg.output_dir) / "manifest.json" : fs::path(manifest_arg);
    const Manifest manifest = read_manifest(manifest_path);
    const std::vector<TaskDataset> datasets = load_manifest_datasets(manifest);

    RunConfig effective = cfg;
    effective.d_in = manifest.spec.d_in;
    const TrainConfig tc = effective.train_config();
    // machine-local paths stay out of the portable checkpoint
    RunConfig echo_cfg = effective;
    echo_cfg.output_dir.clear();
    echo_cfg.checkpoint_path.clear();
    const std::string echo = dump_config(echo_cfg);
    fs::create_directories(cfg.checkpoint_dir());

    Rng rng(tc.seed);
    ModelState state = init_model(tc, rng);
    for (const TaskDataset& ds : datasets) {
        const TrainLog log = train_task(state, ds, tc, rng);
        finalize_task(state, tc.k_freeze);
        write_training_log_csv(
            log, (fs::path(cfg.output_dir) / ("train_task" + std::to_string(ds.task_id) + ".csv"))
                     .string());
        save_checkpoint(
            state, echo,
            (fs::path(cfg.checkpoint_dir()) / ("ckpt_task" + std::to_string(ds.task_id))).string());
        int frozen = 0;
        for (const Expert& e : state.experts) frozen += e.frozen() ? 1 : 0;
        std::printf("task %d: final mean loss %.6f, frozen experts %d/%d\n", ds.task_id,
                    log.iterations.back().mean_loss, frozen, tc.n_experts);
    }
    return 0;
}

void print_matrix(const AccuracyMatrix& m, const char* label) {
    std::printf("accuracy matrix (%s), rows = after task t:\n", label);
    for (std::size_t t = 0; t < m.n_tasks(); ++t) {
        std::printf("  t=%zu:", t);
        for (double a : m.rows[t]) std::printf(" %.4f", a);
        std::printf("\n");
    }
}

int cmd_eval(const RunConfig& cfg, const std::string& manifest_arg, bool k_top_explicit) {
    const fs::path manifest_path =
        manifest_arg.empty() ? fs::path(cfg.output_dir) / "manifest.json" : fs::path(manifest_arg);
    const Manifest manifest = read_manifest(manifest_path);
    const std::vector<TaskDataset> datasets = load_manifest_datasets(manifest);

    std::vector<ModelState> states;
    std::string last_echo;
    for (const TaskDataset& ds : datasets) {
        const fs::path p = fs::path(cfg.checkpoint_dir()) / ("ckpt_task" + std::to_string(ds.task_id));
        Checkpoint ckpt = load_checkpoint(p.string());
        last_echo = ckpt.config_echo;
        states.push_back(std::move(ckpt.state));
    }

    // Structural parameters come from the training run unless overridden.
    int k_top = cfg.k_top;
    if (!k_top_explicit && !last_echo.empty()) {
        k_top = parse_config(last_echo).k_top;
    }

    const bool want_oracle = cfg.id_mode == "oracle" || cfg.id_mode == "both";
    const bool want_pseudo = cfg.id_mode == "pseudo" || cfg.id_mode == "both";
    fs::create_directories(cfg.output_dir);

    std::vector<std::pair<std::string, double>> metrics;
    if (want_oracle) {
        const AccuracyMatrix m = evaluate_sequence(states, datasets, k_top, IdMode::oracle);
        print_matrix(m, "oracle id");
        write_accuracy_matrix_csv(m, (fs::path(cfg.output_dir) / "accuracy_oracle.csv").string());
        const double a_last = last_accuracy(m);
        std::printf("A_last (oracle): %.4f\n", a_last);
        metrics.emplace_back("a_last_oracle", a_last);
        const std::vector<double> f = forgetting(m);
        double mean_f = 0.0;
        for (std::size_t t = 0; t < f.size(); ++t) {
            metrics.emplace_back("forgetting_oracle_task" + std::to_string(t), f[t]);
            mean_f += f[t];
        }
        if (!f.empty()) metrics.emplace_back("mean_forgetting_oracle", mean_f / f.size());
    }
    if (want_pseudo) {
        const AccuracyMatrix m = evaluate_sequence(states, datasets, k_top, IdMode::pseudo);
        print_matrix(m, "pseudo id");
        write_accuracy_matrix_csv(m, (fs::path(cfg.output_dir) / "accuracy_pseudo.csv").string());
        const double a_last = last_accuracy(m);
        std::printf("A_last (pseudo): %.4f\n", a_last);
        metrics.emplace_back("a_last_pseudo", a_last);
        const std::vector<double> f = forgetting(m);
        double mean_f = 0.0;
        for (std::size_t t = 0; t < f.size(); ++t) {
            metrics.emplace_back("forgetting_pseudo_task" + std::to_string(t), f[t]);
            mean_f += f[t];
        }
        if (!f.empty()) metrics.emplace_back("mean_forgetting_pseudo", mean_f / f.size());
    }

    std::printf("separation on the final model (top-1 routed expert):\n");
    for (const TaskDataset& ds : datasets) {
        const SeparationReport rep = separation_report(states.back(), ds, k_top);
        std::printf("  task %d: within %.4f, between %.4f, gap %.4f\n", ds.task_id,
                    rep.within_class_cosine, rep.between_class_cosine, rep.separation_gap);
        metrics.emplace_back("separation_gap_task" + std::to_string(ds.task_id),
                             rep.separation_gap);
    }

    std::ofstream mout(fs::path(cfg.output_dir) / "metrics.csv");
    if (!mout) throw IoError("cannot write metrics.csv");
    mout << "metric,value\n";
    char buf[64];
    for (const auto& [name, value] : metrics) {
        std::snprintf(buf, sizeof(buf), "%.17g", value);
        mout << name << ',' << buf << '\n';
    }
    return 0;
}

int cmd_ablate(const RunConfig& cfg) {
    const std::vector<AblationRow> rows =
        run_ablation(cfg.sequence_spec(), cfg.train_config(), cfg.ablation_expert_counts,
                     cfg.ablation_seeds);
    fs::create_directories(cfg.output_dir);
    std::ofstream out(fs::path(cfg.output_dir) / "ablation.csv");
    if (!out) throw IoError("cannot write ablation.csv");
    out << "n_experts,k_freeze,seed,a_last_oracle\n";
    char buf[64];
    std::printf("%-10s %-9s %-12s %s\n", "n_experts", "k_freeze", "mean A_last", "mean forgetting");
    for (const AblationRow& row : rows) {
        for (std::size_t s = 0; s < row.a_last_per_seed.size(); ++s) {
            std::snprintf(buf, sizeof(buf), "%.17g", row.a_last_per_seed[s]);
            out << row.n_experts << ',' << row.k_freeze << ',' << (cfg.seed + s) << ',' << buf
                << '\n';
        }
        std::printf("%-10d %-9d %-12.4f %.4f\n", row.n_experts, row.k_freeze, row.mean_a_last,
                    row.mean_forgetting);
    }
    return 0;
}

int cmd_selfcheck(bool inject_bug) {
    SelfCheckOptions options;
    options.inject_dr_grad_sign_bug = inject_bug;
    const std::vector<CheckResult> results = run_selfcheck(options);
    for (const CheckResult& r : results) {
        std::printf("[%s] %-24s %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
    }
    return all_passed(results) ? 0 : 1;
}

int cmd_etf_check() {
    const std::pair<std::size_t, std::size_t> shapes[] = {{4, 4}, {16, 16}, {64, 64}, {32, 16}};
    Rng rng(7);
    bool ok = true;
    for (const auto& [d, k] : shapes) {
        const EtfReport rep = validate_etf(generate_etf(d, k, rng), 1e-9);
        const bool pass = rep.within_tolerance;
        ok = ok && pass;
        std::printf("[%s] d=%-3zu K=%-3zu gram dev %.3e  norm dev %.3e  colsum %.3e\n",
                    pass ? "PASS" : "FAIL", d, k, rep.max_gram_deviation, rep.max_norm_deviation,
                    rep.column_sum_norm);
    }
    return ok ? 0 : 1;
}

int cmd_gradcheck() {
    const std::vector<CheckResult> all = run_selfcheck();
    bool ok = true;
    for (const CheckResult& r : all) {
        if (r.name.rfind("grad_", 0) != 0) continue;
        ok = ok && r.pass;
        std::printf("[%s] %-24s %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
    }
    return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Continual learning with fixed simplex-ETF targets and a mixture of"
                 " projection experts, on synthetic multi-domain task sequences"};
    app.require_subcommand(1);

    std::string config_path, manifest_arg;
    RunConfig flags; // staging area for explicit flag values
    bool few_shot = false, inject_bug = false;

    auto add_common = [&](CLI::App* sub, bool training_opts) {
        sub->add_option("--config", config_path, "JSON config file (flags override it)");
        sub->add_option("--seed", flags.seed, "PRNG seed");
        sub->add_option("--out", flags.output_dir, "output directory");
        if (training_opts) {
            sub->add_option("--experts", flags.n_experts, "number of experts");
            sub->add_option("--k-top", flags.k_top, "experts selected per sample");
            sub->add_option("--k-freeze", flags.k_freeze, "experts frozen per task");
            sub->add_option("--iters", flags.iterations, "training iterations per task");
            sub->add_flag("--few-shot", few_shot, "5 training samples per class");
        }
        return sub;
    };

    CLI::App* gen = add_common(app.add_subcommand("gen-data", "generate a synthetic task sequence"),
                               true);
    gen->add_option("--tasks", flags.n_tasks, "number of tasks");
    gen->add_option("--classes-per-task", flags.classes_per_task, "classes per task");
    gen->add_option("--dim", flags.d_in, "feature dimension");
    gen->add_option("--sigma", flags.noise_sigma, "sample noise sigma");
    gen->add_option("--min-angle", flags.inter_class_min_angle_deg,
                    "minimum angle between class means (degrees)");
    gen->add_option("--rotation", flags.inter_task_rotation, "per-task random rotation (0/1)");

    CLI::App* train = add_common(app.add_subcommand("train", "train the task sequence"), true);
    train->add_option("--manifest", manifest_arg, "sequence manifest (default <out>/manifest.json)");

    CLI::App* eval = add_common(app.add_subcommand("eval", "evaluate checkpoints"), true);
    eval->add_option("--manifest", manifest_arg, "sequence manifest (default <out>/manifest.json)");
    eval->add_option("--id-mode", flags.id_mode, "oracle | pseudo | both")
        ->check(CLI::IsMember({"oracle", "pseudo", "both"}));

    CLI::App* ablate = add_common(
        app.add_subcommand("ablate", "A_last trend across expert counts"), true);
    ablate->add_option("--counts", flags.ablation_expert_counts, "expert counts to sweep");
    ablate->add_option("--seeds", flags.ablation_seeds, "number of seeds");

    CLI::App* selfcheck = app.add_subcommand("selfcheck", "run the release checks");
    selfcheck->add_flag("--inject-grad-bug", inject_bug,
                        "negate the analytic DR gradient inside the check (must fail)");

    app.add_subcommand("etf-check", "validate generated frames against the ideal Gram");
    app.add_subcommand("gradcheck", "finite-difference gradient checks only");

    CLI11_PARSE(app, argc, argv);

    try {
        RunConfig cfg;
        if (!config_path.empty()) cfg = load_config_file(config_path);
        auto apply = [&](const char* flag, auto member) {
            for (CLI::App* sub : app.get_subcommands()) {
                const CLI::Option* o = sub->get_option_no_throw(flag);
                if (o != nullptr && o->count() > 0) cfg.*member = flags.*member;
            }
        };
        apply("--seed", &RunConfig::seed);
        apply("--out", &RunConfig::output_dir);
        apply("--experts", &RunConfig::n_experts);
        apply("--k-top", &RunConfig::k_top);
        apply("--k-freeze", &RunConfig::k_freeze);
        apply("--iters", &RunConfig::iterations);
        apply("--tasks", &RunConfig::n_tasks);
        apply("--classes-per-task", &RunConfig::classes_per_task);
        apply("--dim", &RunConfig::d_in);
        apply("--sigma", &RunConfig::noise_sigma);
        apply("--min-angle", &RunConfig::inter_class_min_angle_deg);
        apply("--rotation", &RunConfig::inter_task_rotation);
        apply("--id-mode", &RunConfig::id_mode);
        apply("--counts", &RunConfig::ablation_expert_counts);
        apply("--seeds", &RunConfig::ablation_seeds);
        if (few_shot) cfg.samples_per_class_train = 5;

        bool k_top_explicit = false;
        for (CLI::App* sub : app.get_subcommands()) {
            const CLI::Option* o = sub->get_option_no_throw("--k-top");
            k_top_explicit |= (o != nullptr && o->count() > 0);
        }

        if (gen->parsed()) return cmd_gen_data(cfg);
        if (train->parsed()) return cmd_train(cfg, manifest_arg);
        if (eval->parsed()) return cmd_eval(cfg, manifest_arg, k_top_explicit);
        if (ablate->parsed()) return cmd_ablate(cfg);
        if (selfcheck->parsed()) return cmd_selfcheck(inject_bug);
        if (app.get_subcommand("etf-check")->parsed()) return cmd_etf_check();
        if (app.get_subcommand("gradcheck")->parsed()) return cmd_gradcheck();
    } catch (const InfeasibleSpecError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const CapacityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const MissingArtifactError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 5;
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 70;
    }
    return 0;
}
