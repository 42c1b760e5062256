#include "freshcl/errors.hpp"
#include "freshcl/pipeline.hpp"
#include "test_helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace freshcl;
using freshcl::test::make_untrained;

namespace {

SequenceSpec eval_spec(std::uint64_t seed, int n_tasks, int classes, int d, double sigma = 0.05) {
    SequenceSpec spec;
    spec.n_tasks = n_tasks;
    spec.classes_per_task = classes;
    spec.d_in = d;
    spec.samples_per_class_train = 25;
    spec.samples_per_class_test = 10;
    spec.noise_sigma = sigma;
    spec.inter_class_min_angle_deg = 60.0;
    spec.inter_task_rotation = true;
    spec.seed = seed;
    return spec;
}

TrainConfig eval_config(std::uint64_t seed, int d) {
    TrainConfig cfg;
    cfg.n_experts = 4;
    cfg.k_top = 2;
    cfg.k_freeze = 1;
    cfg.iterations = 300;
    cfg.batch_size = 16;
    cfg.d_in = d;
    cfg.d_out = d;
    cfg.seed = seed;
    return cfg;
}

} // namespace

TEST_CASE("predict maps an exact target preimage to its class") {
    TrainConfig cfg = eval_config(90, 8);
    cfg.n_experts = 1;
    cfg.k_top = 1;
    Rng rng(cfg.seed);

    TaskDataset ds;
    ds.task_id = 0;
    ds.class_ids = {0, 1, 2};
    std::vector<double> dummy(8, 0.0);
    dummy[0] = 1.0;
    ds.train.push_back({dummy, 0});
    ModelState state = make_untrained({ds}, cfg, rng);
    state.experts[0].projection = Matrix::identity(8);

    for (int c = 0; c < 3; ++c) {
        const std::vector<double> feature =
            column(state.experts[0].frame.targets, static_cast<std::size_t>(c));
        CHECK(predict(state, feature, cfg.k_top, 0) == c);
    }

    CHECK_THROWS_AS(predict(ModelState{}, dummy, 1, std::nullopt), StateError);
}

TEST_CASE("predict argmax is invariant under positive feature scaling") {
    const std::vector<TaskDataset> datasets = {gen_sequence(eval_spec(91, 1, 4, 16))[0]};
    TrainConfig cfg = eval_config(91, 16);
    Rng rng(cfg.seed);
    const ModelState state = make_untrained(datasets, cfg, rng);

    for (const Sample& s : datasets[0].test) {
        const int base = predict(state, s.feature, cfg.k_top, 0);
        for (double c : {0.25, 4.0, 117.0}) {
            std::vector<double> scaled = s.feature;
            for (double& v : scaled) v *= c;
            CHECK(predict(state, scaled, cfg.k_top, 0) == base);
        }
    }
}

TEST_CASE("predict agrees with a brute-force score table") {
    TrainConfig cfg = eval_config(92, 8);
    cfg.n_experts = 2;
    cfg.k_top = 2;
    Rng rng(cfg.seed);
    const std::vector<TaskDataset> datasets = {gen_sequence(eval_spec(92, 1, 4, 8))[0]};
    const ModelState state = make_untrained(datasets, cfg, rng);

    for (const Sample& s : datasets[0].test) {
        // brute force from the primitive pieces
        const std::vector<double> q = l2_normalize(s.feature);
        const GatingResult g = state.routers.at(0).gate(q, 2);
        int best_c = -1;
        double best_score = -1e300;
        for (int c : datasets[0].class_ids) {
            const std::size_t col = static_cast<std::size_t>(state.class_registry.at(c));
            double score = 0.0;
            for (int idx : g.selected) {
                const Expert& e = state.experts[static_cast<std::size_t>(idx)];
                score += g.weights[static_cast<std::size_t>(idx)] *
                         dot(column(e.frame.targets, col), e.project(q));
            }
            if (score > best_score) {
                best_score = score;
                best_c = c;
            }
        }
        CHECK(predict(state, s.feature, cfg.k_top, 0) == best_c);
    }
}

TEST_CASE("a trained separable task reaches near-perfect accuracy") {
    const std::vector<TaskDataset> datasets = {gen_sequence(eval_spec(93, 1, 4, 16))[0]};
    TrainConfig cfg = eval_config(93, 16);
    const SequenceRunResult run = run_sequence(datasets, cfg);
    const AccuracyMatrix m = evaluate_sequence(run.states, datasets, cfg.k_top, IdMode::oracle);
    CHECK(m.at(0, 0) > 0.99);
}

TEST_CASE("an untrained model scores at chance level") {
    // per-class decisions are nearly deterministic at low noise, so average
    // over many independent untrained models to see the 1/C rate
    const int n_models = 20;
    const int classes = 8;
    double acc_sum = 0.0;
    for (int trial = 0; trial < n_models; ++trial) {
        const std::vector<TaskDataset> datasets = {
            gen_sequence(eval_spec(100 + trial, 1, classes, 32, 0.2))[0]};
        TrainConfig cfg = eval_config(200 + trial, 32);
        Rng rng(cfg.seed);
        const ModelState state = make_untrained(datasets, cfg, rng);
        acc_sum += task_accuracy(state, datasets[0], cfg.k_top, IdMode::oracle);
    }
    const double mean_acc = acc_sum / n_models;
    CHECK(std::fabs(mean_acc - 1.0 / classes) < 0.06);
}

TEST_CASE("oracle id dominates pseudo id cell by cell") {
    const SequenceSpec spec = eval_spec(94, 3, 3, 32);
    const std::vector<TaskDataset> datasets = gen_sequence(spec);
    TrainConfig cfg = eval_config(94, 32);
    const SequenceRunResult run = run_sequence(datasets, cfg);
    const AccuracyMatrix oracle = evaluate_sequence(run.states, datasets, cfg.k_top, IdMode::oracle);
    const AccuracyMatrix pseudo = evaluate_sequence(run.states, datasets, cfg.k_top, IdMode::pseudo);
    for (std::size_t t = 0; t < oracle.n_tasks(); ++t) {
        for (std::size_t tau = 0; tau <= t; ++tau) {
            CHECK(oracle.at(t, tau) >= pseudo.at(t, tau));
        }
    }
}

TEST_CASE("last_accuracy and forgetting are pure matrix reductions") {
    AccuracyMatrix m;
    m.rows = {{1.0}, {0.9, 0.5}};
    CHECK(last_accuracy(m) == doctest::Approx(0.7).epsilon(1e-15));

    AccuracyMatrix single;
    single.rows = {{0.8}};
    CHECK(last_accuracy(single) == 0.8);
    CHECK(forgetting(single).empty());

    AccuracyMatrix drop;
    drop.rows = {{0.9}, {0.6, 1.0}};
    const std::vector<double> f = forgetting(drop);
    REQUIRE(f.size() == 1);
    CHECK(f[0] == doctest::Approx(0.3).epsilon(1e-15));

    AccuracyMatrix steady;
    steady.rows = {{0.7}, {0.7, 0.9}, {0.7, 0.9, 1.0}};
    for (double v : forgetting(steady)) CHECK(v == 0.0);

    AccuracyMatrix incomplete;
    incomplete.rows = {{1.0}, {0.5}};
    CHECK_THROWS_AS(last_accuracy(incomplete), StateError);
}

TEST_CASE("separation from embeddings") {
    Rng rng(95);
    const std::size_t k = 6;
    const EtfFrame frame = generate_etf(12, k, rng);

    // embeddings pinned exactly to the targets: between-class cosine is the
    // frame constant -1/(K-1)
    std::vector<std::vector<double>> embs;
    std::vector<int> labels;
    for (std::size_t c = 0; c < k; ++c) {
        for (int rep = 0; rep < 2; ++rep) {
            embs.push_back(column(frame.targets, c));
            labels.push_back(static_cast<int>(c));
        }
    }
    const SeparationReport pinned = separation_from_embeddings(embs, labels);
    CHECK(std::fabs(pinned.between_class_cosine + 1.0 / (k - 1.0)) < 1e-9);
    CHECK(pinned.within_class_cosine == doctest::Approx(1.0).epsilon(1e-12));

    // identical embeddings: no gap
    std::vector<std::vector<double>> same(6, column(frame.targets, 0));
    const SeparationReport flat = separation_from_embeddings(same, {0, 0, 1, 1, 2, 2});
    CHECK(flat.within_class_cosine == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(flat.between_class_cosine == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::fabs(flat.separation_gap) < 1e-12);
}

TEST_CASE("training strictly widens the separation gap") {
    const SequenceSpec spec = eval_spec(96, 2, 4, 32);
    const std::vector<TaskDataset> datasets = gen_sequence(spec);
    TrainConfig cfg = eval_config(96, 32);

    Rng untrained_rng(cfg.seed);
    const ModelState untrained = make_untrained(datasets, cfg, untrained_rng);
    const SequenceRunResult run = run_sequence(datasets, cfg);

    for (const TaskDataset& ds : datasets) {
        const SeparationReport before = separation_report(untrained, ds, cfg.k_top);
        const SeparationReport after = separation_report(run.states.back(), ds, cfg.k_top);
        CHECK(after.separation_gap > before.separation_gap);
    }
}
