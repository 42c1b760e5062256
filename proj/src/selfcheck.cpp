#include "freshcl/selfcheck.hpp"

#include "freshcl/checkpoint.hpp"
#include "freshcl/errors.hpp"
#include "freshcl/finite_diff.hpp"
#include "freshcl/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>

namespace freshcl {

namespace {

double rel_error(const Matrix& analytic, const Matrix& fd) {
    double diff = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double d = analytic.data()[i] - fd.data()[i];
        diff += d * d;
        ref += fd.data()[i] * fd.data()[i];
    }
    return std::sqrt(diff) / std::max(std::sqrt(ref), 1e-10);
}

Matrix as_row(const std::vector<double>& v) {
    return Matrix(1, v.size(), v);
}

std::uint64_t fnv1a(const void* data, std::size_t len, std::uint64_t h = 0xcbf29ce484222325ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t hash_matrix(const Matrix& m, std::uint64_t h = 0xcbf29ce484222325ULL) {
    return fnv1a(m.data(), m.size() * sizeof(double), h);
}

std::uint64_t hash_router(const Router& r) {
    std::uint64_t h = hash_matrix(r.weights);
    return fnv1a(r.bias.data(), r.bias.size() * sizeof(double), h);
}

CheckResult check_etf_gram() {
    CheckResult res{"etf_gram", true, 0.0, ""};
    const std::pair<std::size_t, std::size_t> shapes[] = {{4, 4}, {16, 16}, {64, 64}, {32, 16}};
    Rng rng(7);
    for (const auto& [d, k] : shapes) {
        const EtfFrame frame = generate_etf(d, k, rng);
        const EtfReport rep = validate_etf(frame);
        res.metric = std::max({res.metric, rep.max_gram_deviation, rep.column_sum_norm});
    }
    res.pass = res.metric < 1e-9;
    char buf[96];
    std::snprintf(buf, sizeof(buf), "max Gram/column-sum deviation %.3e (tol 1e-9)", res.metric);
    res.detail = buf;
    return res;
}

CheckResult check_dr_loss_values() {
    CheckResult res{"dr_loss_values", true, 0.0, "dot 1/0/-1 -> loss 0/0.5/2.0 exactly"};
    EtfFrame frame;
    frame.dim = 2;
    frame.num_targets = 2;
    frame.targets = Matrix(2, 2, {1.0, -1.0, 0.0, 0.0}); // columns e0 and -e0
    res.pass = dr_loss({1.0, 0.0}, frame, 0) == 0.0 && dr_loss({0.0, 1.0}, frame, 0) == 0.5 &&
               dr_loss({-1.0, 0.0}, frame, 0) == 2.0;
    return res;
}

CheckResult check_grad_dr_feature(bool inject_bug) {
    CheckResult res{"grad_dr_feature", true, 0.0, ""};
    Rng rng(11);
    const std::size_t d = 8;
    for (int i = 0; i < 50; ++i) {
        const EtfFrame frame = generate_etf(d, d, rng);
        const std::vector<double> mu = gaussian(rng, d, 0.0, 1.0);
        const std::size_t label = rng.next_index(d);

        std::vector<double> analytic = dr_loss_grad(mu, frame, label);
        if (inject_bug) {
            for (double& g : analytic) g = -g;
        }
        const Matrix fd = finite_diff_grad(
            [&](const Matrix& m) { return dr_loss(l2_normalize(m.values()), frame, label); },
            as_row(mu), 1e-6);
        res.metric = std::max(res.metric, rel_error(as_row(analytic), fd));
    }
    res.pass = res.metric < 1e-4;
    char buf[96];
    std::snprintf(buf, sizeof(buf), "max relative error %.3e (tol 1e-4)", res.metric);
    res.detail = buf;
    return res;
}

CheckResult check_grad_expert_projection() {
    CheckResult res{"grad_expert_projection", true, 0.0, ""};
    Rng rng(13);
    const std::size_t d = 8;
    for (int i = 0; i < 50; ++i) {
        Expert expert(0, d, d, rng);
        const std::vector<double> x = l2_normalize(gaussian(rng, d, 0.0, 1.0));
        const std::size_t label = rng.next_index(d);
        const double g = 0.25 + 0.75 * rng.next_double();

        const Matrix analytic = expert_grad(expert, x, label, g);
        const Matrix fd = finite_diff_grad(
            [&](const Matrix& p) {
                return g * dr_loss(l2_normalize(matvec(p, x)), expert.frame, label);
            },
            expert.projection, 1e-6);
        res.metric = std::max(res.metric, rel_error(analytic, fd));
    }
    res.pass = res.metric < 1e-4;
    char buf[96];
    std::snprintf(buf, sizeof(buf), "max relative error %.3e (tol 1e-4)", res.metric);
    res.detail = buf;
    return res;
}

ModelState tiny_state(Rng& rng, TrainConfig& cfg) {
    cfg.n_experts = 4;
    cfg.k_top = 2;
    cfg.d_in = 8;
    cfg.d_out = 8;
    ModelState state = init_model(cfg, rng);
    state.routers.emplace(0, Router(0, cfg.d_in, cfg.n_experts, rng));
    for (int c = 0; c < 4; ++c) {
        state.class_registry.emplace(c, c);
        state.class_task.emplace(c, 0);
    }
    state.task_classes.emplace(0, std::vector<int>{0, 1, 2, 3});
    return state;
}

bool top_k_stable(const GatingResult& gating, std::size_t k_top, double margin) {
    std::vector<double> sorted = gating.logits;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    return sorted[k_top - 1] - sorted[k_top] > margin;
}

CheckResult check_grad_router() {
    CheckResult res{"grad_router", true, 0.0, ""};
    Rng rng(17);
    int done = 0;
    while (done < 50) {
        TrainConfig cfg;
        ModelState state = tiny_state(rng, cfg);
        const std::vector<double> x = l2_normalize(gaussian(rng, cfg.d_in, 0.0, 1.0));
        const int y = static_cast<int>(rng.next_index(4));

        const Router& router = state.routers.at(0);
        if (!top_k_stable(router.gate(x, 2), 2, 1e-4)) continue;
        ++done;

        const SampleGrads grads = sample_grads(state, 0, x, y, cfg.k_top);
        const Matrix fd_w = finite_diff_grad(
            [&](const Matrix& w) {
                ModelState probe = state;
                probe.routers.at(0).weights = w;
                return sample_loss(probe, 0, x, y, cfg.k_top).loss;
            },
            router.weights, 1e-6);
        const Matrix fd_b = finite_diff_grad(
            [&](const Matrix& b) {
                ModelState probe = state;
                probe.routers.at(0).bias = b.values();
                return sample_loss(probe, 0, x, y, cfg.k_top).loss;
            },
            as_row(router.bias), 1e-6);
        res.metric = std::max(res.metric, rel_error(grads.router_d_weights, fd_w));
        res.metric = std::max(res.metric, rel_error(as_row(grads.router_d_bias), fd_b));
    }
    res.pass = res.metric < 1e-4;
    char buf[96];
    std::snprintf(buf, sizeof(buf), "max relative error %.3e (tol 1e-4)", res.metric);
    res.detail = buf;
    return res;
}

CheckResult check_gating_contract() {
    CheckResult res{"gating_contract", true, 0.0, ""};
    Rng rng(19);
    const std::size_t d = 8;
    double worst_sum_dev = 0.0;
    for (int i = 0; i < 2000 && res.pass; ++i) {
        const std::size_t n = 2 + rng.next_index(7);
        Router router(0, d, n, rng);
        const std::vector<double> x = l2_normalize(gaussian(rng, d, 0.0, 1.0));
        const std::size_t k = 1 + rng.next_index(n);
        const GatingResult g = router.gate(x, k);

        std::size_t nonzeros = 0;
        double sum = 0.0;
        for (double w : g.weights) {
            if (w != 0.0) {
                ++nonzeros;
                if (w <= 0.0 || w > 1.0) res.pass = false;
            }
            sum += w;
        }
        if (nonzeros != k || g.selected.size() != k) res.pass = false;
        worst_sum_dev = std::max(worst_sum_dev, std::fabs(sum - 1.0));

        // Tie handling: all-equal logits must select the lowest indices.
        Router tied(0, d, n, rng);
        tied.weights = Matrix(n, d);
        const GatingResult tg = tied.gate(x, k);
        for (std::size_t j = 0; j < k; ++j) {
            if (tg.selected[j] != static_cast<int>(j)) res.pass = false;
        }
    }
    res.metric = worst_sum_dev;
    if (worst_sum_dev >= 1e-12) res.pass = false;
    char buf[96];
    std::snprintf(buf, sizeof(buf), "max |sum-1| %.3e (tol 1e-12)", res.metric);
    res.detail = buf;
    return res;
}

std::vector<TaskDataset> mini_sequence(std::uint64_t seed) {
    SequenceSpec spec;
    spec.n_tasks = 2;
    spec.classes_per_task = 2;
    spec.d_in = 8;
    spec.samples_per_class_train = 12;
    spec.samples_per_class_test = 4;
    spec.noise_sigma = 0.05;
    spec.inter_class_min_angle_deg = 45.0;
    spec.inter_task_rotation = true;
    spec.seed = seed;
    return gen_sequence(spec);
}

TrainConfig mini_config(std::uint64_t seed) {
    TrainConfig cfg;
    cfg.n_experts = 4;
    cfg.k_top = 2;
    cfg.k_freeze = 1;
    cfg.iterations = 30;
    cfg.batch_size = 8;
    cfg.d_in = 8;
    cfg.d_out = 8;
    cfg.seed = seed;
    return cfg;
}

CheckResult check_frozen_immutability() {
    CheckResult res{"frozen_immutability", true, 0.0, "frozen tensors byte-stable across a task"};
    const std::vector<TaskDataset> datasets = mini_sequence(23);
    const TrainConfig cfg = mini_config(23);

    Rng rng(cfg.seed);
    ModelState state = init_model(cfg, rng);
    train_task(state, datasets[0], cfg, rng);
    finalize_task(state, cfg.k_freeze);

    std::vector<std::pair<std::size_t, std::uint64_t>> frozen_hashes;
    for (std::size_t i = 0; i < state.experts.size(); ++i) {
        if (state.experts[i].frozen()) frozen_hashes.emplace_back(i, hash_matrix(state.experts[i].projection));
    }
    const std::uint64_t router0_hash = hash_router(state.routers.at(0));
    if (frozen_hashes.empty()) res.pass = false;

    train_task(state, datasets[1], cfg, rng);
    finalize_task(state, cfg.k_freeze);

    for (const auto& [idx, h] : frozen_hashes) {
        if (hash_matrix(state.experts[idx].projection) != h) res.pass = false;
    }
    if (hash_router(state.routers.at(0)) != router0_hash) res.pass = false;
    return res;
}

CheckResult check_determinism() {
    CheckResult res{"determinism", true, 0.0, "two identical runs produce identical model bytes"};
    const std::vector<TaskDataset> datasets = mini_sequence(29);
    const TrainConfig cfg = mini_config(29);
    const SequenceRunResult a = run_sequence(datasets, cfg);
    const SequenceRunResult b = run_sequence(datasets, cfg);
    res.pass = encode_checkpoint(a.states.back(), "") == encode_checkpoint(b.states.back(), "");
    return res;
}

} // namespace

std::vector<CheckResult> run_selfcheck(const SelfCheckOptions& options) {
    std::vector<CheckResult> results;
    results.push_back(check_etf_gram());
    results.push_back(check_dr_loss_values());
    results.push_back(check_grad_dr_feature(options.inject_dr_grad_sign_bug));
    results.push_back(check_grad_expert_projection());
    results.push_back(check_grad_router());
    results.push_back(check_gating_contract());
    results.push_back(check_frozen_immutability());
    results.push_back(check_determinism());
    return results;
}

bool all_passed(const std::vector<CheckResult>& results) {
    for (const CheckResult& r : results) {
        if (!r.pass) return false;
    }
    return true;
}

} // namespace freshcl
