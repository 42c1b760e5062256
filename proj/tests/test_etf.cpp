#include "freshcl/errors.hpp"
#include "freshcl/etf.hpp"
#include "freshcl/finite_diff.hpp"

#include <doctest.h>

#include <cmath>

using namespace freshcl;

namespace {

double max_gram_deviation_oracle(const EtfFrame& frame) {
    // Explicit Gram computation, independent of validate_etf.
    const Matrix gram = matmul(transpose(frame.targets), frame.targets);
    const double k = static_cast<double>(frame.num_targets);
    double worst = 0.0;
    for (std::size_t i = 0; i < frame.num_targets; ++i) {
        for (std::size_t j = 0; j < frame.num_targets; ++j) {
            const double want = (i == j) ? 1.0 : -1.0 / (k - 1.0);
            worst = std::max(worst, std::fabs(gram.at(i, j) - want));
        }
    }
    return worst;
}

} // namespace

TEST_CASE("generated frames satisfy the Gram identity") {
    Rng rng(7);
    const EtfFrame f4 = generate_etf(4, 4, rng);
    const Matrix gram = matmul(transpose(f4.targets), f4.targets);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(std::fabs(gram.at(i, i) - 1.0) < 1e-9);
        for (std::size_t j = 0; j < 4; ++j) {
            if (i != j) CHECK(std::fabs(gram.at(i, j) + 1.0 / 3.0) < 1e-9);
        }
    }

    Rng rng7(7);
    const EtfFrame f16 = generate_etf(16, 16, rng7);
    CHECK(max_gram_deviation_oracle(f16) < 1e-9);
}

TEST_CASE("Gram identity holds across the dimension grid") {
    const std::pair<std::size_t, std::size_t> shapes[] = {{4, 4}, {16, 16}, {64, 64}, {32, 16}};
    Rng rng(99);
    for (const auto& [d, k] : shapes) {
        const EtfFrame frame = generate_etf(d, k, rng);
        CHECK(max_gram_deviation_oracle(frame) < 1e-9);

        std::vector<double> col_sum(d, 0.0);
        for (std::size_t i = 0; i < d; ++i)
            for (std::size_t j = 0; j < k; ++j) col_sum[i] += frame.targets.at(i, j);
        CHECK(norm(col_sum) < 1e-9);
    }
}

TEST_CASE("generate_etf parameter errors") {
    Rng rng(1);
    CHECK_THROWS_AS(generate_etf(4, 1, rng), ParameterError);
    CHECK_THROWS_AS(generate_etf(4, 5, rng), ParameterError);
}

TEST_CASE("validate_etf flags forced violations") {
    Rng rng(21);
    EtfFrame frame = generate_etf(8, 8, rng);
    CHECK(validate_etf(frame).max_gram_deviation < 1e-9);
    CHECK(validate_etf(frame).max_norm_deviation < 1e-9);
    CHECK(validate_etf(frame, 1e-9).within_tolerance);
    CHECK_FALSE(validate_etf(frame, 1e-18).within_tolerance);

    // Doubling one column drives its norm deviation to exactly 1.
    EtfFrame scaled = frame;
    for (std::size_t i = 0; i < scaled.dim; ++i) scaled.targets.at(i, 2) *= 2.0;
    CHECK(validate_etf(scaled).max_norm_deviation == doctest::Approx(1.0).epsilon(1e-9));

    // Two equal columns at K=3: their mutual dot is 1 vs the target -1/2.
    Rng rng2(22);
    EtfFrame dup = generate_etf(5, 3, rng2);
    set_column(dup.targets, 1, column(dup.targets, 0));
    CHECK(validate_etf(dup).max_gram_deviation == doctest::Approx(1.5).epsilon(1e-9));
}

TEST_CASE("dr_loss exact values") {
    EtfFrame frame;
    frame.dim = 2;
    frame.num_targets = 2;
    frame.targets = Matrix(2, 2, {1.0, -1.0, 0.0, 0.0});

    CHECK(dr_loss({1.0, 0.0}, frame, 0) == 0.0);
    CHECK(dr_loss({0.0, 1.0}, frame, 0) == 0.5);
    CHECK(dr_loss({-1.0, 0.0}, frame, 0) == 2.0);

    CHECK_THROWS_AS(dr_loss({1.0, 0.0}, frame, 2), IndexError);
    CHECK_THROWS_AS(dr_loss({1.0, 1.0}, frame, 0), ParameterError);
}

TEST_CASE("dr_loss is rotation invariant") {
    Rng rng(31);
    const std::size_t d = 8;
    const EtfFrame frame = generate_etf(d, d, rng);
    const std::vector<double> mu = l2_normalize(gaussian(rng, d, 0.0, 1.0));
    const Matrix rot = thin_qr_q(gaussian_matrix(rng, d, d));

    EtfFrame rotated = frame;
    rotated.targets = matmul(rot, frame.targets);
    const std::vector<double> mu_rot = matvec(rot, mu);

    for (std::size_t y = 0; y < d; ++y) {
        CHECK(std::fabs(dr_loss(mu, frame, y) - dr_loss(mu_rot, rotated, y)) < 1e-12);
    }
}

TEST_CASE("dr_loss vanishes exactly at its target") {
    Rng rng(32);
    const EtfFrame frame = generate_etf(6, 6, rng);
    const std::vector<double> w2 = column(frame.targets, 2);
    CHECK(dr_loss(l2_normalize(w2), frame, 2) < 1e-15);
    // and only there among unit vectors: any other target column scores higher
    for (std::size_t y = 0; y < 6; ++y) {
        if (y != 2) CHECK(dr_loss(l2_normalize(w2), frame, y) > 0.5);
    }
}

TEST_CASE("dr_loss_grad geometry") {
    Rng rng(33);
    const std::size_t d = 8;
    const EtfFrame frame = generate_etf(d, d, rng);

    // Aligned feature: zero gradient.
    std::vector<double> aligned = column(frame.targets, 3);
    for (double& v : aligned) v *= 2.5;
    const std::vector<double> g0 = dr_loss_grad(aligned, frame, 3);
    CHECK(norm(g0) < 1e-12);

    // Gradient is tangent to the sphere at the feature.
    for (int trial = 0; trial < 10; ++trial) {
        const std::vector<double> mu = gaussian(rng, d, 0.0, 1.0);
        const std::vector<double> g = dr_loss_grad(mu, frame, trial % d);
        CHECK(std::fabs(dot(g, mu)) < 1e-9 * std::max(1.0, norm(g) * norm(mu)));
    }

    CHECK_THROWS_AS(dr_loss_grad(std::vector<double>(d, 0.0), frame, 0), DegenerateInputError);
}

TEST_CASE("dr_loss_grad matches finite differences") {
    Rng rng(34);
    const std::size_t d = 8;
    for (int trial = 0; trial < 20; ++trial) {
        const EtfFrame frame = generate_etf(d, d, rng);
        const std::vector<double> mu = gaussian(rng, d, 0.0, 1.0);
        const std::size_t y = rng.next_index(d);

        const std::vector<double> analytic = dr_loss_grad(mu, frame, y);
        const Matrix fd = finite_diff_grad(
            [&](const Matrix& m) { return dr_loss(l2_normalize(m.values()), frame, y); },
            Matrix(1, d, mu), 1e-6);

        double diff = 0.0, ref = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
            diff += (analytic[i] - fd.at(0, i)) * (analytic[i] - fd.at(0, i));
            ref += fd.at(0, i) * fd.at(0, i);
        }
        CHECK(std::sqrt(diff) / std::max(std::sqrt(ref), 1e-10) < 1e-5);
    }
}
