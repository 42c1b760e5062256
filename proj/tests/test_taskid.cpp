#include "freshcl/errors.hpp"
#include "freshcl/matrix.hpp"
#include "freshcl/rng.hpp"
#include "freshcl/taskid.hpp"

#include <doctest.h>

#include <cmath>

using namespace freshcl;

TEST_CASE("build_prototype") {
    const std::vector<double> single = {3.0, 4.0};
    const std::vector<double> p = build_prototype({single});
    CHECK(p[0] == doctest::Approx(0.6).epsilon(1e-15));
    CHECK(p[1] == doctest::Approx(0.8).epsilon(1e-15));

    // features symmetric about a direction average to that direction
    const std::vector<double> v = {1.0, 0.0, 0.0};
    const std::vector<double> d = {0.0, 0.3, -0.2};
    std::vector<double> plus = v, minus = v;
    for (std::size_t i = 0; i < 3; ++i) {
        plus[i] += d[i];
        minus[i] -= d[i];
    }
    const std::vector<double> sym = build_prototype({plus, minus});
    CHECK(sym[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::fabs(sym[1]) < 1e-12);

    CHECK_THROWS_AS(build_prototype({}), ParameterError);
    CHECK_THROWS_AS(build_prototype({{1.0, 0.0}, {-1.0, 0.0}}), DegenerateInputError);
}

TEST_CASE("prototype of a noisy cluster recovers the mean direction") {
    Rng rng(81);
    const std::size_t d = 16;
    const std::vector<double> m = l2_normalize(gaussian(rng, d, 0.0, 1.0));
    std::vector<std::vector<double>> features;
    for (int i = 0; i < 1000; ++i) {
        std::vector<double> f = m;
        const std::vector<double> noise = gaussian(rng, d, 0.0, 0.1);
        for (std::size_t j = 0; j < d; ++j) f[j] += noise[j];
        features.push_back(std::move(f));
    }
    const std::vector<double> proto = build_prototype(features);
    CHECK(dot(proto, m) > 0.999);
}

TEST_CASE("identify_task basics") {
    TaskPrototypeBank bank;
    bank.prototypes[0] = {1.0, 0.0};
    bank.prototypes[1] = {0.0, 1.0};

    CHECK(identify_task(bank, {1.0, 0.0}) == 0);
    CHECK(identify_task(bank, {0.0, 3.0}) == 1);

    // positive scaling cannot change the winner
    CHECK(identify_task(bank, {0.2, 0.1}) == identify_task(bank, {20.0, 10.0}));

    // exact tie resolves to the lower task id
    TaskPrototypeBank dup;
    dup.prototypes[3] = {1.0, 0.0};
    dup.prototypes[5] = {1.0, 0.0};
    CHECK(identify_task(dup, {1.0, 0.0}) == 3);

    TaskPrototypeBank single;
    single.prototypes[2] = {0.0, 1.0};
    CHECK(identify_task(single, {1.0, 0.0}) == 2);

    CHECK_THROWS_AS(identify_task(TaskPrototypeBank{}, {1.0, 0.0}), StateError);
}

TEST_CASE("well-separated tasks identify at over 99 percent") {
    Rng rng(82);
    const std::size_t d = 16;
    std::vector<double> a = l2_normalize(gaussian(rng, d, 0.0, 1.0));
    std::vector<double> b;
    do {
        b = l2_normalize(gaussian(rng, d, 0.0, 1.0));
    } while (std::fabs(dot(a, b)) >= 0.2);

    TaskPrototypeBank bank;
    bank.prototypes[0] = a;
    bank.prototypes[1] = b;

    int correct = 0;
    const int n = 500;
    for (int i = 0; i < n; ++i) {
        for (int task = 0; task < 2; ++task) {
            std::vector<double> q = (task == 0) ? a : b;
            const std::vector<double> noise = gaussian(rng, d, 0.0, 0.1);
            for (std::size_t j = 0; j < d; ++j) q[j] += noise[j];
            if (identify_task(bank, q) == task) ++correct;
        }
    }
    CHECK(static_cast<double>(correct) / (2 * n) > 0.99);
}
