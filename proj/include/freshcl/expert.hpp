#pragma once

#include "freshcl/etf.hpp"
#include "freshcl/matrix.hpp"
#include "freshcl/optim.hpp"
#include "freshcl/rng.hpp"

#include <cstdint>
#include <vector>

namespace freshcl {

enum class ExpertStatus { trainable, frozen };

// A trainable bias-free linear projection onto a hypersphere, paired with
// its own fixed target frame. Freezing is absorbing: once frozen the
// projection bytes never change again, though the expert stays selectable.
struct Expert {
    Expert() = default;
    Expert(int id, std::size_t d_in, std::size_t d_out, Rng& rng);

    // normalize(P x): the expert-specific hypersphere embedding.
    std::vector<double> project(const std::vector<double>& feature) const;

    void freeze() { status = ExpertStatus::frozen; }
    bool frozen() const { return status == ExpertStatus::frozen; }
    void record_usage(std::uint64_t times) { usage_count += times; }

    int id = 0;
    Matrix projection; // d_out x d_in
    EtfFrame frame;    // dim == d_out, num_targets == d_out
    ExpertStatus status = ExpertStatus::trainable;
    std::uint64_t usage_count = 0;
    AdamWState opt_state;
};

} // namespace freshcl
