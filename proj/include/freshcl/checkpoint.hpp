#pragma once

#include "freshcl/trainer.hpp"

#include <string>

namespace freshcl {

// Binary model container: magic "FRESHCL1", a section table, then
// little-endian payloads (experts, routers, registry, prototypes, config
// echo). Same state in, same bytes out.
std::string encode_checkpoint(const ModelState& state, const std::string& config_echo);

void save_checkpoint(const ModelState& state, const std::string& config_echo,
                     const std::string& path);

struct Checkpoint {
    ModelState state;
    std::string config_echo;
};

Checkpoint decode_checkpoint(const std::string& bytes);
Checkpoint load_checkpoint(const std::string& path);

} // namespace freshcl
