#pragma once

#include <stdexcept>
#include <string>

namespace freshcl {

// Error taxonomy shared by the library and the CLI exit-code mapping.

struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ParameterError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct DegenerateInputError : std::domain_error {
    using std::domain_error::domain_error;
};

struct IndexError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

struct ContractError : std::logic_error {
    using std::logic_error::logic_error;
};

struct RegistryError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CapacityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct StateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InfeasibleSpecError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MissingArtifactError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_number(line) {}
    std::size_t line_number;
};

} // namespace freshcl
