// errors.hpp — exception types thrown across the library.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace gula {

struct InvalidAdjacency : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DisconnectedGraph : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IndexOutOfRange : std::out_of_range {
    using std::out_of_range::out_of_range;
};

// Overlapping gossip: every free agent's neighborhood is fully engaged.
struct NoAvailablePair : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonFiniteGradient : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A parameter vector picked up a non-finite coordinate; the trial aborts
// with the offending cycle attached (never clipped or masked).
struct NonFiniteState : std::runtime_error {
    int64_t cycle;
    NonFiniteState(const std::string& what, int64_t cycle_index)
        : std::runtime_error(what + " at cycle " + std::to_string(cycle_index)),
          cycle(cycle_index) {}
};

struct DegenerateSamples : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InsufficientData : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NonPositiveValues : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Carries the offending field path, e.g. "hyper.beta".
struct ValidationError : std::runtime_error {
    std::string field;
    ValidationError(std::string field_path, const std::string& what)
        : std::runtime_error(field_path + ": " + what), field(std::move(field_path)) {}
};

struct MalformedRow : std::runtime_error {
    int64_t line;
    MalformedRow(const std::string& what, int64_t line_number)
        : std::runtime_error(what + " (line " + std::to_string(line_number) + ")"),
          line(line_number) {}
};

struct MissingSubjectFile : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace gula
