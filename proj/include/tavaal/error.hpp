#pragma once

#include <stdexcept>
#include <string>

namespace tavaal {

/// Programming error: a precondition the caller was responsible for was broken.
struct ContractViolation : std::logic_error {
    using std::logic_error::logic_error;
};

/// Bad argument supplied at runtime (label out of range, count too large, ...).
struct InputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Malformed file contents.
struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Two inputs that must agree do not (e.g. image and label counts).
struct ConsistencyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Optimisation produced something unusable, typically a non-finite gradient.
struct TrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace tavaal
