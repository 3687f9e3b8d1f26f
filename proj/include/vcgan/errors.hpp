#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vcgan {

/// Tensor dimensions disagree with what an operation requires.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An object was assembled or configured inconsistently (e.g. a sampler stack
/// invoked without noise, or an invalid experiment config field).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An operation was called in the wrong order (backward before forward).
class StateError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// A computation produced NaN or Inf.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Training hit a non-finite loss; carries the failing iteration.
class TrainingDiverged : public NumericError {
public:
    TrainingDiverged(std::size_t iteration, const std::string& what)
        : NumericError("training diverged at iteration " + std::to_string(iteration) + ": " + what),
          iteration_(iteration) {}

    std::size_t iteration() const noexcept { return iteration_; }

private:
    std::size_t iteration_;
};

} // namespace vcgan
