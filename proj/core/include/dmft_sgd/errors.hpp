#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dmft_sgd {

/// Non-finite or out-of-domain argument passed to a model function.
class InvalidInput : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Shapes, grids or causality structure do not match what an operation needs.
class StructuralError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Operation requested for a model family it does not support
/// (e.g. the closed-form linear map on a tanh activation).
class UnsupportedModel : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Base for failures of the numerics themselves.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class KernelNotPSD : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// A simulated iterate became non-finite or exceeded the blow-up guard.
class DivergenceError : public NumericalError {
public:
    DivergenceError(const std::string& what, std::size_t step)
        : NumericalError(what + " (first bad step " + std::to_string(step) + ")"), step_(step) {}

    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

class NonConvergence : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace dmft_sgd
