#pragma once

#include <stdexcept>
#include <string>

namespace dsmks {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument or configuration value failed.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// An iterative solve did not reach its tolerance.
class SolverFailure : public Error {
public:
    SolverFailure(const std::string& what, double residual)
        : Error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// NaN/Inf in a field, or an unrecoverable positivity violation.
class NumericalFailure : public Error {
public:
    using Error::Error;
};

/// The step size collapsed below the configured floor.
class StiffnessFailure : public Error {
public:
    using Error::Error;
};

}  // namespace dsmks
