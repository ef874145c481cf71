#pragma once

#include <stdexcept>
#include <string>

namespace stratport {

/// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent caller input (bad files, out-of-range values,
/// misaligned panels). The CLI maps these to exit code 2.
class InputError : public Error {
public:
    using Error::Error;
};

/// Quantile boundaries could not be formed (too few distinct values).
class DegenerateBinsError : public InputError {
public:
    using InputError::InputError;
};

/// Numerical or model-level failure. The CLI maps these to exit code 3.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// A matrix argument left the domain of the function (e.g. log det of a
/// matrix that is not positive definite).
class DomainError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// The fitting problem has no unique minimizer.
class IdentifiabilityError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Pearson correlation with a zero-variance side.
class UndefinedCorrelationError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// The allocation problem has an empty feasible set.
class InfeasibleError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// The interior-point solver stopped without a certificate.
class SolverError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Every combination of a hyper-parameter search failed.
class TuningError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Regression design matrix without full column rank.
class RegressionError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace stratport
