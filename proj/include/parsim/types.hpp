#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace parsim {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Which driving signal a Markov parameter / Toeplitz matrix refers to.
enum class Channel { input, noise };

// Error hierarchy. Every failure the library raises derives from Error so
// callers (the CLI in particular) can map categories onto exit codes.

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed model, dimension mismatch or invalid experiment configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

class DataLengthError : public Error {
public:
    using Error::Error;
};

/// Raised when a regressor Gram matrix is numerically singular.
class PersistenceOfExcitationError : public Error {
public:
    PersistenceOfExcitationError(const std::string& what, int row, double singular_value)
        : Error(what), row_(row), singular_value_(singular_value) {}

    /// 1-based ARX row index (0 when the failing Gram is not a bank row,
    /// e.g. the future-input Gram of the projection estimator).
    int row() const noexcept { return row_; }
    double singular_value() const noexcept { return singular_value_; }

private:
    int row_;
    double singular_value_;
};

class RankDeficiencyError : public Error {
public:
    using Error::Error;
};

class ExtractionError : public Error {
public:
    using Error::Error;
};

class AlignmentError : public Error {
public:
    using Error::Error;
};

class HorizonInfeasibleError : public Error {
public:
    using Error::Error;
};

class BurnInNotFoundError : public Error {
public:
    using Error::Error;
};

class ConditionViolatedError : public Error {
public:
    using Error::Error;
};

class NumericalCovarianceError : public Error {
public:
    using Error::Error;
};

class FitError : public Error {
public:
    using Error::Error;
};

class SweepError : public Error {
public:
    using Error::Error;
};

class ArgumentError : public Error {
public:
    using Error::Error;
};

}  // namespace parsim
