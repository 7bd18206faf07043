#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace meponmf {

inline constexpr const char* kVersion = "0.1.0";

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed input file (bad CSV syntax, ragged rows, wrong field count).
struct ParseError : Error {
    using Error::Error;
};

/// Value outside the model's domain (negative entry, NaN/Inf, zero column).
struct DomainError : Error {
    using Error::Error;
};

/// Column weights that are not a probability vector.
struct WeightError : Error {
    using Error::Error;
};

/// Unexpected numerical breakdown (zero normalizer, invalid temperature).
struct NumericalError : Error {
    using Error::Error;
};

/// A feature lost essentially all of its assigned mass.
struct DegenerateFeature : Error {
    using Error::Error;
};

/// The capacity fixed point failed to meet its residual at the iteration cap.
struct FixedPointDivergence : Error {
    using Error::Error;
};

/// Symmetric eigensolver did not converge.
struct EigenFailure : Error {
    using Error::Error;
};

/// Split requested although the feature budget is exhausted.
struct CapacityReached : Error {
    using Error::Error;
};

/// The temperature schedule cannot terminate.
struct ScheduleError : Error {
    using Error::Error;
};

/// Fewer than two recorded transitions; persistence is undefined.
struct InsufficientTransitions : Error {
    using Error::Error;
};

/// Incompatible matrix dimensions.
struct ShapeMismatch : Error {
    using Error::Error;
};

/// Gram matrix is identically zero.
struct DegenerateGram : Error {
    using Error::Error;
};

/// Rejection sampling exceeded its attempt budget.
struct RejectionOverflow : Error {
    using Error::Error;
};

}  // namespace meponmf
