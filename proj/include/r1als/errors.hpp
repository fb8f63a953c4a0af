#pragma once

#include <stdexcept>
#include <string>

namespace r1als {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Tensor orders or mode sizes disagree between operands.
struct DimMismatch : Error { using Error::Error; };

/// Requested shape is invalid (order < 2, empty mode, value count mismatch, ...).
struct BadDims : Error { using Error::Error; };

/// The target tensor of an approximation problem is identically zero.
struct ZeroTarget : Error { using Error::Error; };

/// A factor of a rank-one representation is the zero vector.
struct DegenerateFactor : Error { using Error::Error; };

/// An updated factor collapsed below the representable range (norm < 1e-150).
struct DegenerateIterate : Error { using Error::Error; };

/// The initial guess evaluates to the zero tensor.
struct ZeroInitial : Error { using Error::Error; };

/// An angle was requested against a reference the iterate is orthogonal to.
struct OrthogonalToReference : Error { using Error::Error; };

/// A ratio was requested with a vanishing denominator coefficient.
struct ZeroCoefficient : Error { using Error::Error; };

/// The tensor order is too small for the requested quantity (needs d >= 3).
struct OrderTooSmall : Error { using Error::Error; };

/// No term of the decomposition strictly dominates at the given point.
struct NoDominance : Error { using Error::Error; };

/// A certificate was requested at a point that is not stationary.
struct NotStationary : Error { using Error::Error; };

/// A trace does not contain enough finite values for the requested window.
struct InsufficientTrace : Error { using Error::Error; };

/// A recorded run violates a guaranteed monotonicity/termination property.
struct AuditFailure : Error { using Error::Error; };

/// A weight that must be nonnegative is negative.
struct NegativeLambda : Error { using Error::Error; };

/// A scalar parameter lies outside the documented domain.
struct OutOfRange : Error { using Error::Error; };

/// Requested CP rank exceeds what orthonormal columns permit.
struct RankTooLarge : Error { using Error::Error; };

/// Generator parameters violate their documented inequalities.
struct ConstraintViolated : Error { using Error::Error; };

/// Unknown canned-experiment identifier.
struct UnknownFigure : Error { using Error::Error; };

/// Malformed input file (tensor file or config file).
struct ParseError : Error { using Error::Error; };

} // namespace r1als
