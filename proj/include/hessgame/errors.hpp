#pragma once
// Exception types shared across the toolkit. Each maps to one error code
// of the C API; the names follow the failure they signal, not the caller.

#include <stdexcept>
#include <string>

namespace hg {

// Base class for all toolkit errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An input matrix or vector contains NaN or Inf.
struct NonFiniteError : Error {
  using Error::Error;
};

// Matrix has an eigenvalue below the negative clamp tolerance.
struct NotPsdError : Error {
  using Error::Error;
};

// Frame columns are numerically dependent (orthonormalization collapsed).
struct DegenerateFrameError : Error {
  using Error::Error;
};

// Dimension outside the supported range, or operands of mismatched size.
struct DimError : Error {
  using Error::Error;
};

// Requested rank (k, k1, k2, j) outside its admissible range.
struct RankError : Error {
  using Error::Error;
};

// A matrix required to be orthogonal is not, within tolerance.
struct NotOrthogonalError : Error {
  using Error::Error;
};

// An auxiliary-function evaluation was requested outside its region.
struct RegionViolationError : Error {
  using Error::Error;
};

// A point lies outside the domain where the operation needs it inside.
struct OutsideDomainError : Error {
  using Error::Error;
};

// A query left the grid hull where no fallback is defined.
struct OutOfGridError : Error {
  using Error::Error;
};

// A stencil foot left the ghost layer even after sub-step shrinking.
struct StencilEscapeError : Error {
  using Error::Error;
};

// Config file missing, unparseable, or violating module invariants.
struct ConfigError : Error {
  using Error::Error;
};

}  // namespace hg
