#pragma once
#include <stdexcept>
#include <string>

namespace hoifit {

// Base for all errors thrown by the library. CLI exit codes: validation/parse
// errors -> 1, optimizer failures -> 2, internal errors -> 3.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad inputs: malformed files, out-of-range values, dimension mismatches,
// degenerate evidence, geometry that cannot be rendered.
struct ValidationError : Error {
  using Error::Error;
};

// A vertex with z <= 0 reached a projection; callers see which one.
struct BehindCameraError : ValidationError {
  using ValidationError::ValidationError;
};

// Geometry extends outside the image; rendering refuses to clip silently.
struct ClippedGeometryError : ValidationError {
  using ValidationError::ValidationError;
};

// All keypoint confidences zero (or similar): nothing to fit against.
struct DegenerateEvidenceError : ValidationError {
  using ValidationError::ValidationError;
};

// A synthesis spec that produced no visible scene within the retry budget.
struct GenerationError : ValidationError {
  using ValidationError::ValidationError;
};

// Optimization failed in a way the caller may want to handle.
struct OptimError : Error {
  using Error::Error;
};

// Non-finite loss or parameters during optimization.
struct DivergenceError : OptimError {
  int iteration;
  DivergenceError(const std::string& msg, int iter)
      : OptimError(msg), iteration(iter) {}
};

// Every start of a multi-start run diverged; no hypothesis to return.
struct NoHypothesisError : OptimError {
  using OptimError::OptimError;
};

// Bug territory: broken internal invariants.
struct InternalError : Error {
  using Error::Error;
};

}  // namespace hoifit
