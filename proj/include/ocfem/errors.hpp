#pragma once

#include <stdexcept>
#include <string>

namespace ocfem {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid argument or precondition violation.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Requested feature outside the supported catalog (quadrature order, tabulated constant, ...).
class UnsupportedError : public Error {
 public:
  using Error::Error;
};

/// Constraint region is not a union of closed mesh triangles.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

/// Direct factorization hit a (near-)zero pivot or the solution failed the residual check.
class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

/// An iteration budget was exhausted before reaching tolerance.
class NonConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Configuration file problems; message carries file/line diagnostics.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File system failures (open/read/write).
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ocfem
