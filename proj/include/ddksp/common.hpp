#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace ddksp {

//! Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

//! A precondition on an argument was violated (sizes, ranges, feasibility).
class ArgumentError : public Error {
public:
  using Error::Error;
};

//! Input text is missing a required column.
class SchemaError : public Error {
public:
  using Error::Error;
};

//! Input stream or data set contained nothing to work with.
class EmptyInputError : public Error {
public:
  using Error::Error;
};

//! Data cannot support the requested estimate (e.g. zero spread for a KDE).
class DegenerateDataError : public Error {
public:
  using Error::Error;
};

//! Operation requested on an object in the wrong state (e.g. duals of an
//! infeasible LP).
class StateError : public Error {
public:
  using Error::Error;
};

//! Malformed configuration; the message names the offending field or line.
class ConfigError : public Error {
public:
  using Error::Error;
};

//! A pipeline stage was run before the stage that produces its input.
class DependencyError : public Error {
public:
  DependencyError(std::string stage, const std::string &what)
      : Error(what), stage_(std::move(stage)) {}
  const std::string &stage() const noexcept { return stage_; }

private:
  std::string stage_;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

//! Numerical tolerances shared by the LP/MIP engine and its callers.
namespace tol {
inline constexpr double feasibility = 1e-7;
inline constexpr double optimality = 1e-9;
inline constexpr double integrality = 1e-6;
inline constexpr double pivot = 1e-9;
} // namespace tol

//! Round half-up to the nearest integer.
inline double round_half_up(double v) { return std::floor(v + 0.5); }

} // namespace ddksp
