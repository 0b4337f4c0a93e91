#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace hcalc {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operands with incompatible shapes (group dimension, splitting, vector lengths).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the admissible set: non-positive dilation, point outside a
/// declared box, index out of range.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Expression text could not be parsed. `offset` is the byte offset of the
/// offending token.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class UnknownIdentifier : public ParseError {
 public:
  UnknownIdentifier(const std::string& name, std::size_t offset)
      : ParseError("unknown identifier '" + name + "'", offset), name_(name) {}
  const std::string& name() const noexcept { return name_; }

 private:
  std::string name_;
};

/// Failures of a numerical procedure, as opposed to bad input.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Derivative requested at a point where abs/sqrt/sign is not differentiable.
class NonsmoothPoint : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// |det Xf| fell below the configured threshold.
class HorizontalDegeneracy : public NumericalError {
 public:
  HorizontalDegeneracy(const std::string& what, double det)
      : NumericalError(what), det_(det) {}
  double det() const noexcept { return det_; }

 private:
  double det_;
};

class MaxIterations : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// An integral curve left the domain box. `exit_time` is the last curve
/// parameter known to be inside.
class CurveExit : public NumericalError {
 public:
  CurveExit(const std::string& what, double exit_time)
      : NumericalError(what), exit_time_(exit_time) {}
  double exit_time() const noexcept { return exit_time_; }

 private:
  double exit_time_;
};

class StepUnderflow : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// A sampling procedure produced nothing to work with.
class EmptySample : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace hcalc
