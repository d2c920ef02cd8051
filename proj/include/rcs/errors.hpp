#pragma once

#include <stdexcept>
#include <string>

namespace rcs {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user configuration (grid size, parameters, cutoffs, files).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A caller broke an operation's precondition (wrong representation,
/// mismatched grids or sample counts).
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Quadrature lattice too coarse for the requested evaluation.
class ResolutionError : public Error {
 public:
  ResolutionError(const std::string& what, int required_n)
      : Error(what), required_n_(required_n) {}
  int required_n() const noexcept { return required_n_; }

 private:
  int required_n_;
};

/// Input data unusable for a fit (nonpositive values, too few points).
class DataError : public Error {
 public:
  using Error::Error;
};

/// A time norm with r < infinity was requested from a single sample.
class DegenerateQuadratureError : public Error {
 public:
  using Error::Error;
};

/// Fit window contains too few admissible samples.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

/// The density came too close to vacuum for the nonlinearity to make sense.
class ModelBreakdownError : public Error {
 public:
  using Error::Error;
};

/// A time step produced non-finite values.
class BlowUpError : public Error {
 public:
  BlowUpError(const std::string& what, double last_valid_time)
      : Error(what), last_valid_time_(last_valid_time) {}
  double last_valid_time() const noexcept { return last_valid_time_; }

 private:
  double last_valid_time_;
};

}  // namespace rcs
