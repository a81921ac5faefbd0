#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ucrcd {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value or combination of values violates a documented invariant.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// The ODE integration produced a non-finite or negative cumulative state.
class SimulationError : public Error {
 public:
  SimulationError(const std::string& what, double time) : Error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// Estimation failed in a way that no estimate can be reported.
class SolverError : public Error {
 public:
  using Error::Error;
};

/// The inference Jacobian is (numerically) rank deficient.
class RankDeficientError : public SolverError {
 public:
  using ParameterPair = std::pair<std::string, std::string>;

  RankDeficientError(const std::string& what, std::vector<ParameterPair> pairs,
                     std::vector<std::string> inert)
      : SolverError(what), pairs_(std::move(pairs)), inert_(std::move(inert)) {}

  /// Parameter pairs whose Jacobian columns are nearly collinear.
  const std::vector<ParameterPair>& collinear_pairs() const noexcept { return pairs_; }
  /// Parameters that have (numerically) no influence on the residuals.
  const std::vector<std::string>& inert_parameters() const noexcept { return inert_; }

 private:
  std::vector<ParameterPair> pairs_;
  std::vector<std::string> inert_;
};

/// Input file could not be read under the expected layout.
class ParseError : public Error {
 public:
  enum class Kind {
    io,
    header,
    malformed_row,
    missing_value,
    non_consecutive_year,
    negative_value,
    no_monopoly_phase,
    no_entrant,
    invalid_dataset,
  };

  ParseError(Kind kind, std::size_t line, const std::string& what)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        kind_(kind),
        line_(line) {}

  Kind kind() const noexcept { return kind_; }
  /// 1-based line number, 0 when the error is not tied to a line.
  std::size_t line() const noexcept { return line_; }

 private:
  Kind kind_;
  std::size_t line_;
};

}  // namespace ucrcd
