#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "ucrcd/fixtures.hpp"
#include "ucrcd/solver.hpp"
#include "ucrcd/types.hpp"

namespace ucrcd {

enum class Preferred { nested, extended };
std::string_view to_string(Preferred p);

struct ModelComparison {
  double r2_nested = 0;
  double r2_extended = 0;
  double r2_tilde = 0;
  double f_ratio = 0;
  std::size_t n = 0;
  /// Free parameters of the extended model.
  std::size_t v = 0;
  /// Extra parameters of the extended model.
  std::size_t u = 0;
  double significance_level = 0.05;
  double f_critical = 0;
  double p_value = 1;
  Preferred preferred = Preferred::nested;
};

/// Squared multiple partial correlation (R2e - R2n) / (1 - R2n).
/// Throws InvalidArgument if r2_nested == 1 or r2_extended < r2_nested.
double r2_tilde(double r2_extended, double r2_nested);

/// F = R~2 (n - v) / ((1 - R~2) u). Throws InvalidArgument when R~2 == 1
/// (the statistic is infinite) or the counts are inconsistent.
double f_ratio(double r2_tilde, std::size_t n, std::size_t v, std::size_t u);

/// Prefers the extended model only if F exceeds the F(u, n - v) critical value.
ModelComparison compare_nested(double r2_nested, double r2_extended, std::size_t n, std::size_t v,
                               std::size_t u, double significance_level = 0.05);

/// Restricted vs unrestricted fits of one dataset. A failed fit leaves its
/// slot empty and records the message; the comparison needs both.
struct UcrcdComparison {
  std::optional<FitResult> restricted;
  std::optional<FitResult> unrestricted;
  std::optional<std::string> restricted_error;
  std::optional<std::string> unrestricted_error;
  std::optional<ModelComparison> comparison;
  std::optional<std::string> comparison_error;
};

/// Fits the restricted model, then the unrestricted one started from the
/// restricted optimum (gamma = delta), and compares them.
UcrcdComparison compare_ucrcd(const DuopolyDataset& dataset, const ParameterMap& fixed = {},
                              ObservationMode mode = ObservationMode::cumulative,
                              const SolverConfig& config = {}, double significance_level = 0.05);

/// Sign labels of the two cross coefficients; a label becomes no_effect when
/// its p-value is given and exceeds significance_level, or the value is 0.
InterplayVerdict classify_coefficients(double q1c, double entrant_cross,
                                       std::optional<double> q1c_p_value,
                                       std::optional<double> entrant_cross_p_value,
                                       double significance_level = 0.05);

/// Verdict for a fitted UCRCD model. The p-value of q2 - gamma comes from the
/// delta method on the joint covariance (delta stands in for gamma in
/// restricted fits). Throws InvalidArgument for Bass fits or when the needed
/// covariance entries are missing.
InterplayVerdict classify_interplay(const FitResult& fit, double significance_level = 0.05);

/// Verdict from published estimates: signs of q1c and of the reported
/// q2 - gamma value, with an exact zero read as no effect.
InterplayVerdict classify_reported(const CountryFixture& fixture);

}  // namespace ucrcd
