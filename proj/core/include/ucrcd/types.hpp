#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace ucrcd {

// Model time: t = 0 at the start of the first observed year; observation k
// covers (k, k+1]. Flows are ExaJoules/year, cumulatives ExaJoules.

/// Yearly consumption of one technology.
class AnnualSeries {
 public:
  /// Throws InvalidArgument unless there are >= 3 finite, non-negative values.
  AnnualSeries(std::string label, int start_year, std::vector<double> values);

  const std::string& label() const noexcept { return label_; }
  int start_year() const noexcept { return start_year_; }
  int end_year() const noexcept { return start_year_ + static_cast<int>(values_.size()) - 1; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t k) const { return values_.at(k); }

  /// Running totals; element k is the cumulative at model time k + 1.
  std::vector<double> cumulative() const;

 private:
  std::string label_;
  int start_year_;
  std::vector<double> values_;
};

/// Incumbent and entrant series on a common annual grid, with the entrant
/// launch time c2 (years since the series start).
class DuopolyDataset {
 public:
  /// Entrant values for observations ending at or before c2 must be exactly 0.
  DuopolyDataset(AnnualSeries incumbent, AnnualSeries entrant, int c2);

  const AnnualSeries& incumbent() const noexcept { return incumbent_; }
  const AnnualSeries& entrant() const noexcept { return entrant_; }
  int c2() const noexcept { return c2_; }
  std::size_t size() const noexcept { return incumbent_.size(); }
  int start_year() const noexcept { return incumbent_.start_year(); }

 private:
  AnnualSeries incumbent_;
  AnnualSeries entrant_;
  int c2_;
};

/// Univariate Bass model parameters.
class BassParams {
 public:
  /// Requires m > 0, p > 0, q >= 0 (all finite).
  BassParams(double m, double p, double q);

  double m() const noexcept { return m_; }
  double p() const noexcept { return p_; }
  double q() const noexcept { return q_; }

 private:
  double m_, p_, q_;
};

/// Index of each UCRCD coefficient in canonical order.
enum class UcrcdParam : std::size_t { ma, p1a, q1a, mc, p1c, q1c, delta, p2, q2, gamma };

inline constexpr std::size_t kUcrcdParamCount = 10;
inline constexpr std::array<std::string_view, kUcrcdParamCount> kUcrcdParamNames = {
    "ma", "p1a", "q1a", "mc", "p1c", "q1c", "delta", "p2", "q2", "gamma"};

std::string_view to_string(UcrcdParam p);
std::optional<UcrcdParam> ucrcd_param_from_string(std::string_view name);

/// Plain aggregate used to build UcrcdParams by field name.
struct UcrcdValues {
  double ma = 0, p1a = 0, q1a = 0;
  double mc = 0, p1c = 0, q1c = 0, delta = 0;
  double p2 = 0, q2 = 0, gamma = 0;
};

/// Full parameter vector of the two-phase duopoly model.
///
/// Monopoly phase (t <= c2): Bass with (ma, p1a, q1a).
/// Competition phase (t > c2): incumbent external p1c, within-imitation
/// q1c + delta, cross-imitation q1c; entrant external p2, within-imitation q2,
/// cross-imitation q2 - gamma. The restricted (standard) variant has
/// gamma == delta and stores it once.
class UcrcdParams {
 public:
  /// Throws InvalidArgument on non-finite values, ma <= 0, mc <= 0, or a
  /// restricted set whose gamma differs from delta.
  UcrcdParams(const UcrcdValues& v, bool restricted);

  /// Restricted parameters; v.gamma is ignored and taken equal to v.delta.
  static UcrcdParams make_restricted(UcrcdValues v);
  static UcrcdParams make_unrestricted(const UcrcdValues& v);

  double ma() const noexcept { return get(UcrcdParam::ma); }
  double p1a() const noexcept { return get(UcrcdParam::p1a); }
  double q1a() const noexcept { return get(UcrcdParam::q1a); }
  double mc() const noexcept { return get(UcrcdParam::mc); }
  double p1c() const noexcept { return get(UcrcdParam::p1c); }
  double q1c() const noexcept { return get(UcrcdParam::q1c); }
  double delta() const noexcept { return get(UcrcdParam::delta); }
  double p2() const noexcept { return get(UcrcdParam::p2); }
  double q2() const noexcept { return get(UcrcdParam::q2); }
  double gamma() const noexcept { return get(UcrcdParam::gamma); }
  bool restricted() const noexcept { return restricted_; }

  /// q1c + delta.
  double incumbent_within() const noexcept { return q1c() + delta(); }
  /// q2 - gamma.
  double entrant_cross() const noexcept { return q2() - gamma(); }

  double get(UcrcdParam p) const noexcept;
  /// Copy with one coefficient replaced. Setting delta on a restricted set
  /// moves gamma with it; setting gamma on a restricted set throws.
  UcrcdParams with(UcrcdParam p, double value) const;
  UcrcdValues values() const noexcept;

 private:
  std::array<double, kUcrcdParamCount> v_{};
  bool restricted_;
};

/// Simulated trajectory on an annual grid. Row k has time k + 1 and holds the
/// flow over (k, k+1] and the cumulative at k + 1.
class Trajectory {
 public:
  Trajectory(std::vector<double> times, std::vector<double> z1_inst, std::vector<double> z2_inst,
             std::vector<double> z1_cum, std::vector<double> z2_cum);

  std::span<const double> times() const noexcept { return times_; }
  std::span<const double> z1_inst() const noexcept { return z1_inst_; }
  std::span<const double> z2_inst() const noexcept { return z2_inst_; }
  std::span<const double> z1_cum() const noexcept { return z1_cum_; }
  std::span<const double> z2_cum() const noexcept { return z2_cum_; }
  std::size_t size() const noexcept { return times_.size(); }

 private:
  std::vector<double> times_, z1_inst_, z2_inst_, z1_cum_, z2_cum_;
};

enum class ModelKind { bass, ucrcd_restricted, ucrcd_unrestricted };
enum class ObservationMode { cumulative, instantaneous };

std::string_view to_string(ModelKind kind);
std::string_view to_string(ObservationMode mode);
std::optional<ModelKind> model_kind_from_string(std::string_view s);
std::optional<ObservationMode> observation_mode_from_string(std::string_view s);

/// Canonical parameter names of a model kind (Bass: m, p, q).
std::vector<std::string> parameter_names(ModelKind kind);

/// One row of a fitted-parameter table. Fixed parameters carry NaN statistics.
struct ParameterEstimate {
  std::string name;
  double estimate = 0;
  double std_error = 0;
  double ci_lower = 0;
  double ci_upper = 0;
  double p_value = 0;
  bool fixed = false;
};

/// Estimates and asymptotic inference for one fitted model.
struct FitResult {
  ModelKind model = ModelKind::bass;
  ObservationMode mode = ObservationMode::cumulative;
  std::variant<BassParams, UcrcdParams> params = BassParams(1, 1, 0);
  /// Every model parameter in canonical order, fixed ones included.
  std::vector<ParameterEstimate> table;
  /// Covariance of the free parameters, ordered as covariance_names.
  Eigen::MatrixXd covariance;
  std::vector<std::string> covariance_names;
  double r_squared = 0;
  double rss = 0;
  std::vector<double> residuals;
  std::size_t n_obs = 0;
  std::size_t n_params = 0;
  bool converged = false;
  int iterations = 0;
  /// RSS after the initial guess and after each accepted step.
  std::vector<double> rss_history;
  /// Launch time for UCRCD fits.
  std::optional<int> c2;

  const ParameterEstimate& parameter(std::string_view name) const;
  std::size_t degrees_of_freedom() const noexcept { return n_obs - n_params; }

  /// Throws InvalidArgument when a documented invariant does not hold.
  void validate() const;
};

enum class Interplay { competition, collaboration, no_effect };
std::string_view to_string(Interplay i);

/// Competition/collaboration reading of the two cross-imitation coefficients.
struct InterplayVerdict {
  /// Effect of the entrant on the incumbent (sign of q1c).
  Interplay rets_vs_incumbent = Interplay::no_effect;
  /// Effect of the incumbent on the entrant (sign of q2 - gamma).
  Interplay incumbent_vs_rets = Interplay::no_effect;
  double q1c_value = 0;
  double entrant_cross_value = 0;
  std::optional<double> q1c_p_value;
  std::optional<double> entrant_cross_p_value;
  /// True when a no_effect label came from statistical non-significance
  /// (as opposed to a coefficient that is exactly zero).
  bool significance_used = false;
};

}  // namespace ucrcd
