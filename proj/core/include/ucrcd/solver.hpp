#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "ucrcd/kernels.hpp"
#include "ucrcd/types.hpp"

namespace ucrcd {

using ParameterMap = std::map<std::string, double, std::less<>>;

/// Levenberg-Marquardt settings.
struct SolverConfig {
  int max_iterations = 400;
  /// Relative decrease of the residual sum of squares that ends the search.
  double rss_rel_tolerance = 1e-10;
  double initial_damping = 1e-3;
  /// Relative step of the finite-difference Jacobians.
  double fd_relative_step = 1e-6;
  /// Optimise log(m), log(p) (Bass) and log(ma), log(mc), log(p1a), log(p1c)
  /// (UCRCD) so those stay positive.
  bool log_transform_positive = true;
  IntegratorConfig integrator;

  void validate() const;
};

/// What to fit: data, model, pinned parameters, and observation mode.
struct FitProblem {
  std::variant<AnnualSeries, DuopolyDataset> data;
  ModelKind model = ModelKind::bass;
  /// Parameters held at the given value; they do not count towards n_params.
  ParameterMap fixed{};
  ObservationMode mode = ObservationMode::cumulative;
  /// Order of the free-parameter vector; empty means canonical order.
  std::vector<std::string> free_order{};

  static FitProblem bass(AnnualSeries series, ObservationMode mode = ObservationMode::cumulative);
  static FitProblem ucrcd(DuopolyDataset dataset, bool restricted, ParameterMap fixed = {},
                          ObservationMode mode = ObservationMode::cumulative);

  bool is_bass() const noexcept { return model == ModelKind::bass; }
  /// Launch time, or nullopt for Bass problems.
  std::optional<int> c2() const;
  std::size_t series_length() const;

  std::vector<std::string> free_parameters() const;
  /// Number of stacked observations: n for Bass, n + (n - c2) for UCRCD.
  std::size_t n_obs() const;
  /// Stacked observed response w, incumbent block then entrant block after c2.
  std::vector<double> observations() const;

  /// Throws InvalidArgument / SolverError when the problem cannot be fitted.
  void validate() const;
};

/// Stacked model prediction eta(beta, t) for a full set of model parameters.
std::vector<double> predict(const FitProblem& problem,
                            const std::variant<BassParams, UcrcdParams>& params,
                            const IntegratorConfig& config = {});

/// Builds the model parameters from free values (natural scale, in
/// free_parameters() order) plus the problem's fixed values.
std::variant<BassParams, UcrcdParams> assemble_params(const FitProblem& problem,
                                                      std::span<const double> beta);

/// w - eta(beta, t). Simulation failures are rethrown with the parameter vector.
std::vector<double> residuals(const FitProblem& problem, std::span<const double> beta,
                              const SolverConfig& config = {});

/// Deterministic starting point: m's at 1.5x the final (combined) cumulative,
/// p's at 1e-3, q's at 0.2, delta and gamma at q2's start value.
ParameterMap auto_init(const FitProblem& problem);

/// Jacobian of the residuals w.r.t. the free parameters on the natural scale.
Eigen::MatrixXd residual_jacobian(const FitProblem& problem, std::span<const double> beta,
                                  bool central, const SolverConfig& config = {});

struct Inference {
  std::vector<double> std_errors;
  std::vector<double> ci_lower;
  std::vector<double> ci_upper;
  std::vector<double> p_values;
  double r_squared = 0;
  double s2 = 0;
  Eigen::MatrixXd covariance;
};

/// Asymptotic inference at beta_hat: covariance s^2 (J'J)^-1 with
/// s^2 = RSS / (n - v), 95% Student-t intervals, two-sided p-values for
/// H0: parameter = 0, and R^2 = 1 - RSS/TSS (clamped to [0, 1]).
/// Throws RankDeficientError when J is numerically rank deficient.
Inference inference(const FitProblem& problem, std::span<const double> beta_hat,
                    std::span<const double> resid, const SolverConfig& config = {});

/// Levenberg-Marquardt fit. Missing entries of `init` come from auto_init.
/// A run that exhausts max_iterations returns converged = false with the best
/// estimate found; a rank-deficient optimum throws RankDeficientError.
FitResult fit(const FitProblem& problem, const std::optional<ParameterMap>& init = std::nullopt,
              const SolverConfig& config = {});

}  // namespace ucrcd
