#pragma once

#include <span>
#include <vector>

#include "ucrcd/types.hpp"

namespace ucrcd {

/// Fixed-step RK4 settings. Steps are laid out per unit of model time and
/// every segment boundary (grid points and c2) is hit exactly.
struct IntegratorConfig {
  int substeps_per_year = 64;

  /// Throws InvalidArgument if substeps_per_year < 4.
  void validate() const;
};

/// Closed-form Bass cumulative adoption z(t) with z(0) = 0.
double bass_cumulative(const BassParams& params, double t);

/// Bass adoption rate (p + q z/m)(m - z) at time t.
double bass_instantaneous(const BassParams& params, double t);

/// Bass cumulative obtained by RK4 integration of the rate equation,
/// evaluated at each of the (ascending) `times`.
std::vector<double> bass_cumulative_integrated(const BassParams& params,
                                               std::span<const double> times,
                                               const IntegratorConfig& config = {});

struct UcrcdState {
  double z1 = 0;
  double z2 = 0;
};

/// Right-hand side of the two-phase system. For t <= c2 the incumbent follows
/// Bass(ma, p1a, q1a) and the entrant is inactive; for t > c2 both share the
/// residual market 1 - (z1 + z2)/mc.
UcrcdState ucrcd_rhs(const UcrcdParams& params, double c2, UcrcdState state, double t);

/// Cumulative (z1, z2) at each of the ascending `times`, starting from
/// z1(0) = z2(0) = 0. Throws SimulationError if a state turns non-finite or
/// negative.
std::vector<UcrcdState> ucrcd_cumulative_at(const UcrcdParams& params, double c2,
                                            std::span<const double> times,
                                            const IntegratorConfig& config = {});

/// Simulates years 1..horizon; flows are year-over-year cumulative differences.
Trajectory ucrcd_simulate(const UcrcdParams& params, double c2, int horizon,
                          const IntegratorConfig& config = {});

/// Cumulative model curve at `times`, stacked [z1(times)..., z2(times)...].
std::vector<double> ucrcd_model_curve(const UcrcdParams& params, double c2,
                                      std::span<const double> times,
                                      const IntegratorConfig& config = {});

}  // namespace ucrcd
