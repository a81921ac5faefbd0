#include "ucrcd/kernels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include <fmt/format.h>

#include "ucrcd/error.hpp"
#include "ucrcd/rk4.hpp"

namespace ucrcd {

namespace {

std::size_t steps_for(double length, int substeps_per_year) {
  const double raw = length * static_cast<double>(substeps_per_year);
  // Guard against 25.000000001 * 64 rounding up to an extra step.
  const auto steps = static_cast<std::size_t>(std::ceil(raw - 1e-9));
  return std::max<std::size_t>(steps, 1);
}

void check_times(std::span<const double> times) {
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!std::isfinite(times[i]) || times[i] < 0.0) {
      throw InvalidArgument(fmt::format("evaluation time {} must be finite and >= 0", times[i]));
    }
    if (i > 0 && times[i] < times[i - 1]) {
      throw InvalidArgument("evaluation times must be in ascending order");
    }
  }
}

using State2 = std::array<double, 2>;

State2 monopoly_rate(const UcrcdParams& p, const State2& z) {
  const double m = p.ma();
  return {m * (p.p1a() + p.q1a() * z[0] / m) * (1.0 - z[0] / m), 0.0};
}

State2 competition_rate(const UcrcdParams& p, const State2& z) {
  const double m = p.mc();
  const double residual = 1.0 - (z[0] + z[1]) / m;
  const double s1 = z[0] / m;
  const double s2 = z[1] / m;
  return {m * (p.p1c() + p.incumbent_within() * s1 + p.q1c() * s2) * residual,
          m * (p.p2() + p.entrant_cross() * s1 + p.q2() * s2) * residual};
}

}  // namespace

void IntegratorConfig::validate() const {
  if (substeps_per_year < 4) {
    throw InvalidArgument(
        fmt::format("substeps_per_year must be >= 4, got {}", substeps_per_year));
  }
}

double bass_cumulative(const BassParams& params, double t) {
  if (!(t >= 0.0)) throw InvalidArgument(fmt::format("Bass time must be >= 0, got {}", t));
  const double b = params.p() + params.q();
  const double decay = std::exp(-b * t);
  // 1 - e^{-bt} via expm1 keeps precision for small t.
  return params.m() * (-std::expm1(-b * t)) / (1.0 + (params.q() / params.p()) * decay);
}

double bass_instantaneous(const BassParams& params, double t) {
  const double z = bass_cumulative(params, t);
  const double rate = (params.p() + params.q() * z / params.m()) * (params.m() - z);
  return std::max(rate, 0.0);
}

std::vector<double> bass_cumulative_integrated(const BassParams& params,
                                               std::span<const double> times,
                                               const IntegratorConfig& config) {
  config.validate();
  check_times(times);
  auto rate = [&](double, const std::array<double, 1>& z) {
    return std::array<double, 1>{(params.p() + params.q() * z[0] / params.m()) *
                                 (params.m() - z[0])};
  };
  std::vector<double> out;
  out.reserve(times.size());
  std::array<double, 1> z{0.0};
  double t = 0.0;
  for (double target : times) {
    if (target > t) {
      z = rk4_integrate<1>(rate, t, target, z, steps_for(target - t, config.substeps_per_year));
      t = target;
    }
    out.push_back(z[0]);
  }
  return out;
}

UcrcdState ucrcd_rhs(const UcrcdParams& params, double c2, UcrcdState state, double t) {
  if (!std::isfinite(state.z1) || !std::isfinite(state.z2) || !std::isfinite(t)) {
    throw SimulationError(
        fmt::format("non-finite state (z1={}, z2={}) at t={}", state.z1, state.z2, t), t);
  }
  const State2 z{state.z1, state.z2};
  const State2 r = t > c2 ? competition_rate(params, z) : monopoly_rate(params, z);
  return {r[0], r[1]};
}

std::vector<UcrcdState> ucrcd_cumulative_at(const UcrcdParams& params, double c2,
                                            std::span<const double> times,
                                            const IntegratorConfig& config) {
  config.validate();
  check_times(times);
  if (!std::isfinite(c2) || c2 <= 0.0) {
    throw InvalidArgument(fmt::format("launch time c2 must be > 0, got {}", c2));
  }

  const double tolerance = 1e-12 * std::max(params.ma(), params.mc());
  State2 z{0.0, 0.0};
  double t = 0.0;
  std::size_t step_index = 0;

  // Advances the state to `target` without crossing c2 inside a segment.
  auto advance = [&](double target) {
    if (target <= t) return;
    const bool competition = t >= c2;
    const std::size_t steps = steps_for(target - t, config.substeps_per_year);
    const double h = (target - t) / static_cast<double>(steps);
    const double t0 = t;
    for (std::size_t i = 0; i < steps; ++i) {
      const double ts = t0 + static_cast<double>(i) * h;
      z = competition ? rk4_step<2>([&](double, const State2& s) { return competition_rate(params, s); },
                                    ts, z, h)
                      : rk4_step<2>([&](double, const State2& s) { return monopoly_rate(params, s); },
                                    ts, z, h);
      ++step_index;
      const double t_end = ts + h;
      if (!std::isfinite(z[0]) || !std::isfinite(z[1])) {
        throw SimulationError(fmt::format("non-finite state at t={:.6g} (integration step {})",
                                          t_end, step_index),
                              t_end);
      }
      if (z[0] < -tolerance || z[1] < -tolerance) {
        const bool entrant = z[1] < -tolerance;
        throw SimulationError(
            fmt::format("{} cumulative became negative ({:.6g}) at t={:.6g} (integration step {})",
                        entrant ? "entrant" : "incumbent", entrant ? z[1] : z[0], t_end,
                        step_index),
            t_end);
      }
    }
    t = target;
  };

  std::vector<UcrcdState> out;
  out.reserve(times.size());
  for (double target : times) {
    if (t < c2 && target > c2) advance(c2);
    advance(target);
    out.push_back({z[0], target > c2 ? z[1] : 0.0});
  }
  return out;
}

Trajectory ucrcd_simulate(const UcrcdParams& params, double c2, int horizon,
                          const IntegratorConfig& config) {
  if (horizon <= 0) throw InvalidArgument(fmt::format("horizon must be > 0, got {}", horizon));
  if (!(static_cast<double>(horizon) > c2)) {
    throw InvalidArgument(fmt::format("horizon ({}) must exceed c2 ({})", horizon, c2));
  }
  const auto n = static_cast<std::size_t>(horizon);
  std::vector<double> times(n);
  for (std::size_t k = 0; k < n; ++k) times[k] = static_cast<double>(k + 1);
  const auto states = ucrcd_cumulative_at(params, c2, times, config);

  std::vector<double> z1_inst(n), z2_inst(n), z1_cum(n), z2_cum(n);
  double prev1 = 0.0;
  double prev2 = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    z1_cum[k] = states[k].z1;
    z2_cum[k] = states[k].z2;
    z1_inst[k] = z1_cum[k] - prev1;
    z2_inst[k] = z2_cum[k] - prev2;
    prev1 = z1_cum[k];
    prev2 = z2_cum[k];
  }
  return Trajectory(std::move(times), std::move(z1_inst), std::move(z2_inst), std::move(z1_cum),
                    std::move(z2_cum));
}

std::vector<double> ucrcd_model_curve(const UcrcdParams& params, double c2,
                                      std::span<const double> times,
                                      const IntegratorConfig& config) {
  const auto states = ucrcd_cumulative_at(params, c2, times, config);
  std::vector<double> out(2 * states.size());
  for (std::size_t k = 0; k < states.size(); ++k) {
    out[k] = states[k].z1;
    out[states.size() + k] = states[k].z2;
  }
  return out;
}

}  // namespace ucrcd
