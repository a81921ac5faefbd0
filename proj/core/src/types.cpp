#include "ucrcd/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <fmt/format.h>

#include "ucrcd/error.hpp"

namespace ucrcd {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument(what);
}

}  // namespace

AnnualSeries::AnnualSeries(std::string label, int start_year, std::vector<double> values)
    : label_(std::move(label)), start_year_(start_year), values_(std::move(values)) {
  require(values_.size() >= 3,
          fmt::format("series '{}' needs at least 3 values, got {}", label_, values_.size()));
  for (std::size_t k = 0; k < values_.size(); ++k) {
    require(std::isfinite(values_[k]),
            fmt::format("series '{}': value at year {} is not finite", label_, start_year_ + k));
    require(values_[k] >= 0.0, fmt::format("series '{}': value at year {} is negative ({})", label_,
                                           start_year_ + k, values_[k]));
  }
}

std::vector<double> AnnualSeries::cumulative() const {
  std::vector<double> out(values_.size());
  std::partial_sum(values_.begin(), values_.end(), out.begin());
  return out;
}

DuopolyDataset::DuopolyDataset(AnnualSeries incumbent, AnnualSeries entrant, int c2)
    : incumbent_(std::move(incumbent)), entrant_(std::move(entrant)), c2_(c2) {
  require(incumbent_.start_year() == entrant_.start_year(),
          fmt::format("series start years differ ({} vs {})", incumbent_.start_year(),
                      entrant_.start_year()));
  require(incumbent_.size() == entrant_.size(),
          fmt::format("series lengths differ ({} vs {})", incumbent_.size(), entrant_.size()));
  const auto n = static_cast<int>(incumbent_.size());
  require(c2_ > 0 && c2_ < n, fmt::format("c2 = {} must satisfy 0 < c2 < {}", c2_, n));
  for (int k = 0; k < c2_; ++k) {
    require(entrant_[static_cast<std::size_t>(k)] == 0.0,
            fmt::format("entrant value at year {} precedes launch (c2 = {}) but is {}",
                        entrant_.start_year() + k, c2_, entrant_[static_cast<std::size_t>(k)]));
  }
}

BassParams::BassParams(double m, double p, double q) : m_(m), p_(p), q_(q) {
  require(std::isfinite(m) && std::isfinite(p) && std::isfinite(q), "Bass parameters must be finite");
  require(m > 0.0, fmt::format("Bass market potential m must be > 0, got {}", m));
  require(p > 0.0, fmt::format("Bass external coefficient p must be > 0, got {}", p));
  require(q >= 0.0, fmt::format("Bass internal coefficient q must be >= 0, got {}", q));
}

std::string_view to_string(UcrcdParam p) { return kUcrcdParamNames[static_cast<std::size_t>(p)]; }

std::optional<UcrcdParam> ucrcd_param_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kUcrcdParamCount; ++i) {
    if (kUcrcdParamNames[i] == name) return static_cast<UcrcdParam>(i);
  }
  return std::nullopt;
}

UcrcdParams::UcrcdParams(const UcrcdValues& v, bool restricted)
    : v_{v.ma, v.p1a, v.q1a, v.mc, v.p1c, v.q1c, v.delta, v.p2, v.q2, v.gamma},
      restricted_(restricted) {
  for (std::size_t i = 0; i < kUcrcdParamCount; ++i) {
    require(std::isfinite(v_[i]), fmt::format("UCRCD parameter {} is not finite", kUcrcdParamNames[i]));
  }
  require(v.ma > 0.0, fmt::format("monopoly market potential ma must be > 0, got {}", v.ma));
  require(v.mc > 0.0, fmt::format("competition market potential mc must be > 0, got {}", v.mc));
  if (restricted_) {
    require(v.gamma == v.delta,
            fmt::format("restricted UCRCD requires gamma == delta (got delta={}, gamma={})", v.delta,
                        v.gamma));
  }
}

UcrcdParams UcrcdParams::make_restricted(UcrcdValues v) {
  v.gamma = v.delta;
  return UcrcdParams(v, true);
}

UcrcdParams UcrcdParams::make_unrestricted(const UcrcdValues& v) { return UcrcdParams(v, false); }

double UcrcdParams::get(UcrcdParam p) const noexcept {
  if (restricted_ && p == UcrcdParam::gamma) p = UcrcdParam::delta;
  return v_[static_cast<std::size_t>(p)];
}

UcrcdParams UcrcdParams::with(UcrcdParam p, double value) const {
  if (restricted_ && p == UcrcdParam::gamma) {
    throw InvalidArgument("gamma is tied to delta in the restricted model; set delta instead");
  }
  UcrcdValues v = values();
  switch (p) {
    case UcrcdParam::ma: v.ma = value; break;
    case UcrcdParam::p1a: v.p1a = value; break;
    case UcrcdParam::q1a: v.q1a = value; break;
    case UcrcdParam::mc: v.mc = value; break;
    case UcrcdParam::p1c: v.p1c = value; break;
    case UcrcdParam::q1c: v.q1c = value; break;
    case UcrcdParam::delta: v.delta = value; break;
    case UcrcdParam::p2: v.p2 = value; break;
    case UcrcdParam::q2: v.q2 = value; break;
    case UcrcdParam::gamma: v.gamma = value; break;
  }
  if (restricted_) v.gamma = v.delta;
  return UcrcdParams(v, restricted_);
}

UcrcdValues UcrcdParams::values() const noexcept {
  return UcrcdValues{ma(), p1a(), q1a(), mc(), p1c(), q1c(), delta(), p2(), q2(), gamma()};
}

Trajectory::Trajectory(std::vector<double> times, std::vector<double> z1_inst,
                       std::vector<double> z2_inst, std::vector<double> z1_cum,
                       std::vector<double> z2_cum)
    : times_(std::move(times)),
      z1_inst_(std::move(z1_inst)),
      z2_inst_(std::move(z2_inst)),
      z1_cum_(std::move(z1_cum)),
      z2_cum_(std::move(z2_cum)) {
  const auto n = times_.size();
  require(z1_inst_.size() == n && z2_inst_.size() == n && z1_cum_.size() == n &&
              z2_cum_.size() == n,
          "trajectory columns must have equal length");
  require(std::is_sorted(times_.begin(), times_.end()), "trajectory times must be ordered");
}

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::bass: return "bass";
    case ModelKind::ucrcd_restricted: return "ucrcd-restricted";
    case ModelKind::ucrcd_unrestricted: return "ucrcd-unrestricted";
  }
  return "?";
}

std::string_view to_string(ObservationMode mode) {
  return mode == ObservationMode::cumulative ? "cumulative" : "instantaneous";
}

std::optional<ModelKind> model_kind_from_string(std::string_view s) {
  for (auto k : {ModelKind::bass, ModelKind::ucrcd_restricted, ModelKind::ucrcd_unrestricted}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

std::optional<ObservationMode> observation_mode_from_string(std::string_view s) {
  if (s == "cumulative") return ObservationMode::cumulative;
  if (s == "instantaneous") return ObservationMode::instantaneous;
  return std::nullopt;
}

std::vector<std::string> parameter_names(ModelKind kind) {
  if (kind == ModelKind::bass) return {"m", "p", "q"};
  std::vector<std::string> names(kUcrcdParamNames.begin(), kUcrcdParamNames.end());
  if (kind == ModelKind::ucrcd_restricted) names.pop_back();
  return names;
}

const ParameterEstimate& FitResult::parameter(std::string_view name) const {
  for (const auto& row : table) {
    if (row.name == name) return row;
  }
  throw InvalidArgument(fmt::format("fit result has no parameter '{}'", name));
}

void FitResult::validate() const {
  require(n_obs > n_params,
          fmt::format("n_obs ({}) must exceed the number of free parameters ({})", n_obs, n_params));
  require(r_squared >= 0.0 && r_squared <= 1.0,
          fmt::format("R^2 = {} outside [0, 1]", r_squared));
  require(residuals.size() == n_obs, "residual vector length differs from n_obs");
  const auto names = parameter_names(model);
  require(table.size() == names.size(), "parameter table does not cover the model parameters");
  std::size_t free_count = 0;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& row = table[i];
    require(row.name == names[i], fmt::format("parameter table row {} is '{}', expected '{}'", i,
                                              row.name, names[i]));
    if (row.fixed) continue;
    ++free_count;
    if (!std::isfinite(row.std_error)) continue;
    if (row.std_error > 0.0) {
      require(row.ci_lower < row.estimate && row.estimate < row.ci_upper,
              fmt::format("confidence interval of {} does not bracket its estimate", row.name));
    } else {
      require(row.ci_lower <= row.estimate && row.estimate <= row.ci_upper,
              fmt::format("degenerate confidence interval of {} is inconsistent", row.name));
    }
  }
  require(free_count == n_params, "n_params differs from the number of free table rows");
}

std::string_view to_string(Interplay i) {
  switch (i) {
    case Interplay::competition: return "competition";
    case Interplay::collaboration: return "collaboration";
    case Interplay::no_effect: return "no effect";
  }
  return "?";
}

}  // namespace ucrcd
