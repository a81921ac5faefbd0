#include "ucrcd/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>

#include "ucrcd/error.hpp"

namespace ucrcd {

namespace {

Interplay sign_label(double value) {
  if (value < 0.0) return Interplay::competition;
  if (value > 0.0) return Interplay::collaboration;
  return Interplay::no_effect;
}

std::optional<std::size_t> covariance_index(const FitResult& fit, std::string_view name) {
  const auto& names = fit.covariance_names;
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names.begin());
}

}  // namespace

std::string_view to_string(Preferred p) {
  return p == Preferred::nested ? "nested" : "extended";
}

double r2_tilde(double r2_extended, double r2_nested) {
  if (!std::isfinite(r2_extended) || !std::isfinite(r2_nested)) {
    throw InvalidArgument("R^2 values must be finite");
  }
  if (r2_nested < 0.0 || r2_extended > 1.0) throw InvalidArgument("R^2 values must lie in [0, 1]");
  if (r2_nested == 1.0) {
    throw InvalidArgument("nested model has R^2 = 1: the partial correlation divides by zero");
  }
  if (r2_extended < r2_nested) {
    throw InvalidArgument(fmt::format(
        "extended R^2 ({}) is below nested R^2 ({}): the models are not nested", r2_extended,
        r2_nested));
  }
  return (r2_extended - r2_nested) / (1.0 - r2_nested);
}

double f_ratio(double r2_tilde, std::size_t n, std::size_t v, std::size_t u) {
  if (n <= v) throw InvalidArgument(fmt::format("need n > v, got n={} v={}", n, v));
  if (u < 1) throw InvalidArgument("u must be >= 1");
  if (!(r2_tilde >= 0.0 && r2_tilde <= 1.0)) {
    throw InvalidArgument(fmt::format("R~2 = {} outside [0, 1]", r2_tilde));
  }
  if (r2_tilde == 1.0) {
    throw InvalidArgument("R~2 = 1: the F-ratio is infinite (the extended model fits exactly)");
  }
  return r2_tilde * static_cast<double>(n - v) / ((1.0 - r2_tilde) * static_cast<double>(u));
}

ModelComparison compare_nested(double r2_nested, double r2_extended, std::size_t n, std::size_t v,
                               std::size_t u, double significance_level) {
  if (!(significance_level > 0.0 && significance_level < 1.0)) {
    throw InvalidArgument("significance level must lie in (0, 1)");
  }
  ModelComparison c;
  c.r2_nested = r2_nested;
  c.r2_extended = r2_extended;
  c.n = n;
  c.v = v;
  c.u = u;
  c.significance_level = significance_level;
  c.r2_tilde = r2_tilde(r2_extended, r2_nested);
  c.f_ratio = f_ratio(c.r2_tilde, n, v, u);
  const boost::math::fisher_f dist(static_cast<double>(u), static_cast<double>(n - v));
  c.f_critical = boost::math::quantile(dist, 1.0 - significance_level);
  c.p_value = boost::math::cdf(boost::math::complement(dist, c.f_ratio));
  c.preferred = c.f_ratio > c.f_critical ? Preferred::extended : Preferred::nested;
  return c;
}

UcrcdComparison compare_ucrcd(const DuopolyDataset& dataset, const ParameterMap& fixed,
                              ObservationMode mode, const SolverConfig& config,
                              double significance_level) {
  UcrcdComparison out;
  auto restricted_fixed = fixed;
  restricted_fixed.erase("gamma");
  try {
    out.restricted = fit(FitProblem::ucrcd(dataset, true, restricted_fixed, mode), std::nullopt, config);
  } catch (const Error& e) {
    out.restricted_error = e.what();
  }

  std::optional<ParameterMap> start;
  if (out.restricted) {
    start.emplace();
    for (const auto& row : out.restricted->table) (*start)[row.name] = row.estimate;
    (*start)["gamma"] = (*start)["delta"];
  }
  try {
    out.unrestricted = fit(FitProblem::ucrcd(dataset, false, fixed, mode), start, config);
  } catch (const Error& e) {
    out.unrestricted_error = e.what();
  }

  if (out.restricted && out.unrestricted) {
    try {
      const auto& n = *out.restricted;
      const auto& e = *out.unrestricted;
      out.comparison = compare_nested(n.r_squared, e.r_squared, e.n_obs, e.n_params,
                                      e.n_params - n.n_params, significance_level);
    } catch (const Error& e) {
      out.comparison_error = e.what();
    }
  } else {
    out.comparison_error = "comparison needs both fits";
  }
  return out;
}

InterplayVerdict classify_coefficients(double q1c, double entrant_cross,
                                       std::optional<double> q1c_p_value,
                                       std::optional<double> entrant_cross_p_value,
                                       double significance_level) {
  if (!std::isfinite(q1c) || !std::isfinite(entrant_cross)) {
    throw InvalidArgument("cross coefficients must be finite");
  }
  InterplayVerdict v;
  v.q1c_value = q1c;
  v.entrant_cross_value = entrant_cross;
  v.q1c_p_value = q1c_p_value;
  v.entrant_cross_p_value = entrant_cross_p_value;
  auto label = [&](double value, std::optional<double> p) {
    const Interplay by_sign = sign_label(value);
    if (by_sign != Interplay::no_effect && p && *p > significance_level) {
      v.significance_used = true;
      return Interplay::no_effect;
    }
    return by_sign;
  };
  v.rets_vs_incumbent = label(q1c, q1c_p_value);
  v.incumbent_vs_rets = label(entrant_cross, entrant_cross_p_value);
  return v;
}

InterplayVerdict classify_interplay(const FitResult& fit, double significance_level) {
  if (fit.model == ModelKind::bass) {
    throw InvalidArgument("a Bass fit has no cross-imitation coefficients to classify");
  }
  const auto& params = std::get<UcrcdParams>(fit.params);
  const std::string_view gamma_name = fit.model == ModelKind::ucrcd_restricted ? "delta" : "gamma";

  // Covariance index of a coefficient, or nullopt if it was held fixed.
  auto index_of = [&](std::string_view name) -> std::optional<std::size_t> {
    if (fit.parameter(name).fixed) return std::nullopt;
    const auto idx = covariance_index(fit, name);
    if (!idx) throw InvalidArgument(fmt::format("covariance has no entry for {}", name));
    return idx;
  };
  auto cov = [&](std::optional<std::size_t> i, std::optional<std::size_t> j) {
    if (!i || !j) return 0.0;
    const auto size = static_cast<std::size_t>(fit.covariance.rows());
    if (*i >= size || *j >= size || static_cast<std::size_t>(fit.covariance.cols()) != size) {
      throw InvalidArgument("covariance matrix does not match its parameter names");
    }
    const double value = fit.covariance(static_cast<Eigen::Index>(*i), static_cast<Eigen::Index>(*j));
    if (!std::isfinite(value)) {
      throw InvalidArgument("covariance entries are missing (fit without inference)");
    }
    return value;
  };

  const double dof = static_cast<double>(fit.degrees_of_freedom());
  const boost::math::students_t dist(dof);
  auto p_value = [&](double estimate, double variance) -> std::optional<double> {
    const double se = std::sqrt(std::max(variance, 0.0));
    if (se == 0.0) return estimate == 0.0 ? 1.0 : 0.0;
    return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(estimate / se)));
  };

  const auto iq1c = index_of("q1c");
  const double q1c_var = cov(iq1c, iq1c);
  const std::optional<double> q1c_p = iq1c ? p_value(params.q1c(), q1c_var) : std::nullopt;

  const auto iq2 = index_of("q2");
  const auto ig = index_of(gamma_name);
  const double cross_var = cov(iq2, iq2) + cov(ig, ig) - 2.0 * cov(iq2, ig);
  const std::optional<double> cross_p =
      iq2 || ig ? p_value(params.entrant_cross(), cross_var) : std::nullopt;

  return classify_coefficients(params.q1c(), params.entrant_cross(), q1c_p, cross_p,
                               significance_level);
}

InterplayVerdict classify_reported(const CountryFixture& fixture) {
  return classify_coefficients(fixture.params.q1c(), fixture.reported_cross, std::nullopt,
                               std::nullopt);
}

}  // namespace ucrcd
