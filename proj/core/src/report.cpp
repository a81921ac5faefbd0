#include "ucrcd/report.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>
#include <json.hpp>

#include "ucrcd/error.hpp"

namespace ucrcd {

namespace {

using nlohmann::json;

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double get_number(const json& j, const char* key) {
  const auto& v = j.at(key);
  return v.is_null() ? kNaN : v.get<double>();
}

json optional_number(const std::optional<double>& v) { return v ? number(*v) : json(nullptr); }

std::optional<double> get_optional(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

Interplay interplay_from_string(const std::string& s) {
  if (s == "competition") return Interplay::competition;
  if (s == "collaboration") return Interplay::collaboration;
  if (s == "no effect") return Interplay::no_effect;
  throw ParseError(ParseError::Kind::malformed_row, 0, fmt::format("unknown interplay label '{}'", s));
}

json verdict_json(const InterplayVerdict& v) {
  return {{"rets_vs_incumbent", std::string(to_string(v.rets_vs_incumbent))},
          {"incumbent_vs_rets", std::string(to_string(v.incumbent_vs_rets))},
          {"q1c", number(v.q1c_value)},
          {"q1c_p_value", optional_number(v.q1c_p_value)},
          {"q2_minus_gamma", number(v.entrant_cross_value)},
          {"q2_minus_gamma_p_value", optional_number(v.entrant_cross_p_value)},
          {"significance_used", v.significance_used}};
}

InterplayVerdict verdict_from_json(const json& j) {
  InterplayVerdict v;
  v.rets_vs_incumbent = interplay_from_string(j.at("rets_vs_incumbent").get<std::string>());
  v.incumbent_vs_rets = interplay_from_string(j.at("incumbent_vs_rets").get<std::string>());
  v.q1c_value = get_number(j, "q1c");
  v.q1c_p_value = get_optional(j, "q1c_p_value");
  v.entrant_cross_value = get_number(j, "q2_minus_gamma");
  v.entrant_cross_p_value = get_optional(j, "q2_minus_gamma_p_value");
  v.significance_used = j.at("significance_used").get<bool>();
  return v;
}

json comparison_json(const ModelComparison& c) {
  return {{"r2_nested", c.r2_nested},   {"r2_extended", c.r2_extended},
          {"r2_tilde", c.r2_tilde},     {"f_ratio", c.f_ratio},
          {"n", c.n},                   {"v", c.v},
          {"u", c.u},                   {"significance_level", c.significance_level},
          {"f_critical", c.f_critical}, {"p_value", c.p_value},
          {"preferred", std::string(to_string(c.preferred))}};
}

ModelComparison comparison_from_json(const json& j) {
  ModelComparison c;
  c.r2_nested = j.at("r2_nested").get<double>();
  c.r2_extended = j.at("r2_extended").get<double>();
  c.r2_tilde = j.at("r2_tilde").get<double>();
  c.f_ratio = j.at("f_ratio").get<double>();
  c.n = j.at("n").get<std::size_t>();
  c.v = j.at("v").get<std::size_t>();
  c.u = j.at("u").get<std::size_t>();
  c.significance_level = j.at("significance_level").get<double>();
  c.f_critical = j.at("f_critical").get<double>();
  c.p_value = j.at("p_value").get<double>();
  c.preferred = j.at("preferred").get<std::string>() == "extended" ? Preferred::extended : Preferred::nested;
  return c;
}

json report_json(const ReportBundle& r) {
  json params = json::array();
  for (const auto& row : r.fit_table) {
    params.push_back({{"name", row.name},
                      {"estimate", number(row.estimate)},
                      {"std_error", number(row.std_error)},
                      {"ci_lower", number(row.ci_lower)},
                      {"ci_upper", number(row.ci_upper)},
                      {"p_value", number(row.p_value)},
                      {"fixed", row.fixed}});
  }
  json matrix = json::array();
  for (Eigen::Index i = 0; i < r.covariance.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < r.covariance.cols(); ++j) row.push_back(number(r.covariance(i, j)));
    matrix.push_back(std::move(row));
  }
  json residuals = json::array();
  for (double e : r.residuals) residuals.push_back(number(e));
  return {{"schema", std::string(kReportSchema)},
          {"schema_version", kReportSchemaVersion},
          {"model", std::string(to_string(r.model))},
          {"mode", std::string(to_string(r.mode))},
          {"input", r.input},
          {"start_year", r.start_year},
          {"c2", r.c2 ? json(*r.c2) : json(nullptr)},
          {"parameters", std::move(params)},
          {"covariance", {{"names", r.covariance_names}, {"matrix", std::move(matrix)}}},
          {"r_squared", number(r.r_squared)},
          {"rss", number(r.rss)},
          {"n_obs", r.n_obs},
          {"n_params", r.n_params},
          {"degrees_of_freedom", r.n_obs - r.n_params},
          {"converged", r.converged},
          {"iterations", r.iterations},
          {"residuals", std::move(residuals)},
          {"verdict", r.verdict ? verdict_json(*r.verdict) : json(nullptr)},
          {"comparison", r.comparison ? comparison_json(*r.comparison) : json(nullptr)},
          {"plot", r.plot_file}};
}

ReportBundle report_from_json(const json& j) {
  if (j.at("schema").get<std::string>() != kReportSchema) {
    throw ParseError(ParseError::Kind::header, 0,
                     fmt::format("not a fit report (schema '{}')", j.at("schema").get<std::string>()));
  }
  const int version = j.at("schema_version").get<int>();
  if (version != kReportSchemaVersion) {
    throw ParseError(ParseError::Kind::header, 0, fmt::format("unsupported report schema version {}", version));
  }
  ReportBundle r;
  const auto model = model_kind_from_string(j.at("model").get<std::string>());
  const auto mode = observation_mode_from_string(j.at("mode").get<std::string>());
  if (!model || !mode) throw ParseError(ParseError::Kind::malformed_row, 0, "unknown model or mode");
  r.model = *model;
  r.mode = *mode;
  r.input = j.at("input").get<std::string>();
  r.start_year = j.at("start_year").get<int>();
  if (!j.at("c2").is_null()) r.c2 = j.at("c2").get<int>();
  for (const auto& p : j.at("parameters")) {
    ParameterEstimate row;
    row.name = p.at("name").get<std::string>();
    row.estimate = get_number(p, "estimate");
    row.std_error = get_number(p, "std_error");
    row.ci_lower = get_number(p, "ci_lower");
    row.ci_upper = get_number(p, "ci_upper");
    row.p_value = get_number(p, "p_value");
    row.fixed = p.at("fixed").get<bool>();
    r.fit_table.push_back(std::move(row));
  }
  const auto& cov = j.at("covariance");
  r.covariance_names = cov.at("names").get<std::vector<std::string>>();
  const auto size = static_cast<Eigen::Index>(r.covariance_names.size());
  const auto& matrix = cov.at("matrix");
  if (matrix.size() != r.covariance_names.size()) {
    throw ParseError(ParseError::Kind::malformed_row, 0, "covariance matrix size does not match its names");
  }
  r.covariance.resize(size, size);
  for (Eigen::Index i = 0; i < size; ++i) {
    const auto& row = matrix.at(static_cast<std::size_t>(i));
    if (row.size() != r.covariance_names.size()) {
      throw ParseError(ParseError::Kind::malformed_row, 0, "covariance matrix is not square");
    }
    for (Eigen::Index k = 0; k < size; ++k) {
      const auto& v = row.at(static_cast<std::size_t>(k));
      r.covariance(i, k) = v.is_null() ? kNaN : v.get<double>();
    }
  }
  r.r_squared = get_number(j, "r_squared");
  r.rss = get_number(j, "rss");
  r.n_obs = j.at("n_obs").get<std::size_t>();
  r.n_params = j.at("n_params").get<std::size_t>();
  r.converged = j.at("converged").get<bool>();
  r.iterations = j.at("iterations").get<int>();
  for (const auto& e : j.at("residuals")) r.residuals.push_back(e.is_null() ? kNaN : e.get<double>());
  if (!j.at("verdict").is_null()) r.verdict = verdict_from_json(j.at("verdict"));
  if (!j.at("comparison").is_null()) r.comparison = comparison_from_json(j.at("comparison"));
  r.plot_file = j.at("plot").get<std::string>();
  return r;
}

std::string cell(double v) { return std::isfinite(v) ? fmt::format("{:>13.6g}", v) : fmt::format("{:>13}", "NA"); }

std::string p_cell(double p) {
  if (!std::isfinite(p)) return fmt::format("{:>10}", "NA");
  if (p < 1e-4) return fmt::format("{:>10}", "<0.0001");
  return fmt::format("{:>10.4f}", p);
}

std::string model_title(ModelKind model) {
  switch (model) {
    case ModelKind::bass: return "Bass model";
    case ModelKind::ucrcd_restricted: return "UCRCD model, restricted (gamma = delta)";
    case ModelKind::ucrcd_unrestricted: return "UCRCD model, unrestricted";
  }
  return "";
}

std::string p_text(const std::optional<double>& p) {
  if (!p) return "not tested";
  if (*p < 1e-4) return "p < 0.0001";
  return fmt::format("p = {:.4f}", *p);
}

std::string comparison_lines(const ModelComparison& c) {
  std::string out;
  // Round-trip precision, so R~2 can be recomputed exactly from the printed R^2 values.
  out += fmt::format("R^2 restricted    {}\n", c.r2_nested);
  out += fmt::format("R^2 unrestricted  {}\n", c.r2_extended);
  out += fmt::format("R~2               {}\n", c.r2_tilde);
  out += fmt::format("F({}, {})          {:.6g}  (critical {:.6g} at {:g}%, p = {:.4g})\n", c.u, c.n - c.v,
                     c.f_ratio, c.f_critical, 100.0 * c.significance_level, c.p_value);
  out += fmt::format("preferred         {}\n",
                     c.preferred == Preferred::extended ? "unrestricted" : "restricted");
  return out;
}

}  // namespace

ReportBundle make_report(const FitResult& fit, std::string input, int start_year,
                         double significance_level) {
  ReportBundle r;
  r.model = fit.model;
  r.mode = fit.mode;
  r.input = std::move(input);
  r.start_year = start_year;
  r.c2 = fit.c2;
  r.fit_table = fit.table;
  r.covariance_names = fit.covariance_names;
  r.covariance = fit.covariance;
  r.r_squared = fit.r_squared;
  r.rss = fit.rss;
  r.n_obs = fit.n_obs;
  r.n_params = fit.n_params;
  r.converged = fit.converged;
  r.iterations = fit.iterations;
  r.residuals = fit.residuals;
  if (fit.model != ModelKind::bass && fit.covariance.allFinite()) {
    r.verdict = classify_interplay(fit, significance_level);
  }
  return r;
}

FitResult to_fit_result(const ReportBundle& report) {
  FitResult fit;
  fit.model = report.model;
  fit.mode = report.mode;
  fit.table = report.fit_table;
  fit.covariance = report.covariance;
  fit.covariance_names = report.covariance_names;
  fit.r_squared = report.r_squared;
  fit.rss = report.rss;
  fit.residuals = report.residuals;
  fit.n_obs = report.n_obs;
  fit.n_params = report.n_params;
  fit.converged = report.converged;
  fit.iterations = report.iterations;
  fit.c2 = report.c2;
  auto value = [&](std::string_view name) { return fit.parameter(name).estimate; };
  if (report.model == ModelKind::bass) {
    fit.params = BassParams(value("m"), value("p"), value("q"));
  } else {
    UcrcdValues v{.ma = value("ma"), .p1a = value("p1a"), .q1a = value("q1a"),
                  .mc = value("mc"), .p1c = value("p1c"), .q1c = value("q1c"),
                  .delta = value("delta"), .p2 = value("p2"), .q2 = value("q2")};
    if (report.model == ModelKind::ucrcd_restricted) {
      fit.params = UcrcdParams::make_restricted(v);
    } else {
      v.gamma = value("gamma");
      fit.params = UcrcdParams::make_unrestricted(v);
    }
  }
  return fit;
}

std::string render_report_json(const ReportBundle& report) { return report_json(report).dump(2) + "\n"; }

ReportBundle parse_report_json(std::string_view text) {
  try {
    return report_from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw ParseError(ParseError::Kind::malformed_row, 0, fmt::format("malformed report: {}", e.what()));
  }
}

std::string render_report_txt(const ReportBundle& r) {
  std::string out;
  out += fmt::format("{}, {} observations\n", model_title(r.model), to_string(r.mode));
  const std::size_t years = r.c2 ? (r.n_obs + static_cast<std::size_t>(*r.c2)) / 2 : r.n_obs;
  out += fmt::format("input: {}  years {}-{}", r.input, r.start_year,
                     r.start_year + static_cast<int>(years) - 1);
  if (r.c2) out += fmt::format("  entrant launch c2 = {} (after {})", *r.c2, r.start_year + *r.c2 - 1);
  out += "\n\n";
  out += fmt::format("{:<10}{:>13}{:>13}{:>13}{:>13}{:>10}\n", "parameter", "estimate", "s.e.",
                     "lower c.i.", "upper c.i.", "p-value");
  for (const auto& row : r.fit_table) {
    if (row.fixed) {
      out += fmt::format("{:<10}{}{:>13}\n", row.name, cell(row.estimate), "(fixed)");
      continue;
    }
    out += fmt::format("{:<10}{}{}{}{}{}\n", row.name, cell(row.estimate), cell(row.std_error),
                       cell(row.ci_lower), cell(row.ci_upper), p_cell(row.p_value));
  }
  out += "\n";
  out += fmt::format("R^2 = {:.6f}  RSS = {:.6g}  n = {}  free parameters = {}  df = {}\n",
                     r.r_squared, r.rss, r.n_obs, r.n_params, r.n_obs - r.n_params);
  out += fmt::format("converged: {} ({} iterations)\n", r.converged ? "yes" : "NO", r.iterations);
  if (r.verdict) out += "\n" + render_verdict(*r.verdict);
  if (r.comparison) out += "\n" + comparison_lines(*r.comparison);
  return out;
}

std::string render_verdict(const InterplayVerdict& v) {
  return fmt::format(
      "entrant -> incumbent: {} (q1c = {:.6g}, {})\n"
      "incumbent -> entrant: {} (q2 - gamma = {:.6g}, {})\n",
      // + 0.0 prints a reported -0.000 as 0
      to_string(v.rets_vs_incumbent), v.q1c_value + 0.0, p_text(v.q1c_p_value),
      to_string(v.incumbent_vs_rets), v.entrant_cross_value + 0.0, p_text(v.entrant_cross_p_value));
}

std::string render_comparison_txt(const UcrcdComparison& c, const std::string& input, int start_year) {
  std::string out;
  auto section = [&](const std::optional<FitResult>& fit, const std::optional<std::string>& error,
                     std::string_view name) {
    out += fmt::format("== {} ==\n", name);
    if (fit) {
      out += render_report_txt(make_report(*fit, input, start_year));
    } else {
      out += fmt::format("FAILED: {}\n", error.value_or("unknown error"));
    }
    out += "\n";
  };
  section(c.restricted, c.restricted_error, "restricted");
  section(c.unrestricted, c.unrestricted_error, "unrestricted");
  out += "== comparison ==\n";
  if (c.comparison) {
    out += comparison_lines(*c.comparison);
  } else {
    out += fmt::format("not available: {}\n", c.comparison_error.value_or("unknown error"));
  }
  return out;
}

std::string render_comparison_json(const UcrcdComparison& c, const std::string& input, int start_year) {
  auto fit_json = [&](const std::optional<FitResult>& fit) {
    return fit ? report_json(make_report(*fit, input, start_year)) : json(nullptr);
  };
  auto error_json = [](const std::optional<std::string>& e) { return e ? json(*e) : json(nullptr); };
  json j = {{"schema", "ucrcd.comparison"},
            {"schema_version", kReportSchemaVersion},
            {"input", input},
            {"restricted", fit_json(c.restricted)},
            {"unrestricted", fit_json(c.unrestricted)},
            {"errors",
             {{"restricted", error_json(c.restricted_error)},
              {"unrestricted", error_json(c.unrestricted_error)},
              {"comparison", error_json(c.comparison_error)}}},
            {"comparison", c.comparison ? comparison_json(*c.comparison) : json(nullptr)}};
  return j.dump(2) + "\n";
}

}  // namespace ucrcd
