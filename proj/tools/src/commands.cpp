#include "commands.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "outputs.hpp"
#include "ucrcd/error.hpp"
#include "ucrcd/fixtures.hpp"
#include "ucrcd/io.hpp"
#include "ucrcd/kernels.hpp"
#include "ucrcd/report.hpp"
#include "ucrcd/selection.hpp"
#include "ucrcd/solver.hpp"
#include "ucrcd/svg.hpp"

namespace ucrcd::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

// Bad flags, unreadable files, parameter sets that cannot be simulated.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FitOptions {
  std::string input;
  std::string model = "ucrcd-restricted";
  std::string mode = "cumulative";
  std::vector<std::string> fix;
  int c2 = 0;
  std::string out = ".";
  double alpha = 0.05;
  int max_iterations = SolverConfig{}.max_iterations;
};

struct SourceOptions {
  std::string country;
  std::string params;
  std::vector<std::string> fix;
  int c2 = 0;
  int start_year = 1965;
  std::string out = ".";
};

struct SimulateOptions {
  SourceOptions source;
  int horizon = 55;
};

struct SynthOptions {
  SourceOptions source;
  int years = 55;
  double noise = 0.0;
  std::uint64_t seed = 1;
};

struct ClassifyOptions {
  std::string input;
  std::string country;
  double alpha = 0.05;
};

ModelKind parse_model(const std::string& s) {
  if (auto kind = model_kind_from_string(s)) return *kind;
  throw InputError(fmt::format("unknown model '{}' (bass, ucrcd-restricted, ucrcd-unrestricted)", s));
}

ObservationMode parse_mode(const std::string& s) {
  if (auto mode = observation_mode_from_string(s)) return *mode;
  throw InputError(fmt::format("unknown mode '{}' (cumulative, instantaneous)", s));
}

ParameterMap parse_assignments(const std::vector<std::string>& items) {
  ParameterMap out;
  for (const auto& item : items) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw InputError(fmt::format("expected NAME=VALUE, got '{}'", item));
    }
    const std::string name = item.substr(0, eq);
    const std::string text = item.substr(eq + 1);
    double value = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || end != text.data() + text.size() || text.empty()) {
      throw InputError(fmt::format("'{}' is not a number in '{}'", text, item));
    }
    if (!out.emplace(name, value).second) throw InputError(fmt::format("'{}' given twice", name));
  }
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t header_columns(const fs::path& path) {
  std::ifstream in(path);
  std::string header;
  if (!in || !std::getline(in, header)) throw InputError(fmt::format("cannot read '{}'", path.string()));
  return static_cast<std::size_t>(std::count(header.begin(), header.end(), ',')) + 1;
}

std::vector<double> years_from(int start_year, std::size_t first, std::size_t last) {
  std::vector<double> out;
  for (std::size_t k = first; k < last; ++k) out.push_back(start_year + static_cast<double>(k));
  return out;
}

std::vector<double> tail(std::span<const double> values, std::size_t first) {
  return {values.begin() + static_cast<std::ptrdiff_t>(first), values.end()};
}

// Annual flows of the fitted model next to the observed flows.
std::string fit_plot(const FitResult& fit, const std::variant<AnnualSeries, DuopolyDataset>& data,
                     const std::string& title) {
  if (const auto* series = std::get_if<AnnualSeries>(&data)) {
    const auto& bass = std::get<BassParams>(fit.params);
    const std::size_t n = series->size();
    PlotSeries s = incumbent_series(series->label());
    s.point_years = years_from(series->start_year(), 0, n);
    s.points.assign(series->values().begin(), series->values().end());
    s.curve_years = s.point_years;
    double previous = 0;
    for (std::size_t k = 0; k < n; ++k) {
      const double z = bass_cumulative(bass, static_cast<double>(k + 1));
      s.curve.push_back(z - previous);
      previous = z;
    }
    return render_svg(title, {s});
  }

  const auto& dataset = std::get<DuopolyDataset>(data);
  const auto& params = std::get<UcrcdParams>(fit.params);
  const std::size_t n = dataset.size();
  const auto launch = static_cast<std::size_t>(dataset.c2());
  const auto trajectory = ucrcd_simulate(params, dataset.c2(), static_cast<int>(n));

  PlotSeries inc = incumbent_series(dataset.incumbent().label());
  inc.point_years = years_from(dataset.start_year(), 0, n);
  inc.points.assign(dataset.incumbent().values().begin(), dataset.incumbent().values().end());
  inc.curve_years = inc.point_years;
  inc.curve.assign(trajectory.z1_inst().begin(), trajectory.z1_inst().end());

  PlotSeries ent = entrant_series(dataset.entrant().label());
  ent.point_years = years_from(dataset.start_year(), launch, n);
  ent.points = tail(dataset.entrant().values(), launch);
  ent.curve_years = ent.point_years;
  ent.curve = tail(trajectory.z2_inst(), launch);
  return render_svg(title, {inc, ent});
}

int cmd_fit(const FitOptions& o, std::ostream& out, std::ostream& err) {
  const ModelKind kind = parse_model(o.model);
  const ObservationMode mode = parse_mode(o.mode);
  const ParameterMap fixed = parse_assignments(o.fix);
  const std::optional<int> c2 = o.c2 > 0 ? std::optional<int>(o.c2) : std::nullopt;

  int start_year = 0;
  const FitProblem problem = [&] {
    if (kind == ModelKind::bass) {
      if (c2) throw InputError("--c2 applies to UCRCD models only");
      // A three-column file contributes its incumbent series.
      AnnualSeries series = header_columns(o.input) == 3 ? read_dataset(o.input).incumbent()
                                                          : read_series(o.input);
      start_year = series.start_year();
      FitProblem p = FitProblem::bass(std::move(series), mode);
      p.fixed = fixed;
      return p;
    }
    DuopolyDataset dataset = read_dataset(o.input, {}, c2);
    start_year = dataset.start_year();
    return FitProblem::ucrcd(std::move(dataset), kind == ModelKind::ucrcd_restricted, fixed, mode);
  }();

  FitResult result;
  try {
    SolverConfig config;
    config.max_iterations = o.max_iterations;
    result = fit(problem, std::nullopt, config);
  } catch (const InvalidArgument&) {
    throw;
  } catch (const Error& e) {
    err << "error: estimation failed: " << e.what() << '\n';
    return kExitSolver;
  }

  ReportBundle report = make_report(result, o.input, start_year, o.alpha);
  report.plot_file = "plot.svg";
  const std::string title =
      fmt::format("{} fit: {}", to_string(kind), fs::path(o.input).filename().string());

  OutputSet outputs(o.out);
  outputs.add("report.json", render_report_json(report));
  outputs.add("report.txt", render_report_txt(report));
  outputs.add("plot.svg", fit_plot(result, problem.data, title));
  outputs.commit();

  out << render_report_txt(report);
  if (!result.converged) {
    err << fmt::format("warning: no convergence after {} iterations; report written to {}\n",
                       result.iterations, o.out);
    return kExitSolver;
  }
  return kExitOk;
}

struct Source {
  UcrcdParams params;
  int c2 = 0;
  std::string label;
};

UcrcdParams params_from_json(const json& j, bool restricted) {
  if (!j.is_object()) throw InputError("'params' must be an object");
  UcrcdValues v;
  auto take = [&](const char* name, double& slot, bool required) {
    if (!j.contains(name)) {
      if (required) throw InputError(fmt::format("parameter '{}' is missing", name));
      return;
    }
    slot = j.at(name).get<double>();
  };
  take("ma", v.ma, true);
  take("p1a", v.p1a, true);
  take("q1a", v.q1a, true);
  take("mc", v.mc, true);
  take("p1c", v.p1c, true);
  take("q1c", v.q1c, true);
  take("delta", v.delta, true);
  take("p2", v.p2, true);
  take("q2", v.q2, true);
  take("gamma", v.gamma, !restricted);
  for (const auto& [key, _] : j.items()) {
    if (!ucrcd_param_from_string(key)) throw InputError(fmt::format("unknown parameter '{}'", key));
  }
  if (restricted && j.contains("gamma") && v.gamma != v.delta) {
    throw InputError("restricted parameters need gamma == delta (or no gamma)");
  }
  return restricted ? UcrcdParams::make_restricted(v) : UcrcdParams::make_unrestricted(v);
}

// Either a fit report or {"model": ..., "c2": N, "params": {...}}.
Source source_from_file(const fs::path& path) {
  const std::string text = read_file(path);
  const json j = json::parse(text);
  if (j.contains("schema")) {
    const ReportBundle report = parse_report_json(text);
    if (report.model == ModelKind::bass) throw InputError("a Bass report has no duopoly parameters");
    const FitResult f = to_fit_result(report);
    return {std::get<UcrcdParams>(f.params), report.c2.value_or(0), path.stem().string()};
  }
  const ModelKind kind = parse_model(j.value("model", std::string("ucrcd-restricted")));
  if (kind == ModelKind::bass) throw InputError("parameter files describe UCRCD models");
  return {params_from_json(j.at("params"), kind == ModelKind::ucrcd_restricted),
          j.value("c2", 0), path.stem().string()};
}

Source resolve_source(const SourceOptions& o) {
  if (o.country.empty() == o.params.empty()) throw InputError("give exactly one of --country or --params");
  Source source = [&] {
    if (!o.params.empty()) return source_from_file(o.params);
    const auto fixtures = load_country_fixtures();
    const auto& f = find_fixture(fixtures, o.country);
    return Source{f.params, f.c2, f.country};
  }();
  if (o.c2 > 0) source.c2 = o.c2;
  if (source.c2 <= 0) throw InputError("launch time unknown; pass --c2");
  for (const auto& [name, value] : parse_assignments(o.fix)) {
    const auto p = ucrcd_param_from_string(name);
    if (!p) throw InputError(fmt::format("unknown parameter '{}'", name));
    source.params = source.params.with(*p, value);
  }
  return source;
}

int cmd_simulate(const SimulateOptions& o, std::ostream& out) {
  const Source source = resolve_source(o.source);
  if (o.horizon <= 0) throw InputError(fmt::format("--horizon must be > 0, got {}", o.horizon));
  Trajectory trajectory = [&] {
    try {
      return ucrcd_simulate(source.params, source.c2, o.horizon);
    } catch (const SimulationError& e) {
      throw InputError(fmt::format("{} cannot be simulated: {}", source.label, e.what()));
    }
  }();

  const auto n = trajectory.size();
  const auto launch = static_cast<std::size_t>(source.c2);
  PlotSeries inc = incumbent_series("incumbent");
  inc.curve_years = years_from(o.source.start_year, 0, n);
  inc.curve.assign(trajectory.z1_inst().begin(), trajectory.z1_inst().end());
  PlotSeries ent = entrant_series("entrant");
  ent.curve_years = years_from(o.source.start_year, launch, n);
  ent.curve = tail(trajectory.z2_inst(), launch);

  OutputSet outputs(o.source.out);
  outputs.add("trajectory.csv", format_trajectory_csv(trajectory));
  outputs.add("plot.svg", render_svg(fmt::format("{} simulation", source.label), {inc, ent}));
  for (const auto& path : outputs.commit()) out << "wrote " << path.string() << '\n';
  return kExitOk;
}

int cmd_synth(const SynthOptions& o, std::ostream& out) {
  const Source source = resolve_source(o.source);
  DuopolyDataset dataset = [&] {
    try {
      return synth_dataset(source.params, source.c2, o.years, o.noise, o.seed, o.source.start_year);
    } catch (const SimulationError& e) {
      throw InputError(fmt::format("{} cannot be simulated: {}", source.label, e.what()));
    }
  }();
  OutputSet outputs(o.source.out);
  outputs.add("data.csv", format_dataset_csv(dataset));
  for (const auto& path : outputs.commit()) out << "wrote " << path.string() << '\n';
  return kExitOk;
}

int cmd_compare(const FitOptions& o, std::ostream& out, std::ostream& err) {
  const ObservationMode mode = parse_mode(o.mode);
  const ParameterMap fixed = parse_assignments(o.fix);
  const std::optional<int> c2 = o.c2 > 0 ? std::optional<int>(o.c2) : std::nullopt;
  const DuopolyDataset dataset = read_dataset(o.input, {}, c2);

  SolverConfig config;
  config.max_iterations = o.max_iterations;
  const UcrcdComparison c = compare_ucrcd(dataset, fixed, mode, config, o.alpha);
  OutputSet outputs(o.out);
  const std::string text = render_comparison_txt(c, o.input, dataset.start_year());
  outputs.add("comparison.json", render_comparison_json(c, o.input, dataset.start_year()));
  outputs.add("comparison.txt", text);
  outputs.commit();
  out << text;

  bool ok = c.comparison.has_value();
  for (const auto* e : {&c.restricted_error, &c.unrestricted_error, &c.comparison_error}) {
    if (*e) err << "error: " << **e << '\n';
  }
  for (const auto* f : {&c.restricted, &c.unrestricted}) {
    if (*f && !(*f)->converged) {
      err << fmt::format("warning: {} fit did not converge\n", to_string((*f)->model));
      ok = false;
    }
  }
  return ok ? kExitOk : kExitSolver;
}

int cmd_classify(const ClassifyOptions& o, std::ostream& out) {
  if (o.input.empty() == o.country.empty()) throw InputError("give exactly one of --input or --country");
  if (!o.country.empty()) {
    const auto fixtures = load_country_fixtures();
    out << render_verdict(classify_reported(find_fixture(fixtures, o.country)));
    return kExitOk;
  }
  const ReportBundle report = parse_report_json(read_file(o.input));
  if (report.model == ModelKind::bass) {
    throw InputError("report holds a Bass fit, which has no cross coefficients");
  }
  out << render_verdict(classify_interplay(to_fit_result(report), o.alpha));
  return kExitOk;
}

void add_source_options(CLI::App* cmd, SourceOptions& o) {
  cmd->add_option("--country", o.country, "Country fixture to use");
  cmd->add_option("--params", o.params, "Parameter JSON file or fit report");
  cmd->add_option("--fix", o.fix, "Override a parameter, NAME=VALUE (repeatable)");
  cmd->add_option("--c2", o.c2, "Entrant launch time in years")->check(CLI::PositiveNumber);
  cmd->add_option("--start-year", o.start_year, "Calendar year of the first observation");
  cmd->add_option("--out", o.out, "Output directory");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bass and UCRCD diffusion models: fit, simulate, compare, classify, synth"};
  app.name("ucrcd");
  app.require_subcommand(1);

  FitOptions fit_opts;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a model to a CSV and write report.json, report.txt, plot.svg");
  fit_cmd->add_option("--input", fit_opts.input, "CSV file")->required();
  fit_cmd->add_option("--model", fit_opts.model, "bass | ucrcd-restricted | ucrcd-unrestricted");
  fit_cmd->add_option("--mode", fit_opts.mode, "cumulative | instantaneous");
  fit_cmd->add_option("--fix", fit_opts.fix, "Hold a parameter fixed, NAME=VALUE (repeatable)");
  fit_cmd->add_option("--c2", fit_opts.c2, "Override the detected launch time")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--alpha", fit_opts.alpha, "Significance level")->check(CLI::Range(0.0, 1.0));
  fit_cmd->add_option("--out", fit_opts.out, "Output directory");
  fit_cmd->add_option("--max-iterations", fit_opts.max_iterations, "Levenberg-Marquardt iteration cap")
      ->check(CLI::PositiveNumber);

  FitOptions cmp_opts;
  auto* cmp_cmd = app.add_subcommand("compare", "Fit restricted and unrestricted UCRCD and compare them");
  cmp_cmd->add_option("--input", cmp_opts.input, "CSV file")->required();
  cmp_cmd->add_option("--mode", cmp_opts.mode, "cumulative | instantaneous");
  cmp_cmd->add_option("--fix", cmp_opts.fix, "Hold a parameter fixed, NAME=VALUE (repeatable)");
  cmp_cmd->add_option("--c2", cmp_opts.c2, "Override the detected launch time")->check(CLI::PositiveNumber);
  cmp_cmd->add_option("--alpha", cmp_opts.alpha, "Significance level")->check(CLI::Range(0.0, 1.0));
  cmp_cmd->add_option("--out", cmp_opts.out, "Output directory");
  cmp_cmd->add_option("--max-iterations", cmp_opts.max_iterations, "Levenberg-Marquardt iteration cap")
      ->check(CLI::PositiveNumber);

  SimulateOptions sim_opts;
  auto* sim_cmd = app.add_subcommand("simulate", "Simulate a parameter set; write trajectory.csv and plot.svg");
  add_source_options(sim_cmd, sim_opts.source);
  sim_cmd->add_option("--horizon", sim_opts.horizon, "Years to simulate");

  SynthOptions syn_opts;
  auto* syn_cmd = app.add_subcommand("synth", "Write a synthetic dataset (data.csv)");
  add_source_options(syn_cmd, syn_opts.source);
  syn_cmd->add_option("--years", syn_opts.years, "Number of annual observations");
  syn_cmd->add_option("--noise", syn_opts.noise, "Noise s.d. as a fraction of each series maximum")
      ->check(CLI::NonNegativeNumber);
  syn_cmd->add_option("--seed", syn_opts.seed, "Random seed");

  ClassifyOptions cls_opts;
  auto* cls_cmd = app.add_subcommand("classify", "Competition/collaboration verdict of a UCRCD fit");
  cls_cmd->add_option("--input", cls_opts.input, "report.json written by fit");
  cls_cmd->add_option("--country", cls_opts.country, "Classify a country's published estimates");
  cls_cmd->add_option("--alpha", cls_opts.alpha, "Significance level")->check(CLI::Range(0.0, 1.0));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*fit_cmd) return cmd_fit(fit_opts, out, err);
    if (*cmp_cmd) return cmd_compare(cmp_opts, out, err);
    if (*sim_cmd) return cmd_simulate(sim_opts, out);
    if (*syn_cmd) return cmd_synth(syn_opts, out);
    if (*cls_cmd) return cmd_classify(cls_opts, out);
  } catch (const SolverError& e) {
    err << "error: " << e.what() << '\n';
    return kExitSolver;
  } catch (const SimulationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitSolver;
  } catch (const json::exception& e) {
    err << "error: invalid JSON: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}

}  // namespace ucrcd::cli
