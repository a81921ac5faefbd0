#include "ucrcd/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <set>

#include <boost/math/distributions/students_t.hpp>
#include <fmt/format.h>
#include <fmt/ranges.h>

#include "ucrcd/error.hpp"

namespace ucrcd {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// Scaled-Jacobian condition number above which inference is refused.
constexpr double kMaxCondition = 1e10;
constexpr double kMaxDamping = 1e16;
// Largest change of a log-transformed coordinate per step (a factor of e).
// Without it one long step can park a rate at 1e-30, where its gradient vanishes.
constexpr double kMaxLogStep = 1.0;

bool is_positive_param(ModelKind model, std::string_view name) {
  if (model == ModelKind::bass) return name == "m" || name == "p";
  return name == "ma" || name == "mc" || name == "p1a" || name == "p1c";
}

double sum_of_squares(std::span<const double> r) {
  return std::inner_product(r.begin(), r.end(), r.begin(), 0.0);
}

std::string format_beta(const std::vector<std::string>& names, std::span<const double> beta) {
  std::string out;
  for (std::size_t i = 0; i < names.size() && i < beta.size(); ++i) {
    if (i > 0) out += ", ";
    out += fmt::format("{}={:.6g}", names[i], beta[i]);
  }
  return out;
}

// Maps between the free parameters on the natural scale (what callers see)
// and the unconstrained coordinates the optimiser moves in.
class Codec {
 public:
  Codec(const FitProblem& problem, bool log_transform) {
    names_ = problem.free_parameters();
    log_.resize(names_.size());
    for (std::size_t j = 0; j < names_.size(); ++j) {
      log_[j] = log_transform && is_positive_param(problem.model, names_[j]);
    }
  }

  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }

  /// Shrinks `step` uniformly so no log coordinate moves by more than kMaxLogStep.
  void limit_step(Eigen::VectorXd& step) const {
    double largest = 0.0;
    for (std::size_t j = 0; j < size(); ++j) {
      if (log_[j]) largest = std::max(largest, std::abs(step[static_cast<Eigen::Index>(j)]));
    }
    if (largest > kMaxLogStep) step *= kMaxLogStep / largest;
  }

  Eigen::VectorXd to_internal(std::span<const double> beta) const {
    Eigen::VectorXd x(static_cast<Eigen::Index>(beta.size()));
    for (std::size_t j = 0; j < beta.size(); ++j) {
      if (log_[j] && !(beta[j] > 0.0)) {
        throw InvalidArgument(
            fmt::format("initial value of {} must be > 0, got {}", names_[j], beta[j]));
      }
      x[static_cast<Eigen::Index>(j)] = log_[j] ? std::log(beta[j]) : beta[j];
    }
    return x;
  }

  std::vector<double> to_natural(const Eigen::VectorXd& x) const {
    std::vector<double> beta(size());
    for (std::size_t j = 0; j < size(); ++j) {
      const double v = x[static_cast<Eigen::Index>(j)];
      beta[j] = log_[j] ? std::exp(v) : v;
    }
    return beta;
  }

 private:
  std::vector<std::string> names_;
  std::vector<bool> log_;
};

// Residuals that report failure (infeasible trajectory, invalid parameters)
// as nullopt instead of throwing, for use inside the optimiser.
std::optional<Eigen::VectorXd> try_residuals(const FitProblem& problem,
                                            std::span<const double> beta,
                                            const SolverConfig& config) {
  try {
    const auto r = residuals(problem, beta, config);
    Eigen::VectorXd out = Eigen::Map<const Eigen::VectorXd>(r.data(), static_cast<Eigen::Index>(r.size()));
    if (!out.allFinite()) return std::nullopt;
    return out;
  } catch (const SimulationError&) {
    return std::nullopt;
  } catch (const InvalidArgument&) {
    return std::nullopt;
  }
}

double fd_step(double value, double rel) { return rel * std::max(std::abs(value), 1e-3); }

// Forward-difference Jacobian in optimiser coordinates. A column whose forward
// evaluation is infeasible falls back to a backward difference.
Eigen::MatrixXd internal_jacobian(const FitProblem& problem, const Codec& codec,
                                  const Eigen::VectorXd& x, const Eigen::VectorXd& r0,
                                  const SolverConfig& config) {
  Eigen::MatrixXd jac(r0.size(), x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = fd_step(x[j], config.fd_relative_step);
    Eigen::VectorXd xp = x;
    xp[j] += h;
    auto rp = try_residuals(problem, codec.to_natural(xp), config);
    if (rp) {
      jac.col(j) = (*rp - r0) / h;
      continue;
    }
    xp[j] = x[j] - h;
    auto rm = try_residuals(problem, codec.to_natural(xp), config);
    if (!rm) {
      throw SolverError(fmt::format(
          "cannot differentiate residuals w.r.t. {}: the model is infeasible on both sides of {}",
          codec.names()[static_cast<std::size_t>(j)], codec.to_natural(x)[static_cast<std::size_t>(j)]));
    }
    jac.col(j) = (r0 - *rm) / h;
  }
  return jac;
}

// Largest |cosine| between the residual vector and a Jacobian column; zero at
// a stationary point.
double max_gradient_cosine(const Eigen::MatrixXd& jac, const Eigen::VectorXd& r) {
  const double rn = r.norm();
  if (rn == 0.0) return 0.0;
  double worst = 0.0;
  for (Eigen::Index j = 0; j < jac.cols(); ++j) {
    const double cn = jac.col(j).norm();
    if (cn == 0.0) continue;
    worst = std::max(worst, std::abs(jac.col(j).dot(r)) / (cn * rn));
  }
  return worst;
}

struct LmRun {
  Eigen::VectorXd x;
  Eigen::VectorXd r;
  double cost = 0;
  bool converged = false;
  int iterations = 0;
  std::vector<double> rss_history;
};

// Levenberg-Marquardt in optimiser coordinates with Marquardt scaling and
// gain-ratio damping updates. Infeasible trial points count as infinite cost.
LmRun run_lm(const FitProblem& problem, const Codec& codec, std::span<const double> beta0,
             const SolverConfig& config) {
  Eigen::VectorXd x = codec.to_internal(beta0);
  auto r_opt = try_residuals(problem, codec.to_natural(x), config);
  if (!r_opt) {
    // Surface the underlying simulation error.
    residuals(problem, beta0, config);
    throw SolverError(fmt::format("model cannot be evaluated at the initial guess [{}]",
                                  format_beta(codec.names(), beta0)));
  }
  Eigen::VectorXd r = *r_opt;
  double cost = r.squaredNorm();

  const double scale = sum_of_squares(problem.observations());
  // ||r|| <= 1e-12 ||w|| is an exact fit; below 1e-9 ||w|| progress is roundoff.
  const double exact_floor = 1e-24 * std::max(scale, 1e-300);
  const double roundoff_floor = 1e-18 * std::max(scale, 1e-300);

  LmRun run;
  run.rss_history.push_back(cost);
  double lambda = config.initial_damping;
  double nu = 2.0;
  bool& converged = run.converged;
  int& iterations = run.iterations;

  while (iterations < config.max_iterations) {
    if (cost <= exact_floor) {
      converged = true;
      break;
    }
    ++iterations;
    const Eigen::MatrixXd jac = internal_jacobian(problem, codec, x, r, config);
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd grad = jac.transpose() * r;
    Eigen::VectorXd diag = jtj.diagonal();
    const double diag_floor = 1e-12 * std::max(diag.maxCoeff(), 1e-300);
    diag = diag.cwiseMax(diag_floor);

    bool accepted = false;
    bool stalled = false;
    double new_cost = cost;
    Eigen::VectorXd step;
    while (!accepted) {
      Eigen::MatrixXd damped = jtj;
      damped.diagonal() += lambda * diag;
      Eigen::LDLT<Eigen::MatrixXd> ldlt(damped);
      if (ldlt.info() == Eigen::Success) {
        step = ldlt.solve(-grad);
      }
      if (ldlt.info() != Eigen::Success || !step.allFinite()) {
        lambda *= 10.0;
        if (lambda > kMaxDamping) {
          throw SolverError(
              "normal equations are singular even with heavy damping; fix one of the correlated "
              "parameters (--fix NAME=VALUE) or fit the restricted model");
        }
        continue;
      }
      codec.limit_step(step);
      const Eigen::VectorXd x_new = x + step;
      const auto r_new = try_residuals(problem, codec.to_natural(x_new), config);
      new_cost = r_new ? r_new->squaredNorm() : kInf;
      // Gain ratio: actual decrease over the decrease the linear model predicts.
      const double predicted = cost - (r + jac * step).squaredNorm();
      const double rho = predicted > 0.0 ? (cost - new_cost) / predicted : -1.0;
      if (new_cost < cost && rho > 1e-4) {
        accepted = true;
        x = x_new;
        r = *r_new;
        lambda *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3));
        lambda = std::max(lambda, 1e-12);
        nu = 2.0;
      } else {
        lambda *= nu;
        nu *= 2.0;
        if (lambda > kMaxDamping) {
          stalled = true;
          break;
        }
      }
    }

    if (stalled) {
      // No descent direction left at finite-difference resolution.
      converged = cost <= roundoff_floor || max_gradient_cosine(jac, r) < 1e-3;
      break;
    }

    const double relative_drop = (cost - new_cost) / cost;
    cost = new_cost;
    run.rss_history.push_back(cost);
    const double step_size = step.lpNorm<Eigen::Infinity>();
    if (cost <= exact_floor || step_size <= 1e-13 * (1.0 + x.lpNorm<Eigen::Infinity>())) {
      converged = true;
      break;
    }
    if (relative_drop < config.rss_rel_tolerance) {
      if (cost <= roundoff_floor) {
        converged = true;
        break;
      }
      const Eigen::MatrixXd jac_new = internal_jacobian(problem, codec, x, r, config);
      if (max_gradient_cosine(jac_new, r) < 1e-4) {
        converged = true;
        break;
      }
    }
  }

  run.x = x;
  run.r = r;
  run.cost = cost;
  return run;
}

bool covers_monopoly(const ParameterMap& m) {
  return m.contains("ma") || m.contains("p1a") || m.contains("q1a");
}

// The pre-launch incumbent data depend on (ma, p1a, q1a) alone, so a Bass fit
// to those years pins the monopoly block. The competition block is then fitted
// with it held, and the joint fit starts from both. Starting the joint fit
// cold lets early long steps wander into regions where the entrant cumulative
// turns negative, and the search stalls against that boundary.
ParameterMap staged_start(const FitProblem& problem, ParameterMap start, const SolverConfig& config,
                          int& iterations) {
  const auto& data = std::get<DuopolyDataset>(problem.data);
  const auto c2 = static_cast<std::size_t>(data.c2());
  const auto values = data.incumbent().values();
  if (c2 < 4 || std::all_of(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(c2),
                            [](double v) { return v == 0.0; })) {
    return start;
  }
  try {
    const AnnualSeries pre(data.incumbent().label(), data.start_year(),
                           std::vector<double>(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(c2)));
    const auto bass = fit(FitProblem::bass(pre, problem.mode), std::nullopt, config);
    iterations += bass.iterations;
    if (!bass.converged) return start;
    start["ma"] = bass.parameter("m").estimate;
    start["p1a"] = bass.parameter("p").estimate;
    start["q1a"] = bass.parameter("q").estimate;
  } catch (const Error&) {
    return start;
  }
  // Starts from continuity with the monopoly: the incumbent keeps p1a and its
  // total within imitation q1a, the entrant gets a positive cross effect, and
  // mc sits just above the observed total. The default start stays as a
  // fallback. Starting far from continuity tends to collapse p1c toward zero
  // into a basin of large offsetting imitation terms.
  auto block = problem;
  for (const char* name : {"ma", "p1a", "q1a"}) block.fixed[name] = start.at(name);
  block.free_order.clear();
  const double total = data.incumbent().cumulative().back() + data.entrant().cumulative().back();
  std::vector<ParameterMap> trials;
  for (double q1c : {0.0, -0.2}) {
    for (double mc_scale : {1.05, 1.3}) {
      auto trial = start;
      trial["mc"] = mc_scale * total;
      trial["p1c"] = start.at("p1a");
      trial["q1c"] = q1c;
      trial["delta"] = start.at("q1a") - q1c;
      trial["q2"] = trial["delta"] + 0.2;
      if (problem.model == ModelKind::ucrcd_unrestricted) trial["gamma"] = trial["delta"];
      trials.push_back(std::move(trial));
    }
  }
  trials.push_back(start);
  std::optional<FitResult> best;
  for (const auto& trial : trials) {
    try {
      auto competition = fit(block, trial, config);
      iterations += competition.iterations;
      if (!best || competition.rss < best->rss) best = std::move(competition);
    } catch (const Error&) {
    }
  }
  if (best) {
    for (const auto& row : best->table) start[row.name] = row.estimate;
  }
  return start;
}

}  // namespace

void SolverConfig::validate() const {
  if (max_iterations <= 0) throw InvalidArgument("max_iterations must be > 0");
  if (!(rss_rel_tolerance > 0.0)) throw InvalidArgument("rss_rel_tolerance must be > 0");
  if (!(initial_damping > 0.0)) throw InvalidArgument("initial_damping must be > 0");
  if (!(fd_relative_step > 0.0)) throw InvalidArgument("fd_relative_step must be > 0");
  integrator.validate();
}

FitProblem FitProblem::bass(AnnualSeries series, ObservationMode mode) {
  FitProblem problem{.data = std::move(series)};
  problem.model = ModelKind::bass;
  problem.mode = mode;
  return problem;
}

FitProblem FitProblem::ucrcd(DuopolyDataset dataset, bool restricted, ParameterMap fixed,
                             ObservationMode mode) {
  FitProblem problem{.data = std::move(dataset)};
  problem.model = restricted ? ModelKind::ucrcd_restricted : ModelKind::ucrcd_unrestricted;
  problem.fixed = std::move(fixed);
  problem.mode = mode;
  return problem;
}

std::optional<int> FitProblem::c2() const {
  if (const auto* d = std::get_if<DuopolyDataset>(&data)) return d->c2();
  return std::nullopt;
}

std::size_t FitProblem::series_length() const {
  return std::visit([](const auto& d) { return d.size(); }, data);
}

std::vector<std::string> FitProblem::free_parameters() const {
  std::vector<std::string> canonical;
  for (auto& name : parameter_names(model)) {
    if (!fixed.contains(name)) canonical.push_back(std::move(name));
  }
  if (free_order.empty()) return canonical;
  auto sorted_order = free_order;
  auto sorted_canonical = canonical;
  std::sort(sorted_order.begin(), sorted_order.end());
  std::sort(sorted_canonical.begin(), sorted_canonical.end());
  if (sorted_order != sorted_canonical) {
    throw InvalidArgument(fmt::format("free_order [{}] is not a permutation of the free parameters [{}]",
                                      fmt::join(free_order, ", "), fmt::join(canonical, ", ")));
  }
  return free_order;
}

std::size_t FitProblem::n_obs() const {
  const std::size_t n = series_length();
  if (const auto c = c2()) return n + (n - static_cast<std::size_t>(*c));
  return n;
}

std::vector<double> FitProblem::observations() const {
  auto block = [this](const AnnualSeries& s, std::size_t from) {
    std::vector<double> v = mode == ObservationMode::cumulative
                                ? s.cumulative()
                                : std::vector<double>(s.values().begin(), s.values().end());
    return std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(from), v.end());
  };
  if (const auto* s = std::get_if<AnnualSeries>(&data)) return block(*s, 0);
  const auto& d = std::get<DuopolyDataset>(data);
  auto w = block(d.incumbent(), 0);
  const auto entrant = block(d.entrant(), static_cast<std::size_t>(d.c2()));
  w.insert(w.end(), entrant.begin(), entrant.end());
  return w;
}

void FitProblem::validate() const {
  const bool bass_data = std::holds_alternative<AnnualSeries>(data);
  if (bass_data != is_bass()) {
    throw InvalidArgument(is_bass() ? "a Bass fit needs a single annual series"
                                    : "a UCRCD fit needs an incumbent/entrant dataset");
  }
  const auto names = parameter_names(model);
  for (const auto& [name, value] : fixed) {
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      if (model == ModelKind::ucrcd_restricted && name == "gamma") {
        throw InvalidArgument("gamma is tied to delta in the restricted model; fix delta instead");
      }
      throw InvalidArgument(fmt::format("cannot fix '{}': not a parameter of the {} model", name,
                                        to_string(model)));
    }
    if (!std::isfinite(value)) throw InvalidArgument(fmt::format("fixed value of {} is not finite", name));
  }
  const auto free = free_parameters();
  if (free.empty()) throw InvalidArgument("every parameter is fixed; nothing to estimate");
  if (n_obs() <= free.size()) {
    throw InvalidArgument(fmt::format("{} observations cannot identify {} free parameters", n_obs(),
                                      free.size()));
  }
  if (const auto* d = std::get_if<DuopolyDataset>(&data)) {
    const auto values = d->entrant().values();
    const bool any_positive = std::any_of(values.begin() + d->c2(), values.end(),
                                          [](double v) { return v > 0.0; });
    if (!any_positive) {
      throw SolverError(
          "entrant series is zero over the whole competition phase: its coefficients are not "
          "identifiable; fit a Bass model to the incumbent instead");
    }
  }
}

std::variant<BassParams, UcrcdParams> assemble_params(const FitProblem& problem,
                                                      std::span<const double> beta) {
  const auto free = problem.free_parameters();
  if (beta.size() != free.size()) {
    throw InvalidArgument(fmt::format("expected {} free parameters, got {}", free.size(), beta.size()));
  }
  ParameterMap all = problem.fixed;
  for (std::size_t j = 0; j < free.size(); ++j) all[free[j]] = beta[j];
  auto value = [&all](std::string_view name) {
    const auto it = all.find(name);
    return it == all.end() ? 0.0 : it->second;
  };
  if (problem.is_bass()) return BassParams(value("m"), value("p"), value("q"));
  UcrcdValues v;
  v.ma = value("ma");
  v.p1a = value("p1a");
  v.q1a = value("q1a");
  v.mc = value("mc");
  v.p1c = value("p1c");
  v.q1c = value("q1c");
  v.delta = value("delta");
  v.p2 = value("p2");
  v.q2 = value("q2");
  v.gamma = value("gamma");
  if (problem.model == ModelKind::ucrcd_restricted) return UcrcdParams::make_restricted(v);
  return UcrcdParams::make_unrestricted(v);
}

std::vector<double> predict(const FitProblem& problem,
                            const std::variant<BassParams, UcrcdParams>& params,
                            const IntegratorConfig& config) {
  const std::size_t n = problem.series_length();
  const bool cumulative = problem.mode == ObservationMode::cumulative;

  if (const auto* bass = std::get_if<BassParams>(&params)) {
    std::vector<double> eta(n);
    double prev = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double z = bass_cumulative(*bass, static_cast<double>(k + 1));
      eta[k] = cumulative ? z : z - prev;
      prev = z;
    }
    return eta;
  }

  const auto& ucrcd = std::get<UcrcdParams>(params);
  const auto c2 = static_cast<std::size_t>(problem.c2().value());
  std::vector<double> times(n);
  std::iota(times.begin(), times.end(), 1.0);
  const auto states = ucrcd_cumulative_at(ucrcd, static_cast<double>(c2), times, config);

  std::vector<double> eta;
  eta.reserve(problem.n_obs());
  for (std::size_t k = 0; k < n; ++k) {
    eta.push_back(cumulative || k == 0 ? states[k].z1 : states[k].z1 - states[k - 1].z1);
  }
  for (std::size_t k = c2; k < n; ++k) {
    eta.push_back(cumulative ? states[k].z2 : states[k].z2 - states[k - 1].z2);
  }
  return eta;
}

std::vector<double> residuals(const FitProblem& problem, std::span<const double> beta,
                              const SolverConfig& config) {
  for (double b : beta) {
    if (!std::isfinite(b)) throw InvalidArgument("parameter vector contains non-finite values");
  }
  const auto params = assemble_params(problem, beta);
  std::vector<double> eta;
  try {
    eta = predict(problem, params, config.integrator);
  } catch (const SimulationError& e) {
    throw SimulationError(
        fmt::format("{} [parameters: {}]", e.what(), format_beta(problem.free_parameters(), beta)),
        e.time());
  }
  auto w = problem.observations();
  for (std::size_t i = 0; i < w.size(); ++i) w[i] -= eta[i];
  return w;
}

ParameterMap auto_init(const FitProblem& problem) {
  constexpr double kExternal = 1e-3;
  constexpr double kImitation = 0.2;
  ParameterMap init;
  if (const auto* s = std::get_if<AnnualSeries>(&problem.data)) {
    const double total = s->cumulative().back();
    init["m"] = 1.5 * total;
    init["p"] = kExternal;
    init["q"] = kImitation;
    return init;
  }
  const auto& d = std::get<DuopolyDataset>(problem.data);
  const double total = d.incumbent().cumulative().back() + d.entrant().cumulative().back();
  const double m0 = total > 0.0 ? 1.5 * total : 1.0;
  init["ma"] = m0;
  init["mc"] = m0;
  init["p1a"] = kExternal;
  init["p1c"] = kExternal;
  init["p2"] = kExternal;
  init["q1a"] = kImitation;
  init["q1c"] = kImitation;
  init["q2"] = kImitation;
  init["delta"] = init["q2"];
  if (problem.model == ModelKind::ucrcd_unrestricted) init["gamma"] = init["q2"];
  return init;
}

Eigen::MatrixXd residual_jacobian(const FitProblem& problem, std::span<const double> beta,
                                  bool central, const SolverConfig& config) {
  const auto names = problem.free_parameters();
  const auto r0v = residuals(problem, beta, config);
  const Eigen::VectorXd r0 =
      Eigen::Map<const Eigen::VectorXd>(r0v.data(), static_cast<Eigen::Index>(r0v.size()));
  Eigen::MatrixXd jac(r0.size(), static_cast<Eigen::Index>(beta.size()));
  std::vector<double> b(beta.begin(), beta.end());
  for (std::size_t j = 0; j < b.size(); ++j) {
    const double h = fd_step(beta[j], config.fd_relative_step);
    b[j] = beta[j] + h;
    const auto rp = try_residuals(problem, b, config);
    b[j] = beta[j] - h;
    const auto rm = central || !rp ? try_residuals(problem, b, config) : std::nullopt;
    b[j] = beta[j];
    const auto col = static_cast<Eigen::Index>(j);
    if (central && rp && rm) {
      jac.col(col) = (*rp - *rm) / (2.0 * h);
    } else if (rp) {
      jac.col(col) = (*rp - r0) / h;
    } else if (rm) {
      jac.col(col) = (r0 - *rm) / h;
    } else {
      throw SolverError(fmt::format("cannot differentiate residuals w.r.t. {} at {}", names[j], beta[j]));
    }
  }
  return jac;
}

Inference inference(const FitProblem& problem, std::span<const double> beta_hat,
                    std::span<const double> resid, const SolverConfig& config) {
  const auto names = problem.free_parameters();
  const std::size_t n = resid.size();
  const std::size_t v = beta_hat.size();
  if (n <= v) throw InvalidArgument("inference needs more observations than parameters");

  const Eigen::MatrixXd jac = residual_jacobian(problem, beta_hat, /*central=*/true, config);

  // Column-scale before the decomposition so units do not drive the rank test.
  const Eigen::VectorXd norms = jac.colwise().norm();
  const double largest = norms.maxCoeff();
  std::vector<std::string> inert;
  for (std::size_t j = 0; j < v; ++j) {
    if (!(norms[static_cast<Eigen::Index>(j)] > 1e-12 * largest)) inert.push_back(names[j]);
  }
  Eigen::MatrixXd scaled = jac;
  for (Eigen::Index j = 0; j < scaled.cols(); ++j) {
    if (norms[j] > 0.0) scaled.col(j) /= norms[j];
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(scaled, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double condition = sv[sv.size() - 1] > 0.0 ? sv[0] / sv[sv.size() - 1] : kInf;

  if (!inert.empty() || condition > kMaxCondition) {
    const Eigen::MatrixXd cosines = scaled.transpose() * scaled;
    std::vector<RankDeficientError::ParameterPair> pairs;
    double best = 0.0;
    RankDeficientError::ParameterPair best_pair;
    for (std::size_t i = 0; i < v; ++i) {
      for (std::size_t j = i + 1; j < v; ++j) {
        const double c = std::abs(cosines(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
        if (c > 0.999) pairs.emplace_back(names[i], names[j]);
        if (c > best) {
          best = c;
          best_pair = {names[i], names[j]};
        }
      }
    }
    if (pairs.empty() && best > 0.0) pairs.push_back(best_pair);
    std::string listing;
    for (const auto& [a, b] : pairs) listing += fmt::format(" ({}, {})", a, b);
    auto message = fmt::format(
        "Jacobian is rank deficient at the estimate (condition number {:.3g});{}{}{} "
        "fix one parameter of each pair (--fix NAME=VALUE) or fit the restricted model",
        condition, listing.empty() ? "" : " near-collinear:", listing,
        inert.empty() ? "" : fmt::format(" no influence: {};", fmt::join(inert, ", ")));
    throw RankDeficientError(message, std::move(pairs), std::move(inert));
  }

  Inference out;
  const double rss = sum_of_squares(resid);
  const auto dof = static_cast<double>(n - v);
  out.s2 = rss / dof;

  // (J'J)^-1 = D^-1 V S^-2 V' D^-1 with D the column norms.
  const Eigen::VectorXd inv_sq = sv.array().square().inverse();
  Eigen::MatrixXd inv_scaled = svd.matrixV() * inv_sq.asDiagonal() * svd.matrixV().transpose();
  const Eigen::VectorXd inv_norms = norms.array().inverse();
  out.covariance = out.s2 * (inv_norms.asDiagonal() * inv_scaled * inv_norms.asDiagonal());

  const boost::math::students_t dist(dof);
  const double t_crit = boost::math::quantile(dist, 0.975);
  for (std::size_t j = 0; j < v; ++j) {
    const double var = out.covariance(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j));
    const double se = std::sqrt(std::max(var, 0.0));
    const double est = beta_hat[j];
    out.std_errors.push_back(se);
    out.ci_lower.push_back(est - t_crit * se);
    out.ci_upper.push_back(est + t_crit * se);
    if (se > 0.0) {
      out.p_values.push_back(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(est / se))));
    } else {
      out.p_values.push_back(est == 0.0 ? 1.0 : 0.0);
    }
  }

  const auto w = problem.observations();
  const double mean = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
  double tss = 0.0;
  for (double x : w) tss += (x - mean) * (x - mean);
  out.r_squared = tss > 0.0 ? std::clamp(1.0 - rss / tss, 0.0, 1.0) : 0.0;
  return out;
}

FitResult fit(const FitProblem& problem, const std::optional<ParameterMap>& init,
              const SolverConfig& config) {
  config.validate();
  problem.validate();

  const Codec codec(problem, config.log_transform_positive);
  const auto& names = codec.names();
  auto start = auto_init(problem);
  int warmup_iterations = 0;
  std::optional<ParameterMap> user_init = init;
  if (!problem.is_bass() && !covers_monopoly(problem.fixed) && !(init && covers_monopoly(*init))) {
    if (init) {
      for (const auto& [name, value] : *init) start[name] = value;
    }
    start = staged_start(problem, std::move(start), config, warmup_iterations);
    user_init.reset();
  }
  std::vector<double> beta0(names.size());
  for (std::size_t j = 0; j < names.size(); ++j) {
    auto it = user_init ? user_init->find(names[j]) : ParameterMap::const_iterator{};
    const bool supplied = user_init && it != user_init->end();
    beta0[j] = supplied ? it->second : start.at(names[j]);
    if (!std::isfinite(beta0[j])) {
      throw InvalidArgument(fmt::format("initial value of {} is not finite", names[j]));
    }
  }

  const auto run = run_lm(problem, codec, beta0, config);
  const Eigen::VectorXd& x = run.x;
  const Eigen::VectorXd& r = run.r;
  const double cost = run.cost;
  const bool converged = run.converged;
  const int iterations = run.iterations + warmup_iterations;
  const auto w = problem.observations();
  FitResult result;
  result.rss_history = run.rss_history;

  const auto beta_hat = codec.to_natural(x);
  const std::vector<double> resid(r.data(), r.data() + r.size());

  result.model = problem.model;
  result.mode = problem.mode;
  result.params = assemble_params(problem, beta_hat);
  result.residuals = resid;
  result.rss = cost;
  result.n_obs = resid.size();
  result.n_params = names.size();
  result.converged = converged;
  result.iterations = iterations;
  result.c2 = problem.c2();
  result.covariance_names = names;

  std::optional<Inference> inf;
  try {
    inf = inference(problem, beta_hat, resid, config);
  } catch (const RankDeficientError&) {
    if (converged) throw;
  }

  if (inf) {
    result.r_squared = inf->r_squared;
    result.covariance = inf->covariance;
  } else {
    // Best-so-far estimate of a run that did not converge; no inference.
    const double mean = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
    double tss = 0.0;
    for (double v : w) tss += (v - mean) * (v - mean);
    result.r_squared = tss > 0.0 ? std::clamp(1.0 - cost / tss, 0.0, 1.0) : 0.0;
    result.covariance = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(names.size()),
                                                  static_cast<Eigen::Index>(names.size()), kNaN);
  }

  for (const auto& name : parameter_names(problem.model)) {
    ParameterEstimate row;
    row.name = name;
    const auto fixed_it = problem.fixed.find(name);
    if (fixed_it != problem.fixed.end()) {
      row.estimate = fixed_it->second;
      row.std_error = row.ci_lower = row.ci_upper = row.p_value = kNaN;
      row.fixed = true;
    } else {
      const auto j = static_cast<std::size_t>(
          std::find(names.begin(), names.end(), name) - names.begin());
      row.estimate = beta_hat[j];
      if (inf) {
        row.std_error = inf->std_errors[j];
        row.ci_lower = inf->ci_lower[j];
        row.ci_upper = inf->ci_upper[j];
        row.p_value = inf->p_values[j];
      } else {
        row.std_error = row.ci_lower = row.ci_upper = row.p_value = kNaN;
      }
    }
    result.table.push_back(std::move(row));
  }
  result.validate();
  return result;
}

}  // namespace ucrcd
