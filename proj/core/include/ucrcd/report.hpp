#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ucrcd/selection.hpp"
#include "ucrcd/types.hpp"

namespace ucrcd {

inline constexpr std::string_view kReportSchema = "ucrcd.fit-report";
inline constexpr int kReportSchemaVersion = 1;

/// Everything written for one fitted model: the parameter table in appendix
/// layout plus fit statistics, the interplay verdict and, for comparisons, the
/// nested-model statistics.
struct ReportBundle {
  ModelKind model = ModelKind::bass;
  ObservationMode mode = ObservationMode::cumulative;
  std::string input;
  int start_year = 0;
  std::optional<int> c2;
  std::vector<ParameterEstimate> fit_table;
  std::vector<std::string> covariance_names;
  Eigen::MatrixXd covariance;
  double r_squared = 0;
  double rss = 0;
  std::size_t n_obs = 0;
  std::size_t n_params = 0;
  bool converged = false;
  int iterations = 0;
  std::vector<double> residuals;
  std::optional<InterplayVerdict> verdict;
  std::optional<ModelComparison> comparison;
  /// Plot written next to the report, if any.
  std::string plot_file;
};

/// Builds the bundle; UCRCD fits with inference also get a verdict.
ReportBundle make_report(const FitResult& fit, std::string input, int start_year,
                         double significance_level = 0.05);

/// FitResult view of a parsed report (enough for classification).
FitResult to_fit_result(const ReportBundle& report);

std::string render_report_json(const ReportBundle& report);
/// Throws ParseError on malformed JSON or an unsupported schema.
ReportBundle parse_report_json(std::string_view text);

/// Appendix-style text table. Depends only on fields stored in the JSON, so a
/// parsed report renders to the same bytes.
std::string render_report_txt(const ReportBundle& report);

/// Text rendering of a verdict as two lines, entrant-on-incumbent first.
std::string render_verdict(const InterplayVerdict& verdict);

/// Text and JSON renderings of a restricted/unrestricted comparison.
std::string render_comparison_txt(const UcrcdComparison& comparison, const std::string& input,
                                  int start_year);
std::string render_comparison_json(const UcrcdComparison& comparison, const std::string& input,
                                   int start_year);

}  // namespace ucrcd
