#include "ucrcd/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <string_view>

#include <fmt/format.h>

#include "ucrcd/error.hpp"
#include "ucrcd/kernels.hpp"

namespace ucrcd {

namespace {

using Kind = ParseError::Kind;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

// Numbered, non-blank lines of a text file.
struct Line {
  std::size_t number;
  std::string text;
};

std::vector<Line> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(Kind::io, 0, fmt::format("cannot open '{}'", path.string()));
  std::vector<Line> lines;
  std::string text;
  std::size_t number = 0;
  while (std::getline(in, text)) {
    ++number;
    if (number == 1 && text.starts_with("\xEF\xBB\xBF")) text.erase(0, 3);
    if (trim(text).empty()) continue;
    lines.push_back({number, std::move(text)});
  }
  if (in.bad()) throw ParseError(Kind::io, 0, fmt::format("error reading '{}'", path.string()));
  if (lines.empty()) throw ParseError(Kind::header, 0, fmt::format("'{}' is empty", path.string()));
  return lines;
}

int parse_year(std::string_view cell, std::size_t line) {
  int year = 0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), year);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw ParseError(Kind::malformed_row, line, fmt::format("year '{}' is not an integer", cell));
  }
  return year;
}

double parse_value(std::string_view cell, std::size_t line, std::string_view column) {
  double value = 0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(value)) {
    throw ParseError(Kind::malformed_row, line,
                     fmt::format("{} value '{}' is not a finite number", column, cell));
  }
  if (value < 0.0) {
    throw ParseError(Kind::negative_value, line,
                     fmt::format("{} value {} is negative", column, value));
  }
  return value;
}

void check_header(const Line& line, const std::vector<std::string>& expected, char delim) {
  const auto cells = split(line.text, delim);
  bool ok = cells.size() == expected.size();
  for (std::size_t i = 0; ok && i < cells.size(); ++i) ok = cells[i] == expected[i];
  if (!ok) {
    std::string want;
    for (const auto& e : expected) want += (want.empty() ? "" : std::string(1, delim)) + e;
    throw ParseError(Kind::header, line.number,
                     fmt::format("expected header '{}', got '{}'", want, trim(line.text)));
  }
}

void check_year(int year, int& previous, bool first, std::size_t line) {
  if (!first && year != previous + 1) {
    throw ParseError(Kind::non_consecutive_year, line,
                     fmt::format("year {} does not follow {}", year, previous));
  }
  previous = year;
}

// Renders the whole file in memory first so a formatting error never leaves half a file.
template <typename Body>
void write_text(const std::filesystem::path& path, Body&& body) {
  std::string text;
  body(text);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ParseError(Kind::io, 0, fmt::format("cannot write '{}'", path.string()));
  out << text;
  if (!out.flush()) throw ParseError(Kind::io, 0, fmt::format("error writing '{}'", path.string()));
}

}  // namespace

DuopolyDataset read_dataset(const std::filesystem::path& path, const CsvLayout& layout,
                            std::optional<int> c2_override) {
  const auto lines = read_lines(path);
  check_header(lines.front(), {layout.year_column, layout.incumbent_column, layout.entrant_column},
               layout.delimiter);

  std::vector<double> incumbent, entrant;
  std::vector<std::size_t> line_of;
  int start_year = 0;
  int previous = 0;
  bool entrant_started = false;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& line = lines[i];
    const auto cells = split(line.text, layout.delimiter);
    if (cells.size() != 3) {
      throw ParseError(Kind::malformed_row, line.number,
                       fmt::format("expected 3 columns, got {}", cells.size()));
    }
    const int year = parse_year(cells[0], line.number);
    check_year(year, previous, i == 1, line.number);
    if (i == 1) start_year = year;
    if (cells[1].empty()) {
      throw ParseError(Kind::missing_value, line.number, "incumbent value is missing");
    }
    incumbent.push_back(parse_value(cells[1], line.number, layout.incumbent_column));
    if (cells[2].empty()) {
      if (entrant_started) {
        throw ParseError(Kind::missing_value, line.number,
                         "entrant value is missing after the series has started");
      }
      entrant.push_back(0.0);
    } else {
      entrant_started = true;
      entrant.push_back(parse_value(cells[2], line.number, layout.entrant_column));
    }
    line_of.push_back(line.number);
  }
  if (incumbent.size() < 3) {
    throw ParseError(Kind::invalid_dataset, 0,
                     fmt::format("'{}' has {} data rows; at least 3 are needed", path.string(),
                                 incumbent.size()));
  }

  const auto first = std::find_if(entrant.begin(), entrant.end(),
                                  [&](double v) { return v >= layout.zero_tolerance; });
  if (first == entrant.end()) {
    throw ParseError(Kind::no_entrant, 0, "entrant series has no positive value");
  }
  const auto launch = static_cast<std::size_t>(first - entrant.begin());
  if (launch == 0) {
    throw ParseError(Kind::no_monopoly_phase, line_of[0],
                     "entrant is positive in the first year: there is no monopoly phase");
  }

  int c2 = static_cast<int>(launch);
  if (c2_override) {
    c2 = *c2_override;
    if (c2 <= 0 || static_cast<std::size_t>(c2) >= entrant.size()) {
      throw ParseError(Kind::invalid_dataset, 0,
                       fmt::format("c2 override {} must lie in (0, {})", c2, entrant.size()));
    }
    if (static_cast<std::size_t>(c2) > launch) {
      throw ParseError(Kind::invalid_dataset, line_of[launch],
                       fmt::format("entrant is positive before the overridden launch c2 = {}", c2));
    }
  }
  // Only sub-tolerance values precede the launch; they are rounding noise.
  std::fill(entrant.begin(), entrant.begin() + static_cast<std::ptrdiff_t>(launch), 0.0);

  try {
    return DuopolyDataset(AnnualSeries(layout.incumbent_column, start_year, std::move(incumbent)),
                          AnnualSeries(layout.entrant_column, start_year, std::move(entrant)), c2);
  } catch (const InvalidArgument& e) {
    throw ParseError(Kind::invalid_dataset, 0, e.what());
  }
}

std::string format_dataset_csv(const DuopolyDataset& dataset) {
  std::string out = "year,incumbent,entrant\n";
  for (std::size_t k = 0; k < dataset.size(); ++k) {
    out += fmt::format("{},{},{}\n", dataset.start_year() + static_cast<int>(k),
                       dataset.incumbent()[k], dataset.entrant()[k]);
  }
  return out;
}

void write_dataset(const std::filesystem::path& path, const DuopolyDataset& dataset) {
  write_text(path, [&](std::string& out) { out = format_dataset_csv(dataset); });
}

AnnualSeries read_series(const std::filesystem::path& path, char delimiter) {
  const auto lines = read_lines(path);
  const auto header = split(lines.front().text, delimiter);
  if (header.size() != 2 || header[0] != "year" || header[1].empty()) {
    throw ParseError(Kind::header, lines.front().number,
                     fmt::format("expected header 'year,<series>', got '{}'", trim(lines.front().text)));
  }
  const std::string label(header[1]);
  std::vector<double> values;
  int start_year = 0;
  int previous = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto& line = lines[i];
    const auto cells = split(line.text, delimiter);
    if (cells.size() != 2) {
      throw ParseError(Kind::malformed_row, line.number,
                       fmt::format("expected 2 columns, got {}", cells.size()));
    }
    const int year = parse_year(cells[0], line.number);
    check_year(year, previous, i == 1, line.number);
    if (i == 1) start_year = year;
    if (cells[1].empty()) throw ParseError(Kind::missing_value, line.number, "value is missing");
    values.push_back(parse_value(cells[1], line.number, label));
  }
  try {
    return AnnualSeries(label, start_year, std::move(values));
  } catch (const InvalidArgument& e) {
    throw ParseError(Kind::invalid_dataset, 0, e.what());
  }
}

void write_series(const std::filesystem::path& path, const AnnualSeries& series) {
  write_text(path, [&](std::string& out) {
    out += fmt::format("year,{}\n", series.label());
    for (std::size_t k = 0; k < series.size(); ++k) {
      out += fmt::format("{},{}\n", series.start_year() + static_cast<int>(k), series[k]);
    }
  });
}

std::string format_trajectory_csv(const Trajectory& trajectory) {
  std::string out = "time,z1_inst,z2_inst,z1_cum,z2_cum\n";
  for (std::size_t k = 0; k < trajectory.size(); ++k) {
    out += fmt::format("{},{},{},{},{}\n", trajectory.times()[k], trajectory.z1_inst()[k],
                       trajectory.z2_inst()[k], trajectory.z1_cum()[k], trajectory.z2_cum()[k]);
  }
  return out;
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& trajectory) {
  write_text(path, [&](std::string& out) { out = format_trajectory_csv(trajectory); });
}

DuopolyDataset synth_dataset(const UcrcdParams& params, int c2, int years,
                             double noise_sigma_fraction, std::uint64_t seed, int start_year) {
  if (!(noise_sigma_fraction >= 0.0) || !std::isfinite(noise_sigma_fraction)) {
    throw InvalidArgument("noise fraction must be finite and >= 0");
  }
  const auto trajectory = ucrcd_simulate(params, static_cast<double>(c2), years);
  std::vector<double> z1(trajectory.z1_inst().begin(), trajectory.z1_inst().end());
  std::vector<double> z2(trajectory.z2_inst().begin(), trajectory.z2_inst().end());

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> standard(0.0, 1.0);
  const double sigma1 = noise_sigma_fraction * *std::max_element(z1.begin(), z1.end());
  const double sigma2 = noise_sigma_fraction * *std::max_element(z2.begin(), z2.end());
  const auto launch = static_cast<std::size_t>(c2);
  for (std::size_t k = 0; k < z1.size(); ++k) {
    if (noise_sigma_fraction > 0.0) {
      z1[k] += sigma1 * standard(rng);
      if (k >= launch) z2[k] += sigma2 * standard(rng);
    }
    z1[k] = std::max(z1[k], 0.0);
    z2[k] = k < launch ? 0.0 : std::max(z2[k], 0.0);
  }
  return DuopolyDataset(AnnualSeries("incumbent", start_year, std::move(z1)),
                        AnnualSeries("entrant", start_year, std::move(z2)), c2);
}

}  // namespace ucrcd
