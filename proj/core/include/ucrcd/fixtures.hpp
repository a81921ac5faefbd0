#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ucrcd/types.hpp"

namespace ucrcd {

/// One (country, parameter) row of the shipped estimate table, as printed.
struct FixtureRow {
  std::string parameter;
  double estimate = 0;
  /// NaN where the table has NA.
  double std_error = 0;
  double ci_lower = 0;
  double ci_upper = 0;
  /// Numeric p-value; a bound such as "<0.0001" is stored as its limit.
  std::optional<double> p_value;
  /// p-value cell verbatim ("<0.0001", "0.83", "NA").
  std::string p_value_text;
};

/// Published competition-phase estimates for one country, completed with the
/// monopoly-phase values needed to simulate it.
struct CountryFixture {
  std::string country;
  /// Includes the published p2; restricted fixtures carry gamma == delta.
  UcrcdParams params = UcrcdParams::make_restricted({.ma = 1, .mc = 1});
  double r_squared = 0;
  bool restricted = true;
  int c2 = 0;
  /// Reported summary value of the entrant cross coefficient q2 - gamma.
  double reported_cross = 0;
  std::vector<FixtureRow> rows;

  const FixtureRow* row(std::string_view parameter) const;
};

/// The fixture table compiled into the library (identical to the shipped file).
std::string_view fixture_table_text();

/// Parses a fixture table. Throws ParseError on malformed content.
std::vector<CountryFixture> parse_country_fixtures(std::string_view text);

/// Fixtures from the embedded table, or from `path` when given.
std::vector<CountryFixture> load_country_fixtures(const std::optional<std::filesystem::path>& path = std::nullopt);

/// Looks up a country (case-insensitive). Throws InvalidArgument listing the
/// valid names when it is unknown.
const CountryFixture& find_fixture(const std::vector<CountryFixture>& fixtures, std::string_view country);

}  // namespace ucrcd
