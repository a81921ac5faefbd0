#include "ucrcd/fixtures.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "ucrcd/error.hpp"

namespace ucrcd {

namespace detail {
std::string_view embedded_fixture_table();
}

namespace {

constexpr std::string_view kHeader =
    "country,parameter,estimate,se,ci_lo,ci_hi,p_value,restricted_flag,r_squared";

std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_number(std::string_view cell, std::size_t line, std::string_view column) {
  if (cell == "NA") return std::numeric_limits<double>::quiet_NaN();
  double value = 0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(value)) {
    throw ParseError(ParseError::Kind::malformed_row, line,
                     fmt::format("column {}: '{}' is not a number", column, cell));
  }
  return value;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

struct Pending {
  CountryFixture fixture;
  std::size_t first_line = 0;
  std::map<std::string, double, std::less<>> values;
};

CountryFixture finish(Pending& p) {
  auto take = [&](std::string_view name) {
    const auto it = p.values.find(name);
    if (it == p.values.end()) {
      throw ParseError(ParseError::Kind::missing_value, p.first_line,
                       fmt::format("{}: missing '{}' row", p.fixture.country, name));
    }
    return it->second;
  };
  UcrcdValues v;
  v.ma = take("ma");
  v.p1a = take("p1a");
  v.q1a = take("q1a");
  v.mc = take("mc");
  v.p1c = take("p1c");
  v.q1c = take("q1c");
  v.delta = take("delta");
  v.p2 = take("p2");
  v.q2 = take("q2");
  auto& f = p.fixture;
  if (f.restricted) {
    if (p.values.contains("gamma")) {
      throw ParseError(ParseError::Kind::invalid_dataset, p.first_line,
                       fmt::format("{}: restricted fixture must not carry a gamma row", f.country));
    }
  } else {
    v.gamma = take("gamma");
  }
  f.reported_cross = take("q2_minus_gamma");
  const double c2 = take("c2");
  if (c2 != std::floor(c2) || c2 <= 0) {
    throw ParseError(ParseError::Kind::invalid_dataset, p.first_line,
                     fmt::format("{}: c2 must be a positive integer", f.country));
  }
  f.c2 = static_cast<int>(c2);
  try {
    f.params = f.restricted ? UcrcdParams::make_restricted(v) : UcrcdParams::make_unrestricted(v);
  } catch (const InvalidArgument& e) {
    throw ParseError(ParseError::Kind::invalid_dataset, p.first_line,
                     fmt::format("{}: {}", f.country, e.what()));
  }
  return f;
}

}  // namespace

const FixtureRow* CountryFixture::row(std::string_view parameter) const {
  const auto it = std::find_if(rows.begin(), rows.end(),
                               [&](const FixtureRow& r) { return r.parameter == parameter; });
  return it == rows.end() ? nullptr : &*it;
}

std::string_view fixture_table_text() { return detail::embedded_fixture_table(); }

std::vector<CountryFixture> parse_country_fixtures(std::string_view text) {
  static const std::vector<std::string_view> known = {
      "ma", "p1a", "q1a", "mc", "p1c", "q1c", "delta", "p2", "q2", "gamma", "q2_minus_gamma", "c2"};

  std::vector<Pending> pending;
  bool header_seen = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    if (!header_seen) {
      if (line != kHeader) {
        throw ParseError(ParseError::Kind::header, line_no,
                         fmt::format("expected header '{}', got '{}'", kHeader, line));
      }
      header_seen = true;
      continue;
    }
    const auto cells = split(line, ',');
    if (cells.size() != 9) {
      throw ParseError(ParseError::Kind::malformed_row, line_no,
                       fmt::format("expected 9 columns, got {}", cells.size()));
    }
    const std::string country(cells[0]);
    const std::string parameter(cells[1]);
    if (std::find(known.begin(), known.end(), parameter) == known.end()) {
      throw ParseError(ParseError::Kind::malformed_row, line_no,
                       fmt::format("unknown parameter '{}'", parameter));
    }
    if (cells[7] != "0" && cells[7] != "1") {
      throw ParseError(ParseError::Kind::malformed_row, line_no, "restricted_flag must be 0 or 1");
    }
    const bool restricted = cells[7] == "1";
    const double r2 = parse_number(cells[8], line_no, "r_squared");

    FixtureRow row;
    row.parameter = parameter;
    row.estimate = parse_number(cells[2], line_no, "estimate");
    if (std::isnan(row.estimate)) {
      throw ParseError(ParseError::Kind::missing_value, line_no, "estimate must not be NA");
    }
    row.std_error = parse_number(cells[3], line_no, "se");
    row.ci_lower = parse_number(cells[4], line_no, "ci_lo");
    row.ci_upper = parse_number(cells[5], line_no, "ci_hi");
    row.p_value_text = std::string(cells[6]);
    std::string_view p_cell = cells[6];
    if (p_cell.starts_with('<')) p_cell.remove_prefix(1);
    const double p = parse_number(p_cell, line_no, "p_value");
    if (!std::isnan(p)) row.p_value = p;

    if (pending.empty() || pending.back().fixture.country != country) {
      const bool seen = std::any_of(pending.begin(), pending.end(),
                                    [&](const Pending& q) { return q.fixture.country == country; });
      if (seen) {
        throw ParseError(ParseError::Kind::malformed_row, line_no,
                         fmt::format("rows of {} are not contiguous", country));
      }
      Pending next;
      next.fixture.country = country;
      next.fixture.restricted = restricted;
      next.fixture.r_squared = r2;
      next.first_line = line_no;
      pending.push_back(std::move(next));
    }
    auto& current = pending.back();
    if (current.fixture.restricted != restricted || current.fixture.r_squared != r2) {
      throw ParseError(ParseError::Kind::malformed_row, line_no,
                       fmt::format("{}: restricted_flag / r_squared differ between rows", country));
    }
    if (!current.values.emplace(parameter, row.estimate).second) {
      throw ParseError(ParseError::Kind::malformed_row, line_no,
                       fmt::format("{}: duplicate '{}' row", country, parameter));
    }
    current.fixture.rows.push_back(std::move(row));
  }
  if (!header_seen) throw ParseError(ParseError::Kind::header, 0, "fixture table has no header");

  std::vector<CountryFixture> out;
  out.reserve(pending.size());
  for (auto& p : pending) out.push_back(finish(p));
  return out;
}

std::vector<CountryFixture> load_country_fixtures(const std::optional<std::filesystem::path>& path) {
  if (!path) return parse_country_fixtures(fixture_table_text());
  std::ifstream in(*path, std::ios::binary);
  if (!in) throw ParseError(ParseError::Kind::io, 0, fmt::format("cannot open {}", path->string()));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_country_fixtures(buffer.str());
}

const CountryFixture& find_fixture(const std::vector<CountryFixture>& fixtures, std::string_view country) {
  const auto key = lower(country);
  for (const auto& f : fixtures) {
    if (lower(f.country) == key) return f;
  }
  std::vector<std::string> names;
  for (const auto& f : fixtures) names.push_back(f.country);
  throw InvalidArgument(fmt::format("unknown country '{}'; valid names: {}", country, fmt::join(names, ", ")));
}

}  // namespace ucrcd
