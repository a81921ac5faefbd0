#include <gtest/gtest.h>

#include "ucrcd/error.hpp"
#include "ucrcd/fixtures.hpp"

using namespace ucrcd;

TEST(Fixtures, TwelveCountries) {
  const auto f = load_country_fixtures();
  ASSERT_EQ(f.size(), 12u);
  const char* names[] = {"Brazil", "China", "Denmark", "France", "Germany", "India",
                         "Italy",  "Japan", "Spain",   "Turkey", "UK",      "USA"};
  for (std::size_t i = 0; i < 12; ++i) EXPECT_EQ(f[i].country, names[i]);
}

TEST(Fixtures, UsaIsUnrestricted) {
  const auto fixtures = load_country_fixtures();
  const auto& usa = find_fixture(fixtures, "usa");
  EXPECT_FALSE(usa.restricted);
  EXPECT_EQ(usa.params.delta(), -1.3107);
  EXPECT_EQ(usa.params.gamma(), 0.3987);
  EXPECT_EQ(usa.params.q1c(), 1.3458);
  EXPECT_EQ(usa.row("p2")->p_value, 0.995);
}

TEST(Fixtures, RestrictedCountriesHaveNoGammaRow) {
  for (const auto& f : load_country_fixtures()) {
    EXPECT_EQ(f.restricted, f.params.restricted()) << f.country;
    EXPECT_NO_THROW(UcrcdParams(f.params.values(), f.restricted));
    if (f.restricted) {
      EXPECT_EQ(f.row("gamma"), nullptr) << f.country;
      EXPECT_EQ(f.params.gamma(), f.params.delta()) << f.country;
    } else {
      EXPECT_NE(f.row("gamma"), nullptr) << f.country;
    }
    EXPECT_GT(f.c2, 0);
    EXPECT_GT(f.r_squared, 0.99);
  }
}

TEST(Fixtures, PrintedValuesKept) {
  const auto fixtures = load_country_fixtures();
  const auto& brazil = find_fixture(fixtures, "Brazil");
  const auto* q1c = brazil.row("q1c");
  ASSERT_NE(q1c, nullptr);
  EXPECT_EQ(q1c->estimate, -0.291);
  EXPECT_EQ(q1c->std_error, 0.0376);
  EXPECT_EQ(q1c->p_value_text, "<0.0001");
  EXPECT_EQ(q1c->p_value, 0.0001);
  EXPECT_EQ(brazil.reported_cross, 0.002);
  EXPECT_EQ(brazil.params.p2(), -0.0008);
  EXPECT_EQ(brazil.params.mc(), 60.9);
}

TEST(Fixtures, UnknownCountryListsValidNames) {
  const auto fixtures = load_country_fixtures();
  try {
    (void)find_fixture(fixtures, "Atlantis");
    FAIL();
  } catch (const InvalidArgument& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("Brazil"), std::string::npos);
    EXPECT_NE(what.find("USA"), std::string::npos);
  }
}

TEST(Fixtures, MalformedTablesAreRejected) {
  const std::string header = "country,parameter,estimate,se,ci_lo,ci_hi,p_value,restricted_flag,r_squared\n";
  EXPECT_THROW(parse_country_fixtures("country,parameter\n"), ParseError);
  EXPECT_THROW(parse_country_fixtures(header + "X,mc,1,1,1,1,0.1,1\n"), ParseError);
  EXPECT_THROW(parse_country_fixtures(header + "X,zeta,1,1,1,1,0.1,1,0.9\n"), ParseError);
  EXPECT_THROW(parse_country_fixtures(header + "X,mc,1,1,1,1,0.1,1,0.9\nX,mc,1,1,1,1,0.1,1,0.9\n"), ParseError);
  EXPECT_THROW(parse_country_fixtures(header + "X,mc,abc,1,1,1,0.1,1,0.9\n"), ParseError);

  // the shipped text parses to the embedded fixtures
  EXPECT_EQ(parse_country_fixtures(fixture_table_text()).size(), 12u);
}
