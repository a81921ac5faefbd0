#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "ucrcd/error.hpp"
#include "ucrcd/fixtures.hpp"
#include "ucrcd/io.hpp"
#include "ucrcd/selection.hpp"

using namespace ucrcd;

// F(1, 76) and F(2, 50) 0.95 quantiles and an F(1, 76) tail, pinned from scipy.stats.f
constexpr double kF95_1_76 = 3.966759784008781;
constexpr double kF95_2_50 = 3.1826098520427744;
constexpr double kFsf_4_1_76 = 0.04907346798199476;

TEST(Selection, PartialCorrelationArithmetic) {
  EXPECT_EQ(r2_tilde(0.99, 0.98), 0.5);
  EXPECT_DOUBLE_EQ(r2_tilde(0.9, 0.8), 0.5);
  EXPECT_EQ(r2_tilde(0.7, 0.7), 0.0);
  EXPECT_THROW(r2_tilde(1.0, 1.0), InvalidArgument);
  EXPECT_THROW(r2_tilde(0.8, 0.9), InvalidArgument);
  EXPECT_THROW(r2_tilde(NAN, 0.9), InvalidArgument);
}

TEST(Selection, FRatioArithmetic) {
  EXPECT_DOUBLE_EQ(f_ratio(0.5, 85, 9, 1), 76.0);
  EXPECT_DOUBLE_EQ(f_ratio(0.2, 60, 10, 2), 0.25 * 50 / 2);
  EXPECT_EQ(f_ratio(0.0, 60, 10, 2), 0.0);
  EXPECT_THROW(f_ratio(1.0, 85, 9, 1), InvalidArgument);
  EXPECT_THROW(f_ratio(0.5, 9, 9, 1), InvalidArgument);
  EXPECT_THROW(f_ratio(0.5, 85, 9, 0), InvalidArgument);
}

// F grows with R~2 at fixed (n, v, u), and with R2e at fixed R2n.
TEST(Selection, FRatioMonotoneProperty) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_int_distribution<int> nn(5, 400);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t v = 2 + static_cast<std::size_t>(nn(rng) % 12);
    const std::size_t n = v + 1 + static_cast<std::size_t>(nn(rng));
    const std::size_t u = 1 + static_cast<std::size_t>(nn(rng)) % (v - 1);
    const double r2n = 0.999 * u01(rng);
    double a = r2n + (1 - r2n) * 0.999 * u01(rng);
    double b = r2n + (1 - r2n) * 0.999 * u01(rng);
    if (a > b) std::swap(a, b);
    if (a == b) continue;
    const double ta = r2_tilde(a, r2n), tb = r2_tilde(b, r2n);
    ASSERT_LT(ta, tb);
    ASSERT_LT(f_ratio(ta, n, v, u), f_ratio(tb, n, v, u)) << n << " " << v << " " << u;
  }
}

TEST(Selection, CompareNestedUsesFisherQuantile) {
  // R~2 such that F = 4 with n = 85, v = 9, u = 1
  const double rt = 4.0 / (4.0 + 76.0);
  const double r2n = 0.9;
  const double r2e = r2n + rt * (1 - r2n);
  const auto c = compare_nested(r2n, r2e, 85, 9, 1);
  EXPECT_NEAR(c.f_ratio, 4.0, 1e-9);
  EXPECT_NEAR(c.f_critical, kF95_1_76, 1e-9);
  EXPECT_NEAR(c.p_value, kFsf_4_1_76, 1e-9);
  EXPECT_EQ(c.preferred, Preferred::extended);
  EXPECT_EQ(c.u, 1u);

  const auto weak = compare_nested(0.9, 0.901, 60, 10, 2);
  EXPECT_NEAR(weak.f_critical, kF95_2_50, 1e-9);
  EXPECT_EQ(weak.preferred, Preferred::nested);
  EXPECT_EQ(to_string(Preferred::extended), "extended");
}

TEST(Selection, ClassifyCoefficientsSignTable) {
  using enum Interplay;
  auto check = [](double q1c, double cross, Interplay a, Interplay b) {
    const auto v = classify_coefficients(q1c, cross, std::nullopt, std::nullopt);
    EXPECT_EQ(v.rets_vs_incumbent, a) << q1c;
    EXPECT_EQ(v.incumbent_vs_rets, b) << cross;
  };
  check(-0.2, 0.01, competition, collaboration);
  check(0.2, -0.01, collaboration, competition);
  check(-0.2, -0.01, competition, competition);
  check(0.2, 0.01, collaboration, collaboration);
  check(0.0, 0.0, no_effect, no_effect);

  const auto sig = classify_coefficients(-0.2, 0.01, 0.3, 0.01);
  EXPECT_EQ(sig.rets_vs_incumbent, no_effect);
  EXPECT_EQ(sig.incumbent_vs_rets, collaboration);
  EXPECT_TRUE(sig.significance_used);
}

TEST(Selection, ReportedVerdictsReproduceTheCountryTable) {
  using enum Interplay;
  const std::map<std::string, std::pair<Interplay, Interplay>> table = {
      {"Brazil", {competition, collaboration}}, {"China", {competition, collaboration}},
      {"Denmark", {competition, competition}}, {"France", {competition, collaboration}},
      {"Germany", {competition, collaboration}}, {"India", {competition, competition}},
      {"Italy", {competition, collaboration}},  {"Japan", {competition, competition}},
      {"Spain", {competition, collaboration}},  {"Turkey", {competition, competition}},
      {"UK", {competition, collaboration}},     {"USA", {collaboration, no_effect}}};
  for (const auto& f : load_country_fixtures()) {
    const auto v = classify_reported(f);
    const auto& want = table.at(f.country);
    EXPECT_EQ(v.rets_vs_incumbent, want.first) << f.country;
    EXPECT_EQ(v.incumbent_vs_rets, want.second) << f.country;
  }
}

TEST(Selection, FittedVerdictUsesDeltaMethod) {
  const auto fixtures = load_country_fixtures();
  const auto& f = find_fixture(fixtures, "Brazil");
  const auto d = synth_dataset(f.params.with(UcrcdParam::p2, 0.0), f.c2, 55, 0.005, 4);
  const auto r = fit(FitProblem::ucrcd(d, true, {{"p2", 0.0}}, ObservationMode::instantaneous));
  const auto v = classify_interplay(r);
  EXPECT_EQ(v.rets_vs_incumbent, Interplay::competition);
  ASSERT_TRUE(v.q1c_p_value && v.entrant_cross_p_value);
  EXPECT_NEAR(v.entrant_cross_value, r.parameter("q2").estimate - r.parameter("delta").estimate, 1e-15);

  const auto i = [&](const char* n) {
    const auto& names = r.covariance_names;
    return static_cast<Eigen::Index>(std::find(names.begin(), names.end(), n) - names.begin());
  };
  const double var = r.covariance(i("q2"), i("q2")) + r.covariance(i("delta"), i("delta")) -
                     2 * r.covariance(i("q2"), i("delta"));
  const double t = std::abs(v.entrant_cross_value) / std::sqrt(var);
  EXPECT_EQ(*v.entrant_cross_p_value < 0.05, t > 1.99);

  FitResult bass;
  EXPECT_THROW(classify_interplay(bass), InvalidArgument);
}

TEST(Selection, CompareUcrcdOnNoisyData) {
  const auto fixtures = load_country_fixtures();
  const auto& f = find_fixture(fixtures, "Brazil");
  const auto d = synth_dataset(f.params.with(UcrcdParam::p2, 0.0), f.c2, 55, 0.005, 8);
  const auto c = compare_ucrcd(d, {{"p2", 0.0}}, ObservationMode::instantaneous);
  ASSERT_TRUE(c.restricted && c.unrestricted && c.comparison);
  EXPECT_GE(c.unrestricted->r_squared, c.restricted->r_squared);
  EXPECT_EQ(c.comparison->u, 1u);
  EXPECT_EQ(c.comparison->v, 9u);
  EXPECT_EQ(c.comparison->n, 85u);
  EXPECT_EQ(c.comparison->r2_tilde, r2_tilde(c.unrestricted->r_squared, c.restricted->r_squared));
}
