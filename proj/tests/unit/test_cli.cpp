#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <fmt/format.h>
#include <gtest/gtest.h>

#include "commands.hpp"
#include "ucrcd/fixtures.hpp"
#include "ucrcd/io.hpp"
#include "ucrcd/report.hpp"

using namespace ucrcd;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           fmt::format("ucrcd_cli_{}", ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(std::vector<std::string> args) {
    args.insert(args.begin(), "ucrcd");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    out_.str("");
    err_.str("");
    return cli::run(static_cast<int>(argv.size()), argv.data(), out_, err_);
  }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  static std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

}  // namespace

TEST_F(CliTest, SynthThenFitRecoversGeneratingValues) {
  ASSERT_EQ(run({"synth", "--country", "Brazil", "--fix", "p2=0", "--out", path("d")}), 0) << err_.str();
  ASSERT_EQ(run({"fit", "--input", path("d/data.csv"), "--model", "ucrcd-restricted", "--fix", "p2=0",
                 "--out", path("f")}),
            0)
      << err_.str();
  for (auto f : {"report.json", "report.txt", "plot.svg"}) EXPECT_TRUE(fs::exists(dir_ / "f" / f)) << f;

  const auto report = parse_report_json(slurp(dir_ / "f/report.json"));
  const auto fixtures = load_country_fixtures();
  const auto truth = find_fixture(fixtures, "Brazil").params.with(UcrcdParam::p2, 0.0);
  for (const auto& row : report.fit_table) {
    const double want = truth.get(*ucrcd_param_from_string(row.name));
    if (want == 0.0) {
      EXPECT_TRUE(row.fixed);
      continue;
    }
    EXPECT_LT(std::abs(row.estimate / want - 1), 1e-3) << row.name;
  }
  EXPECT_EQ(slurp(dir_ / "f/report.txt"), render_report_txt(report));
  EXPECT_EQ(out_.str(), slurp(dir_ / "f/report.txt"));
}

TEST_F(CliTest, BassOnSingleSeries) {
  std::ofstream(path("s.csv")) << "year,solar\n2000,0.5\n2001,0.9\n2002,1.5\n2003,2.2\n2004,2.9\n"
                                  "2005,3.3\n2006,3.4\n2007,3.1\n2008,2.6\n2009,2.0\n";
  ASSERT_EQ(run({"fit", "--model", "bass", "--input", path("s.csv"), "--out", path("b")}), 0) << err_.str();
  const auto report = parse_report_json(slurp(dir_ / "b/report.json"));
  EXPECT_EQ(report.fit_table.size(), 3u);
  EXPECT_EQ(report.model, ModelKind::bass);
  EXPECT_FALSE(report.verdict);
}

TEST_F(CliTest, MalformedCsvLeavesNothingBehind) {
  std::ofstream(path("bad.csv")) << "year,incumbent,entrant\n1965,1,0\n1966,oops,0\n";
  EXPECT_EQ(run({"fit", "--input", path("bad.csv"), "--out", path("o")}), 1);
  EXPECT_FALSE(fs::exists(dir_ / "o"));
  EXPECT_NE(err_.str().find("line 3"), std::string::npos);
}

TEST_F(CliTest, NonConvergenceStillWritesReport) {
  ASSERT_EQ(run({"synth", "--country", "Brazil", "--fix", "p2=0", "--noise", "0.005", "--out", path("d")}), 0);
  EXPECT_EQ(run({"fit", "--input", path("d/data.csv"), "--fix", "p2=0", "--max-iterations", "1", "--out",
                 path("f")}),
            2);
  EXPECT_TRUE(fs::exists(dir_ / "f/report.json"));
  EXPECT_NE(err_.str().find("no convergence"), std::string::npos);
}

TEST_F(CliTest, SimulateDenmark) {
  ASSERT_EQ(run({"simulate", "--country", "Denmark", "--horizon", "55", "--out", path("s")}), 0) << err_.str();
  std::ifstream in(dir_ / "s/trajectory.csv");
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "time,z1_inst,z2_inst,z1_cum,z2_cum");
  std::vector<std::array<double, 5>> rows;
  while (std::getline(in, line)) {
    std::array<double, 5> r{};
    std::sscanf(line.c_str(), "%lf,%lf,%lf,%lf,%lf", &r[0], &r[1], &r[2], &r[3], &r[4]);
    rows.push_back(r);
  }
  ASSERT_EQ(rows.size(), 55u);
  double s1 = 0, s2 = 0;
  for (const auto& r : rows) {
    s1 += r[1];
    s2 += r[2];
  }
  EXPECT_NEAR(s1, rows.back()[3], 1e-9);
  EXPECT_NEAR(s2, rows.back()[4], 1e-9);
  // entrant overtakes a declining incumbent late in the horizon
  EXPECT_GT(rows.back()[2], rows.back()[1]);
  EXPECT_LT(rows.back()[1], rows[44][1]);
  const auto svg = slurp(dir_ / "s/plot.svg");
  EXPECT_EQ(std::count(svg.begin(), svg.end(), '<') - std::count(svg.begin(), svg.end(), '>'), 0);
}

TEST_F(CliTest, SimulateRejectsBadInput) {
  EXPECT_EQ(run({"simulate", "--country", "Atlantis", "--out", path("x")}), 1);
  EXPECT_NE(err_.str().find("Turkey"), std::string::npos);
  EXPECT_EQ(run({"simulate", "--country", "Denmark", "--horizon", "0", "--out", path("x")}), 1);
  EXPECT_EQ(run({"simulate", "--out", path("x")}), 1);
  EXPECT_EQ(run({"simulate", "--country", "USA", "--out", path("x")}), 1);
  EXPECT_FALSE(fs::exists(dir_ / "x"));
}

TEST_F(CliTest, SimulateFromParameterFile) {
  std::ofstream(path("p.json")) << R"({"model": "ucrcd-unrestricted", "c2": 20, "params": {
      "ma": 30, "p1a": 0.005, "q1a": 0.2, "mc": 60, "p1c": 0.003, "q1c": -0.29,
      "delta": 0.41, "p2": 0, "q2": 0.41, "gamma": 0.40}})";
  ASSERT_EQ(run({"simulate", "--params", path("p.json"), "--horizon", "40", "--out", path("s")}), 0)
      << err_.str();
  std::ofstream(path("bad.json")) << R"({"params": {"ma": 30}})";
  EXPECT_EQ(run({"simulate", "--params", path("bad.json"), "--c2", "5", "--out", path("t")}), 1);
  std::ofstream(path("junk.json")) << "{";
  EXPECT_EQ(run({"simulate", "--params", path("junk.json"), "--out", path("t")}), 1);
}

TEST_F(CliTest, ClassifyReportsAndCountries) {
  EXPECT_EQ(run({"classify", "--country", "USA"}), 0);
  EXPECT_EQ(out_.str(),
            "entrant -> incumbent: collaboration (q1c = 1.3458, not tested)\n"
            "incumbent -> entrant: no effect (q2 - gamma = 0, not tested)\n");
  EXPECT_EQ(run({"classify", "--country", "Japan"}), 0);
  EXPECT_NE(out_.str().find("entrant -> incumbent: competition"), std::string::npos);
  EXPECT_NE(out_.str().find("incumbent -> entrant: competition"), std::string::npos);

  ASSERT_EQ(run({"synth", "--country", "Brazil", "--fix", "p2=0", "--noise", "0.005", "--out", path("d")}), 0);
  ASSERT_EQ(run({"fit", "--input", path("d/data.csv"), "--fix", "p2=0", "--mode", "instantaneous", "--out",
                 path("f")}),
            0)
      << err_.str();
  EXPECT_EQ(run({"classify", "--input", path("f/report.json")}), 0);
  EXPECT_NE(out_.str().find("entrant -> incumbent: competition"), std::string::npos);
  EXPECT_NE(out_.str().find("incumbent -> entrant: collaboration"), std::string::npos);

  std::ofstream(path("s.csv")) << "year,x\n2000,1\n2001,2\n2002,4\n2003,5\n2004,5\n2005,4\n";
  ASSERT_EQ(run({"fit", "--model", "bass", "--input", path("s.csv"), "--out", path("b")}), 0) << err_.str();
  EXPECT_EQ(run({"classify", "--input", path("b/report.json")}), 1);
}

TEST_F(CliTest, CompareWritesBothFits) {
  ASSERT_EQ(run({"synth", "--country", "Brazil", "--fix", "p2=0", "--noise", "0.005", "--seed", "3", "--out",
                 path("d")}),
            0);
  ASSERT_EQ(run({"compare", "--input", path("d/data.csv"), "--fix", "p2=0", "--mode", "instantaneous",
                 "--out", path("c")}),
            0)
      << err_.str();
  const auto text = slurp(dir_ / "c/comparison.txt");
  EXPECT_NE(text.find("== restricted =="), std::string::npos);
  EXPECT_NE(text.find("== unrestricted =="), std::string::npos);
  EXPECT_NE(text.find("preferred"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir_ / "c/comparison.json"));
}

TEST_F(CliTest, DeterministicOutputs) {
  ASSERT_EQ(run({"synth", "--country", "Spain", "--fix", "p2=0", "--noise", "0.01", "--seed", "1", "--out", path("a")}), 0);
  ASSERT_EQ(run({"synth", "--country", "Spain", "--fix", "p2=0", "--noise", "0.01", "--seed", "1", "--out", path("b")}), 0);
  EXPECT_EQ(slurp(dir_ / "a/data.csv"), slurp(dir_ / "b/data.csv"));
  // noise clips the first entrant years to zero, so the launch is given explicitly
  ASSERT_EQ(run({"fit", "--input", path("a/data.csv"), "--c2", "25", "--fix", "p2=0", "--out", path("fa")}), 0)
      << err_.str();
  ASSERT_EQ(run({"fit", "--input", path("a/data.csv"), "--c2", "25", "--fix", "p2=0", "--out", path("fb")}), 0);
  EXPECT_EQ(slurp(dir_ / "fa/plot.svg"), slurp(dir_ / "fb/plot.svg"));
  EXPECT_EQ(slurp(dir_ / "fa/report.txt"), slurp(dir_ / "fb/report.txt"));
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(run({}), 1);
  EXPECT_EQ(run({"fit"}), 1);
  EXPECT_EQ(run({"fit", "--input", "x.csv", "--model", "logistic"}), 1);
  EXPECT_EQ(run({"fit", "--input", "x.csv", "--fix", "p2"}), 1);
  EXPECT_EQ(run({"--help"}), 0);
}
