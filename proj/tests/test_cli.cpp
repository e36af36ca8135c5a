#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "splitdom/io.hpp"

using namespace splitdom;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    unsetenv("SPLITDOM_OUT");
    dir_ = fs::temp_directory_path() /
           ("splitdom-cli-" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override {
    unsetenv("SPLITDOM_OUT");
    fs::remove_all(dir_);
  }

  cli::RunConfig config(const std::string& system) const {
    cli::RunConfig c;
    c.system = system;
    c.output_dir = dir_ / "out";
    return c;
  }

  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream f(dir_ / name);
    f << text;
    return dir_ / name;
  }

  fs::path dir_;
  std::ostringstream out_, err_;
};

}  // namespace

TEST_F(CliTest, SystemsListShowsCatalogAndFiles) {
  const fs::path file = write("extra.json", R"({"name": "extra", "kind": "suspension",
      "orbits": [{"matrices": [[[2, 0], [0, 0.5]]], "roof": [1]}], "summary": "user system"})");
  EXPECT_EQ(cli::cmd_systems_list({}, out_, err_), 0);
  EXPECT_NE(out_.str().find("mixed-saddles"), std::string::npos);
  EXPECT_EQ(out_.str().find("extra"), std::string::npos);
  EXPECT_EQ(cli::cmd_systems_list({file.string()}, out_, err_), 0);
  EXPECT_NE(out_.str().find("user system"), std::string::npos);
}

TEST_F(CliTest, AnalyzeCatWritesReports) {
  EXPECT_EQ(cli::cmd_analyze(config("cat-suspension"), out_, err_), 0);
  const json j = read_json_file(dir_ / "out" / "cat-suspension" / "equivalence.json");
  EXPECT_TRUE(j.at("agree").get<bool>());
  const DominationReport lpf = domination_report_from_json(read_json_file(dir_ / "out" / "cat-suspension" / "lpf.json"));
  EXPECT_NEAR(lpf.lambda, 1.9248, 0.01 * 1.9248);
}

TEST_F(CliTest, AnalyzeMixedSaddles) {
  EXPECT_EQ(cli::cmd_analyze(config("mixed-saddles"), out_, err_), 0);
  const json j = read_json_file(dir_ / "out" / "mixed-saddles" / "equivalence.json");
  EXPECT_TRUE(j.at("flow_partially_dominated").get<bool>());
  EXPECT_EQ(j.at("reports").at("coarsened_flow_with_lower").at("verdict"), "not_dominated");
  EXPECT_EQ(j.at("reports").at("coarsened_flow_with_upper").at("verdict"), "not_dominated");
}

TEST_F(CliTest, AnalyzeZeroMatrixIsOperationalError) {
  const fs::path file = write("zero.json", R"({"name": "zero", "kind": "suspension",
      "orbits": [{"matrices": [[[0, 0], [0, 0]]], "roof": [1]}]})");
  EXPECT_EQ(cli::cmd_analyze(config(file.string()), out_, err_), 1);
  EXPECT_NE(err_.str().find("InvertibilityError"), std::string::npos);
}

TEST_F(CliTest, AnalyzeDisagreementExitsTwo) {
  cli::RunConfig c = config("cat-suspension");
  c.gap_min = 1e30;
  EXPECT_EQ(cli::cmd_analyze(c, out_, err_), 2);
}

TEST_F(CliTest, InvalidOptionsRejected) {
  cli::RunConfig c = config("cat-suspension");
  c.dt = -1;
  EXPECT_EQ(cli::cmd_analyze(c, out_, err_), 1);
  c = config("cat-suspension");
  c.format = "xml";
  EXPECT_EQ(cli::cmd_analyze(c, out_, err_), 1);
}

TEST_F(CliTest, OutputFormats) {
  cli::RunConfig c = config("ph-suspension");
  c.format = "csv";
  EXPECT_EQ(cli::cmd_analyze(c, out_, err_), 0);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "ph-suspension" / "lpf.csv"));
  c.format = "plotdata";
  EXPECT_EQ(cli::cmd_analyze(c, out_, err_), 0);
  EXPECT_TRUE(fs::exists(dir_ / "out" / "ph-suspension" / "lpf.fit.dat"));
}

TEST_F(CliTest, EnvironmentOverridesOutputDirectory) {
  setenv("SPLITDOM_OUT", (dir_ / "env").c_str(), 1);
  EXPECT_EQ(cli::cmd_analyze(config("cat-suspension"), out_, err_), 0);
  EXPECT_TRUE(fs::exists(dir_ / "env" / "cat-suspension" / "equivalence.json"));
  EXPECT_FALSE(fs::exists(dir_ / "out"));
}

TEST_F(CliTest, AnalyzeIsDeterministic) {
  cli::RunConfig a = config("saddle-cycle");
  cli::RunConfig b = a;
  b.output_dir = dir_ / "again";
  ASSERT_EQ(cli::cmd_analyze(a, out_, err_), 0);
  ASSERT_EQ(cli::cmd_analyze(b, out_, err_), 0);
  for (const auto& e : fs::directory_iterator(dir_ / "out" / "saddle-cycle")) {
    std::ifstream fa(e.path()), fb(dir_ / "again" / "saddle-cycle" / e.path().filename());
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    EXPECT_EQ(sa.str(), sb.str()) << e.path().filename();
  }
}

TEST_F(CliTest, Cones) {
  EXPECT_EQ(cli::cmd_cones(config("cat-suspension"), out_, err_), 0);
  const json cat = read_json_file(dir_ / "out" / "cat-suspension" / "cones.json");
  EXPECT_EQ(cat.at("certificate").at("t0_steps"), 1);
  EXPECT_EQ(cli::cmd_cones(config("rotation-suspension"), out_, err_), 0);
  EXPECT_NE(out_.str().find("certificate: none"), std::string::npos);
}

TEST_F(CliTest, PlotData) {
  ASSERT_EQ(cli::cmd_analyze(config("cat-suspension"), out_, err_), 0);
  const fs::path report = dir_ / "out" / "cat-suspension" / "lpf.json";
  EXPECT_EQ(cli::cmd_plotdata(report, dir_ / "plots", out_, err_), 0);
  EXPECT_TRUE(fs::exists(dir_ / "plots" / "lpf.dat"));

  json empty = read_json_file(report);
  empty["quotients"] = json::array();
  const fs::path bad = write("empty.json", dump(empty));
  EXPECT_EQ(cli::cmd_plotdata(bad, std::nullopt, out_, err_), 1);
  EXPECT_NE(err_.str().find("InvalidSeriesError"), std::string::npos);
}
