#include <gtest/gtest.h>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "pairfit/predict.hpp"
#include "pairfit/serialize.hpp"

using namespace pairfit;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int count(const std::string& text, const std::string& needle) {
  int n = 0;
  for (auto at = text.find(needle); at != std::string::npos; at = text.find(needle, at + 1)) ++n;
  return n;
}

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / ("pairfit-cli-" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    for (const char* c : {
             "simulate --players 20 --maps 3 --games 1200 --seed 5 --out sim.csv",
             "fit --input sim.csv --out fit.json",
             "diagnose lrt --input sim.csv --fit fit.json --out lrt.json",
             "diagnose hl --input sim.csv --fit fit.json --out hl.json",
             "diagnose dispersion --input sim.csv --fit fit.json --out dispersion.json",
             "diagnose residuals --input sim.csv --fit fit.json --out residuals.csv",
             "cv --input sim.csv --folds 5 --out cv.json",
             "lasso --input sim.csv --lambda 2 --out lasso.json",
             "bootstrap balance --input sim.csv -B 30 --out balance.json",
             "bootstrap dispersion --input sim.csv -B 30 --out phi.json",
         })
      ASSERT_EQ(run(c), 0) << c;
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }

  static int run(const std::string& args) {
    std::string line = "cd '" + dir_.string() + "' && '" PAIRFIT_CLI "' " + args + " > last.out 2> last.err";
    int status = std::system(line.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  static std::string file(const std::string& name) { return slurp(dir_ / name); }
  static Json json(const std::string& name) { return Json::parse(file(name)); }

  static inline fs::path dir_;
};

const char* kFullReport =
    "report --fit fit.json --lrt lrt.json --hl hl.json --dispersion dispersion.json --cv cv.json "
    "--lasso lasso.json --balance-bootstrap balance.json --dispersion-bootstrap phi.json "
    "--residuals residuals.csv --out report.txt";

}  // namespace

TEST_F(Cli, SideFilesAreNamedAfterOut) {
  EXPECT_TRUE(fs::exists(dir_ / "sim.truth.json"));
  EXPECT_TRUE(fs::exists(dir_ / "hl.groups.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "balance.draws.csv"));
  EXPECT_EQ(file("balance.draws.csv").rfind("draw,status,Terran-Protoss,Terran-Zerg,Protoss-Zerg\n", 0), 0u);
}

TEST_F(Cli, ReportNumbersMatchArtifacts) {
  ASSERT_EQ(run(kFullReport), 0);
  auto report = file("report.txt");
  EXPECT_EQ(count(report, "not run"), 0);

  auto fit = json("fit.json");
  for (const auto& row : fit["ranking"]["ranked"])
    EXPECT_EQ(count(report, std::to_string(row["rank"].get<int>()) + "\t" + row["player"].get<std::string>() + "\t" +
                                format_double(row["estimate"].get<double>()) + "\n"),
              1);
  for (const auto& b : fit["balance"])
    EXPECT_NE(report.find(b["pair"].get<std::string>() + "\t" + format_double(b["mean_across_maps"].get<double>())),
              std::string::npos);
  EXPECT_NE(report.find("log_likelihood: " + format_double(fit["fit"]["log_likelihood"].get<double>())),
            std::string::npos);

  auto lrt = json("lrt.json");
  EXPECT_NE(report.find("statistic: " + format_double(lrt["statistic"].get<double>())), std::string::npos);
  EXPECT_NE(report.find("p_value: " + format_double(json("hl.json")["p_value"].get<double>())), std::string::npos);
  EXPECT_NE(report.find("phi: " + format_double(json("dispersion.json")["phi"].get<double>())), std::string::npos);
  EXPECT_NE(report.find("test: " + format_double(json("cv.json")["test_mean"].get<double>())), std::string::npos);
  for (const auto& c : json("balance.json")["components"])
    EXPECT_NE(report.find(format_double(c["tail_prob_positive"].get<double>())), std::string::npos);
}

TEST_F(Cli, ReportIsPure) {
  ASSERT_EQ(run(kFullReport), 0);
  auto first = file("report.txt");
  ASSERT_EQ(run(kFullReport), 0);
  EXPECT_EQ(file("report.txt"), first);
}

TEST_F(Cli, FitOnlyReportMarksSectionsNotRun) {
  ASSERT_EQ(run("report --fit fit.json --out bare.txt"), 0);
  auto report = file("bare.txt");
  EXPECT_EQ(count(report, "not run ("), 8);
  EXPECT_NE(report.find("Player ranking"), std::string::npos);
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run("report"), 1);
  EXPECT_NE(file("last.err").find("run `pairfit fit` first"), std::string::npos);
  EXPECT_EQ(run("fit --no-such-flag"), 1);
  EXPECT_EQ(run("diagnose nonsense --input sim.csv"), 1);
  EXPECT_EQ(run("fit --input missing.csv"), 2);
  EXPECT_EQ(run("--help"), 0);
}

TEST_F(Cli, PredictAgreesWithLibrary) {
  ASSERT_EQ(run("predict --fit fit.json --player1 P001 --player2 P007 --race1 Protoss --race2 Zerg --map M02"), 0);
  auto out = Json::parse(file("last.out"));
  auto fit = fit_from_json(json("fit.json"));
  auto p = win_probability(fit, "P001", "P007", Race::Protoss, Race::Zerg, "M02");
  EXPECT_EQ(out["probability"].get<double>(), p.probability);
  EXPECT_EQ(run("predict --fit fit.json --player1 P001 --player2 P007 --race1 Random --race2 Zerg --map M02"), 1);
}

TEST_F(Cli, WorkerCountDoesNotChangeOutput) {
  ASSERT_EQ(run("bootstrap balance --input sim.csv -B 30 --jobs 3 --out balance3.json"), 0);
  EXPECT_EQ(file("balance3.json"), file("balance.json"));
  EXPECT_EQ(file("balance3.draws.csv"), file("balance.draws.csv"));
}
