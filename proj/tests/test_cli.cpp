#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "support.hpp"
#include "zl/cli.hpp"

using namespace zl;
namespace fs = std::filesystem;

namespace {

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "zl");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli::run(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Json report(const fs::path& dir) { return Json::parse(slurp(dir / "report.json")); }

bool has_tmp_files(const fs::path& dir) {
  for (const auto& entry : fs::recursive_directory_iterator(dir))
    if (entry.path().extension() == ".tmp") return true;
  return false;
}

}  // namespace

TEST(Cli, VerifyCatalogMatches) {
  const auto dir = test::scratch_dir("verify");
  EXPECT_EQ(run_cli({"verify-catalog", "--out", dir.string()}), cli::kOk);
  const auto r = report(dir);
  EXPECT_EQ(r["schema"], "zl-1");
  EXPECT_TRUE(r["result"]["all_match"].get<bool>());
  EXPECT_GE(r["result"]["entries"].size(), 8u);
}

TEST(Cli, MuScanProductFamily) {
  const auto dir = test::scratch_dir("scan");
  ASSERT_EQ(run_cli({"mu-scan", "--family", "n*z1*z2", "--dim", "2", "--domain", "polydisc", "--out", dir.string()}),
            cli::kOk);
  const auto r = report(dir);
  EXPECT_EQ(r["command"], "mu-scan");
  EXPECT_EQ(r["result"]["verdict"]["verdict"], "NotNormal_QuasiNormal");
  EXPECT_EQ(r["result"]["classification"]["kind"], "AnalyticThin");
  EXPECT_TRUE(fs::exists(dir / "grid.csv"));
}

TEST(Cli, RescaleExponentialProduct) {
  const auto dir = test::scratch_dir("rescale");
  ASSERT_EQ(run_cli({"rescale", "--catalog", "exp_n_z1z2", "--out", dir.string(), "--svg"}), cli::kOk);
  const auto r = report(dir)["result"];
  EXPECT_EQ(r["convergence"]["outcome"], "ConvergesUniformly");
  EXPECT_LT(r["deviation"].get<double>(), 1e-12);
  EXPECT_LT(r["max_deviation_over_indices"].get<double>(), 1e-12);
  EXPECT_TRUE(fs::exists(dir / "rescaled.csv"));
  const auto svg = slurp(dir / "heatmap.svg");
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
}

TEST(Cli, ReportsAreReproducible) {
  const auto a = test::scratch_dir("repro_a");
  const auto b = test::scratch_dir("repro_b");
  for (const auto& dir : {a, b})
    ASSERT_EQ(run_cli({"mu-scan", "--catalog", "exp_n_z", "--no-timestamp", "--seed", "7", "--out", dir.string()}), cli::kOk);
  EXPECT_EQ(slurp(a / "report.json"), slurp(b / "report.json"));
  EXPECT_EQ(slurp(a / "grid.csv"), slurp(b / "grid.csv"));
  EXPECT_EQ(report(a)["timestamp"], "");
}

TEST(Cli, TimestampIsTheOnlyDifference) {
  const auto a = test::scratch_dir("stamp_a");
  const auto b = test::scratch_dir("stamp_b");
  ASSERT_EQ(run_cli({"marty-sweep", "--catalog", "z_over_n", "--schedule", "1,2,4", "--out", a.string()}), cli::kOk);
  ASSERT_EQ(run_cli({"marty-sweep", "--catalog", "z_over_n", "--schedule", "1,2,4", "--out", b.string()}), cli::kOk);
  auto ra = report(a), rb = report(b);
  EXPECT_FALSE(ra["timestamp"].get<std::string>().empty());
  ra.erase("timestamp");
  rb.erase("timestamp");
  EXPECT_EQ(ra, rb);
}

TEST(Cli, MartySweepOutputs) {
  const auto dir = test::scratch_dir("sweep");
  ASSERT_EQ(run_cli({"marty-sweep", "--family", "n*z", "--schedule", "1,10,100", "--resolution", "5", "--metric",
                     "euclidean:1", "--mode", "marty_quotient", "--svg", "--out", dir.string()}),
            cli::kOk);
  const auto r = report(dir)["result"];
  EXPECT_EQ(r["mode"], "marty_quotient");
  EXPECT_EQ(r["grid"].size(), r["values"].size());
  EXPECT_EQ(r["sups"].size(), 3u);
  EXPECT_TRUE(fs::exists(dir / "heatmap.svg"));
  const auto csv = slurp(dir / "grid.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "re_z1,im_z1,j=1,j=10,j=100");
  EXPECT_FALSE(has_tmp_files(dir));
}

TEST(Cli, ClassifyAddsARescaling) {
  const auto dir = test::scratch_dir("classify");
  ASSERT_EQ(run_cli({"classify", "--catalog", "exp_n_z", "--out", dir.string()}), cli::kOk);
  const auto r = report(dir)["result"];
  EXPECT_EQ(r["verdict"]["verdict"], "NotQuasiNormal");
  EXPECT_TRUE(r.contains("rescale"));
}

TEST(Cli, ClassifyLocusFromCsv) {
  const auto dir = test::scratch_dir("locus");
  {
    std::ofstream out(dir / "points.csv");
    out << "re_z1,im_z1,re_z2,im_z2\n";
    for (int k = 0; k < 20; ++k) {
      const double t = 0.04 * (k + 1);
      out << (k % 2 ? 0.0 : t) << ",0," << (k % 2 ? t : 0.0) << "," << -t << '\n';
    }
  }
  ASSERT_EQ(run_cli({"classify-locus", "--points", (dir / "points.csv").string(), "--out", dir.string()}), cli::kOk);
  EXPECT_EQ(report(dir)["result"]["classification"]["kind"], "AnalyticThin");
}

TEST(Cli, ConfigFileWithFlagOverride) {
  const auto dir = test::scratch_dir("config");
  {
    std::ofstream ini(dir / "run.ini");
    ini << "[marty-sweep]\ncatalog = z_over_n\nschedule = 1,2,4,8\nresolution = 5\n";
  }
  ASSERT_EQ(run_cli({"--config", (dir / "run.ini").string(), "marty-sweep", "--schedule", "1,3", "--out", dir.string()}),
            cli::kOk);
  const auto r = report(dir);
  EXPECT_EQ(r["config"]["schedule"], "1,3");
  EXPECT_EQ(r["config"]["resolution"], 5);
  EXPECT_EQ(r["config"]["family_source"], "catalog:z_over_n");
}

TEST(Cli, UsageErrors) {
  const auto dir = test::scratch_dir("usage");
  EXPECT_EQ(run_cli({}), cli::kUsage);
  EXPECT_EQ(run_cli({"no-such-command"}), cli::kUsage);
  EXPECT_EQ(run_cli({"mu-scan", "--out", dir.string()}), cli::kUsage);
  EXPECT_EQ(run_cli({"mu-scan", "--family", "z +* 2", "--out", dir.string()}), cli::kUsage);
  EXPECT_EQ(run_cli({"mu-scan", "--catalog", "nope", "--out", dir.string()}), cli::kUsage);
  EXPECT_EQ(run_cli({"mu-scan", "--catalog", "exp_n_z", "--schedule", "4,2", "--out", dir.string()}), cli::kUsage);
  EXPECT_EQ(run_cli({"mu-scan", "--catalog", "exp_n_z", "--tol", "-1", "--out", dir.string()}), cli::kUsage);
  EXPECT_EQ(run_cli({"rescale", "--family", "z/n", "--point", "0", "--out", dir.string()}), cli::kUsage);
  EXPECT_EQ(run_cli({"marty-sweep", "--family", "z", "--domain", "full", "--mode", "marty_quotient", "--out", dir.string()}),
            cli::kUsage);
  EXPECT_EQ(run_cli({"--help"}), cli::kOk);
}

TEST(Cli, NumericalFailure) {
  const auto dir = test::scratch_dir("numeric");
  // the pole at 0 sits on the default grid
  EXPECT_EQ(run_cli({"mu-scan", "--family", "1/z", "--out", dir.string()}), cli::kNumeric);
  // too few index pairs for the convergence test
  EXPECT_EQ(run_cli({"rescale", "--catalog", "exp_n_z1z2", "--schedule", "1,2,4", "--out", dir.string()}), cli::kNumeric);
}

TEST(Cli, ExportCatalog) {
  const auto dir = test::scratch_dir("export");
  ASSERT_EQ(run_cli({"export-catalog", "--dir", dir.string()}), cli::kOk);
  for (const auto& e : catalog_entries()) {
    ASSERT_TRUE(fs::exists(dir / (e.name + ".txt")));
    EXPECT_EQ(load_definition(dir / (e.name + ".txt")), e.family);
  }
  EXPECT_FALSE(has_tmp_files(dir));
}
