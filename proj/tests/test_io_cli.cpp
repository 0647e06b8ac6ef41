#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "oracles.hpp"

using namespace face;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("face_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(FACE_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int rc = std::system(cmd.c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

json load_json(const fs::path& p) {
  std::ifstream in(p);
  return json::parse(in);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(MatrixIo, CsvRoundTrip) {
  Matrix m = oracle::random_matrix(7, 4, 1);
  m(2, 1) = std::numeric_limits<double>::quiet_NaN();
  std::stringstream ss;
  write_csv_matrix(ss, m, {"a", "b", "c", "d"});
  const Matrix back = read_csv_matrix(ss, true);
  ASSERT_EQ(back.rows(), 7);
  ASSERT_EQ(back.cols(), 4);
  EXPECT_TRUE(std::isnan(back(2, 1)));
  for (Index i = 0; i < 7; ++i)
    for (Index j = 0; j < 4; ++j)
      if (!(i == 2 && j == 1)) EXPECT_EQ(back(i, j), m(i, j));
}

TEST(MatrixIo, CsvMissingTokensAndErrors) {
  std::stringstream ok("1,NA,3\n4,,NaN\n");
  const Matrix m = read_csv_matrix(ok, false);
  EXPECT_EQ(m(0, 0), 1.0);
  EXPECT_TRUE(std::isnan(m(0, 1)) && std::isnan(m(1, 1)) && std::isnan(m(1, 2)));
  std::stringstream ragged("1,2\n3\n");
  EXPECT_THROW(read_csv_matrix(ragged, false), InputError);
  std::stringstream junk("1,2\n3,x\n");
  EXPECT_THROW(read_csv_matrix(junk, false), InputError);
  std::stringstream empty("a,b\n");
  EXPECT_THROW(read_csv_matrix(empty, true), InputError);
}

TEST(MatrixIo, BinaryRoundTrip) {
  const Matrix m = oracle::random_matrix(13, 5, 2);
  std::stringstream ss;
  write_binary_matrix(ss, m);
  EXPECT_EQ(read_binary_matrix(ss), m);
  std::stringstream bad("NOTFACE0........");
  EXPECT_THROW(read_binary_matrix(bad), InputError);
  std::stringstream trunc;
  write_binary_matrix(trunc, m);
  std::string s = trunc.str();
  s.resize(s.size() - 8);
  std::stringstream cut(s);
  EXPECT_THROW(read_binary_matrix(cut), InputError);
}

TEST(MatrixIo, FormatSelection) {
  EXPECT_EQ(format_from_path("x.bin"), MatrixFormat::packed_binary);
  EXPECT_EQ(format_from_path("x.face"), MatrixFormat::packed_binary);
  EXPECT_EQ(format_from_path("x.csv"), MatrixFormat::csv);
  EXPECT_THROW(format_from_string("xml"), ConfigError);
}

TEST(Campaign, ConfigParsing) {
  const CampaignConfig c = CampaignConfig::from_json(
      json::parse(R"({"case": 3, "J": 200, "I": 20, "replicates": 2, "methods": ["all"], "seed": 4})"));
  EXPECT_EQ(c.case_id, 3);
  EXPECT_EQ(c.methods.size(), 4u);
  const CampaignConfig back = CampaignConfig::from_json(c.to_json());
  EXPECT_EQ(back.to_json(), c.to_json());
  const CampaignConfig miss =
      CampaignConfig::from_json(json::parse(R"({"methods": ["ssmooth", "face"], "missing": true})"));
  EXPECT_FALSE(miss.runs(Method::ssmooth));
  EXPECT_TRUE(miss.runs(Method::face_incomplete));
  EXPECT_THROW(CampaignConfig::from_json(json::parse(R"({"bogus": 1})")), ConfigError);
  EXPECT_THROW(CampaignConfig::from_json(json::parse(R"({"methods": ["pca"]})")), ConfigError);
  EXPECT_THROW(CampaignConfig::from_json(json::parse(R"({"case": 9})")), ConfigError);
  EXPECT_THROW(CampaignConfig::from_json(json::parse(R"({"J": "big"})")), ConfigError);
}

TEST(Campaign, ThreadCountDoesNotChangeResults) {
  CampaignConfig c;
  c.case_id = 1;
  c.J = 200;
  c.I = 20;
  c.replicates = 3;
  c.knots = 20;
  c.methods = {Method::raw, Method::face};
  const CampaignResult a = run_campaign(c);
  c.threads = 3;
  const CampaignResult b = run_campaign(c);
  ASSERT_EQ(a.records.size(), b.records.size());
  for (const std::string metric : {"cov_mise", "eigfun_mise_1", "eigval_sqerr_2"})
    for (Method m : c.methods) EXPECT_EQ(a.values(m, metric), b.values(m, metric));
  EXPECT_EQ(a.values(Method::face, "rank_ok"), std::vector<double>(3, 1.0));
  const std::string table = summary_table(a);
  EXPECT_NE(table.find("n/a"), std::string::npos);
  EXPECT_NE(table.find("Covariance MISE x100"), std::string::npos);
}

TEST(Cli, FitWritesOutputsDeterministically) {
  const fs::path dir = scratch("fit");
  const Matrix y = generate_sample(CovModel::from_case(1), 200, 30, 3);
  write_csv_matrix((dir / "y.csv").string(), y);
  ASSERT_EQ(run_cli("fit " + (dir / "y.csv").string() + " --knots 20 --scores blup --out-dir " +
                        (dir / "a").string(),
                    dir / "log1"),
            0)
      << slurp(dir / "log1");
  ASSERT_EQ(run_cli("fit " + (dir / "y.csv").string() + " --knots 20 --scores blup --out-dir " +
                        (dir / "b").string(),
                    dir / "log2"),
            0);
  for (const char* f : {"eigenvectors.csv", "eigenvalues.csv", "scores.csv", "report.json"}) {
    EXPECT_TRUE(fs::exists(dir / "a" / f)) << f;
  }
  json ra = load_json(dir / "a" / "report.json"), rb = load_json(dir / "b" / "report.json");
  for (json* r : {&ra, &rb}) {
    r->erase("timestamp");
    r->erase("timings_seconds");
    r->erase("outputs");
    (*r)["config"].erase("out_dir");
  }
  EXPECT_EQ(ra, rb);
  EXPECT_EQ(slurp(dir / "a" / "eigenvectors.csv"), slurp(dir / "b" / "eigenvectors.csv"));
  EXPECT_EQ(ra["method"], "face");
  EXPECT_GE(ra["n_selected"].get<int>(), 1);
  EXPECT_TRUE(load_json(dir / "a" / "report.json").contains("timings_seconds"));

  // Library and CLI agree.
  const FaceFit fit = face_fit(y, factorize_smoother(BasisSpec::equispaced(200, 20)));
  EXPECT_NEAR(ra["lambda"].get<double>(), fit.lambda, 1e-12 * fit.lambda);
}

TEST(Cli, BinaryAndMissingInput) {
  const fs::path dir = scratch("bin");
  Matrix y = generate_sample(CovModel::from_case(1), 200, 20, 4);
  const auto mask = mcar_mask(200, 20, 5);
  for (Index i = 0; i < 20; ++i)
    for (Index j = 0; j < 200; ++j)
      if (!mask(j, i)) y(j, i) = std::numeric_limits<double>::quiet_NaN();
  write_binary_matrix((dir / "y.bin").string(), y);
  ASSERT_EQ(run_cli("fit " + (dir / "y.bin").string() + " --knots 20 --out-dir " + (dir / "o").string(),
                    dir / "log"),
            0)
      << slurp(dir / "log");
  EXPECT_TRUE(fs::exists(dir / "o" / "completed.csv"));
  const json r = load_json(dir / "o" / "report.json");
  EXPECT_TRUE(r.contains("iterations"));
  EXPECT_TRUE(r["converged"].get<bool>());
  EXPECT_EQ(run_cli("fit " + (dir / "y.bin").string() + " --method ssvd --out-dir " + (dir / "p").string(),
                    dir / "log2"),
            1);
}

TEST(Cli, PairsAndAlternativeMethods) {
  const fs::path dir = scratch("pairs");
  write_csv_matrix((dir / "y.csv").string(), oracle::random_matrix(120, 10, 6));
  ASSERT_EQ(run_cli("fit " + (dir / "y.csv").string() + " --pairs --knots 15 --out-dir " +
                        (dir / "o").string(),
                    dir / "log"),
            0)
      << slurp(dir / "log");
  for (const char* f : {"K_X_eigenvectors.csv", "K_U_eigenvectors.csv", "K_X_report.json", "K_U_report.json"})
    EXPECT_TRUE(fs::exists(dir / "o" / f)) << f;
  EXPECT_EQ(load_json(dir / "o" / "K_U_report.json")["label"], "K_U");
  for (const char* m : {"ssvd", "ssmooth"}) {
    ASSERT_EQ(run_cli("fit " + (dir / "y.csv").string() + " --method " + m + " --scores numeric --out-dir " +
                          (dir / m).string(),
                      dir / "log"),
              0)
        << slurp(dir / "log");
    EXPECT_TRUE(load_json(dir / m / "report.json")["lambda"].is_null());
  }
  write_csv_matrix((dir / "odd.csv").string(), oracle::random_matrix(120, 9, 6));
  EXPECT_EQ(run_cli("fit " + (dir / "odd.csv").string() + " --pairs --out-dir " + (dir / "x").string(),
                    dir / "log"),
            1);
}

TEST(Cli, ErrorCodes) {
  const fs::path dir = scratch("err");
  EXPECT_EQ(run_cli("fit " + (dir / "missing.csv").string(), dir / "log"), 1);
  EXPECT_NE(run_cli("fit", dir / "log"), 0);
  EXPECT_NE(run_cli("bogus", dir / "log"), 0);
  {
    std::ofstream out(dir / "bad.json");
    out << R"({"case": 7})";
  }
  EXPECT_EQ(run_cli("simulate " + (dir / "bad.json").string() + " --out-dir " + (dir / "s").string(),
                    dir / "log"),
            2);
  write_csv_matrix((dir / "y.csv").string(), oracle::random_matrix(50, 5, 1));
  EXPECT_EQ(run_cli("fit " + (dir / "y.csv").string() + " --alpha 0.5 --knots 5 --out-dir " +
                        (dir / "o").string(),
                    dir / "log"),
            1);
  EXPECT_EQ(run_cli("--version", dir / "log"), 0);
  EXPECT_NE(slurp(dir / "log").find(kVersion), std::string::npos);
}

TEST(Cli, SimulateAndBench) {
  const fs::path dir = scratch("sim");
  {
    std::ofstream out(dir / "c.json");
    out << R"({"case": 4, "J": 150, "I": 15, "replicates": 2, "knots": 15, "methods": ["face", "raw"]})";
  }
  ASSERT_EQ(run_cli("simulate " + (dir / "c.json").string() + " --out-dir " + (dir / "s").string(),
                    dir / "log"),
            0)
      << slurp(dir / "log");
  EXPECT_TRUE(fs::exists(dir / "s" / "records.csv"));
  EXPECT_NE(slurp(dir / "s" / "summary.txt").find("Eigenfunction MISE"), std::string::npos);
  ASSERT_EQ(run_cli("bench --J 200,400 --I 20 --knots 10 --methods face,sandwich --repeats 1 --out-dir " +
                        (dir / "b").string(),
                    dir / "log"),
            0)
      << slurp(dir / "log");
  EXPECT_TRUE(fs::exists(dir / "b" / "bench.svg"));
  EXPECT_EQ(run_cli("bench --methods nope --out-dir " + (dir / "c").string(), dir / "log"), 2);
}
