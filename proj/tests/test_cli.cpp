#include "cmtf/cli.hpp"
#include "cmtf/io.hpp"
#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace cmtf;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code;
  std::string out, err;
};

CliRun cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("cmtf_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  void write_fixture() {
    const auto fx = cmtf::testing::exact_structure_fixture();
    io::write_tensor_file(path("J.txt"), fx.J);
    io::write_matrix_file(path("F.csv"), fx.F);
    io::write_matrix_file(path("X.csv"), fx.X);
  }

  std::vector<std::string> decouple_args(const std::string& extra_rep = "g") {
    return {"decouple", "--tensor", path("J.txt"), "--zeroth", path("F.csv"), "--samples", path("X.csv"),
            "--rank", "2", "--degree", "3", "--dof", "8", "--lambda", "0.1", "--rep", extra_rep, "--seed", "1",
            "--max-iter", "50", "--out", path("model.json")};
  }

  fs::path dir_;
};

std::size_t data_rows(const std::string& file) {
  std::ifstream in(file);
  std::string line;
  std::size_t n = 0;
  std::getline(in, line);
  while (std::getline(in, line))
    if (!line.empty()) ++n;
  return n;
}

}  // namespace

TEST_F(CliTest, DecoupleExactFixture) {
  write_fixture();
  auto args = decouple_args();
  args.insert(args.end(), {"--diagnostics", path("diag.csv"), "--rel-tol", "1e-14"});
  const CliRun r = cli(args);
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const DecoupledModel model = io::load_model(path("model.json"));
  EXPECT_EQ(model.rank(), 2);
  EXPECT_EQ(model.inputs(), 3);
  EXPECT_GT(data_rows(path("diag.csv")), 0u);

  const CliRun p = cli({"predict", "--model", path("model.json"), "--inputs", path("X.csv")});
  ASSERT_EQ(p.code, kExitOk) << p.err;
  std::istringstream pred(p.out);
  const MatrixXd Y = io::read_matrix_csv(pred);
  const auto fx = cmtf::testing::exact_structure_fixture();
  EXPECT_LT((Y - fx.F).norm(), 1e-4 * fx.F.norm());
}

TEST_F(CliTest, CertifyConstrainedModel) {
  write_fixture();
  auto args = decouple_args("gprime");
  args.insert(args.end(), {"--constraint", "monotone"});
  ASSERT_EQ(cli(args).code, kExitOk);
  const CliRun c = cli({"certify", "--model", path("model.json")});
  ASSERT_EQ(c.code, kExitOk);
  EXPECT_NE(c.out.find("branch 1: CERTIFIED_INCREASING"), std::string::npos);
  EXPECT_NE(c.out.find("branch 2: CERTIFIED_INCREASING"), std::string::npos);
  EXPECT_NE(c.out.find("\nCERTIFIED\n"), std::string::npos);
}

TEST_F(CliTest, DistinctFailures) {
  write_fixture();
  const CliRun unknown = cli({"decouple", "--bogus"});
  EXPECT_EQ(unknown.code, kExitUsage);
  EXPECT_EQ(std::count(unknown.err.begin(), unknown.err.end(), '\n'), 1);

  auto missing = decouple_args();
  missing[2] = path("nope.txt");
  const CliRun m = cli(missing);
  EXPECT_EQ(m.code, kExitInput);
  EXPECT_NE(m.err.find("cannot open"), std::string::npos);

  std::ofstream(path("bad.txt")) << "2 2 2\n1 2 3\n";
  auto malformed = decouple_args();
  malformed[2] = path("bad.txt");
  const CliRun b = cli(malformed);
  EXPECT_EQ(b.code, kExitInput);
  EXPECT_NE(b.err.find("expected 8 values"), std::string::npos);

  auto bad_config = decouple_args();
  bad_config.insert(bad_config.end(), {"--constraint", "monotone"});  // with --rep g
  const CliRun cfg = cli(bad_config);
  EXPECT_EQ(cfg.code, kExitUsage);
  EXPECT_NE(cfg.err.find("gprime"), std::string::npos);

  EXPECT_EQ(cli({}).code, kExitUsage);
  EXPECT_EQ(cli({"experiment", "sine"}).code, kExitUsage);
  std::ofstream(path("broken.json")) << "{";
  EXPECT_EQ(cli({"certify", "--model", path("broken.json")}).code, kExitInput);
}

TEST_F(CliTest, ExperimentMonoRowCount) {
  const CliRun r = cli({"experiment", "mono", "--runs", "1", "--out-dir", path("out"), "--max-iter", "10"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(data_rows(path("out/results.csv")), 2u * 1u * 7u);
  EXPECT_TRUE(fs::exists(path("out/certification.csv")));
}

TEST_F(CliTest, GenerateThenDecouple) {
  const CliRun g = cli({"generate", "trig", "--out-dir", path("sys"), "--samples", "60"});
  ASSERT_EQ(g.code, kExitOk) << g.err;
  const CliRun d = cli({"decouple", "--tensor", path("sys/tensor.txt"), "--zeroth", path("sys/zeroth.csv"),
                        "--samples", path("sys/samples.csv"), "--max-iter", "5", "--out", path("m.json")});
  EXPECT_EQ(d.code, kExitOk) << d.err;
}

TEST_F(CliTest, OutputDirectoryFromEnvironment) {
  setenv("CMTF_BSD_OUT_DIR", path("envout").c_str(), 1);
  const CliRun g = cli({"generate", "mono", "--samples", "20"});
  unsetenv("CMTF_BSD_OUT_DIR");
  ASSERT_EQ(g.code, kExitOk) << g.err;
  EXPECT_TRUE(fs::exists(path("envout/tensor.txt")));
}

TEST_F(CliTest, ExecutableExitCodes) {
  const std::string exe = CMTF_BSD_EXE;
  const int ok = std::system((exe + " --help > /dev/null").c_str());
  EXPECT_EQ(WEXITSTATUS(ok), 0);
  const int bad = std::system((exe + " certify --model " + path("none.json") + " 2> /dev/null").c_str());
  EXPECT_EQ(WEXITSTATUS(bad), kExitInput);
}
