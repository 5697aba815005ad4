#include <gtest/gtest.h>
#include <sys/wait.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <regex>
#include <sstream>

#include "stencilforge/driver.hpp"
#include "testing.hpp"

namespace fs = std::filesystem;
using namespace sf;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("sf_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  Result run(const std::string& args) {
    std::string cmd = "cd '" + dir_.string() + "' && '" SF_CLI_PATH "' " + args + " > out.txt 2> err.txt";
    int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(dir_ / "out.txt");
    r.err = slurp(dir_ / "err.txt");
    return r;
  }

  static std::string sample(const std::string& name) { return "'" + testkit::samplePath(name) + "'"; }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, CompileDumpAfterDiscovery) {
  Result r = run("compile " + sample("listing_average.f90") + " --dump-after=discover-stencils --out=build/avg.sir");
  ASSERT_EQ(r.code, 0) << r.err;
  fs::path dump = dir_ / "build" / "listing_average.1.discover-stencils.sir";
  ASSERT_TRUE(fs::exists(dump));
  std::string text = slurp(dump);
  EXPECT_NE(text.find("stencil.apply"), std::string::npos);
  EXPECT_EQ(text.find("loop.for"), std::string::npos);
  EXPECT_NO_THROW(driver::parseArtifacts(text));
  EXPECT_TRUE(fs::exists(dir_ / "build" / "avg.sir"));
  EXPECT_NE(r.err.find("warning:"), std::string::npos);
}

TEST_F(Cli, EveryDumpReparsesAndResumes) {
  Result r = run("compile " + sample("pw_advection.f90") + " --target=device-sim --dump-after=all");
  ASSERT_EQ(r.code, 0) << r.err;
  int dumps = 0;
  for (const auto& e : fs::directory_iterator(dir_)) {
    std::string name = e.path().filename().string();
    if (name.rfind("pw_advection.", 0) != 0 || name == "pw_advection.sir") continue;
    ++dumps;
    EXPECT_NO_THROW(driver::parseArtifacts(slurp(e.path()))) << name;
  }
  EXPECT_EQ(dumps, 6);
  // resume from the extraction dump
  Result resumed = run("ir pw_advection.3.extract-stencils.sir --pipeline='stencil-to-loops{mode=cpu}'");
  EXPECT_EQ(resumed.code, 0) << resumed.err;
  EXPECT_NE(resumed.out.find("par.for"), std::string::npos);
}

TEST_F(Cli, EmptyPipelineIsTheFrontendOutput) {
  Result r = run("ir " + sample("listing_average.f90") + " --pipeline=''");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(r.out, printIR(testkit::compileSample("listing_average.f90")));
}

TEST_F(Cli, PwDeviceModuleHasOneApply) {
  Result r = run("ir " + sample("pw_advection.f90") + " --pipeline=discover-stencils,merge-stencils,extract-stencils");
  ASSERT_EQ(r.code, 0) << r.err;
  driver::Artifacts a = driver::parseArtifacts(r.out);
  ASSERT_TRUE(a.device.has_value());
  EXPECT_EQ(walk(*a.device, "stencil.apply").size(), 1u);
}

TEST_F(Cli, RanksOutputEqualsSerial) {
  Result serial = run("run " + sample("gauss_seidel3d.f90") + " --grid u=seeded:5 --iterations=2 --out=serial.grid");
  ASSERT_EQ(serial.code, 0) << serial.err;
  Result ranks = run("run " + sample("gauss_seidel3d.f90") +
                     " --target=ranks-sim --ranks=2x2 --grid u=seeded:5 --iterations=2 --out=o.grid");
  ASSERT_EQ(ranks.code, 0) << ranks.err;
  EXPECT_EQ(slurp(dir_ / "o.grid"), slurp(dir_ / "serial.grid"));
  EXPECT_EQ(serial.out, ranks.out);
}

TEST_F(Cli, ZeroIterationsReturnsInputs) {
  ASSERT_EQ(run("run " + sample("listing_average.f90") + " --grid data=seeded:8 --iterations=0 --out=o.grid").code, 0);
  EXPECT_TRUE(runtime::bitwiseEqual(runtime::readGrid((dir_ / "o.grid").string()),
                                    runtime::makeGrid({256, 256}, "seeded:8")));
}

TEST_F(Cli, GridFileInputAndMultipleOutputs) {
  runtime::writeGrid((dir_ / "u.grid").string(), runtime::makeGrid({32, 32, 32}, "seeded:2"));
  Result r = run("run " + sample("pw_advection.f90") + " --grid u=u.grid --out=res.grid");
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* n : {"res.su.grid", "res.sv.grid", "res.sw.grid", "res.u.grid"}) EXPECT_TRUE(fs::exists(dir_ / n)) << n;
}

TEST_F(Cli, DeviceTransfersAreReported) {
  Result r = run("run " + sample("gauss_seidel3d.f90") + " --target=device-sim --device-data=naive --iterations=3");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("transfers u: register=3 "), std::string::npos) << r.out;
}

TEST_F(Cli, BenchReport) {
  Result r = run("bench " + sample("gauss_seidel3d.f90") + " --report=rep.json");
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = nlohmann::json::parse(slurp(dir_ / "rep.json"));
  EXPECT_EQ(j["runs"].size(), 5u);
  EXPECT_EQ(j["flops_per_cell"], 6);
  EXPECT_EQ(j["cells"], 30 * 30 * 30);
  Result pw = run("bench " + sample("pw_advection.f90") + " --repeats=2 --threads=2 --target=threads");
  ASSERT_EQ(pw.code, 0) << pw.err;
  auto k = nlohmann::json::parse(pw.out);
  EXPECT_EQ(k["flops_per_cell"], 63);
  EXPECT_EQ(k["runs"].size(), 2u);
}

TEST_F(Cli, UserErrorsExitOne) {
  std::ofstream(dir_ / "bad.f90") << "program p\n  real(kind=8), dimension(4) :: a\n  a(1) = 1.0d0 $\nend program p\n";
  Result lex = run("compile bad.f90");
  EXPECT_EQ(lex.code, 1);
  EXPECT_NE(lex.err.find("bad.f90:3:"), std::string::npos) << lex.err;
  EXPECT_NE(lex.err.find("error:"), std::string::npos) << lex.err;
  EXPECT_EQ(run("compile missing.f90").code, 1);
  EXPECT_EQ(run("compile " + sample("listing_average.f90") + " --pipeline=extract-stencils,discover-stencils").code, 1);
  EXPECT_EQ(run("compile " + sample("listing_average.f90") + " --pipeline=nope").code, 1);
  EXPECT_EQ(run("run " + sample("listing_average.f90") + " --target=quantum").code, 1);
  EXPECT_EQ(run("run " + sample("listing_average.f90") + " --grid nothere=ones").code, 1);
  EXPECT_EQ(run("run " + sample("listing_average.f90") + " --target=device-sim --tile-sizes=0,4").code, 1);
  EXPECT_EQ(run("run " + sample("listing_average.f90") + " --target=ranks-sim --ranks=0x2").code, 1);
  EXPECT_EQ(run("frobnicate").code, 1);
  EXPECT_EQ(run("run").code, 1);
}

TEST_F(Cli, InternalFailureExitsTwo) {
  ASSERT_EQ(run("compile " + sample("listing_average.f90") + " --target=ranks-sim --ranks=2x2 --out=r.sir").code, 0);
  std::string text = slurp(dir_ / "r.sir");
  // retag one receive so it can never match
  std::regex recv(R"(("msg\.recv"\([^\n]*tag = )(\d+))");
  std::smatch m;
  ASSERT_TRUE(std::regex_search(text, m, recv));
  text.replace(m.position(2), m.length(2), "777");
  std::ofstream(dir_ / "broken.sir") << text;
  Result r = run("run broken.sir --target=ranks-sim");
  EXPECT_EQ(r.code, 2) << r.err;
  EXPECT_NE(r.err.find("Deadlock"), std::string::npos) << r.err;
}
