#include <gtest/gtest.h>

#include <filesystem>
#include <json.hpp>

#include "stencilforge/bench.hpp"
#include "stencilforge/driver.hpp"
#include "testing.hpp"

using namespace sf;
using namespace sf::driver;

namespace {

Artifacts fromSample(const std::string& name) {
  Artifacts a;
  a.host = testkit::compileSample(name);
  return a;
}

std::vector<std::string> names(const Pipeline& p) {
  std::vector<std::string> out;
  for (const auto& s : p.passes) out.push_back(s.name);
  return out;
}

}  // namespace

TEST(PipelineParse, FullCpuPath) {
  Pipeline p = parsePipeline("discover-stencils,merge-stencils,extract-stencils,stencil-to-loops{mode=cpu}");
  EXPECT_EQ(names(p), (std::vector<std::string>{"discover-stencils", "merge-stencils", "extract-stencils",
                                                "stencil-to-loops"}));
  EXPECT_EQ(p.passes[3].options.at("mode"), "cpu");
}

TEST(PipelineParse, CommaInsideBraces) {
  Pipeline p = parsePipeline("tile-parallel{sizes=32,32,1}");
  ASSERT_EQ(p.passes.size(), 1u);
  EXPECT_EQ(p.passes[0].options.at("sizes"), "32,32,1");
  EXPECT_EQ(pipelineStr(p), "tile-parallel{sizes=32,32,1}");
}

TEST(PipelineParse, RoundTripsThroughString) {
  std::string text =
      "discover-stencils,merge-stencils,extract-stencils,stencil-to-loops{mode=gpu},tile-parallel{sizes=5,3,2},"
      "device-data{strategy=naive}";
  EXPECT_EQ(pipelineStr(parsePipeline(text)), text);
  EXPECT_TRUE(parsePipeline("").passes.empty());
}

TEST(PipelineParse, Errors) {
  EXPECT_THROW(parsePipeline("extract-stencils,discover-stencils"), StageOrderError);
  EXPECT_THROW(parsePipeline("discover-stencils,discover-stencils"), StageOrderError);
  EXPECT_THROW(parsePipeline("discover-stencils,fuse-everything"), UnknownPass);
  EXPECT_THROW(parsePipeline("tile-parallel{sizes=32,32"), PipelineParseError);
  EXPECT_THROW(parsePipeline("tile-parallel}"), PipelineParseError);
  EXPECT_THROW(parsePipeline("tile-parallel{size=32}"), PipelineParseError);
  EXPECT_THROW(parsePipeline("tile-parallel{sizes}"), PipelineParseError);
  EXPECT_THROW(parsePipeline("discover-stencils,,merge-stencils"), PipelineParseError);
  EXPECT_THROW(parsePipeline("tile-parallel{sizes=a,b}"), PipelineParseError);
  EXPECT_THROW(parsePipeline("lower-dmp{grid=2by2}"), PipelineParseError);
  EXPECT_THROW(parsePipeline("stencil-to-loops{mode=cpu},lower-dmp{grid=2x2}"), StageOrderError);
  EXPECT_THROW(parsePipeline("lower-dmp{grid=2x2},tile-parallel{sizes=2}"), StageOrderError);
  EXPECT_THROW(parsePipeline("lower-dmp{grid=2x2},device-data{strategy=naive}"), StageOrderError);
}

TEST(PipelineRun, StateChecks) {
  EXPECT_THROW(runPipeline(fromSample("listing_average.f90"), parsePipeline("device-data{strategy=naive}")),
               StageOrderError);
  EXPECT_THROW(runPipeline(fromSample("listing_average.f90"), parsePipeline("lower-dmp{grid=2x2}")), StageOrderError);
  EXPECT_THROW(runPipeline(fromSample("listing_average.f90"), parsePipeline("stencil-to-loops{mode=tpu}")),
               PipelineParseError);
  Artifacts ex = runPipeline(fromSample("listing_average.f90"), parsePipeline("discover-stencils,extract-stencils"));
  EXPECT_THROW(runPipeline(std::move(ex), parsePipeline("merge-stencils")), StageOrderError);
}

TEST(PipelineRun, DefaultsPerTarget) {
  PipelineConfig cfg;
  EXPECT_EQ(pipelineStr(defaultPipeline(cfg)),
            "discover-stencils,merge-stencils,extract-stencils,stencil-to-loops{mode=cpu}");
  cfg.target = Target::DeviceSim;
  cfg.deviceData = "naive";
  EXPECT_EQ(pipelineStr(defaultPipeline(cfg)),
            "discover-stencils,merge-stencils,extract-stencils,stencil-to-loops{mode=gpu},"
            "tile-parallel{sizes=32,32,1},device-data{strategy=naive}");
  cfg.target = Target::RanksSim;
  cfg.P = 3;
  cfg.Q = 2;
  EXPECT_EQ(pipelineStr(defaultPipeline(cfg)),
            "discover-stencils,merge-stencils,extract-stencils,lower-dmp{grid=3x2},dmp-to-msg");
  EXPECT_EQ(parseTarget("device-sim"), Target::DeviceSim);
  EXPECT_STREQ(targetName(Target::Threads), "threads");
  EXPECT_THROW(parseTarget("gpu"), UsageError);
}

TEST(PipelineRun, DumpsEveryPassAndTracksMetrics) {
  std::vector<std::string> seen;
  Artifacts a = runPipeline(fromSample("pw_advection.f90"), defaultPipeline({}),
                            [&](const std::string& pass, const Artifacts&) { seen.push_back(pass); });
  EXPECT_EQ(seen, (std::vector<std::string>{"discover-stencils", "merge-stencils", "extract-stencils",
                                            "stencil-to-loops"}));
  EXPECT_EQ(a.flops, 63);
  EXPECT_EQ(a.cells, 30 * 30 * 30);
}

TEST(Artifacts, ParseRejectsBadText) {
  EXPECT_THROW(parseArtifacts("module {\n}\nmodule {\n}\n"), IRParseError);
  EXPECT_THROW(parseArtifacts("module @device {\n}\n"), IRParseError);
  Artifacts a = runPipeline(fromSample("listing_average.f90"), defaultPipeline({}));
  Artifacts back = parseArtifacts(printArtifacts(a));
  EXPECT_EQ(printArtifacts(back), printArtifacts(a));
}

TEST(Wrap, IterationsLoop) {
  Artifacts a = fromSample("listing_average.f90");
  wrapIterations(a.host, 7);
  Operation& fn = *a.host.functions().front();
  auto loops = walk(a.host, "loop.for");
  ASSERT_EQ(loops.size(), 3u);
  EXPECT_EQ(loops[0]->parentOp(), &fn);
  EXPECT_EQ(loops[0]->operand(1)->definingOp()->intAttr("value"), 7);
  for (Operation* alloc : walk(a.host, "mem.alloc")) EXPECT_EQ(alloc->parentOp(), &fn);
  EXPECT_TRUE(verify(a.host).empty());
}

TEST(Wrap, ZeroIterationsLeavesInputs) {
  Artifacts a = fromSample("listing_average.f90");
  wrapIterations(a.host, 0);
  a = runPipeline(std::move(a), defaultPipeline({}));
  runtime::GridMap in = {{"data", runtime::makeGrid({256, 256}, "seeded:1")}};
  EXPECT_TRUE(runtime::bitwiseEqual(execute(a, in, {}).outputs, in));
}

TEST(Execute, TargetPreconditions) {
  Artifacts cpu = runPipeline(fromSample("listing_average.f90"), defaultPipeline({}));
  ExecConfig cfg;
  cfg.target = Target::DeviceSim;
  EXPECT_THROW(execute(cpu, {}, cfg), UsageError);
  cfg.target = Target::RanksSim;
  EXPECT_THROW(execute(cpu, {}, cfg), UsageError);
  cfg.target = Target::Threads;
  cfg.threads = 0;
  EXPECT_THROW(execute(cpu, {}, cfg), UsageError);
}

TEST(Bindings, InitializersAndFiles) {
  IRModule host = testkit::compileSample("listing_average.f90");
  auto arrays = entryArrays(host);
  ASSERT_EQ(arrays.size(), 1u);
  EXPECT_EQ(arrays.at("data"), (std::vector<int64_t>{256, 256}));
  auto in = bindInputs(host, {"data=ones"});
  EXPECT_EQ(in.at("data").data.front(), 1.0);
  EXPECT_THROW(bindInputs(host, {"other=ones"}), GridMismatch);
  EXPECT_THROW(bindInputs(host, {"data"}), UsageError);
  auto path = (std::filesystem::temp_directory_path() / "sf_driver_bind.grid").string();
  runtime::writeGrid(path, runtime::makeGrid({256, 256}, "seeded:3"));
  EXPECT_TRUE(runtime::bitwiseEqual(bindInputs(host, {"data=" + path}).at("data"),
                                    runtime::makeGrid({256, 256}, "seeded:3")));
  runtime::writeGrid(path, runtime::makeGrid({4, 4}, "ones"));
  EXPECT_THROW(bindInputs(host, {"data=" + path}), GridMismatch);
  std::filesystem::remove(path);
}

TEST(Bench, MCellsFormula) {
  EXPECT_NEAR(bench::mcellsPerSecond(254 * 254, 100, 0.5), 12.9032, 1e-4);
  EXPECT_EQ(bench::mcellsPerSecond(254 * 254, 100, 0.5), 254.0 * 254.0 * 100.0 / 0.5 / 1e6);
  EXPECT_EQ(bench::mcellsPerSecond(10, 10, 0.0), 0.0);
}

TEST(Bench, FlopsFromTheStencilProgram) {
  Artifacts gs = runPipeline(fromSample("gauss_seidel3d.f90"), parsePipeline("discover-stencils,merge-stencils"));
  EXPECT_EQ(bench::flopsPerCell(gs.host), 6);
  EXPECT_EQ(bench::stencilCells(gs.host), 30 * 30 * 30);
  Artifacts pw = runPipeline(fromSample("pw_advection.f90"), parsePipeline("discover-stencils,merge-stencils"));
  EXPECT_EQ(bench::flopsPerCell(pw.host), 63);
}

TEST(Bench, ReportHasFiveRunsByDefault) {
  int calls = 0;
  bench::ThroughputReport r = bench::measure([&] { ++calls; }, 900, 3, 6);
  EXPECT_EQ(calls, 5);
  ASSERT_EQ(r.runs.size(), 5u);
  double total = 0;
  for (const auto& s : r.runs) total += s.seconds;
  EXPECT_DOUBLE_EQ(r.seconds, total / 5);
  auto j = nlohmann::json::parse(bench::toJson(r));
  for (const char* key : {"cells", "iterations", "seconds", "mcells_per_s", "flops_per_cell", "runs"})
    EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_EQ(j["cells"], 900);
  EXPECT_EQ(j["flops_per_cell"], 6);
  EXPECT_EQ(j["runs"].size(), 5u);
}
