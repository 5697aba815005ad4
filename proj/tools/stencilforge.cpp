#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "stencilforge/bench.hpp"
#include "stencilforge/driver.hpp"

namespace fs = std::filesystem;
using namespace sf;

namespace {

struct Options {
  std::string input;
  std::string pipeline;
  std::string target = "serial";
  int threads = 0;
  std::string ranks = "1x1";
  std::string tileSizes = "32,32,1";
  std::string deviceData = "optimized";
  std::vector<std::string> grids;
  int64_t iterations = 1;
  int repeats = 5;
  std::string dumpAfter;
  std::string out;
  std::string report;
  bool checked = false;
};

void writeFile(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot write '" + path + "'");
  f << text;
}

std::vector<int64_t> parseSizes(const std::string& s) {
  std::vector<int64_t> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty() || item.find_first_not_of("-0123456789") != std::string::npos)
      throw UsageError("bad tile size list '" + s + "'");
    out.push_back(std::stoll(item));
  }
  return out;
}

std::pair<int, int> parseRanks(const std::string& s) {
  auto x = s.find('x');
  if (x == std::string::npos || x == 0 || x + 1 == s.size() ||
      s.find_first_not_of("-0123456789x") != std::string::npos)
    throw UsageError("--ranks expects PxQ, got '" + s + "'");
  return {std::stoi(s.substr(0, x)), std::stoi(s.substr(x + 1))};
}

class Session {
 public:
  Session(const Options& o, const CLI::App& cmd) : o_(o), cmd_(cmd) {
    target_ = driver::parseTarget(o.target);
  }

  driver::Artifacts build(const driver::DumpHook& dump = {}) {
    driver::Artifacts a = driver::loadInput(o_.input);
    if (given("--iterations")) {
      if (o_.iterations < 0) throw UsageError("--iterations must be non-negative");
      driver::wrapIterations(a.host, o_.iterations);
    }
    driver::Pipeline p;
    if (given("--pipeline")) {
      p = driver::parsePipeline(o_.pipeline);
    } else if (fs::path(o_.input).extension() != ".sir") {
      driver::PipelineConfig cfg;
      cfg.target = target_;
      cfg.tileSizes = parseSizes(o_.tileSizes);
      cfg.deviceData = o_.deviceData;
      std::tie(cfg.P, cfg.Q) = parseRanks(o_.ranks);
      p = driver::defaultPipeline(cfg);
    }
    a = driver::runPipeline(std::move(a), p, dump);
    for (const auto& d : a.diagnostics) std::cerr << formatDiagnostic(o_.input, d) << "\n";
    return a;
  }

  driver::ExecConfig execConfig() const {
    driver::ExecConfig c;
    c.target = target_;
    c.checked = o_.checked;
    c.threads = o_.threads > 0 ? o_.threads
                               : (target_ == driver::Target::Threads
                                      ? std::max(1, static_cast<int>(std::thread::hardware_concurrency()))
                                      : 1);
    if (given("--threads") && o_.threads < 1) throw UsageError("--threads must be at least 1");
    return c;
  }

  bool given(const std::string& flag) const { return cmd_.count(flag) > 0; }

  std::string stem() const { return fs::path(o_.input).stem().string(); }

  const Options& o_;
  const CLI::App& cmd_;
  driver::Target target_;
};

int cmdCompile(const Options& o, const CLI::App& cmd) {
  Session s(o, cmd);
  bool fromIr = fs::path(o.input).extension() == ".sir";
  fs::path out = o.out.empty() ? fs::path(s.stem() + (fromIr ? ".out.sir" : ".sir")) : fs::path(o.out);
  fs::path dir = out.has_parent_path() ? out.parent_path() : fs::path(".");
  fs::create_directories(dir);
  int index = 0;
  auto dump = [&](const std::string& pass, const driver::Artifacts& a) {
    ++index;
    if (o.dumpAfter != "all" && o.dumpAfter != pass) return;
    fs::path p = dir / (s.stem() + "." + std::to_string(index) + "." + pass + ".sir");
    writeFile(p.string(), driver::printArtifacts(a));
    std::cerr << "wrote " << p.string() << "\n";
  };
  if (!o.dumpAfter.empty() && o.dumpAfter != "all") {
    const auto& names = driver::passNames();
    if (std::find(names.begin(), names.end(), o.dumpAfter) == names.end())
      throw UnknownPass("--dump-after names unknown pass '" + o.dumpAfter + "'");
  }
  driver::Artifacts a = s.build(dump);
  writeFile(out.string(), driver::printArtifacts(a));
  std::cerr << "wrote " << out.string() << "\n";
  return 0;
}

int cmdIr(const Options& o, const CLI::App& cmd) {
  Session s(o, cmd);
  std::string stage;
  auto dump = [&](const std::string& pass, const driver::Artifacts& a) {
    if (pass == o.dumpAfter) stage = driver::printArtifacts(a);
  };
  driver::Artifacts a = s.build(dump);
  if (!o.dumpAfter.empty() && stage.empty())
    throw UsageError("pass '" + o.dumpAfter + "' is not in the pipeline");
  std::cout << (o.dumpAfter.empty() ? driver::printArtifacts(a) : stage);
  return 0;
}

void printStats(const runtime::TransferStats& stats) {
  for (const auto& [name, c] : stats.arrays)
    std::cout << "transfers " << name << ": register=" << c.registers << " alloc=" << c.allocs
              << " copy_in=" << c.copyIn << " copy_out=" << c.copyOut << " free=" << c.frees
              << " bytes_in=" << c.bytesIn << " bytes_out=" << c.bytesOut << "\n";
}

void writeOutputs(const std::string& out, const runtime::GridMap& outputs) {
  if (out.empty()) return;
  if (outputs.size() == 1) {
    runtime::writeGrid(out, outputs.begin()->second);
    std::cerr << "wrote " << out << "\n";
    return;
  }
  fs::path base(out);
  std::string prefix = base.extension() == ".grid" ? (base.parent_path() / base.stem()).string() : out;
  for (const auto& [name, g] : outputs) {
    std::string p = prefix + "." + name + ".grid";
    runtime::writeGrid(p, g);
    std::cerr << "wrote " << p << "\n";
  }
}

int cmdRun(const Options& o, const CLI::App& cmd) {
  Session s(o, cmd);
  driver::Artifacts a = s.build();
  runtime::GridMap inputs = driver::bindInputs(a.host, o.grids);
  driver::ExecResult r = driver::execute(a, inputs, s.execConfig());
  for (const auto& [name, g] : r.outputs) {
    double sum = 0;
    for (double v : g.data) sum += v;
    std::cout << name << ": " << g.size() << " cells, sum " << sum << "\n";
  }
  printStats(r.stats);
  writeOutputs(o.out, r.outputs);
  return 0;
}

int cmdBench(const Options& o, const CLI::App& cmd) {
  Session s(o, cmd);
  if (o.repeats < 1) throw UsageError("--repeats must be at least 1");
  driver::Artifacts a = s.build();
  runtime::GridMap inputs = driver::bindInputs(a.host, o.grids);
  driver::ExecConfig cfg = s.execConfig();
  driver::ExecResult last;
  auto report = bench::measure([&] { last = driver::execute(a, inputs, cfg); }, a.cells, o.iterations, a.flops,
                               o.repeats);
  std::string json = bench::toJson(report);
  if (o.report.empty()) {
    std::cout << json;
  } else {
    writeFile(o.report, json);
    std::cerr << "wrote " << o.report << "\n";
  }
  writeOutputs(o.out, last.outputs);
  return 0;
}

void addCommon(CLI::App* c, Options& o, bool exec) {
  c->add_option("input", o.input, "Fortran source (.f90) or IR (.sir)")->required();
  c->add_option("--pipeline", o.pipeline, "comma-separated passes, e.g. discover-stencils,merge-stencils")
      ->expected(0, 1);
  c->add_option("--target", o.target, "serial, threads, device-sim or ranks-sim");
  c->add_option("--tile-sizes", o.tileSizes, "tile sizes for the device-sim default pipeline");
  c->add_option("--device-data", o.deviceData, "naive or optimized");
  c->add_option("--ranks", o.ranks, "process grid PxQ for the ranks-sim default pipeline");
  c->add_option("--iterations", o.iterations, "repeat the program body N times");
  if (exec) {
    c->add_option("--threads", o.threads, "worker threads for the threads target");
    c->add_option("--grid", o.grids, "name=init binding (zeros, ones, gradient, seeded:N or a .grid file)");
    c->add_option("--out", o.out, "result grid path");
    c->add_flag("--checked", o.checked, "trap out-of-bounds accesses");
  } else {
    c->add_option("--dump-after", o.dumpAfter, "all or a pass name");
    c->add_option("--out", o.out, "output .sir path");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stencilforge: stencil compiler for a Fortran subset"};
  app.require_subcommand(1);
  Options o;
  auto* compile = app.add_subcommand("compile", "compile to host and device IR");
  addCommon(compile, o, false);
  auto* ir = app.add_subcommand("ir", "print the IR after the pipeline or after one pass");
  addCommon(ir, o, false);
  auto* run = app.add_subcommand("run", "compile and execute");
  addCommon(run, o, true);
  auto* bench = app.add_subcommand("bench", "compile, execute repeatedly and report throughput");
  addCommon(bench, o, true);
  bench->add_option("--repeats", o.repeats, "timed runs (default 5)");
  bench->add_option("--report", o.report, "JSON report path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*compile) return cmdCompile(o, *compile);
    if (*ir) return cmdIr(o, *ir);
    if (*run) return cmdRun(o, *run);
    if (*bench) return cmdBench(o, *bench);
  } catch (const Error& e) {
    Diagnostic d{Severity::Error, e.kind() + ": " + e.what(), e.loc()};
    std::cerr << formatDiagnostic(o.input.empty() ? "stencilforge" : o.input, d) << "\n";
    return e.userError() ? 1 : 2;
  } catch (const std::exception& e) {
    std::cerr << "stencilforge: internal error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
