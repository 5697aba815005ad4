#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stencilforge/error.hpp"
#include "stencilforge/ir.hpp"
#include "stencilforge/lowering.hpp"
#include "stencilforge/runtime.hpp"

namespace sf::driver {

struct PassSpec {
  std::string name;
  std::map<std::string, std::string> options;
};

struct Pipeline {
  std::vector<PassSpec> passes;
};

/// `name{key=val key=val},name,...`. Commas inside braces belong to the
/// option value.
Pipeline parsePipeline(std::string_view text);

std::string pipelineStr(const Pipeline& p);

const std::vector<std::string>& passNames();

enum class Target { Serial, Threads, DeviceSim, RanksSim };

Target parseTarget(const std::string& name);
const char* targetName(Target t);

struct PipelineConfig {
  Target target = Target::Serial;
  std::vector<int64_t> tileSizes = {32, 32, 1};
  std::string deviceData = "optimized";
  int P = 1;
  int Q = 1;
};

/// Default pass list for a target.
Pipeline defaultPipeline(const PipelineConfig& cfg);

/// Compiler state between passes.
struct Artifacts {
  IRModule host;
  std::optional<IRModule> device;
  std::vector<Diagnostic> diagnostics;
  int64_t cells = 0;  // largest stencil iteration space seen
  int64_t flops = 0;  // flops per cell of the stencil program
};

using DumpHook = std::function<void(const std::string& pass, const Artifacts&)>;

/// Applies the passes in order; verifies after each one.
Artifacts runPipeline(Artifacts in, const Pipeline& p, const DumpHook& dump = {});

/// Host module text followed by the device module, if any.
std::string printArtifacts(const Artifacts& a);

/// Parses a `.sir` file produced by printArtifacts.
Artifacts parseArtifacts(std::string_view text);

/// Fortran source (`.f90`) or IR text (`.sir`).
Artifacts loadInput(const std::string& path);

/// Wraps the entry function's body, except its allocations, in a loop that
/// runs `n` times.
void wrapIterations(IRModule& host, int64_t n);

struct ExecConfig {
  Target target = Target::Serial;
  int threads = 1;
  bool checked = false;
  int64_t faultTagOffset = 0;
};

struct ExecResult {
  runtime::GridMap outputs;
  runtime::TransferStats stats;
};

ExecResult execute(const Artifacts& a, const runtime::GridMap& inputs, const ExecConfig& cfg);

/// Named rank>0 and scalar allocations of the entry function with their extents.
std::map<std::string, std::vector<int64_t>> entryArrays(const IRModule& host);

/// `name=init` bindings where init is an initializer spec or a `.grid` path.
/// Unbound arrays are left to the executor (zeros, or MissingBinding for
/// dummy arguments).
runtime::GridMap bindInputs(const IRModule& host, const std::vector<std::string>& bindings);

}  // namespace sf::driver
