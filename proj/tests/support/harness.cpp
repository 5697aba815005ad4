#include "harness.hpp"

#include <cstring>
#include <functional>

#include "stencilforge/frontend.hpp"

namespace sf::testkit {

namespace {

using runtime::GridMap;

driver::Artifacts compiled(const std::string& source, int sweeps, const std::string& pipeline) {
  return driver::runPipeline(frontendArtifacts(source, sweeps), driver::parsePipeline(pipeline));
}

}  // namespace

driver::Artifacts frontendArtifacts(const std::string& source, int sweeps) {
  driver::Artifacts a;
  a.host = frontend::compileText(source, "<generated>");
  if (sweeps != 1) driver::wrapIterations(a.host, sweeps);
  return a;
}

GridMap referenceRun(const std::string& source, const GridMap& inputs, int sweeps) {
  auto a = compiled(source, sweeps, "discover-stencils,merge-stencils");
  return runtime::runSerial(a.host, nullptr, inputs);
}

std::string describeDifference(const GridMap& got, const GridMap& want) {
  if (got.size() != want.size())
    return "array count " + std::to_string(got.size()) + " vs " + std::to_string(want.size());
  for (const auto& [name, w] : want) {
    auto it = got.find(name);
    if (it == got.end()) return "missing array " + name;
    const auto& g = it->second;
    if (g.extents != w.extents) return name + ": extents differ";
    for (size_t i = 0; i < w.data.size(); ++i)
      if (std::memcmp(&g.data[i], &w.data[i], sizeof(double)) != 0)
        return name + "[" + std::to_string(i) + "]: " + std::to_string(g.data[i]) + " vs " + std::to_string(w.data[i]);
  }
  return "equal";
}

std::vector<std::string> executorMismatches(const std::string& source, const GridMap& inputs, int sweeps,
                                            const GridMap& expected) {
  std::vector<std::string> bad;
  auto check = [&](const std::string& name, const std::function<GridMap()>& fn) {
    try {
      GridMap got = fn();
      if (!runtime::bitwiseEqual(got, expected)) bad.push_back(name + ": " + describeDifference(got, expected));
    } catch (const std::exception& e) {
      bad.push_back(name + ": threw " + e.what());
    }
  };
  const std::string front = "discover-stencils,merge-stencils,extract-stencils,";

  check("serial-reference", [&] { return referenceRun(source, inputs, sweeps); });
  check("extracted", [&] {
    auto a = compiled(source, sweeps, front.substr(0, front.size() - 1));
    return runtime::runSerial(a.host, &*a.device, inputs);
  });
  auto cpu = compiled(source, sweeps, front + "stencil-to-loops{mode=cpu}");
  check("cpu", [&] { return runtime::runSerial(cpu.host, &*cpu.device, inputs); });
  for (int t : {1, 2, 8})
    check("cpu-threads-" + std::to_string(t), [&] { return runtime::runThreaded(cpu.host, &*cpu.device, inputs, t); });
  check("gpu", [&] {
    auto a = compiled(source, sweeps, front + "stencil-to-loops{mode=gpu}");
    return runtime::runSerial(a.host, &*a.device, inputs);
  });
  for (const char* sizes : {"32,32,1", "5,3,2"}) {
    auto tiled = compiled(source, sweeps, front + "stencil-to-loops{mode=gpu},tile-parallel{sizes=" + sizes + "}");
    check(std::string("tiled-") + sizes, [&] { return runtime::runSerial(tiled.host, &*tiled.device, inputs); });
    check(std::string("tiled-threads-") + sizes, [&] { return runtime::runThreaded(tiled.host, &*tiled.device, inputs, 8); });
  }
  for (const char* strategy : {"naive", "optimized"})
    check(std::string("device-sim-") + strategy, [&] {
      auto a = compiled(source, sweeps,
                        front + "stencil-to-loops{mode=gpu},tile-parallel{sizes=32,32,1},device-data{strategy=" +
                            strategy + "}");
      return runtime::runDeviceSim(a.host, *a.device, inputs).outputs;
    });
  check("ranks-sim-2x2", [&] {
    auto a = compiled(source, sweeps, front + "lower-dmp{grid=2x2},dmp-to-msg");
    driver::ExecConfig cfg;
    cfg.target = driver::Target::RanksSim;
    return driver::execute(a, inputs, cfg).outputs;
  });
  return bad;
}

}  // namespace sf::testkit
