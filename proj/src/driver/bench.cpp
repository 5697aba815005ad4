#include "stencilforge/bench.hpp"

#include <chrono>
#include <json.hpp>

#include "stencilforge/stencil.hpp"

namespace sf::bench {

double mcellsPerSecond(int64_t cells, int64_t iterations, double seconds) {
  if (seconds <= 0) return 0;
  return static_cast<double>(cells) * static_cast<double>(iterations) / seconds / 1e6;
}

int64_t stencilCells(const IRModule& m) {
  int64_t cells = 0;
  for (Operation* op : walk(m, "stencil.apply")) cells = std::max(cells, op->boundsAttr("bounds").cells());
  return cells;
}

int64_t flopsPerCell(const IRModule& m) {
  int64_t flops = 0;
  for (Operation* op : walk(m, "stencil.apply")) flops += stencil::countFlops(*op);
  return flops;
}

ThroughputReport measure(const std::function<void()>& run, int64_t cells, int64_t iterations, int64_t flops,
                         int repeats) {
  ThroughputReport r;
  r.cells = cells;
  r.iterations = iterations;
  r.flopsPerCell = flops;
  double total = 0;
  for (int i = 0; i < repeats; ++i) {
    auto t0 = std::chrono::steady_clock::now();
    run();
    double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.runs.push_back({s, mcellsPerSecond(cells, iterations, s)});
    total += s;
  }
  r.seconds = repeats > 0 ? total / repeats : 0;
  r.mcellsPerS = mcellsPerSecond(cells, iterations, r.seconds);
  return r;
}

std::string toJson(const ThroughputReport& r) {
  nlohmann::ordered_json j;
  j["cells"] = r.cells;
  j["iterations"] = r.iterations;
  j["seconds"] = r.seconds;
  j["mcells_per_s"] = r.mcellsPerS;
  j["flops_per_cell"] = r.flopsPerCell;
  j["repeats"] = r.runs.size();
  j["runs"] = nlohmann::json::array();
  for (const auto& s : r.runs) j["runs"].push_back({{"seconds", s.seconds}, {"mcells_per_s", s.mcellsPerS}});
  return j.dump(2) + "\n";
}

}  // namespace sf::bench
