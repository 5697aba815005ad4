#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "stencilforge/ir.hpp"

namespace sf::bench {

struct RunSample {
  double seconds = 0;
  double mcellsPerS = 0;
};

struct ThroughputReport {
  int64_t cells = 0;
  int64_t iterations = 0;
  double seconds = 0;  // mean over runs
  double mcellsPerS = 0;
  int64_t flopsPerCell = 0;
  std::vector<RunSample> runs;
};

double mcellsPerSecond(int64_t cells, int64_t iterations, double seconds);

/// Cells of the largest stencil.apply iteration space in `m`.
int64_t stencilCells(const IRModule& m);

/// Floating-point operations per cell summed over every stencil.apply in `m`.
int64_t flopsPerCell(const IRModule& m);

/// Times `run` `repeats` times on a monotonic clock.
ThroughputReport measure(const std::function<void()>& run, int64_t cells, int64_t iterations, int64_t flops,
                         int repeats = 5);

std::string toJson(const ThroughputReport& r);

}  // namespace sf::bench
