#pragma once

#include <functional>
#include <string>
#include <vector>

#include "stencilforge/runtime.hpp"

namespace sf::testkit {

/// Small program with an expected result computed by hand-written code.
struct HandCase {
  std::string name;
  std::string source;
  runtime::GridMap inputs;
  int sweeps = 1;
  std::function<runtime::GridMap(const runtime::GridMap&)> oracle;
};

const std::vector<HandCase>& handCases();

/// In-place 7-point smoother on an n^3 grid, `sweeps` explicit time steps.
std::string jacobi3dSource(int n, int sweeps);

/// Double-buffered evaluation of jacobi3dSource.
runtime::GridBuffer jacobi3dOracle(const runtime::GridBuffer& u, int sweeps);

}  // namespace sf::testkit
