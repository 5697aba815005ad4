#pragma once

#include <string>
#include <vector>

#include "stencilforge/driver.hpp"
#include "stencilforge/runtime.hpp"

namespace sf::testkit {

/// Serial run of the discovered (and merged) stencil program.
runtime::GridMap referenceRun(const std::string& source, const runtime::GridMap& inputs, int sweeps);

/// Frontend output, optionally wrapped in a sweep loop.
driver::Artifacts frontendArtifacts(const std::string& source, int sweeps);

/// Compiles `source` with every lowering path and runs it on every executor.
/// Returns one line per variant whose output differs from `expected` bit for
/// bit, or that fails.
std::vector<std::string> executorMismatches(const std::string& source, const runtime::GridMap& inputs,
                                            int sweeps, const runtime::GridMap& expected);

std::string describeDifference(const runtime::GridMap& got, const runtime::GridMap& want);

}  // namespace sf::testkit
