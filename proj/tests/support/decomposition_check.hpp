#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sf::testkit {

/// Draws `triples` random (extents, P x Q, offset set) programs and checks the
/// decomposition plan of each against point enumeration: rank interiors
/// partition the domain, halo widths equal the largest offset per direction,
/// and each message box bounds exactly the remote cells its receiver reads.
/// Returns one line per violation.
std::vector<std::string> randomDecompositionFailures(uint64_t seed, int triples);

}  // namespace sf::testkit
