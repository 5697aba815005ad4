#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stencilforge/ir.hpp"

namespace sf::stencil {

/// Per-dimension signed offset of a stencil.access.
using AccessOffset = std::vector<int64_t>;

/// Stencil-level diagnostics on top of the generic verifier: access windows,
/// return arity, load and store placement inside their arrays.
std::vector<std::string> verifyStencil(const IRModule& m);

struct InferredBounds {
  Bounds output;
  std::vector<Bounds> inputs;  // one per operand, output bounds for operands without accesses
};

/// lb_in = lb_out + min offset, ub_in = ub_out + max offset, per operand and
/// dimension. Throws RankMismatch on any rank disagreement.
InferredBounds inferBounds(const Bounds& output, const std::vector<std::vector<AccessOffset>>& offsetsPerOperand);

/// Offsets read from each operand of `apply`, in region order.
std::vector<std::vector<AccessOffset>> accessOffsets(const Operation& apply);

/// Infers from the apply's own region.
InferredBounds inferBounds(const Operation& apply);

/// Rewrites temp types of every stencil.load in `fn` (and the matching apply
/// block arguments) to the hull of the input bounds its consumers need.
void updateTempTypes(Operation& fn);

/// Floating-point operations evaluated per cell by the apply body.
int countFlops(const Operation& apply);

bool isFlop(const std::string& opName);

}  // namespace sf::stencil
