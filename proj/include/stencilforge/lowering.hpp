#pragma once

#include <array>
#include <string>
#include <vector>

#include "stencilforge/ir.hpp"

namespace sf::lowering {

enum class LoopMode { Cpu, Gpu };

/// Replaces every stencil.apply (with its loads and stores) by par.for nests
/// of mem.load/mem.store. Arrays both read and written by one apply are read
/// through a mem.snapshot taken before the loops.
IRModule lowerStencilToLoops(IRModule device, LoopMode mode);

/// Splits each par.for into a par.for over tile origins and serial intra-tile
/// loops. Missing sizes count as 1, extra sizes are ignored.
IRModule tileParallelLoops(IRModule m, const std::vector<int64_t>& sizes);

enum class Placement { Naive, Optimized };

struct ModulePair {
  IRModule host;
  IRModule device;
};

/// Inserts dev.* ops around the host's calls into the device module.
ModulePair placeDeviceData(IRModule host, IRModule device, Placement strategy);

struct RankInfo {
  int id = 0;
  int p = 0;
  int q = 0;
  Bounds interior;  // global coordinates
  Bounds local;     // interior plus halo, clipped to the domain
};

struct HaloMessage {
  int swap = 0;
  int src = 0;
  int dst = 0;
  Bounds box;  // global coordinates, inside the sender's interior
};

struct SwapInfo {
  int id = 0;
  int load = 0;  // ordinal of the stencil.load it feeds, in walk order
  std::string array;
  std::vector<HaloMessage> messages;
};

/// Block decomposition of the device domain over a P x Q process grid.
struct DecompositionPlan {
  int P = 1;
  int Q = 1;
  int gridRows = 1;  // ranks along dim 0; equals P*Q for rank-1 domains
  int gridCols = 1;  // ranks along dim 1
  std::vector<int64_t> extents;
  std::vector<int64_t> haloLow;
  std::vector<int64_t> haloHigh;
  std::vector<RankInfo> ranks;
  std::vector<SwapInfo> swaps;

  int numRanks() const { return gridRows * gridCols; }
  /// Rank at grid position (p, q), or -1 outside the grid.
  int rankAt(int p, int q) const {
    if (p < 0 || q < 0 || p >= gridRows || q >= gridCols) return -1;
    return p * gridCols + q;
  }
  const HaloMessage* message(int swap, int src, int dst) const;
};

/// Builds the plan from the device module's arrays and applies. Swap ids
/// follow the walk order of the stencil.load ops that need a halo.
DecompositionPlan planDecomposition(const IRModule& device, int P, int Q);

/// Cells of `apply` a rank evaluates: the apply bounds restricted to points
/// whose stored cells fall inside `interior`.
Bounds rankApplyBounds(const Operation& apply, const Bounds& interior);

struct DmpResult {
  IRModule module;
  DecompositionPlan plan;
};

/// Tags device functions with the grid and inserts dmp.halo_swap before every
/// stencil.load whose reads cross a rank boundary.
DmpResult lowerToDmp(IRModule device, int P, int Q);

/// Expands each dmp.halo_swap into msg.send ops followed by msg.recv ops,
/// one per neighbour direction that carries a message in the plan.
IRModule lowerDmpToMsg(IRModule m, const DecompositionPlan& plan);

/// Neighbour directions in exchange order: faces along dim 0, faces along
/// dim 1, then corners.
const std::vector<std::array<int, 2>>& exchangeDirections();

/// Message tag for a swap and the sender-to-receiver direction.
int64_t haloTag(int swap, std::array<int, 2> dir);

/// Tag distance between two executions of the same swap.
int64_t haloTagStride(const DecompositionPlan& plan);

}  // namespace sf::lowering
