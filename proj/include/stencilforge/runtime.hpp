#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "stencilforge/ir.hpp"
#include "stencilforge/lowering.hpp"

namespace sf::runtime {

/// Dense f64 array, column-major (dimension 0 varies fastest).
struct GridBuffer {
  std::vector<int64_t> extents;
  std::vector<int64_t> lower;  // declared lower bounds, metadata only
  std::vector<double> data;

  GridBuffer() = default;
  explicit GridBuffer(std::vector<int64_t> ext, double fill = 0.0);

  size_t rank() const { return extents.size(); }
  int64_t size() const;
  int64_t linear(const std::vector<int64_t>& index) const;
  double& at(const std::vector<int64_t>& index) { return data[linear(index)]; }
  double at(const std::vector<int64_t>& index) const { return data[linear(index)]; }
};

/// Same extents and byte-identical payload.
bool bitwiseEqual(const GridBuffer& a, const GridBuffer& b);

using GridMap = std::map<std::string, GridBuffer>;

bool bitwiseEqual(const GridMap& a, const GridMap& b);

/// SplitMix64 step: advances `state` and returns the next output.
uint64_t splitmix64(uint64_t& state);

/// `zeros`, `ones`, `gradient` (value = column-major linear index) or
/// `seeded:<n>` (SplitMix64 from seed n, (z >> 11) * 2^-53 per cell in
/// column-major order).
GridBuffer makeGrid(const std::vector<int64_t>& extents, const std::string& init);

/// `.grid` encoding: "STENCILFORGE" + u32 version, u32 rank, u64 extents,
/// little-endian f64 payload.
std::string encodeGrid(const GridBuffer& g);
GridBuffer decodeGrid(const std::string& bytes);
void writeGrid(const std::string& path, const GridBuffer& g);
GridBuffer readGrid(const std::string& path);

struct TransferCounts {
  int64_t registers = 0;
  int64_t allocs = 0;
  int64_t copyIn = 0;
  int64_t copyOut = 0;
  int64_t frees = 0;
  int64_t bytesIn = 0;   // host to device, register counts once per execution
  int64_t bytesOut = 0;  // device to host, register counts once per execution
};

struct TransferStats {
  std::map<std::string, TransferCounts> arrays;

  TransferCounts total() const;
  bool empty() const;
};

struct ExecOptions {
  bool checked = false;  // trap any access outside the stored region
  int threads = 1;
  std::string entry;     // defaults to the host module's first function
  int64_t faultTagOffset = 0;  // added to rank 0's send tags (fault injection)
};

/// Reference executor. loop.for runs sequentially, par.for in lexicographic
/// order, stencil.apply reads value snapshots of its inputs.
GridMap runSerial(const IRModule& host, const IRModule* device, const GridMap& inputs,
                  const ExecOptions& opts = {});

/// par.for iterations and apply points are split into contiguous chunks over
/// a pool of `threads` workers.
GridMap runThreaded(const IRModule& host, const IRModule* device, const GridMap& inputs, int threads,
                    const ExecOptions& opts = {});

struct DeviceRun {
  GridMap outputs;
  TransferStats stats;
};

/// Host and device memory are separate; calls into the device module only see
/// registered or device-allocated buffers.
DeviceRun runDeviceSim(const IRModule& host, const IRModule& device, const GridMap& inputs,
                       const ExecOptions& opts = {});

/// One thread per rank; halo data moves only through matched messages.
GridMap runRanksSim(const IRModule& host, const IRModule& device, const GridMap& inputs,
                    const lowering::DecompositionPlan& plan, const ExecOptions& opts = {});

}  // namespace sf::runtime
