#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "stencilforge/ir.hpp"
#include "stencilforge/stencil.hpp"

namespace sf::discovery {

/// One counted loop.for of the program.
struct LoopNestInfo {
  Operation* op = nullptr;
  Value* iv = nullptr;
  int64_t lb = 0;
  int64_t ub = 0;  // inclusive, as in the source
  int64_t step = 1;
  bool constantBounds = false;
  int parent = -1;  // index into the gathered list
  std::vector<int> children;
  int depth = 1;  // outermost loops have depth 1

  bool eligible() const { return constantBounds && step == 1; }
  int64_t tripCount() const { return ub >= lb ? ub - lb + 1 : 0; }
};

/// Pre-order list of every loop.for in every function.
std::vector<LoopNestInfo> gatherProgramLoops(const IRModule& m);

struct DimIndex {
  int loop = -1;       // index into the gathered list
  int64_t offset = 0;  // source-level constant, e.g. 0 for data(j,i) and -1 for data(j,i-1)
};

struct StoreIndexing {
  Operation* store = nullptr;
  Value* target = nullptr;
  std::string array;
  std::vector<DimIndex> dims;
};

/// Ineligibility reasons reported by analyzeStore.
namespace reason {
inline constexpr const char* NonAffine = "non-affine";
inline constexpr const char* RepeatedLoopVar = "repeated-loop-var";
inline constexpr const char* LoopInvariantIndex = "loop-invariant-index";
inline constexpr const char* StridedLoop = "strided-loop";
inline constexpr const char* NonConstantBounds = "non-constant-bounds";
inline constexpr const char* ReductionLoop = "reduction-loop";
inline constexpr const char* OuterLoopIndex = "outer-loop-index";
inline constexpr const char* NotInLoop = "not-in-loop";
inline constexpr const char* NonStencilRead = "non-stencil-read";
inline constexpr const char* NestDependence = "nest-dependence";
inline constexpr const char* OutOfRangeAccess = "out-of-range-access";
inline constexpr const char* EmptyIterationSpace = "empty-iteration-space";
}  // namespace reason

struct StoreAnalysis {
  std::optional<StoreIndexing> indexing;
  std::string reason;  // empty when eligible

  bool eligible() const { return indexing.has_value(); }
};

StoreAnalysis analyzeStore(const Operation& store, const std::vector<LoopNestInfo>& loops);

/// Reads of one array inside a candidate's right-hand side.
struct ArrayRead {
  Value* array = nullptr;
  std::string name;
  std::set<stencil::AccessOffset> offsets;
};

struct StencilCandidate {
  StoreIndexing indexing;
  std::vector<ArrayRead> reads;       // first-use order
  std::vector<Value*> scalarInputs;   // rank-0 loads and outer f64 values
  std::vector<Operation*> rhs;        // right-hand side slice in program order
  std::vector<int> loops;             // loop driving each stencil dimension
  Bounds bounds;                      // [0, trip) per dimension
  stencil::AccessOffset origin;       // zero-based array coordinate of stencil index 0
  std::map<const Operation*, stencil::AccessOffset> accessOf;  // offset of each array load in `rhs`
  bool readsOwnOutput = false;
};

/// Builds the reads map of an eligible store. Offsets are relative to the
/// store's index in each dimension. Throws NonStencilRead when a read is not
/// indexed by the same nest with constant offsets.
StencilCandidate extractAccessOffsets(const StoreIndexing& indexing, const std::vector<LoopNestInfo>& loops);

/// Materializes loads, apply and store for `c` at `b`.
std::vector<Operation*> buildStencil(const StencilCandidate& c, const std::vector<LoopNestInfo>& loops, OpBuilder& b);

struct DiscoveryReport {
  int stencils = 0;
  std::vector<Diagnostic> diagnostics;
};

IRModule discoverStencils(IRModule m, DiscoveryReport* report = nullptr);

IRModule mergeStencils(IRModule m);

struct ExtractedModules {
  IRModule host;
  IRModule device;
};

ExtractedModules extractStencilModule(IRModule m);

/// Name of the array behind an alloc or from_ptr value, or "".
std::string arrayName(const Value* v);

}  // namespace sf::discovery
