#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include "stencilforge/discovery.hpp"

namespace sf::discovery {

namespace {

std::optional<int64_t> constantIndex(const Value* v) {
  const Operation* def = v->definingOp();
  if (!def || def->name() != "arith.constant") return std::nullopt;
  if (const int64_t* c = def->attr<int64_t>("value")) return *c;
  return std::nullopt;
}

/// var + c decomposition of an index value; var is null for constants.
struct Affine {
  Value* var = nullptr;
  int64_t offset = 0;
};

std::optional<Affine> decompose(Value* v) {
  if (v->isBlockArgument()) return Affine{v, 0};
  const Operation* def = v->definingOp();
  if (def->name() == "arith.constant") {
    if (auto c = constantIndex(v)) return Affine{nullptr, *c};
    return std::nullopt;
  }
  if (def->name() == "arith.addi" || def->name() == "arith.subi") {
    auto a = decompose(def->operand(0));
    auto b = decompose(def->operand(1));
    if (!a || !b) return std::nullopt;
    if (def->name() == "arith.addi") {
      if (a->var && b->var) return std::nullopt;
      return Affine{a->var ? a->var : b->var, a->offset + b->offset};
    }
    if (b->var) return std::nullopt;
    return Affine{a->var, a->offset - b->offset};
  }
  return std::nullopt;
}

IntList declaredLower(const Value* array) {
  if (const Operation* def = array->definingOp())
    if (const IntList* lower = def->attr<IntList>("lower")) return *lower;
  return IntList(array->type.rank(), 0);
}

std::unordered_map<const Operation*, int> loopIndex(const std::vector<LoopNestInfo>& loops) {
  std::unordered_map<const Operation*, int> idx;
  for (size_t i = 0; i < loops.size(); ++i) idx[loops[i].op] = static_cast<int>(i);
  return idx;
}

/// Enclosing loops of `op`, innermost first, as indices into `loops`.
std::vector<int> enclosingLoops(const Operation& op, const std::unordered_map<const Operation*, int>& idx) {
  std::vector<int> out;
  for (Operation* p : ancestors(op)) {
    auto it = idx.find(p);
    if (it != idx.end()) out.push_back(it->second);
  }
  return out;
}

int loopOfIv(const Value* v, const std::vector<LoopNestInfo>& loops) {
  for (size_t i = 0; i < loops.size(); ++i)
    if (loops[i].iv == v) return static_cast<int>(i);
  return -1;
}

}  // namespace

std::string arrayName(const Value* v) {
  if (!v) return "";
  if (const Operation* def = v->definingOp())
    if (const std::string* n = def->attr<std::string>("name")) return *n;
  return "";
}

std::vector<LoopNestInfo> gatherProgramLoops(const IRModule& m) {
  std::vector<LoopNestInfo> loops;
  std::unordered_map<const Operation*, int> idx;
  for (const auto& fn : m.functions()) {
    walk(*fn, [&](Operation& op) {
      if (op.name() != "loop.for") return;
      LoopNestInfo info;
      info.op = &op;
      info.iv = op.region().numArgs() ? op.region().arg(0) : nullptr;
      auto lb = constantIndex(op.operand(0));
      auto ub = constantIndex(op.operand(1));
      auto step = constantIndex(op.operand(2));
      info.constantBounds = lb && ub && step;
      info.lb = lb.value_or(0);
      info.ub = ub.value_or(0);
      info.step = step.value_or(0);
      for (Operation* p = op.parentOp(); p; p = p->parentOp()) {
        auto it = idx.find(p);
        if (it == idx.end()) continue;
        info.parent = it->second;
        info.depth = loops[it->second].depth + 1;
        break;
      }
      int self = static_cast<int>(loops.size());
      if (info.parent >= 0) loops[info.parent].children.push_back(self);
      idx[&op] = self;
      loops.push_back(std::move(info));
    });
  }
  return loops;
}

StoreAnalysis analyzeStore(const Operation& store, const std::vector<LoopNestInfo>& loops) {
  auto fail = [](const char* why) { return StoreAnalysis{std::nullopt, why}; };
  auto idx = loopIndex(loops);
  std::vector<int> enclosing = enclosingLoops(store, idx);
  if (enclosing.empty()) return fail(reason::NotInLoop);

  Value* target = store.operand(1);
  size_t rank = store.numOperands() - 2;
  if (rank == 0) return fail(reason::ReductionLoop);
  IntList lower = declaredLower(target);

  StoreIndexing out;
  out.store = const_cast<Operation*>(&store);
  out.target = target;
  out.array = arrayName(target);
  std::vector<int> used;
  for (size_t d = 0; d < rank; ++d) {
    auto a = decompose(store.operand(2 + d));
    if (!a) return fail(reason::NonAffine);
    if (!a->var) return fail(reason::LoopInvariantIndex);
    int loop = loopOfIv(a->var, loops);
    if (loop < 0) return fail(reason::NonAffine);
    if (std::find(used.begin(), used.end(), loop) != used.end()) return fail(reason::RepeatedLoopVar);
    used.push_back(loop);
    out.dims.push_back({loop, a->offset + lower[d]});
  }
  if (enclosing.size() < rank) return fail(reason::NonAffine);
  for (size_t k = 0; k < rank; ++k)
    if (std::find(used.begin(), used.end(), enclosing[k]) == used.end()) return fail(reason::ReductionLoop);
  for (int loop : used) {
    if (!loops[loop].constantBounds) return fail(reason::NonConstantBounds);
    if (loops[loop].step != 1) return fail(reason::StridedLoop);
  }
  return {std::move(out), ""};
}

StencilCandidate extractAccessOffsets(const StoreIndexing& indexing, const std::vector<LoopNestInfo>& loops) {
  StencilCandidate c;
  c.indexing = indexing;
  const size_t rank = indexing.dims.size();
  IntList lower = declaredLower(indexing.target);
  std::vector<Interval> dims;
  const Operation* root = nullptr;
  for (size_t d = 0; d < rank; ++d) {
    const LoopNestInfo& loop = loops[indexing.dims[d].loop];
    c.loops.push_back(indexing.dims[d].loop);
    dims.push_back({0, loop.tripCount()});
    c.origin.push_back(loop.lb + indexing.dims[d].offset - lower[d]);
  }
  c.bounds = Bounds(std::move(dims));
  for (int l : c.loops)
    if (!root || loops[l].op->isAncestorOf(root)) root = loops[l].op;

  // zero-based store offset per dimension, which each read is measured against
  std::vector<int64_t> storeOffset(rank);
  for (size_t d = 0; d < rank; ++d) storeOffset[d] = indexing.dims[d].offset - lower[d];

  std::unordered_set<const Operation*> inSlice;
  std::unordered_set<const Value*> visited;
  std::unordered_set<const Value*> scalarAllocs;
  std::vector<Value*> work{indexing.store->operand(0)};
  while (!work.empty()) {
    Value* v = work.back();
    work.pop_back();
    if (!visited.insert(v).second) continue;
    Operation* def = v->definingOp();
    if (v->isBlockArgument()) {
      int loop = loopOfIv(v, loops);
      if (loop >= 0 && std::find(c.loops.begin(), c.loops.end(), loop) != c.loops.end()) continue;
      if (v->type.kind == TypeKind::F64) {
        c.scalarInputs.push_back(v);
        continue;
      }
      throw NonStencilRead("right-hand side uses an index that is not driven by the stencil nest");
    }
    if (!root->isAncestorOf(def)) {
      if (v->type.kind == TypeKind::F64) {
        c.scalarInputs.push_back(v);
        continue;
      }
      if (def->name() == "arith.constant") continue;
      throw NonStencilRead("right-hand side uses index value '" + def->name() + "' defined outside the nest");
    }
    if (def->name() == "mem.load") {
      Value* array = def->operand(0);
      size_t r = array->type.rank();
      if (r == 0) {
        if (scalarAllocs.insert(array).second) c.scalarInputs.push_back(v);
        inSlice.insert(def);
        continue;
      }
      std::string name = arrayName(array);
      if (r != rank)
        throw NonStencilRead("read of '" + name + "' has rank " + std::to_string(r) + " under a rank " +
                             std::to_string(rank) + " store");
      stencil::AccessOffset off(rank);
      for (size_t d = 0; d < rank; ++d) {
        auto a = decompose(def->operand(1 + d));
        if (!a || !a->var || a->var != loops[c.loops[d]].iv)
          throw NonStencilRead("read of '" + name + "' in dimension " + std::to_string(d) +
                               " is not indexed by the store's loop variable plus a constant");
        off[d] = a->offset - storeOffset[d];
      }
      auto it = std::find_if(c.reads.begin(), c.reads.end(), [&](const ArrayRead& ar) { return ar.array == array; });
      if (it == c.reads.end()) {
        c.reads.push_back({array, name, {}});
        it = std::prev(c.reads.end());
      }
      it->offsets.insert(off);
      c.accessOf[def] = off;
      inSlice.insert(def);
      if (array == indexing.target) c.readsOwnOutput = true;
      continue;
    }
    const OpInfo* info = lookupOp(def->name());
    if (!info || !info->pure || def->dialect() != "arith")
      throw NonStencilRead("right-hand side contains unsupported operation '" + def->name() + "'");
    inSlice.insert(def);
    for (Value* operand : def->operands()) work.push_back(operand);
  }

  // program order, not discovery order
  walk(*const_cast<Operation*>(root), [&](Operation& op) {
    if (inSlice.count(&op)) c.rhs.push_back(&op);
  });
  // first-use order for reads
  std::vector<ArrayRead> ordered;
  for (Operation* op : c.rhs) {
    if (op->name() != "mem.load" || op->operand(0)->type.rank() == 0) continue;
    for (auto& ar : c.reads)
      if (ar.array == op->operand(0) &&
          std::none_of(ordered.begin(), ordered.end(), [&](const ArrayRead& o) { return o.array == ar.array; }))
        ordered.push_back(ar);
  }
  c.reads = std::move(ordered);
  std::stable_sort(c.scalarInputs.begin(), c.scalarInputs.end(), [&](Value* a, Value* b) {
    auto pos = [&](Value* v) {
      auto it = std::find(c.rhs.begin(), c.rhs.end(), v->definingOp());
      return it == c.rhs.end() ? -1 : static_cast<int>(it - c.rhs.begin());
    };
    return pos(a) < pos(b);
  });
  return c;
}

std::vector<Operation*> buildStencil(const StencilCandidate& c, const std::vector<LoopNestInfo>& loops, OpBuilder& b) {
  std::vector<Operation*> created;
  auto make = [&](std::string name, std::vector<Value*> operands, std::vector<Type> results,
                  std::map<std::string, Attribute> attrs = {}, unsigned regions = 0) {
    Operation* op = b.create(std::move(name), std::move(operands), std::move(results), std::move(attrs), regions);
    op->loc = c.indexing.store->loc;
    created.push_back(op);
    return op;
  };

  std::vector<Value*> scalars;
  for (Value* v : c.scalarInputs) {
    const Operation* def = v->definingOp();
    if (def && def->name() == "mem.load" && def->operand(0)->type.rank() == 0)
      scalars.push_back(make("mem.load", {def->operand(0)}, {Type::f64()})->result());
    else
      scalars.push_back(v);
  }

  std::vector<std::vector<stencil::AccessOffset>> offsets;
  for (const auto& r : c.reads) offsets.emplace_back(r.offsets.begin(), r.offsets.end());
  stencil::InferredBounds inferred = stencil::inferBounds(c.bounds, offsets);

  std::vector<Value*> operands;
  for (size_t k = 0; k < c.reads.size(); ++k)
    operands.push_back(make("stencil.load", {c.reads[k].array}, {Type::temp(inferred.inputs[k])},
                            {{"origin", c.origin}})
                           ->result());
  for (Value* s : scalars) operands.push_back(s);

  Operation* apply = make("stencil.apply", operands, {Type::temp(c.bounds)}, {{"bounds", c.bounds}}, 1);
  Region& body = apply->region();
  for (Value* v : operands) body.addArgument(v->type);

  ValueMapping map;
  OpBuilder inner = OpBuilder::atEnd(body);
  for (size_t k = 0; k < c.scalarInputs.size(); ++k) map.map(c.scalarInputs[k], body.arg(c.reads.size() + k));

  std::vector<std::optional<Value*>> ivs(c.loops.size());
  auto ivValue = [&](size_t d) {
    if (!ivs[d]) {
      Value* i = inner.create("stencil.index", {}, {Type::index()}, {{"dim", static_cast<int64_t>(d)}})->result();
      ivs[d] = inner.create("arith.addi", {i, inner.constantIndex(loops[c.loops[d]].lb)}, {Type::index()})->result();
    }
    return *ivs[d];
  };
  auto resolve = [&](Value* v) {
    if (map.lookup(v)) return;
    for (size_t d = 0; d < c.loops.size(); ++d)
      if (loops[c.loops[d]].iv == v) {
        map.map(v, ivValue(d));
        return;
      }
    const Operation* def = v->definingOp();
    if (def && def->name() == "arith.constant") map.map(v, inner.insert(cloneOp(*def, map))->result());
  };

  for (Operation* op : c.rhs) {
    if (op->name() == "mem.load") {
      if (op->operand(0)->type.rank() == 0) {
        Value* array = op->operand(0);
        for (size_t k = 0; k < c.scalarInputs.size(); ++k) {
          const Operation* def = c.scalarInputs[k]->definingOp();
          if (def && def->name() == "mem.load" && def->operand(0) == array)
            map.map(op->result(), body.arg(c.reads.size() + k));
        }
        continue;
      }
      size_t k = 0;
      while (c.reads[k].array != op->operand(0)) ++k;
      Value* acc = inner.create("stencil.access", {body.arg(k)}, {Type::f64()}, {{"offset", c.accessOf.at(op)}})
                       ->result();
      map.map(op->result(), acc);
      continue;
    }
    for (Value* v : op->operands()) resolve(v);
    inner.insert(cloneOp(*op, map));
  }
  Value* stored = c.indexing.store->operand(0);
  resolve(stored);
  inner.create("stencil.return", {map.lookupOrSelf(stored)});

  make("stencil.store", {apply->result(), c.indexing.target}, {}, {{"bounds", c.bounds}, {"origin", c.origin}});
  return created;
}

namespace {

/// Removes `loop` and enclosing loops of `root`'s subtree that have become empty.
bool pruneEmptyLoops(Operation* loop) {
  std::vector<Operation*> inner;
  for (auto& op : loop->region().ops())
    if (op->name() == "loop.for") inner.push_back(op.get());
  for (Operation* op : inner) pruneEmptyLoops(op);
  eliminateDeadCode(*loop);
  if (!loop->region().empty()) return false;
  loop->parentRegion()->remove(loop);
  return true;
}

const char* checkCandidate(const StencilCandidate& c, const Operation& root) {
  if (c.bounds.empty()) return reason::EmptyIterationSpace;
  auto inRange = [&](const Value* array, const stencil::AccessOffset& off) {
    for (size_t d = 0; d < c.bounds.rank(); ++d) {
      int64_t lo = c.origin[d] + off[d];
      if (lo < 0 || lo + c.bounds.extent(d) > array->type.shape[d]) return false;
    }
    return true;
  };
  if (!inRange(c.indexing.target, stencil::AccessOffset(c.bounds.rank(), 0))) return reason::OutOfRangeAccess;
  for (const auto& r : c.reads)
    for (const auto& off : r.offsets)
      if (!inRange(r.array, off)) return reason::OutOfRangeAccess;

  std::unordered_set<const Value*> touched{c.indexing.target};
  for (const auto& r : c.reads) touched.insert(r.array);
  for (Value* s : c.scalarInputs)
    if (const Operation* def = s->definingOp(); def && def->name() == "mem.load") touched.insert(def->operand(0));
  std::unordered_set<const Operation*> slice(c.rhs.begin(), c.rhs.end());
  bool dependent = false;
  walk(root, [&](const Operation& op) {
    if (op.name() == "mem.store" && &op != c.indexing.store && touched.count(op.operand(1))) dependent = true;
    if (op.name() == "mem.load" && !slice.count(&op) && op.operand(0) == c.indexing.target) dependent = true;
    if (op.dialect() != "mem" && op.dialect() != "arith" && op.dialect() != "loop") dependent = true;
  });
  return dependent ? reason::NestDependence : nullptr;
}

}  // namespace

IRModule discoverStencils(IRModule m, DiscoveryReport* report) {
  DiscoveryReport local;
  DiscoveryReport& rep = report ? *report : local;
  std::vector<LoopNestInfo> loops = gatherProgramLoops(m);

  struct Plan {
    StencilCandidate candidate;
    Operation* root;
    Operation* fn;
  };
  std::vector<Plan> plans;
  for (auto& fn : m.functions()) {
    std::vector<Operation*> stores;
    walk(*fn, [&](Operation& op) {
      if (op.name() == "mem.store") stores.push_back(&op);
    });
    for (Operation* store : stores) {
      auto note = [&](const std::string& why) {
        rep.diagnostics.push_back({Severity::Note,
                                   "store to '" + arrayName(store->operand(1)) + "' kept as a loop: " + why, store->loc});
      };
      StoreAnalysis a = analyzeStore(*store, loops);
      if (!a.eligible()) {
        if (a.reason != reason::NotInLoop) note(a.reason);
        continue;
      }
      StencilCandidate c;
      try {
        c = extractAccessOffsets(*a.indexing, loops);
      } catch (const NonStencilRead& e) {
        note(std::string(reason::NonStencilRead) + " (" + e.what() + ")");
        continue;
      }
      Operation* root = nullptr;
      for (int l : c.loops)
        if (!root || loops[l].op->isAncestorOf(root)) root = loops[l].op;
      if (const char* why = checkCandidate(c, *root)) {
        note(why);
        continue;
      }
      plans.push_back({std::move(c), root, fn.get()});
    }
  }

  std::vector<Operation*> roots;
  std::vector<Operation*> fns;
  for (Plan& p : plans) {
    OpBuilder b = OpBuilder::before(*p.root);
    buildStencil(p.candidate, loops, b);
    Operation* store = p.candidate.indexing.store;
    if (p.candidate.readsOwnOutput)
      rep.diagnostics.push_back({Severity::Warning,
                                 "stencil on '" + p.candidate.indexing.array +
                                     "' reads the array it writes; it is evaluated with Jacobi semantics "
                                     "(all reads see the values from before the sweep)",
                                 store->loc});
    store->parentRegion()->remove(store);
    ++rep.stencils;
    if (std::find(roots.begin(), roots.end(), p.root) == roots.end()) roots.push_back(p.root);
    if (std::find(fns.begin(), fns.end(), p.fn) == fns.end()) fns.push_back(p.fn);
  }
  for (Operation* root : roots) {
    eliminateDeadCode(*root);
    pruneEmptyLoops(root);
  }
  for (Operation* fn : fns) {
    eliminateDeadCode(*fn);
    stencil::updateTempTypes(*fn);
  }
  return m;
}

}  // namespace sf::discovery
