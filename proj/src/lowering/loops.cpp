#include <algorithm>
#include <unordered_set>

#include "stencilforge/lowering.hpp"
#include "stencilforge/stencil.hpp"

namespace sf::lowering {

namespace {

Value* shifted(OpBuilder& b, Value* i, int64_t c) {
  if (c == 0) return i;
  return b.create("arith.addi", {i, b.constantIndex(c)}, {Type::index()})->result();
}

std::vector<Operation*> usersOf(Operation& root, const Value* v) {
  std::vector<Operation*> out;
  walk(root, [&](Operation& op) {
    if (std::find(op.operands().begin(), op.operands().end(), v) != op.operands().end()) out.push_back(&op);
  });
  return out;
}

struct Input {
  Value* array = nullptr;  // null for scalar operands
  IntList origin;
  Value* scalar = nullptr;
};

void lowerApply(Operation& fn, Operation* apply, LoopMode mode) {
  const Region& body = apply->region();
  const size_t rank = apply->boundsAttr("bounds").rank();

  std::vector<Operation*> stores;
  for (const auto& r : apply->results())
    for (Operation* user : usersOf(fn, r.get()))
      if (user->name() == "stencil.store") stores.push_back(user);
  std::unordered_set<const Value*> written;
  for (Operation* s : stores) written.insert(s->operand(1));

  OpBuilder b = OpBuilder::before(*apply);
  std::vector<Input> inputs;
  std::map<const Value*, Bounds> snapBox;
  for (Value* v : apply->operands()) {
    Input in;
    const Operation* def = v->definingOp();
    if (def && def->name() == "stencil.load") {
      in.array = def->operand(0);
      in.origin = def->intListAttr("origin");
      if (written.count(in.array)) {
        Bounds box = v->type.bounds.shifted(in.origin);
        auto it = snapBox.find(in.array);
        snapBox[in.array] = it == snapBox.end() ? box : it->second.hull(box);
      }
    } else {
      in.scalar = v;
    }
    inputs.push_back(std::move(in));
  }
  std::map<const Value*, Value*> snapshot;
  for (const auto& [array, box] : snapBox) {
    Value* arr = const_cast<Value*>(array);
    Operation* snap = b.create("mem.snapshot", {arr}, {arr->type}, {{"box", box}});
    snap->loc = apply->loc;
    snapshot[array] = snap->result();
  }
  for (auto& in : inputs)
    if (in.array && snapshot.count(in.array)) in.array = snapshot[in.array];

  // one nest per distinct store region
  std::vector<Bounds> regions;
  for (Operation* s : stores)
    if (std::find(regions.begin(), regions.end(), s->boundsAttr("bounds")) == regions.end())
      regions.push_back(s->boundsAttr("bounds"));

  for (const Bounds& box : regions) {
    std::vector<Value*> ivs;
    Operation* top = nullptr;
    OpBuilder inner = b;
    if (mode == LoopMode::Gpu) {
      top = b.create("par.for", {}, {}, {{"bounds", box}, {"steps", IntList(rank, 1)}}, 1);
      for (size_t d = 0; d < rank; ++d) ivs.push_back(top->region().addArgument(Type::index()));
      inner = OpBuilder::atEnd(top->region());
    } else {
      top = b.create("par.for", {}, {}, {{"bounds", Bounds({box[0]})}, {"steps", IntList{1}}}, 1);
      ivs.push_back(top->region().addArgument(Type::index()));
      inner = OpBuilder::atEnd(top->region());
      for (size_t d = 1; d < rank; ++d) {
        Value* lb = inner.constantIndex(box.lb(d));
        Value* ub = inner.constantIndex(box.ub(d) - 1);
        Value* step = inner.constantIndex(1);
        Operation* loop = inner.create("loop.for", {lb, ub, step}, {}, {}, 1);
        ivs.push_back(loop->region().addArgument(Type::index()));
        inner = OpBuilder::atEnd(loop->region());
      }
    }
    top->loc = apply->loc;

    ValueMapping map;
    for (size_t k = 0; k < inputs.size(); ++k)
      if (inputs[k].scalar) map.map(body.arg(k), inputs[k].scalar);
    for (const auto& op : body.ops()) {
      if (op->name() == "stencil.access") {
        const Input& in = inputs[op->operand(0)->index()];
        const IntList& off = op->intListAttr("offset");
        std::vector<Value*> operands{in.array};
        for (size_t d = 0; d < rank; ++d) operands.push_back(shifted(inner, ivs[d], off[d] + in.origin[d]));
        map.map(op->result(), inner.create("mem.load", operands, {Type::f64()})->result());
      } else if (op->name() == "stencil.index") {
        map.map(op->result(), ivs[op->intAttr("dim")]);
      } else if (op->name() == "stencil.return") {
        for (Operation* s : stores) {
          if (!(s->boundsAttr("bounds") == box)) continue;
          const IntList& origin = s->intListAttr("origin");
          Value* v = map.lookupOrSelf(op->operand(s->operand(0)->index()));
          std::vector<Value*> operands{v, s->operand(1)};
          for (size_t d = 0; d < rank; ++d) operands.push_back(shifted(inner, ivs[d], origin[d]));
          inner.create("mem.store", operands)->loc = s->loc;
        }
      } else {
        inner.insert(cloneOp(*op, map));
      }
    }
    eliminateDeadCode(*top);
  }

  for (Operation* s : stores) s->parentRegion()->remove(s);
  apply->parentRegion()->remove(apply);
}

}  // namespace

IRModule lowerStencilToLoops(IRModule device, LoopMode mode) {
  for (auto& fn : device.functions()) {
    std::vector<Operation*> applies;
    walk(*fn, [&](Operation& op) {
      if (op.name() == "stencil.apply") applies.push_back(&op);
    });
    for (Operation* apply : applies) lowerApply(*fn, apply, mode);
    eliminateDeadCode(*fn);
  }
  return device;
}

IRModule tileParallelLoops(IRModule m, const std::vector<int64_t>& sizes) {
  for (int64_t s : sizes)
    if (s < 1) throw InvalidTileSize("tile size " + std::to_string(s) + " is not positive");
  for (auto& fn : m.functions()) {
    std::vector<Operation*> loops;
    walk(*fn, [&](Operation& op) {
      if (op.name() == "par.for") loops.push_back(&op);
    });
    for (Operation* loop : loops) {
      const Bounds box = loop->boundsAttr("bounds");
      const IntList steps = loop->intListAttr("steps");
      const size_t rank = box.rank();
      IntList tile(rank, 1);
      for (size_t d = 0; d < rank && d < sizes.size(); ++d) tile[d] = sizes[d];
      bool unitSteps = std::all_of(steps.begin(), steps.end(), [](int64_t s) { return s == 1; });
      if (!unitSteps || std::all_of(tile.begin(), tile.end(), [](int64_t s) { return s == 1; })) continue;

      OpBuilder b = OpBuilder::before(*loop);
      Operation* outer = b.create("par.for", {}, {}, {{"bounds", box}, {"steps", tile}}, 1);
      outer->loc = loop->loc;
      std::vector<Value*> starts;
      for (size_t d = 0; d < rank; ++d) starts.push_back(outer->region().addArgument(Type::index()));
      OpBuilder inner = OpBuilder::atEnd(outer->region());
      ValueMapping map;
      for (size_t d = 0; d < rank; ++d) {
        if (tile[d] == 1) {
          map.map(loop->region().arg(d), starts[d]);
          continue;
        }
        Value* last = inner.create("arith.addi", {starts[d], inner.constantIndex(tile[d] - 1)}, {Type::index()})->result();
        Value* ub = inner.create("arith.minsi", {last, inner.constantIndex(box.ub(d) - 1)}, {Type::index()})->result();
        Operation* l = inner.create("loop.for", {starts[d], ub, inner.constantIndex(1)}, {}, {}, 1);
        map.map(loop->region().arg(d), l->region().addArgument(Type::index()));
        inner = OpBuilder::atEnd(l->region());
      }
      for (const auto& op : loop->region().ops()) inner.insert(cloneOp(*op, map));
      loop->parentRegion()->remove(loop);
    }
  }
  return m;
}

}  // namespace sf::lowering
