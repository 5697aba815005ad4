#include <algorithm>
#include <unordered_map>
#include <unordered_set>

#include "stencilforge/discovery.hpp"

namespace sf::discovery {

namespace {

bool isStencilOp(const Operation& op) { return op.dialect() == "stencil"; }

bool isScalarLoad(const Operation& op) { return op.name() == "mem.load" && op.operand(0)->type.rank() == 0; }

bool inSegment(const Operation& op) { return isStencilOp(op) || isScalarLoad(op); }

/// Every user of `v` under `root`.
std::vector<Operation*> usersOf(Operation& root, const Value* v) {
  std::vector<Operation*> out;
  walk(root, [&](Operation& op) {
    for (const Value* o : op.operands())
      if (o == v) {
        out.push_back(&op);
        return;
      }
  });
  return out;
}

class Merger {
 public:
  explicit Merger(Operation& fn) : fn_(fn) {}

  void run() { visitRegions(fn_); }

 private:
  void visitRegions(Operation& op) {
    for (size_t r = 0; r < op.numRegions(); ++r) {
      Region& region = op.region(r);
      if (op.name() != "stencil.apply") mergeRegion(region);
      for (auto& inner : region.ops()) visitRegions(*inner);
    }
  }

  void mergeRegion(Region& region) {
    std::vector<Operation*> seg;
    auto flush = [&] {
      if (!seg.empty()) mergeSegment(seg);
      seg.clear();
    };
    std::vector<Operation*> ops;
    for (auto& op : region.ops()) ops.push_back(op.get());
    for (Operation* op : ops) {
      if (inSegment(*op)) seg.push_back(op);
      else flush();
    }
    flush();
  }

  /// Arrays read through stencil.load operands of `apply`.
  static std::unordered_set<const Value*> readArrays(const Operation& apply) {
    std::unordered_set<const Value*> out;
    for (const Value* v : apply.operands())
      if (const Operation* def = v->definingOp(); def && def->name() == "stencil.load") out.insert(def->operand(0));
    return out;
  }

  bool onlyStoredBy(const Operation& apply) {
    for (const auto& r : apply.results())
      for (Operation* user : usersOf(fn_, r.get()))
        if (user->name() != "stencil.store") return false;
    return true;
  }

  void mergeSegment(const std::vector<Operation*>& seg) {
    std::vector<std::vector<Operation*>> groups;
    std::vector<Operation*> current;
    size_t groupStart = 0;
    auto close = [&] {
      if (current.size() > 1) groups.push_back(current);
      current.clear();
    };
    for (size_t i = 0; i < seg.size(); ++i) {
      Operation* a = seg[i];
      if (a->name() != "stencil.apply") continue;
      if (!onlyStoredBy(*a)) {
        close();
        continue;
      }
      bool joins = !current.empty() && a->boundsAttr("bounds") == current.front()->boundsAttr("bounds");
      if (joins) {
        auto reads = readArrays(*a);
        std::unordered_set<const Value*> writes;
        for (const auto& r : a->results())
          for (Operation* user : usersOf(fn_, r.get())) writes.insert(user->operand(1));
        std::unordered_set<const Value*> members;
        for (Operation* m : current)
          for (const auto& r : m->results()) members.insert(r.get());
        for (size_t k = groupStart; k < i && joins; ++k) {
          const Operation* op = seg[k];
          if (op->name() == "stencil.store") {
            if (reads.count(op->operand(1)) || writes.count(op->operand(1)) || !members.count(op->operand(0)))
              joins = false;
          } else if (op->name() == "stencil.load") {
            for (Operation* user : usersOf(fn_, op->result()))
              if (user != a && std::find(current.begin(), current.end(), user) == current.end()) joins = false;
          }
        }
      }
      if (!joins) {
        close();
        groupStart = i;
      }
      current.push_back(a);
    }
    close();
    for (const auto& g : groups) mergeGroup(g);
  }

  void mergeGroup(const std::vector<Operation*>& group) {
    Operation* first = group.front();
    OpBuilder b = OpBuilder::before(*first);

    // deduplicated operands: temps by (array, origin), scalars by value
    std::vector<Value*> operands;
    std::map<std::pair<const Value*, IntList>, size_t> tempSlot;
    std::unordered_map<const Value*, size_t> scalarSlot;
    std::vector<std::vector<size_t>> slotOf;
    for (Operation* apply : group) {
      std::vector<size_t> slots;
      for (Value* v : apply->operands()) {
        const Operation* def = v->definingOp();
        if (def && def->name() == "stencil.load") {
          auto key = std::make_pair(def->operand(0), def->intListAttr("origin"));
          auto it = tempSlot.find(key);
          if (it == tempSlot.end()) {
            Operation* load = b.create("stencil.load", {def->operand(0)}, {v->type}, {{"origin", key.second}});
            load->loc = def->loc;
            it = tempSlot.emplace(key, operands.size()).first;
            operands.push_back(load->result());
          }
          slots.push_back(it->second);
        } else {
          auto it = scalarSlot.find(v);
          if (it == scalarSlot.end()) {
            if (def && isScalarLoad(*def) && def->parentRegion() == first->parentRegion()) {
              // keep the scalar load ahead of its new user
              auto owned = def->parentRegion()->remove(const_cast<Operation*>(def));
              Region& r = *first->parentRegion();
              r.insert(r.find(first), std::move(owned));
            }
            it = scalarSlot.emplace(v, operands.size()).first;
            operands.push_back(v);
          }
          slots.push_back(it->second);
        }
      }
      slotOf.push_back(std::move(slots));
    }

    std::vector<Type> results;
    for (Operation* apply : group)
      for (const auto& r : apply->results()) results.push_back(r->type);
    Operation* merged = b.create("stencil.apply", operands, results, {{"bounds", first->boundsAttr("bounds")}}, 1);
    merged->loc = first->loc;
    Region& body = merged->region();
    for (Value* v : operands) body.addArgument(v->type);

    std::vector<Value*> returned;
    OpBuilder inner = OpBuilder::atEnd(body);
    for (size_t g = 0; g < group.size(); ++g) {
      ValueMapping map;
      const Region& old = group[g]->region();
      for (size_t k = 0; k < old.numArgs(); ++k) map.map(old.arg(k), body.arg(slotOf[g][k]));
      for (const auto& op : old.ops()) {
        if (op->name() == "stencil.return") {
          for (Value* v : op->operands()) returned.push_back(map.lookupOrSelf(v));
          continue;
        }
        inner.insert(cloneOp(*op, map));
      }
    }
    inner.create("stencil.return", returned);

    size_t next = 0;
    std::vector<Operation*> stores;
    for (Operation* apply : group) {
      for (const auto& r : apply->results()) {
        for (Operation* user : usersOf(fn_, r.get())) stores.push_back(user);
        replaceAllUses(fn_, r.get(), merged->result(next++));
      }
    }
    Region& region = *merged->parentRegion();
    for (Operation* apply : group) region.remove(apply);
    std::stable_sort(stores.begin(), stores.end(), [&](Operation* x, Operation* y) {
      return std::distance(region.ops().begin(), region.find(x)) < std::distance(region.ops().begin(), region.find(y));
    });
    std::vector<std::unique_ptr<Operation>> owned;
    for (Operation* st : stores) owned.push_back(region.remove(st));
    auto after = std::next(region.find(merged));
    for (auto& st : owned) region.insert(after, std::move(st));
  }

  Operation& fn_;
};

}  // namespace

IRModule mergeStencils(IRModule m) {
  for (auto& fn : m.functions()) {
    Merger(*fn).run();
    eliminateDeadCode(*fn);
    stencil::updateTempTypes(*fn);
  }
  return m;
}

}  // namespace sf::discovery
