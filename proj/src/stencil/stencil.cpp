#include "stencilforge/stencil.hpp"

#include <algorithm>

namespace sf::stencil {

bool isFlop(const std::string& opName) {
  return opName == "arith.addf" || opName == "arith.subf" || opName == "arith.mulf" || opName == "arith.divf" ||
         opName == "arith.negf" || opName == "arith.powf";
}

int countFlops(const Operation& apply) {
  int n = 0;
  walk(apply, [&](const Operation& op) {
    if (isFlop(op.name())) ++n;
  });
  return n;
}

InferredBounds inferBounds(const Bounds& output, const std::vector<std::vector<AccessOffset>>& offsetsPerOperand) {
  InferredBounds r{output, {}};
  for (size_t k = 0; k < offsetsPerOperand.size(); ++k) {
    Bounds in = output;
    const auto& offs = offsetsPerOperand[k];
    if (!offs.empty()) {
      for (const auto& off : offs)
        if (off.size() != output.rank())
          throw RankMismatch("operand " + std::to_string(k) + " has an access of rank " + std::to_string(off.size()) +
                             " under an apply of rank " + std::to_string(output.rank()));
      for (size_t d = 0; d < output.rank(); ++d) {
        int64_t lo = offs.front()[d], hi = offs.front()[d];
        for (const auto& off : offs) {
          lo = std::min(lo, off[d]);
          hi = std::max(hi, off[d]);
        }
        in[d].lb = output.lb(d) + lo;
        in[d].ub = output.ub(d) + hi;
      }
    }
    r.inputs.push_back(std::move(in));
  }
  return r;
}

std::vector<std::vector<AccessOffset>> accessOffsets(const Operation& apply) {
  const Region& body = apply.region();
  std::vector<std::vector<AccessOffset>> offs(body.numArgs());
  walk(apply, [&](const Operation& op) {
    if (op.name() != "stencil.access") return;
    const Value* src = op.operand(0);
    for (size_t k = 0; k < body.numArgs(); ++k)
      if (body.arg(k) == src) {
        const IntList* o = op.attr<IntList>("offset");
        if (o) offs[k].push_back(*o);
      }
  });
  return offs;
}

InferredBounds inferBounds(const Operation& apply) {
  return inferBounds(apply.boundsAttr("bounds"), accessOffsets(apply));
}

void updateTempTypes(Operation& fn) {
  std::vector<Operation*> loads;
  walk(fn, [&](Operation& op) {
    if (op.name() == "stencil.load") loads.push_back(&op);
  });
  std::vector<Operation*> applies;
  walk(fn, [&](Operation& op) {
    if (op.name() == "stencil.apply") applies.push_back(&op);
  });
  for (Operation* load : loads) {
    Value* temp = load->result();
    Bounds need;
    std::vector<std::pair<Operation*, size_t>> uses;
    for (Operation* apply : applies) {
      for (size_t k = 0; k < apply->numOperands(); ++k) {
        if (apply->operand(k) != temp) continue;
        Bounds in = inferBounds(*apply).inputs[k];
        need = need.rank() == 0 ? in : need.hull(in);
        uses.emplace_back(apply, k);
      }
    }
    if (uses.empty()) continue;
    temp->type = Type::temp(need);
    for (auto [apply, k] : uses) apply->region().arg(k)->type = temp->type;
  }
}

namespace {

class StencilVerifier {
 public:
  std::vector<std::string> run(const IRModule& m) {
    for (const auto& fn : m.functions()) {
      const std::string* name = fn->attr<std::string>("sym_name");
      visit(*fn, "@" + (name ? *name : std::string("?")));
    }
    return std::move(diags_);
  }

 private:
  void visit(const Operation& op, const std::string& path) {
    if (op.name() == "stencil.apply") checkApply(op, path);
    if (op.name() == "stencil.load") checkLoad(op, path);
    if (op.name() == "stencil.store") checkStore(op, path);
    if (op.name() == "stencil.access" || op.name() == "stencil.return" || op.name() == "stencil.index") {
      const Operation* parent = op.parentOp();
      if (!parent || parent->name() != "stencil.apply") report(path, op.name() + " outside stencil.apply");
    }
    for (size_t r = 0; r < op.numRegions(); ++r)
      for (const auto& inner : op.region(r).ops()) visit(*inner, path + "/" + inner->name());
  }

  void checkApply(const Operation& apply, const std::string& path) {
    const Bounds* out = apply.attr<Bounds>("bounds");
    if (!out || apply.numRegions() != 1) return;
    for (size_t i = 0; i < apply.numResults(); ++i)
      if (!apply.result(i)->type.isTemp() || apply.result(i)->type.bounds != *out)
        report(path, "type mismatch: apply result " + std::to_string(i) + " bounds differ from " + out->str());
    const Region& body = apply.region();
    if (body.numArgs() != apply.numOperands()) report(path, "apply block arguments do not match operands");
    const Operation* ret = body.empty() ? nullptr : body.ops().back().get();
    if (!ret || ret->name() != "stencil.return") {
      report(path, "apply region must end with stencil.return");
    } else if (ret->numOperands() != apply.numResults()) {
      report(path, "arity mismatch: stencil.return has " + std::to_string(ret->numOperands()) +
                       " values for an apply with " + std::to_string(apply.numResults()) + " results");
    }
    for (const auto& inner : body.ops()) {
      if (inner->name() == "stencil.return" && inner.get() != ret) report(path, "stencil.return must be last");
    }
    walk(apply, [&](const Operation& op) {
      if (&op == &apply) return;
      if (op.name() == "stencil.index") {
        const int64_t* dim = op.attr<int64_t>("dim");
        if (dim && (*dim < 0 || static_cast<size_t>(*dim) >= out->rank()))
          report(path + "/stencil.index", "index dimension " + std::to_string(*dim) + " out of range");
        return;
      }
      if (op.name() != "stencil.access") return;
      const Value* src = op.operand(0);
      bool isArg = src->isBlockArgument() && src->ownerRegion() == &body;
      if (!isArg) {
        report(path + "/stencil.access", "access operand is not a block argument of the enclosing apply");
        return;
      }
      const IntList* off = op.attr<IntList>("offset");
      if (!off || !src->type.isTemp()) return;
      const Bounds& in = src->type.bounds;
      if (off->size() != out->rank() || in.rank() != out->rank()) {
        report(path + "/stencil.access", "access offset rank does not match apply rank");
        return;
      }
      for (size_t d = 0; d < out->rank(); ++d) {
        if (out->lb(d) + (*off)[d] < in.lb(d) || out->ub(d) + (*off)[d] > in.ub(d)) {
          report(path + "/stencil.access", "access offset " + offsetStr(*off) + " out of bounds: input " + in.str() +
                                               " does not cover output " + out->str() + " shifted in dim " +
                                               std::to_string(d));
          break;
        }
      }
    });
  }

  void checkLoad(const Operation& load, const std::string& path) {
    const IntList* origin = load.attr<IntList>("origin");
    const Type& arr = load.operand(0)->type;
    const Type& t = load.result()->type;
    if (!origin || !arr.isArray() || !t.isTemp()) return;
    checkPlacement(path, "load", t.bounds, *origin, arr);
  }

  void checkStore(const Operation& store, const std::string& path) {
    const Bounds* b = store.attr<Bounds>("bounds");
    const IntList* origin = store.attr<IntList>("origin");
    if (!b || !origin || store.numOperands() != 2) return;
    const Type& t = store.operand(0)->type;
    const Type& arr = store.operand(1)->type;
    if (t.isTemp() && !t.bounds.containsBox(*b))
      report(path, "store bounds " + b->str() + " exceed stored temp " + t.bounds.str());
    if (arr.isArray()) checkPlacement(path, "store", *b, *origin, arr);
  }

  void checkPlacement(const std::string& path, const char* what, const Bounds& b, const IntList& origin,
                      const Type& arr) {
    if (b.rank() != arr.rank() || origin.size() != arr.rank()) {
      report(path, std::string(what) + " rank does not match array rank");
      return;
    }
    for (size_t d = 0; d < b.rank(); ++d) {
      if (b.lb(d) + origin[d] < 0 || b.ub(d) + origin[d] > arr.shape[d]) {
        report(path, std::string(what) + " region " + b.str() + " at origin " + offsetStr(origin) +
                         " exceeds array extent " + std::to_string(arr.shape[d]) + " in dim " + std::to_string(d));
        return;
      }
    }
  }

  static std::string offsetStr(const IntList& v) {
    std::string s = "(";
    for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s + ")";
  }

  void report(const std::string& path, const std::string& msg) { diags_.push_back(path + ": " + msg); }

  std::vector<std::string> diags_;
};

}  // namespace

std::vector<std::string> verifyStencil(const IRModule& m) { return StencilVerifier().run(m); }

}  // namespace sf::stencil
