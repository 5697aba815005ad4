#include <unordered_set>

#include "ir_internal.hpp"

namespace sf {
namespace {

bool isIndex(const Value* v) { return v->type.kind == TypeKind::Index; }
bool isF64(const Value* v) { return v->type.kind == TypeKind::F64; }

class Verifier {
 public:
  Verifier(const IRModule& m, const IRModule* linked) : module_(m), linked_(linked) {
    for (const auto& fn : m.functions()) names_.number(*fn);
  }

  std::vector<std::string> run() {
    std::unordered_set<std::string> seen;
    for (const auto& fn : module_.functions()) {
      if (fn->name() != "func.func") {
        report("module", "only func.func may appear at module level, found " + fn->name());
        continue;
      }
      const auto* sym = fn->attr<std::string>("sym_name");
      if (!sym) {
        report("module", "func.func without sym_name");
        continue;
      }
      if (!seen.insert(*sym).second) report("@" + *sym, "duplicate function name");
      std::unordered_set<const Value*> visible;
      verifyOp(*fn, "@" + *sym, visible, /*inApply=*/nullptr, /*topLevel=*/true);
    }
    return std::move(diags_);
  }

 private:
  void report(const std::string& path, const std::string& msg) { diags_.push_back(path + ": " + msg); }

  void verifyOp(const Operation& op, const std::string& path, std::unordered_set<const Value*>& visible,
                const Operation* apply, bool topLevel) {
    const OpInfo* info = lookupOp(op.name());
    if (!info) {
      report(path, "unknown operation '" + op.name() + "'");
      return;
    }
    if (op.name() == "func.func" && !topLevel) report(path, "func.func must be at module level");

    for (const Value* v : op.operands())
      if (!visible.count(v)) report(path, "use before def: " + names_.name(v) + " in " + op.name());

    const size_t before = diags_.size();
    auto countOk = [](size_t n, int lo, int hi) {
      return static_cast<int>(n) >= lo && (hi < 0 || static_cast<int>(n) <= hi);
    };
    if (!countOk(op.numOperands(), info->minOperands, info->maxOperands))
      report(path, "wrong operand count " + std::to_string(op.numOperands()));
    if (!countOk(op.numResults(), info->minResults, info->maxResults))
      report(path, "wrong result count " + std::to_string(op.numResults()));
    if (static_cast<int>(op.numRegions()) != info->numRegions)
      report(path, "wrong region count " + std::to_string(op.numRegions()));
    for (const auto& key : info->requiredAttrs)
      if (!op.hasAttr(key)) report(path, "missing attribute '" + key + "'");

    bool structural = true;
    for (size_t i = before; i < diags_.size(); ++i)
      if (diags_[i].find("use before def") == std::string::npos) structural = false;
    if (structural) {
      try {
        checkSignature(op, path, apply);
      } catch (const VerificationError& e) {
        report(path, e.what());
      }
    }

    const Operation* innerApply = op.name() == "stencil.apply" ? &op : apply;
    for (size_t r = 0; r < op.numRegions(); ++r) {
      const Region& region = op.region(r);
      // stencil.apply regions are isolated from above.
      std::unordered_set<const Value*> isolated;
      std::unordered_set<const Value*>& scope = op.name() == "stencil.apply" ? isolated : visible;
      std::vector<const Value*> added;
      for (const auto& a : region.args())
        if (scope.insert(a.get()).second) added.push_back(a.get());
      for (const auto& inner : region.ops()) {
        verifyOp(*inner, path + "/" + inner->name(), scope, innerApply, false);
        for (const auto& res : inner->results())
          if (scope.insert(res.get()).second) added.push_back(res.get());
      }
      for (const Value* v : added) scope.erase(v);
    }
  }

  void checkSignature(const Operation& op, const std::string& path, const Operation* apply) {
    const std::string& n = op.name();
    auto bad = [&](const std::string& msg) { report(path, msg); };
    auto res = [&](size_t i) { return op.result(i); };

    if (n == "arith.constant") {
      const Value* r = res(0);
      if (isF64(r) && !op.attr<double>("value")) bad("f64 constant needs a float value");
      else if (isIndex(r) && !op.attr<int64_t>("value")) bad("index constant needs an integer value");
      else if (!isF64(r) && !isIndex(r)) bad("constant must be f64 or index");
    } else if (n == "arith.addf" || n == "arith.subf" || n == "arith.mulf" || n == "arith.divf" ||
               n == "arith.powf" || n == "arith.negf") {
      for (const Value* v : op.operands())
        if (!isF64(v)) bad("float arithmetic on non-f64 operand");
      if (!isF64(res(0))) bad("float arithmetic must produce f64");
    } else if (n == "arith.addi" || n == "arith.subi" || n == "arith.muli" || n == "arith.divsi" ||
               n == "arith.minsi") {
      for (const Value* v : op.operands())
        if (!isIndex(v)) bad("index arithmetic on non-index operand");
      if (!isIndex(res(0))) bad("index arithmetic must produce index");
    } else if (n == "arith.sitofp") {
      if (!isIndex(op.operand(0)) || !isF64(res(0))) bad("sitofp converts index to f64");
    } else if (n == "mem.alloc") {
      const Type& t = res(0)->type;
      if (!t.isArray()) {
        bad("mem.alloc must produce an array");
      } else {
        for (int64_t e : t.shape)
          if (e < 1) bad("array extent must be >= 1");
        const auto* lower = op.attr<IntList>("lower");
        if (!lower || lower->size() != t.shape.size()) bad("'lower' must list one bound per dimension");
      }
    } else if (n == "mem.load" || n == "mem.store") {
      size_t base = n == "mem.store" ? 1 : 0;
      if (n == "mem.store" && !isF64(op.operand(0))) bad("stored value must be f64");
      const Value* arr = op.operand(base);
      if (!arr->type.isArray()) {
        bad("memory operand must be an array");
        return;
      }
      if (op.numOperands() != base + 1 + arr->type.rank()) bad("index count does not match array rank");
      for (size_t i = base + 1; i < op.numOperands(); ++i)
        if (!isIndex(op.operand(i))) bad("array index must be index typed");
      if (n == "mem.load" && !isF64(res(0))) bad("mem.load produces f64");
    } else if (n == "mem.to_ptr") {
      if (!op.operand(0)->type.isArray() || res(0)->type.kind != TypeKind::Ptr) bad("mem.to_ptr: array -> ptr");
    } else if (n == "mem.from_ptr") {
      if (op.operand(0)->type.kind != TypeKind::Ptr) bad("mem.from_ptr expects a ptr");
      if (!res(0)->type.isArray() || res(0)->type.rank() + 1 != op.numOperands())
        bad("mem.from_ptr needs one extent per result dimension");
      for (size_t i = 1; i < op.numOperands(); ++i)
        if (!isIndex(op.operand(i))) bad("extent must be index typed");
    } else if (n == "mem.snapshot") {
      if (!op.operand(0)->type.isArray() || !(res(0)->type == op.operand(0)->type))
        bad("mem.snapshot: result type must equal operand array type");
      else if (op.boundsAttr("box").rank() != op.operand(0)->type.rank())
        bad("snapshot box rank mismatch");
    } else if (n == "loop.for") {
      for (const Value* v : op.operands())
        if (!isIndex(v)) bad("loop bounds must be index typed");
      if (op.region().numArgs() != 1 || !isIndex(op.region().arg(0)))
        bad("loop.for region takes one index argument");
    } else if (n == "par.for") {
      const Bounds& b = op.boundsAttr("bounds");
      const IntList& steps = op.intListAttr("steps");
      if (steps.size() != b.rank()) bad("par.for steps rank mismatch");
      for (int64_t s : steps)
        if (s < 1) bad("par.for step must be >= 1");
      if (op.region().numArgs() != b.rank()) bad("par.for region needs one index argument per dimension");
      for (const auto& a : op.region().args())
        if (!isIndex(a.get())) bad("par.for region arguments must be index typed");
    } else if (n == "stencil.load") {
      const Type& in = op.operand(0)->type;
      const Type& out = res(0)->type;
      if (!in.isArray() || !out.isTemp()) bad("stencil.load: array -> temp");
      else if (in.rank() != out.rank()) bad("stencil.load rank mismatch");
      else if (op.intListAttr("origin").size() != in.rank()) bad("stencil.load origin rank mismatch");
    } else if (n == "stencil.apply") {
      const Bounds& b = op.boundsAttr("bounds");
      if (b.empty()) bad("apply bounds must satisfy lb < ub in every dimension");
      const Region& body = op.region();
      if (body.numArgs() != op.numOperands()) bad("apply region arguments must match operands 1:1");
      for (size_t i = 0; i < op.numOperands() && i < body.numArgs(); ++i) {
        const Type& t = op.operand(i)->type;
        if (!(t == body.arg(i)->type)) bad("apply region argument " + std::to_string(i) + " type mismatch");
        if (!t.isTemp() && !isF64(op.operand(i))) bad("apply operands must be temps or f64");
        if (t.isTemp() && t.rank() != b.rank()) bad("apply operand rank mismatch");
      }
      for (const auto& r : op.results())
        if (!r->type.isTemp() || !(r->type.bounds == b))
          bad("type mismatch: apply result " + r->type.str() + " does not match bounds " + b.str());
    } else if (n == "stencil.access") {
      if (!apply) bad("stencil.access outside stencil.apply");
      if (!op.operand(0)->type.isTemp()) bad("stencil.access operand must be a temp");
      else if (op.intListAttr("offset").size() != op.operand(0)->type.rank()) bad("access offset rank mismatch");
      if (!isF64(res(0))) bad("stencil.access produces f64");
    } else if (n == "stencil.index") {
      if (!apply) bad("stencil.index outside stencil.apply");
      else if (op.intAttr("dim") < 0 || op.intAttr("dim") >= static_cast<int64_t>(apply->boundsAttr("bounds").rank()))
        bad("stencil.index dimension out of range");
      if (!isIndex(res(0))) bad("stencil.index produces index");
    } else if (n == "stencil.return") {
      if (!apply || op.parentOp() != apply) bad("stencil.return must terminate a stencil.apply");
      for (const Value* v : op.operands())
        if (!isF64(v)) bad("stencil.return operands must be f64");
    } else if (n == "stencil.store") {
      const Type& t = op.operand(0)->type;
      const Type& a = op.operand(1)->type;
      if (!t.isTemp() || !a.isArray()) bad("stencil.store: (temp, array)");
      else if (t.rank() != a.rank() || op.boundsAttr("bounds").rank() != a.rank() ||
               op.intListAttr("origin").size() != a.rank())
        bad("stencil.store rank mismatch");
    } else if (n == "dev.register" || n == "dev.alloc") {
      if (!op.operand(0)->type.isArray() || res(0)->type.kind != TypeKind::Ptr) bad(n + ": array -> ptr");
    } else if (n == "dev.copy_in") {
      if (!op.operand(0)->type.isArray() || op.operand(1)->type.kind != TypeKind::Ptr) bad("dev.copy_in: (array, ptr)");
    } else if (n == "dev.copy_out") {
      if (op.operand(0)->type.kind != TypeKind::Ptr || !op.operand(1)->type.isArray()) bad("dev.copy_out: (ptr, array)");
    } else if (n == "dev.free") {
      if (op.operand(0)->type.kind != TypeKind::Ptr) bad("dev.free expects a ptr");
    } else if (n == "dmp.halo_swap" || n == "msg.send" || n == "msg.recv") {
      if (!op.operand(0)->type.isArray()) bad(n + " expects an array");
      if (n != "dmp.halo_swap") {
        const IntList& dir = op.intListAttr(n == "msg.send" ? "to" : "from");
        if (dir.size() != 2) bad(n + " direction must have two components");
      }
    } else if (n == "func.call") {
      const std::string& callee = op.strAttr("callee");
      const Operation* fn = module_.lookup(callee);
      if (!fn && linked_) fn = linked_->lookup(callee);
      if (!fn) {
        bad("unresolved symbol @" + callee);
      } else {
        const Region& params = fn->region();
        if (params.numArgs() != op.numOperands()) {
          bad("call to @" + callee + " has wrong argument count");
        } else {
          for (size_t i = 0; i < op.numOperands(); ++i)
            if (!(params.arg(i)->type == op.operand(i)->type))
              bad("call argument " + std::to_string(i) + " type mismatch for @" + callee);
        }
      }
    }
  }

  const IRModule& module_;
  const IRModule* linked_;
  ValueNumbering names_;
  std::vector<std::string> diags_;
};

}  // namespace

std::vector<std::string> verify(const IRModule& m, const IRModule* linked) { return Verifier(m, linked).run(); }

}  // namespace sf
