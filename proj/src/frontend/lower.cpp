#include <optional>
#include <unordered_map>

#include "stencilforge/frontend.hpp"

namespace sf::frontend {

namespace {

struct ArrayInfo {
  Value* alloc = nullptr;
  std::vector<int64_t> lower;
};

struct Typed {
  Value* value;
  ScalarKind type;
};

class Lowerer {
 public:
  IRModule run(const AstNode& prog) {
    if (prog.kind != AstKind::Program) throw LoweringError("expected a Program node", prog.loc);
    IRModule m;
    Operation& fn = m.addFunction(prog.name);
    fn.loc = prog.loc;
    Region& body = fn.region();
    for (const auto& child : prog.children)
      if (child->kind == AstKind::Decl) declare(*child, body);
    for (const auto& child : prog.children)
      if (child->kind != AstKind::Decl) statement(*child, body);
    return m;
  }

 private:
  void declare(const AstNode& d, Region& body) {
    if (d.isParameter || d.type == ScalarKind::Integer) return;
    if (d.isAllocatable && !d.allocated) {
      unallocated_.insert({d.name, d.loc});
      return;
    }
    std::vector<int64_t> shape, lower;
    for (const auto& dim : d.dims) {
      shape.push_back(dim.extent());
      lower.push_back(dim.lower);
    }
    std::map<std::string, Attribute> attrs{{"name", d.name}, {"lower", lower}};
    if (d.isDummy) attrs["dummy"] = int64_t{1};
    Operation* op = OpBuilder::atEnd(body).create("mem.alloc", {}, {Type::array(shape)}, std::move(attrs));
    op->loc = d.loc;
    arrays_[d.name] = ArrayInfo{op->result(), std::move(lower)};
  }

  const ArrayInfo& array(const std::string& name, SourceLoc loc) {
    auto it = arrays_.find(name);
    if (it != arrays_.end()) return it->second;
    if (unallocated_.count(name)) throw LoweringError("array '" + name + "' is used but never allocated", loc);
    throw LoweringError("undeclared variable '" + name + "'", loc);
  }

  void statement(const AstNode& s, Region& region) {
    OpBuilder b = OpBuilder::atEnd(region);
    switch (s.kind) {
      case AstKind::DoLoop: {
        Value* lb = intExpr(s.lower(), b);
        Value* ub = intExpr(s.upper(), b);
        Value* step = intExpr(s.step(), b);
        Operation* loop = b.create("loop.for", {lb, ub, step}, {}, {}, 1);
        loop->loc = s.loc;
        Region& inner = loop->region();
        Value* iv = inner.addArgument(Type::index());
        loopVars_[s.name] = iv;
        for (size_t i = 3; i < s.children.size(); ++i) statement(*s.children[i], inner);
        loopVars_.erase(s.name);
        return;
      }
      case AstKind::Assign: {
        const AstNode& target = *s.children[0];
        Value* v = realExpr(*s.children[1], b);
        std::vector<Value*> operands{v};
        if (target.kind == AstKind::ArrayRef) {
          const ArrayInfo& info = array(target.name, target.loc);
          operands.push_back(info.alloc);
          for (size_t d = 0; d < target.children.size(); ++d)
            operands.push_back(index(*target.children[d], info.lower[d], b));
        } else if (target.kind == AstKind::ScalarRef) {
          operands.push_back(array(target.name, target.loc).alloc);
        } else {
          throw LoweringError("no lowering rule for assignment target " + std::string(astKindName(target.kind)),
                              target.loc);
        }
        b.create("mem.store", operands)->loc = s.loc;
        return;
      }
      default:
        throw LoweringError(std::string("no lowering rule for statement ") + astKindName(s.kind), s.loc);
    }
  }

  /// Zero-based index: the affine source index minus the declared lower bound.
  Value* index(const AstNode& e, int64_t lower, OpBuilder& b) {
    auto [var, offset] = affine(e);
    int64_t k = offset - lower;
    if (!var) return located(b.constantIndex(k), e.loc);
    Value* iv = loopVar(*var, e.loc);
    if (k == 0) return iv;
    Value* c = located(b.constantIndex(k > 0 ? k : -k), e.loc);
    return located(b.create(k > 0 ? "arith.addi" : "arith.subi", {iv, c}, {Type::index()})->result(), e.loc);
  }

  std::pair<std::optional<std::string>, int64_t> affine(const AstNode& e) {
    switch (e.kind) {
      case AstKind::Const: return {std::nullopt, e.intValue};
      case AstKind::ScalarRef: return {e.name, 0};
      case AstKind::UnaryOp: {
        auto [v, o] = affine(*e.children[0]);
        if (v) break;
        return {std::nullopt, -o};
      }
      case AstKind::BinOp: {
        auto [va, a] = affine(*e.children[0]);
        auto [vb, c] = affine(*e.children[1]);
        if (e.op == "+" && !(va && vb)) return {va ? va : vb, a + c};
        if (e.op == "-" && !vb) return {va, a - c};
        break;
      }
      default: break;
    }
    throw UnsupportedConstruct("non-affine index", e.loc);
  }

  Value* loopVar(const std::string& name, SourceLoc loc) {
    auto it = loopVars_.find(name);
    if (it == loopVars_.end()) throw LoweringError("loop variable '" + name + "' is not in scope", loc);
    return it->second;
  }

  Value* intExpr(const AstNode& e, OpBuilder& b) {
    Typed t = expr(e, b);
    if (t.type != ScalarKind::Integer) throw LoweringError("expected an integer expression", e.loc);
    return t.value;
  }

  Value* realExpr(const AstNode& e, OpBuilder& b) {
    Typed t = expr(e, b);
    return t.type == ScalarKind::Real ? t.value : convertAfter(e, t, b);
  }

  Typed expr(const AstNode& e, OpBuilder& b) {
    switch (e.kind) {
      case AstKind::Const:
        if (e.type == ScalarKind::Integer) return {located(b.constantIndex(e.intValue), e.loc), ScalarKind::Integer};
        return {located(b.constantF64(e.realValue), e.loc), ScalarKind::Real};
      case AstKind::ScalarRef:
        if (e.type == ScalarKind::Integer) return {loopVar(e.name, e.loc), ScalarKind::Integer};
        return {located(b.create("mem.load", {array(e.name, e.loc).alloc}, {Type::f64()})->result(), e.loc),
                ScalarKind::Real};
      case AstKind::ArrayRef: {
        const ArrayInfo& info = array(e.name, e.loc);
        std::vector<Value*> operands{info.alloc};
        for (size_t d = 0; d < e.children.size(); ++d) operands.push_back(index(*e.children[d], info.lower[d], b));
        return {located(b.create("mem.load", operands, {Type::f64()})->result(), e.loc), ScalarKind::Real};
      }
      case AstKind::UnaryOp: {
        Typed x = expr(*e.children[0], b);
        if (x.type == ScalarKind::Real)
          return {located(b.create("arith.negf", {x.value}, {Type::f64()})->result(), e.loc), ScalarKind::Real};
        Value* zero = located(b.constantIndex(0), e.loc);
        return {located(b.create("arith.subi", {zero, x.value}, {Type::index()})->result(), e.loc),
                ScalarKind::Integer};
      }
      case AstKind::BinOp: {
        const AstNode& l = *e.children[0];
        const AstNode& r = *e.children[1];
        Typed a = expr(l, b);
        Typed c = expr(r, b);
        if (a.type == ScalarKind::Integer && c.type == ScalarKind::Integer) {
          const char* name = e.op == "+" ? "arith.addi" : e.op == "-" ? "arith.subi" : e.op == "*" ? "arith.muli"
                             : e.op == "/" ? "arith.divsi" : nullptr;
          if (!name) throw UnsupportedConstruct("integer exponentiation", e.loc);
          return {located(b.create(name, {a.value, c.value}, {Type::index()})->result(), e.loc), ScalarKind::Integer};
        }
        // convert the integer side after both operands exist, keeping source order
        Value* x = a.type == ScalarKind::Real ? a.value : convertAfter(l, a, b);
        Value* y = c.type == ScalarKind::Real ? c.value : convertAfter(r, c, b);
        const char* name = e.op == "+" ? "arith.addf" : e.op == "-" ? "arith.subf" : e.op == "*" ? "arith.mulf"
                           : e.op == "/" ? "arith.divf" : "arith.powf";
        return {located(b.create(name, {x, y}, {Type::f64()})->result(), e.loc), ScalarKind::Real};
      }
      default:
        throw LoweringError(std::string("no lowering rule for expression ") + astKindName(e.kind), e.loc);
    }
  }

  Value* convertAfter(const AstNode& e, Typed t, OpBuilder& b) {
    if (e.kind == AstKind::Const) {
      Operation* def = t.value->definingOp();
      def->result()->type = Type::f64();
      def->setAttr("value", static_cast<double>(e.intValue));
      return t.value;
    }
    return located(b.create("arith.sitofp", {t.value}, {Type::f64()})->result(), e.loc);
  }

  static Value* located(Value* v, SourceLoc loc) {
    if (Operation* op = v->definingOp()) op->loc = loc;
    return v;
  }

  std::unordered_map<std::string, ArrayInfo> arrays_;
  std::unordered_map<std::string, SourceLoc> unallocated_;
  std::unordered_map<std::string, Value*> loopVars_;
};

}  // namespace

IRModule lowerToIR(const AstNode& program) { return Lowerer().run(program); }

IRModule compileSource(SourceProgram& src) {
  auto tokens = tokenize(src);
  auto ast = parse(tokens, &src);
  IRModule m = lowerToIR(*ast);
  auto diags = verify(m);
  if (!diags.empty()) throw VerificationError("frontend produced invalid IR: " + diags.front());
  return m;
}

IRModule compileText(std::string_view text, const std::string& path) {
  SourceProgram src{path, std::string(text), {}};
  return compileSource(src);
}

}  // namespace sf::frontend
