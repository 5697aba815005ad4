#include <cmath>
#include <optional>
#include <unordered_map>
#include <unordered_set>

#include "stencilforge/frontend.hpp"

namespace sf::frontend {

const char* astKindName(AstKind k) {
  switch (k) {
    case AstKind::Program: return "Program";
    case AstKind::Decl: return "Decl";
    case AstKind::DoLoop: return "DoLoop";
    case AstKind::Assign: return "Assign";
    case AstKind::ArrayRef: return "ArrayRef";
    case AstKind::BinOp: return "BinOp";
    case AstKind::UnaryOp: return "UnaryOp";
    case AstKind::Const: return "Const";
    case AstKind::ScalarRef: return "ScalarRef";
  }
  return "?";
}

namespace {

using NodePtr = std::unique_ptr<AstNode>;

NodePtr makeNode(AstKind k, SourceLoc loc) { return std::make_unique<AstNode>(k, loc); }

NodePtr makeIntConst(int64_t v, SourceLoc loc) {
  auto n = makeNode(AstKind::Const, loc);
  n->type = ScalarKind::Integer;
  n->intValue = v;
  return n;
}

NodePtr makeRealConst(double v, SourceLoc loc) {
  auto n = makeNode(AstKind::Const, loc);
  n->type = ScalarKind::Real;
  n->realValue = v;
  return n;
}

/// Statement keywords outside the subset, reported by name.
const std::unordered_set<std::string>& unsupportedStatements() {
  static const std::unordered_set<std::string> s = {
      "if",     "else",  "elseif", "endif",  "call",     "print",  "write",    "read",   "select",
      "case",   "where", "forall", "goto",   "go",       "exit",   "cycle",    "stop",   "return",
      "module", "use",   "contains", "function", "deallocate", "open", "close", "type", "interface",
      "block",  "associate", "while", "continue", "format", "data", "common", "equivalence", "save",
  };
  return s;
}

/// Symbol kinds visible to the parser.
struct Symbol {
  enum class Kind { Array, RealScalar, IntScalar, Parameter } kind;
  AstNode* decl = nullptr;  // owned by the Program node
  size_t rank = 0;
};

/// Affine `var + offset` decomposition of an index expression.
struct Affine {
  std::optional<std::string> var;
  int64_t offset = 0;
};

class Parser {
 public:
  Parser(const std::vector<Token>& tokens, SourceProgram* src) : toks_(tokens), src_(src) {}

  NodePtr run() {
    skipNewlines();
    auto prog = parseHeader();
    parseBody(*prog);
    skipNewlines();
    if (!atEnd()) fail("unexpected text after end of program unit");
    for (const auto& name : dummyOrder_)
      if (!declared_.count(name)) fail("dummy argument '" + name + "' is not declared", prog->loc);
    if (src_) src_->unitName = prog->name;
    return prog;
  }

 private:
  // -- program structure ----------------------------------------------------

  NodePtr parseHeader() {
    SourceLoc loc = cur().loc;
    auto prog = makeNode(AstKind::Program, loc);
    if (accept(Tok::Program)) {
      prog->name = expectIdent("program name");
    } else if (accept(Tok::Subroutine)) {
      prog->isSubroutine = true;
      prog->name = expectIdent("subroutine name");
      if (accept(Tok::LParen)) {
        if (!check(Tok::RParen)) {
          do {
            std::string arg = expectIdent("dummy argument");
            if (!dummies_.insert(arg).second) fail("duplicate dummy argument '" + arg + "'");
            dummyOrder_.push_back(arg);
          } while (accept(Tok::Comma));
        }
        expect(Tok::RParen, "')'");
      }
    } else {
      fail("expected 'program' or 'subroutine'");
    }
    endOfStatement();
    return prog;
  }

  void parseBody(AstNode& prog) {
    bool inExecutable = false;
    while (true) {
      skipNewlines();
      if (atEnd()) fail("missing 'end' for program unit '" + prog.name + "'");
      if (check(Tok::End) && !peekIs(1, Tok::Do)) {
        advance();
        if (accept(Tok::Program) || accept(Tok::Subroutine)) {
          if (check(Tok::Ident)) {
            std::string n = advance().text;
            if (n != prog.name) fail("end name '" + n + "' does not match unit '" + prog.name + "'");
          }
        }
        if (!atEnd()) endOfStatement();
        return;
      }
      if (check(Tok::Implicit)) {
        advance();
        expect(Tok::None, "'none'");
        endOfStatement();
        continue;
      }
      if (isDeclStart()) {
        if (inExecutable) fail("declaration after executable statement");
        parseDecl(prog);
        continue;
      }
      inExecutable = true;
      if (auto s = parseStatement()) prog.children.push_back(std::move(s));
    }
  }

  bool isDeclStart() const {
    if (check(Tok::Real) || check(Tok::Integer)) return true;
    return check(Tok::Ident) && cur().text == "double" && peekIs(1, Tok::Ident) && toks_[pos_ + 1].text == "precision";
  }

  // -- declarations ---------------------------------------------------------

  void parseDecl(AstNode& prog) {
    ScalarKind type = ScalarKind::Real;
    if (accept(Tok::Integer)) {
      type = ScalarKind::Integer;
      skipKindSelector();
    } else if (accept(Tok::Real)) {
      skipKindSelector();
    } else {
      advance();  // double
      advance();  // precision
    }

    bool isParameter = false, isAllocatable = false;
    std::optional<std::vector<DeclaredDim>> sharedDims;
    size_t deferredRank = 0;
    while (accept(Tok::Comma)) {
      if (accept(Tok::Parameter)) {
        isParameter = true;
      } else if (accept(Tok::Allocatable)) {
        isAllocatable = true;
      } else if (accept(Tok::Dimension)) {
        expect(Tok::LParen, "'('");
        auto [dims, deferred] = parseDimList();
        sharedDims = std::move(dims);
        deferredRank = deferred;
        expect(Tok::RParen, "')'");
      } else if (check(Tok::Ident) && cur().text == "intent") {
        advance();
        expect(Tok::LParen, "'('");
        expectIdent("intent");
        expect(Tok::RParen, "')'");
      } else {
        fail("unsupported declaration attribute '" + cur().text + "'");
      }
    }
    accept(Tok::DColon);

    do {
      SourceLoc eloc = cur().loc;
      std::string name = expectIdent("variable name");
      if (symbols_.count(name) && declared_.count(name)) fail("redeclaration of '" + name + "'", eloc);
      auto decl = makeNode(AstKind::Decl, eloc);
      decl->name = name;
      decl->type = type;
      decl->isParameter = isParameter;
      decl->isAllocatable = isAllocatable;
      decl->isDummy = dummies_.count(name) != 0;
      size_t rank = 0;
      bool deferred = false;
      if (accept(Tok::LParen)) {
        auto [dims, d] = parseDimList();
        decl->dims = std::move(dims);
        rank = d ? d : decl->dims.size();
        deferred = d != 0;
        expect(Tok::RParen, "')'");
      } else if (sharedDims || deferredRank) {
        decl->dims = sharedDims ? *sharedDims : std::vector<DeclaredDim>{};
        rank = deferredRank ? deferredRank : decl->dims.size();
        deferred = deferredRank != 0;
      }
      if (deferred && !isAllocatable) fail("deferred shape requires 'allocatable'", eloc);
      if (isAllocatable && !deferred) fail("allocatable array '" + name + "' needs a deferred shape (:)", eloc);
      if (rank > 3) throw UnsupportedConstruct("arrays of rank > 3 ('" + name + "')", eloc);
      if (type == ScalarKind::Integer && rank > 0)
        throw UnsupportedConstruct("integer arrays ('" + name + "')", eloc);

      if (accept(Tok::Eq)) {
        if (!isParameter) throw UnsupportedConstruct("initialization of non-parameter '" + name + "'", eloc);
        NodePtr value = parseExpr();
        NodePtr folded = evalConst(*value);
        if (type == ScalarKind::Real && folded->type == ScalarKind::Integer)
          folded = makeRealConst(static_cast<double>(folded->intValue), folded->loc);
        if (type == ScalarKind::Integer && folded->type == ScalarKind::Real)
          fail("integer parameter '" + name + "' initialized with a real value", eloc);
        decl->children.push_back(std::move(folded));
      } else if (isParameter) {
        fail("parameter '" + name + "' needs a value", eloc);
      }
      if (isParameter && rank > 0) throw UnsupportedConstruct("array parameters", eloc);

      Symbol sym;
      sym.decl = decl.get();
      sym.rank = rank;
      if (isParameter) sym.kind = Symbol::Kind::Parameter;
      else if (rank > 0) sym.kind = Symbol::Kind::Array;
      else if (type == ScalarKind::Integer) sym.kind = Symbol::Kind::IntScalar;
      else sym.kind = Symbol::Kind::RealScalar;
      if (!deferred) decl->allocated = true;
      symbols_[name] = sym;
      declared_.insert(name);
      prog.children.push_back(std::move(decl));
    } while (accept(Tok::Comma));
    endOfStatement();
  }

  void skipKindSelector() {
    if (!accept(Tok::LParen)) return;
    if (check(Tok::Ident) && cur().text == "kind" && peekIs(1, Tok::Eq)) {
      advance();
      advance();
    }
    if (!accept(Tok::Int) && !accept(Tok::Ident)) fail("expected kind value");
    expect(Tok::RParen, "')'");
  }

  /// Returns explicit dims, or the rank of a deferred `(:,:)` shape.
  std::pair<std::vector<DeclaredDim>, size_t> parseDimList() {
    std::vector<DeclaredDim> dims;
    size_t deferred = 0;
    do {
      SourceLoc loc = cur().loc;
      if (check(Tok::Colon) && (peekIs(1, Tok::Comma) || peekIs(1, Tok::RParen))) {
        advance();
        ++deferred;
        continue;
      }
      int64_t first = constInt(*parseExpr());
      DeclaredDim d;
      if (accept(Tok::Colon)) {
        d.lower = first;
        d.upper = constInt(*parseExpr());
      } else {
        d.lower = 1;
        d.upper = first;
      }
      if (d.lower > d.upper) fail("declared lower bound exceeds upper bound", loc);
      dims.push_back(d);
    } while (accept(Tok::Comma));
    if (deferred && !dims.empty()) fail("mixed deferred and explicit shape");
    return {std::move(dims), deferred};
  }

  // -- statements -----------------------------------------------------------

  NodePtr parseStatement() {
    SourceLoc loc = cur().loc;
    if (check(Tok::Do)) return parseDo();
    if (check(Tok::EndDo) || (check(Tok::End) && peekIs(1, Tok::Do))) fail("'enddo' without matching 'do'");
    if (accept(Tok::Allocate)) {
      parseAllocate(loc);
      return nullptr;
    }
    if (!check(Tok::Ident)) fail("expected statement, found '" + cur().text + "'");
    const std::string& word = cur().text;
    auto it = symbols_.find(word);
    if (it == symbols_.end() || !declared_.count(word)) {
      if (unsupportedStatements().count(word)) throw UnsupportedConstruct(word + " statement", loc);
      if (peekIs(1, Tok::Eq)) fail("assignment to undeclared variable '" + word + "'");
      throw UnsupportedConstruct("statement '" + word + "'", loc);
    }
    const Symbol& sym = it->second;
    auto assign = makeNode(AstKind::Assign, loc);
    if (sym.kind == Symbol::Kind::Array) {
      assign->children.push_back(parseArrayRef());
    } else if (sym.kind == Symbol::Kind::RealScalar) {
      auto ref = makeNode(AstKind::ScalarRef, loc);
      ref->name = advance().text;
      ref->type = ScalarKind::Real;
      assign->children.push_back(std::move(ref));
    } else if (sym.kind == Symbol::Kind::Parameter) {
      fail("assignment to parameter '" + word + "'");
    } else {
      throw UnsupportedConstruct("assignment to integer variable '" + word + "'", loc);
    }
    expect(Tok::Eq, "'='");
    assign->children.push_back(parseExpr());
    endOfStatement();
    return assign;
  }

  NodePtr parseDo() {
    SourceLoc loc = advance().loc;
    if (check(Tok::Ident) && cur().text == "while") throw UnsupportedConstruct("do while", loc);
    if (!check(Tok::Ident)) {
      if (check(Tok::Newline) || atEnd()) throw UnsupportedConstruct("unbounded do loop", loc);
      fail("expected loop variable");
    }
    auto loop = makeNode(AstKind::DoLoop, loc);
    loop->name = advance().text;
    if (auto it = symbols_.find(loop->name); it != symbols_.end() && it->second.kind != Symbol::Kind::IntScalar)
      fail("loop variable '" + loop->name + "' must be an integer variable");
    for (const auto& v : loopVars_)
      if (v == loop->name) fail("loop variable '" + loop->name + "' reused in nested loop");
    expect(Tok::Eq, "'='");
    loop->children.push_back(parseIntExpr("loop lower bound"));
    expect(Tok::Comma, "','");
    loop->children.push_back(parseIntExpr("loop upper bound"));
    if (accept(Tok::Comma)) {
      NodePtr step = parseIntExpr("loop step");
      if (step->kind != AstKind::Const) throw UnsupportedConstruct("non-constant loop step", step->loc);
      if (step->intValue <= 0) throw UnsupportedConstruct("non-positive loop step", step->loc);
      loop->children.push_back(std::move(step));
    } else {
      loop->children.push_back(makeIntConst(1, loc));
    }
    endOfStatement();

    loopVars_.push_back(loop->name);
    while (true) {
      skipNewlines();
      if (atEnd()) fail("missing 'enddo' for loop over '" + loop->name + "'", loc);
      if (accept(Tok::EndDo)) break;
      if (check(Tok::End) && peekIs(1, Tok::Do)) {
        advance();
        advance();
        break;
      }
      if (check(Tok::End)) fail("missing 'enddo' for loop over '" + loop->name + "'", loc);
      if (isDeclStart()) fail("declaration inside loop body");
      if (auto s = parseStatement()) loop->children.push_back(std::move(s));
    }
    loopVars_.pop_back();
    if (!atEnd()) endOfStatement();
    return loop;
  }

  void parseAllocate(SourceLoc loc) {
    expect(Tok::LParen, "'('");
    do {
      SourceLoc aloc = cur().loc;
      std::string name = expectIdent("array name");
      auto it = symbols_.find(name);
      if (it == symbols_.end() || !it->second.decl || !it->second.decl->isAllocatable)
        fail("'" + name + "' is not an allocatable array", aloc);
      AstNode& decl = *it->second.decl;
      if (decl.allocated) throw UnsupportedConstruct("reallocation of '" + name + "'", aloc);
      if (!loopVars_.empty()) throw UnsupportedConstruct("allocate inside a loop", aloc);
      expect(Tok::LParen, "'('");
      auto [dims, deferred] = parseDimList();
      expect(Tok::RParen, "')'");
      if (deferred) fail("allocate needs explicit bounds", aloc);
      if (dims.size() != it->second.rank)
        fail("allocate of '" + name + "' gives " + std::to_string(dims.size()) + " bounds for rank " +
                 std::to_string(it->second.rank),
             aloc);
      decl.dims = std::move(dims);
      decl.allocated = true;
    } while (accept(Tok::Comma));
    expect(Tok::RParen, "')'");
    (void)loc;
    endOfStatement();
  }

  // -- expressions ----------------------------------------------------------

  NodePtr parseIntExpr(const char* what) {
    NodePtr e = parseExpr();
    if (e->type != ScalarKind::Integer) fail(std::string(what) + " must be an integer expression", e->loc);
    return e;
  }

  NodePtr parseExpr() {
    SourceLoc loc = cur().loc;
    NodePtr lhs;
    if (check(Tok::Minus) || check(Tok::Plus)) {
      bool neg = advance().kind == Tok::Minus;
      lhs = parseTerm();
      if (neg) lhs = makeUnary("-", std::move(lhs), loc);
    } else {
      lhs = parseTerm();
    }
    while (check(Tok::Plus) || check(Tok::Minus)) {
      Token op = advance();
      lhs = makeBinary(op.text, std::move(lhs), parseTerm(), op.loc);
    }
    return lhs;
  }

  NodePtr parseTerm() {
    NodePtr lhs = parseFactor();
    while (check(Tok::Star) || check(Tok::Slash)) {
      Token op = advance();
      lhs = makeBinary(op.text, std::move(lhs), parseFactor(), op.loc);
    }
    return lhs;
  }

  NodePtr parseFactor() {
    NodePtr base = parsePrimary();
    if (check(Tok::Pow)) {
      Token op = advance();
      return makeBinary("**", std::move(base), parseFactor(), op.loc);  // right associative
    }
    return base;
  }

  NodePtr parsePrimary() {
    SourceLoc loc = cur().loc;
    if (check(Tok::Int)) return makeIntConst(advance().intValue, loc);
    if (check(Tok::RealLit)) return makeRealConst(advance().realValue, loc);
    if (accept(Tok::LParen)) {
      NodePtr e = parseExpr();
      expect(Tok::RParen, "')'");
      return e;
    }
    if (check(Tok::Minus) || check(Tok::Plus)) {
      bool neg = advance().kind == Tok::Minus;
      NodePtr e = parseFactor();
      return neg ? makeUnary("-", std::move(e), loc) : std::move(e);
    }
    if (!check(Tok::Ident)) fail("expected expression, found '" + cur().text + "'");

    const std::string& name = cur().text;
    for (const auto& v : loopVars_)
      if (v == name) {
        advance();
        if (check(Tok::LParen)) fail("loop variable '" + name + "' is not an array");
        auto ref = makeNode(AstKind::ScalarRef, loc);
        ref->name = name;
        ref->type = ScalarKind::Integer;
        return ref;
      }
    auto it = symbols_.find(name);
    if (it == symbols_.end() || !declared_.count(name)) {
      if (peekIs(1, Tok::LParen)) throw UnsupportedConstruct("function call '" + name + "'", loc);
      fail("undeclared variable '" + name + "'");
    }
    const Symbol& sym = it->second;
    switch (sym.kind) {
      case Symbol::Kind::Array:
        if (!peekIs(1, Tok::LParen)) throw UnsupportedConstruct("whole-array reference '" + name + "'", loc);
        return parseArrayRef();
      case Symbol::Kind::Parameter: {
        advance();
        const AstNode& value = *sym.decl->children.front();
        return value.type == ScalarKind::Integer ? makeIntConst(value.intValue, loc)
                                                 : makeRealConst(value.realValue, loc);
      }
      case Symbol::Kind::RealScalar: {
        advance();
        if (check(Tok::LParen)) fail("scalar '" + name + "' is not an array");
        auto ref = makeNode(AstKind::ScalarRef, loc);
        ref->name = name;
        ref->type = ScalarKind::Real;
        return ref;
      }
      case Symbol::Kind::IntScalar:
        throw UnsupportedConstruct("integer variable '" + name + "' outside its loop", loc);
    }
    fail("unreachable");
  }

  NodePtr parseArrayRef() {
    SourceLoc loc = cur().loc;
    auto ref = makeNode(AstKind::ArrayRef, loc);
    ref->name = advance().text;
    ref->type = ScalarKind::Real;
    const Symbol& sym = symbols_.at(ref->name);
    expect(Tok::LParen, "'('");
    do {
      NodePtr idx = parseExpr();
      if (idx->type != ScalarKind::Integer) throw UnsupportedConstruct("non-integer index", idx->loc);
      if (!affine(*idx)) throw UnsupportedConstruct("non-affine index", idx->loc);
      ref->children.push_back(std::move(idx));
    } while (accept(Tok::Comma));
    expect(Tok::RParen, "')'");
    if (ref->children.size() != sym.rank)
      fail("array '" + ref->name + "' has rank " + std::to_string(sym.rank) + " but " +
               std::to_string(ref->children.size()) + " indices were given",
           loc);
    return ref;
  }

  NodePtr makeUnary(const std::string& op, NodePtr operand, SourceLoc loc) {
    if (operand->kind == AstKind::Const) {
      if (operand->type == ScalarKind::Integer) operand->intValue = -operand->intValue;
      else operand->realValue = -operand->realValue;
      return operand;
    }
    auto n = makeNode(AstKind::UnaryOp, loc);
    n->op = op;
    n->type = operand->type;
    n->children.push_back(std::move(operand));
    return n;
  }

  NodePtr makeBinary(const std::string& op, NodePtr lhs, NodePtr rhs, SourceLoc loc) {
    bool ints = lhs->type == ScalarKind::Integer && rhs->type == ScalarKind::Integer;
    if (ints && lhs->kind == AstKind::Const && rhs->kind == AstKind::Const)
      return makeIntConst(foldInt(op, lhs->intValue, rhs->intValue, loc), loc);
    if (ints && op == "**") throw UnsupportedConstruct("integer exponentiation of variables", loc);
    auto n = makeNode(AstKind::BinOp, loc);
    n->op = op;
    n->type = ints ? ScalarKind::Integer : ScalarKind::Real;
    n->children.push_back(std::move(lhs));
    n->children.push_back(std::move(rhs));
    return n;
  }

  int64_t foldInt(const std::string& op, int64_t a, int64_t b, SourceLoc loc) {
    if (op == "+") return a + b;
    if (op == "-") return a - b;
    if (op == "*") return a * b;
    if (op == "/") {
      if (b == 0) fail("integer division by zero", loc);
      return a / b;  // truncates toward zero, as Fortran does
    }
    if (b < 0) fail("negative integer exponent", loc);
    int64_t r = 1;
    for (int64_t i = 0; i < b; ++i) r *= a;
    return r;
  }

  /// Folds a constant expression (parameters, literals, arithmetic).
  NodePtr evalConst(const AstNode& e) {
    switch (e.kind) {
      case AstKind::Const:
        return e.type == ScalarKind::Integer ? makeIntConst(e.intValue, e.loc) : makeRealConst(e.realValue, e.loc);
      case AstKind::UnaryOp: {
        NodePtr v = evalConst(*e.children[0]);
        return makeUnary("-", std::move(v), e.loc);
      }
      case AstKind::BinOp: {
        NodePtr a = evalConst(*e.children[0]);
        NodePtr b = evalConst(*e.children[1]);
        if (a->type == ScalarKind::Integer && b->type == ScalarKind::Integer)
          return makeIntConst(foldInt(e.op, a->intValue, b->intValue, e.loc), e.loc);
        double x = a->type == ScalarKind::Integer ? static_cast<double>(a->intValue) : a->realValue;
        double y = b->type == ScalarKind::Integer ? static_cast<double>(b->intValue) : b->realValue;
        double r = e.op == "+" ? x + y : e.op == "-" ? x - y : e.op == "*" ? x * y : e.op == "/" ? x / y : std::pow(x, y);
        return makeRealConst(r, e.loc);
      }
      default:
        fail("expected a constant expression", e.loc);
    }
  }

  int64_t constInt(const AstNode& e) {
    NodePtr v = evalConst(e);
    if (v->type != ScalarKind::Integer) fail("expected an integer constant", e.loc);
    return v->intValue;
  }

  static std::optional<Affine> affine(const AstNode& e) {
    switch (e.kind) {
      case AstKind::Const:
        return Affine{std::nullopt, e.intValue};
      case AstKind::ScalarRef:
        return Affine{e.name, 0};
      case AstKind::BinOp: {
        if (e.op != "+" && e.op != "-") return std::nullopt;
        auto a = affine(*e.children[0]);
        auto b = affine(*e.children[1]);
        if (!a || !b) return std::nullopt;
        if (e.op == "-") {
          if (b->var) return std::nullopt;
          return Affine{a->var, a->offset - b->offset};
        }
        if (a->var && b->var) return std::nullopt;
        return Affine{a->var ? a->var : b->var, a->offset + b->offset};
      }
      default:
        return std::nullopt;
    }
  }

  // -- token helpers --------------------------------------------------------

  const Token& cur() const {
    static const Token eof{Tok::Newline, "<end of file>", {}};
    return pos_ < toks_.size() ? toks_[pos_] : eof;
  }
  bool atEnd() const { return pos_ >= toks_.size(); }
  bool check(Tok k) const { return !atEnd() && toks_[pos_].kind == k; }
  bool peekIs(size_t n, Tok k) const { return pos_ + n < toks_.size() && toks_[pos_ + n].kind == k; }
  const Token& advance() { return toks_[pos_++]; }
  bool accept(Tok k) {
    if (!check(k)) return false;
    ++pos_;
    return true;
  }
  void expect(Tok k, const char* what) {
    if (!accept(k)) fail(std::string("expected ") + what + ", found '" + cur().text + "'");
  }
  std::string expectIdent(const char* what) {
    if (!check(Tok::Ident)) fail(std::string("expected ") + what + ", found '" + cur().text + "'");
    return advance().text;
  }
  void skipNewlines() {
    while (check(Tok::Newline)) ++pos_;
  }
  void endOfStatement() {
    if (atEnd()) return;
    if (!accept(Tok::Newline)) fail("unexpected '" + cur().text + "' at end of statement");
  }

  [[noreturn]] void fail(const std::string& msg) { fail(msg, atEnd() && !toks_.empty() ? toks_.back().loc : cur().loc); }
  [[noreturn]] void fail(const std::string& msg, SourceLoc loc) { throw ParseError(msg, loc); }

  const std::vector<Token>& toks_;
  SourceProgram* src_;
  size_t pos_ = 0;
  std::unordered_map<std::string, Symbol> symbols_;
  std::unordered_set<std::string> declared_;
  std::unordered_set<std::string> dummies_;
  std::vector<std::string> dummyOrder_;
  std::vector<std::string> loopVars_;
};

}  // namespace

std::unique_ptr<AstNode> parse(const std::vector<Token>& tokens, SourceProgram* src) {
  return Parser(tokens, src).run();
}

}  // namespace sf::frontend
