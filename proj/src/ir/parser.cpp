#include <cctype>
#include <charconv>
#include <cmath>
#include <limits>

#include "stencilforge/ir.hpp"

namespace sf {
namespace {

class IRParser {
 public:
  explicit IRParser(std::string_view text) : text_(text) {}

  std::vector<IRModule> parseAll() {
    std::vector<IRModule> modules;
    skipWs();
    while (!atEnd()) {
      modules.push_back(parseModule());
      skipWs();
    }
    if (modules.empty()) fail("expected 'module'");
    return modules;
  }

 private:
  IRModule parseModule() {
    expectWord("module");
    values_.clear();
    IRModule m;
    skipWs();
    if (peek() == '@') {
      ++pos_;
      m.setName(parseIdent());
    }
    expect('{');
    while (true) {
      skipWs();
      if (peek() == '}') {
        ++pos_;
        break;
      }
      SourceLoc loc = location();
      auto op = parseOp();
      if (op->name() != "func.func") fail("only func.func may appear at module level", loc);
      m.addFunction(std::move(op));
    }
    return m;
  }

  std::unique_ptr<Operation> parseOp() {
    SourceLoc loc = location();
    std::vector<std::string> resultNames;
    skipWs();
    if (peek() == '%') {
      resultNames.push_back(parseValueName());
      while (tryConsume(',')) resultNames.push_back(parseValueName());
      expect('=');
    }
    std::string name = parseString();
    const OpInfo* info = lookupOp(name);
    if (!info) fail("unknown operation '" + name + "'", loc);

    expect('(');
    std::vector<Value*> operands;
    skipWs();
    if (peek() != ')') {
      do {
        SourceLoc vloc = location();
        std::string v = parseValueName();
        auto it = values_.find(v);
        if (it == values_.end()) fail("undefined value " + v, vloc);
        operands.push_back(it->second);
      } while (tryConsume(','));
    }
    expect(')');

    auto op = Operation::create(name, std::move(operands));
    op->loc = loc;

    // Regions are parsed before result names are bound; results are not
    // visible inside their own op's regions.
    skipWs();
    if (peek() == '(') {
      ++pos_;
      do {
        parseRegion(op->addRegion());
      } while (tryConsume(','));
      expect(')');
    }
    skipWs();
    if (peek() == '{') {
      ++pos_;
      skipWs();
      if (peek() != '}') {
        do {
          std::string key = parseIdent();
          expect('=');
          op->setAttr(key, parseAttribute());
        } while (tryConsume(','));
      }
      expect('}');
    }
    expect(':');
    std::vector<Type> operandTypes = parseTypeList();
    expectArrow();
    std::vector<Type> resultTypes = parseTypeList();

    if (operandTypes.size() != op->numOperands())
      fail("operand type count mismatch for '" + name + "'", loc);
    for (size_t i = 0; i < operandTypes.size(); ++i)
      if (!(operandTypes[i] == op->operand(i)->type))
        fail("operand " + std::to_string(i) + " of '" + name + "' has type " +
                 op->operand(i)->type.str() + ", signature says " + operandTypes[i].str(),
             loc);
    if (resultTypes.size() != resultNames.size())
      fail("result count mismatch for '" + name + "'", loc);
    for (size_t i = 0; i < resultTypes.size(); ++i) define(resultNames[i], op->addResult(resultTypes[i]), loc);
    return op;
  }

  void parseRegion(Region& region) {
    expect('{');
    skipWs();
    if (peek() == '^') {
      ++pos_;
      parseIdent();
      expect('(');
      skipWs();
      if (peek() != ')') {
        do {
          SourceLoc loc = location();
          std::string v = parseValueName();
          expect(':');
          define(v, region.addArgument(parseType()), loc);
        } while (tryConsume(','));
      }
      expect(')');
      expect(':');
    }
    while (true) {
      skipWs();
      if (peek() == '}') {
        ++pos_;
        return;
      }
      if (atEnd()) fail("unterminated region");
      region.append(parseOp());
    }
  }

  Attribute parseAttribute() {
    skipWs();
    char c = peek();
    if (c == '"') return parseString();
    if (c == '[') {
      ++pos_;
      IntList list;
      skipWs();
      if (peek() != ']') {
        do {
          list.push_back(parseInt());
        } while (tryConsume(','));
      }
      expect(']');
      return list;
    }
    if (c == '#') {
      expectWord("#bounds");
      expect('<');
      Bounds b = parseBoundsBody();
      expect('>');
      return b;
    }
    if (matchWord("nan")) return std::numeric_limits<double>::quiet_NaN();
    if (matchWord("inf")) return std::numeric_limits<double>::infinity();
    if (matchWord("-inf")) return -std::numeric_limits<double>::infinity();
    return parseNumber();
  }

  Attribute parseNumber() {
    skipWs();
    size_t start = pos_;
    if (peek() == '-' || peek() == '+') ++pos_;
    bool isFloat = false;
    while (!atEnd()) {
      char c = text_[pos_];
      if (std::isdigit(static_cast<unsigned char>(c))) {
        ++pos_;
      } else if (c == '.' || c == 'e' || c == 'E') {
        isFloat = true;
        ++pos_;
        if ((c == 'e' || c == 'E') && (peek() == '-' || peek() == '+')) ++pos_;
      } else {
        break;
      }
    }
    std::string_view tok = text_.substr(start, pos_ - start);
    if (tok.empty() || tok == "-" || tok == "+") fail("expected attribute value");
    const char* b = tok.data();
    if (*b == '+') ++b;
    if (isFloat) {
      double v = 0;
      auto [p, ec] = std::from_chars(b, tok.data() + tok.size(), v);
      if (ec != std::errc() || p != tok.data() + tok.size()) fail("malformed float '" + std::string(tok) + "'");
      return v;
    }
    int64_t v = 0;
    auto [p, ec] = std::from_chars(b, tok.data() + tok.size(), v);
    if (ec != std::errc() || p != tok.data() + tok.size()) fail("malformed integer '" + std::string(tok) + "'");
    return v;
  }

  std::vector<Type> parseTypeList() {
    expect('(');
    std::vector<Type> types;
    skipWs();
    if (peek() != ')') {
      do {
        types.push_back(parseType());
      } while (tryConsume(','));
    }
    expect(')');
    return types;
  }

  Type parseType() {
    skipWs();
    if (matchWord("f64")) return Type::f64();
    if (matchWord("index")) return Type::index();
    if (matchWord("i64")) return Type::i64();
    if (matchWord("ptr")) return Type::ptr();
    if (matchWord("array<")) {
      std::vector<int64_t> shape;
      while (!matchWord("f64>")) {
        int64_t e = parseInt();
        if (!tryConsume('x')) fail("expected 'x' in array type");
        shape.push_back(e);
      }
      return Type::array(std::move(shape));
    }
    if (matchWord("!stencil.temp<")) {
      Bounds b = parseBoundsBody();
      if (!tryConsume('x')) fail("expected 'xf64' in temp type");
      if (!matchWord("f64>")) fail("expected 'f64>' in temp type");
      return Type::temp(std::move(b));
    }
    fail("unknown type");
  }

  Bounds parseBoundsBody() {
    std::vector<Interval> dims;
    do {
      expect('[');
      int64_t lb = parseInt();
      expect(',');
      int64_t ub = parseInt();
      expect(']');
      dims.push_back({lb, ub});
      skipWs();
      // `x[` continues the box; `xf64` ends a temp type.
    } while (pos_ + 1 < text_.size() && text_[pos_] == 'x' && text_[pos_ + 1] == '[' && (++pos_, true));
    return Bounds(std::move(dims));
  }

  // -- lexical helpers ------------------------------------------------------

  void define(const std::string& name, Value* v, SourceLoc loc) {
    if (!values_.emplace(name, v).second) fail("redefinition of " + name, loc);
  }

  std::string parseValueName() {
    skipWs();
    if (peek() != '%') fail("expected value name");
    size_t start = pos_++;
    while (!atEnd() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) ++pos_;
    if (pos_ == start + 1) fail("empty value name");
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string parseIdent() {
    skipWs();
    size_t start = pos_;
    while (!atEnd() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_' ||
                        text_[pos_] == '.'))
      ++pos_;
    if (pos_ == start) fail("expected identifier");
    return std::string(text_.substr(start, pos_ - start));
  }

  std::string parseString() {
    skipWs();
    if (peek() != '"') fail("expected string");
    ++pos_;
    std::string out;
    while (!atEnd() && text_[pos_] != '"') {
      if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) ++pos_;
      out += text_[pos_++];
    }
    if (atEnd()) fail("unterminated string");
    ++pos_;
    return out;
  }

  int64_t parseInt() {
    skipWs();
    size_t start = pos_;
    if (peek() == '-') ++pos_;
    while (!atEnd() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    int64_t v = 0;
    auto [p, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, v);
    if (ec != std::errc() || p != text_.data() + pos_) fail("expected integer");
    return v;
  }

  void expectArrow() {
    skipWs();
    if (text_.substr(pos_, 2) != "->") fail("expected '->'");
    pos_ += 2;
  }

  void expect(char c) {
    skipWs();
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  bool tryConsume(char c) {
    skipWs();
    if (peek() != c) return false;
    ++pos_;
    return true;
  }

  bool matchWord(std::string_view w) {
    skipWs();
    if (text_.substr(pos_, w.size()) != w) return false;
    pos_ += w.size();
    return true;
  }

  void expectWord(std::string_view w) {
    if (!matchWord(w)) fail("expected '" + std::string(w) + "'");
  }

  void skipWs() {
    while (!atEnd()) {
      char c = text_[pos_];
      if (c == '/' && pos_ + 1 < text_.size() && text_[pos_ + 1] == '/') {
        while (!atEnd() && text_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  char peek() const { return atEnd() ? '\0' : text_[pos_]; }
  bool atEnd() const { return pos_ >= text_.size(); }

  SourceLoc location() {
    skipWs();
    if (pos_ < locPos_) {
      locPos_ = 0;
      loc_ = {1, 1};
    }
    for (; locPos_ < pos_ && locPos_ < text_.size(); ++locPos_) {
      if (text_[locPos_] == '\n') {
        ++loc_.line;
        loc_.col = 1;
      } else {
        ++loc_.col;
      }
    }
    return loc_;
  }

  [[noreturn]] void fail(const std::string& msg) { fail(msg, location()); }
  [[noreturn]] void fail(const std::string& msg, SourceLoc loc) {
    throw IRParseError(msg + " (line " + std::to_string(loc.line) + ", column " + std::to_string(loc.col) + ")",
                       loc);
  }

  std::string_view text_;
  size_t pos_ = 0;
  size_t locPos_ = 0;
  SourceLoc loc_{1, 1};
  std::unordered_map<std::string, Value*> values_;
};

}  // namespace

std::vector<IRModule> parseIRModules(std::string_view text) { return IRParser(text).parseAll(); }

IRModule parseIR(std::string_view text) {
  auto modules = parseIRModules(text);
  if (modules.size() != 1)
    throw IRParseError("expected exactly one module, found " + std::to_string(modules.size()));
  return std::move(modules.front());
}

}  // namespace sf
