#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "stencilforge/error.hpp"
#include "stencilforge/ir.hpp"

namespace sf::frontend {

struct SourceProgram {
  std::string path;
  std::string text;
  std::string unitName;  // filled in by parse()
};

SourceProgram readSource(const std::string& path);

enum class Tok {
  // keywords
  Program, Subroutine, End, Do, EndDo, Real, Integer, Parameter, Dimension, Allocatable, Allocate,
  Implicit, None,
  // literals and names
  Ident, Int, RealLit,
  // punctuation
  Plus, Minus, Star, Slash, Pow, Eq, LParen, RParen, Comma, Colon, DColon,
  Newline,
};

const char* tokName(Tok t);

struct Token {
  Tok kind;
  std::string text;  // identifiers are lower-cased
  SourceLoc loc;
  int64_t intValue = 0;
  double realValue = 0.0;

  friend bool operator==(const Token& a, const Token& b) {
    return a.kind == b.kind && a.text == b.text && a.intValue == b.intValue && a.realValue == b.realValue;
  }
};

/// Free-form lexer. `!` comments and `&` continuations are consumed; one
/// Newline token ends each non-empty logical line except the last.
std::vector<Token> tokenize(const SourceProgram& src);

enum class AstKind { Program, Decl, DoLoop, Assign, ArrayRef, BinOp, UnaryOp, Const, ScalarRef };

const char* astKindName(AstKind k);

struct DeclaredDim {
  int64_t lower = 1;
  int64_t upper = 0;
  int64_t extent() const { return upper - lower + 1; }
};

enum class ScalarKind { Real, Integer };

struct AstNode {
  AstKind kind;
  SourceLoc loc;
  std::vector<std::unique_ptr<AstNode>> children;

  std::string name;        // identifier, unit name, loop variable
  std::string op;          // operator symbol for BinOp/UnaryOp
  ScalarKind type = ScalarKind::Real;  // Const value type, Decl element type
  int64_t intValue = 0;
  double realValue = 0.0;

  // Decl metadata
  std::vector<DeclaredDim> dims;
  bool isParameter = false;
  bool isAllocatable = false;
  bool isDummy = false;
  bool allocated = false;

  // Program metadata
  bool isSubroutine = false;

  AstNode(AstKind k, SourceLoc l) : kind(k), loc(l) {}

  // DoLoop accessors: children = [lower, upper, step, body...]
  const AstNode& lower() const { return *children[0]; }
  const AstNode& upper() const { return *children[1]; }
  const AstNode& step() const { return *children[2]; }
  size_t bodySize() const { return children.size() - 3; }
};

/// Parses one program unit. Parameters are folded into Const nodes and
/// every index expression is checked to be `var`, `var +/- c` or `c`.
std::unique_ptr<AstNode> parse(const std::vector<Token>& tokens, SourceProgram* src = nullptr);

/// Lowers a parsed program unit to loop/mem/arith IR (one function).
IRModule lowerToIR(const AstNode& program);

/// tokenize + parse + lowerToIR.
IRModule compileSource(SourceProgram& src);
IRModule compileText(std::string_view text, const std::string& path = "<memory>");

}  // namespace sf::frontend
