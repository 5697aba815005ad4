#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "stencilforge/frontend.hpp"

namespace sf::frontend {

SourceProgram readSource(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open source file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return SourceProgram{path, ss.str(), {}};
}

const char* tokName(Tok t) {
  switch (t) {
    case Tok::Program: return "PROGRAM";
    case Tok::Subroutine: return "SUBROUTINE";
    case Tok::End: return "END";
    case Tok::Do: return "DO";
    case Tok::EndDo: return "ENDDO";
    case Tok::Real: return "REAL";
    case Tok::Integer: return "INTEGER";
    case Tok::Parameter: return "PARAMETER";
    case Tok::Dimension: return "DIMENSION";
    case Tok::Allocatable: return "ALLOCATABLE";
    case Tok::Allocate: return "ALLOCATE";
    case Tok::Implicit: return "IMPLICIT";
    case Tok::None: return "NONE";
    case Tok::Ident: return "IDENT";
    case Tok::Int: return "INT";
    case Tok::RealLit: return "REAL_LIT";
    case Tok::Plus: return "PLUS";
    case Tok::Minus: return "MINUS";
    case Tok::Star: return "STAR";
    case Tok::Slash: return "SLASH";
    case Tok::Pow: return "POW";
    case Tok::Eq: return "EQ";
    case Tok::LParen: return "LPAREN";
    case Tok::RParen: return "RPAREN";
    case Tok::Comma: return "COMMA";
    case Tok::Colon: return "COLON";
    case Tok::DColon: return "DCOLON";
    case Tok::Newline: return "NEWLINE";
  }
  return "?";
}

namespace {

const std::unordered_map<std::string, Tok>& keywords() {
  static const std::unordered_map<std::string, Tok> kw = {
      {"program", Tok::Program},         {"subroutine", Tok::Subroutine}, {"end", Tok::End},
      {"do", Tok::Do},                   {"enddo", Tok::EndDo},           {"real", Tok::Real},
      {"integer", Tok::Integer},         {"parameter", Tok::Parameter},   {"dimension", Tok::Dimension},
      {"allocatable", Tok::Allocatable}, {"allocate", Tok::Allocate},     {"implicit", Tok::Implicit},
      {"none", Tok::None},
  };
  return kw;
}

class Lexer {
 public:
  explicit Lexer(std::string_view text) : text_(text) {}

  std::vector<Token> run() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '\n' || c == ';') {
        newline();
        advance();
        continue;
      }
      if (c == ' ' || c == '\t' || c == '\r') {
        advance();
        continue;
      }
      if (c == '!') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance();
        continue;
      }
      if (c == '&') {
        // Continuation: drop everything up to and including the newline, and
        // an optional leading '&' on the next line.
        advance();
        while (pos_ < text_.size() && text_[pos_] != '\n') {
          if (text_[pos_] == '!') {
            while (pos_ < text_.size() && text_[pos_] != '\n') advance();
            break;
          }
          if (!std::isspace(static_cast<unsigned char>(text_[pos_])))
            throw LexError("unexpected text after continuation '&'", loc());
          advance();
        }
        if (pos_ < text_.size()) advance();
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) advance();
        if (pos_ < text_.size() && text_[pos_] == '&') advance();
        continue;
      }
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        ident();
        continue;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) ||
          (c == '.' && pos_ + 1 < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_ + 1])))) {
        number();
        continue;
      }
      SourceLoc l = loc();
      switch (c) {
        case '+': push(Tok::Plus, "+", l); break;
        case '-': push(Tok::Minus, "-", l); break;
        case '*':
          if (peekAt(1) == '*') {
            advance();
            push(Tok::Pow, "**", l);
          } else {
            push(Tok::Star, "*", l);
          }
          break;
        case '/': push(Tok::Slash, "/", l); break;
        case '=': push(Tok::Eq, "=", l); break;
        case '(': push(Tok::LParen, "(", l); break;
        case ')': push(Tok::RParen, ")", l); break;
        case ',': push(Tok::Comma, ",", l); break;
        case ':':
          if (peekAt(1) == ':') {
            advance();
            push(Tok::DColon, "::", l);
          } else {
            push(Tok::Colon, ":", l);
          }
          break;
        default: {
          std::string shown(1, c);
          if (static_cast<unsigned char>(c) < 0x20 || static_cast<unsigned char>(c) >= 0x7f) {
            char buf[8];
            std::snprintf(buf, sizeof buf, "0x%02x", static_cast<unsigned char>(c));
            shown = buf;
          }
          throw LexError("unrecognized character '" + shown + "'", l);
        }
      }
      advance();
    }
    while (!tokens_.empty() && tokens_.back().kind == Tok::Newline) tokens_.pop_back();
    return std::move(tokens_);
  }

 private:
  void ident() {
    SourceLoc l = loc();
    size_t start = pos_;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
      advance();
    std::string word(text_.substr(start, pos_ - start));
    std::transform(word.begin(), word.end(), word.begin(), [](unsigned char ch) { return std::tolower(ch); });
    auto it = keywords().find(word);
    push(it == keywords().end() ? Tok::Ident : it->second, word, l);
  }

  void number() {
    SourceLoc l = loc();
    size_t start = pos_;
    bool isReal = false;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) advance();
    if (pos_ < text_.size() && text_[pos_] == '.') {
      isReal = true;
      advance();
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) advance();
    }
    std::string digits(text_.substr(start, pos_ - start));
    // exponent: e, d (double precision) followed by optional sign and digits
    if (pos_ < text_.size() && std::strchr("eEdD", text_[pos_]) != nullptr) {
      size_t save = pos_;
      int saveCol = col_;
      advance();
      std::string exp = "e";
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) {
        exp += text_[pos_];
        advance();
      }
      if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
          exp += text_[pos_];
          advance();
        }
        digits += exp;
        isReal = true;
      } else {
        pos_ = save;
        col_ = saveCol;
      }
    }
    // kind suffix: 1.0_8, 2_dp
    if (pos_ < text_.size() && text_[pos_] == '_') {
      advance();
      while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_'))
        advance();
    }
    Token t{isReal ? Tok::RealLit : Tok::Int, std::string(text_.substr(start, pos_ - start)), l};
    if (isReal) {
      if (digits.back() == '.') digits += "0";
      if (digits.front() == '.') digits = "0" + digits;
      auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), t.realValue);
      if (ec != std::errc()) throw LexError("malformed real literal '" + t.text + "'", l);
    } else {
      auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), t.intValue);
      if (ec != std::errc()) throw LexError("integer literal out of range '" + t.text + "'", l);
    }
    tokens_.push_back(std::move(t));
  }

  void newline() {
    if (!tokens_.empty() && tokens_.back().kind != Tok::Newline) push(Tok::Newline, "\\n", loc());
  }

  void push(Tok k, std::string text, SourceLoc l) { tokens_.push_back(Token{k, std::move(text), l}); }

  char peekAt(size_t n) const { return pos_ + n < text_.size() ? text_[pos_ + n] : '\0'; }

  void advance() {
    if (text_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  SourceLoc loc() const { return {line_, col_}; }

  std::string_view text_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
  std::vector<Token> tokens_;
};

}  // namespace

std::vector<Token> tokenize(const SourceProgram& src) { return Lexer(src.text).run(); }

}  // namespace sf::frontend
