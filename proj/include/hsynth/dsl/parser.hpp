#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hsynth/dsl/ast.hpp"

namespace hsynth::dsl {

class SyntaxError : public std::runtime_error {
 public:
  SyntaxError(Location loc, const std::string& message)
      : std::runtime_error(std::to_string(loc.line) + ":" + std::to_string(loc.column) + ": " + message),
        loc_(loc),
        message_(message) {}

  Location location() const noexcept { return loc_; }
  const std::string& message() const noexcept { return message_; }

 private:
  Location loc_;
  std::string message_;
};

namespace detail {

enum class Tok {
  end, number, ident, kw_let, kw_if, kw_else, kw_return,
  lparen, rparen, lbrace, rbrace, comma, semi, question, colon,
  plus, minus, star, slash, percent,
  lt, le, gt, ge, eqeq, ne, andand, oror, bang,
  assign, plus_assign, minus_assign,
};

struct Token {
  Tok kind = Tok::end;
  std::string_view text;
  double number = 0.0;
  bool fractional = false;
  Location loc{};
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      Token t;
      t.loc = {line_, col_};
      if (pos_ >= src_.size()) {
        t.kind = Tok::end;
        out.push_back(t);
        return out;
      }
      char c = src_[pos_];
      if (std::isdigit(static_cast<unsigned char>(c)) || (c == '.' && pos_ + 1 < src_.size() &&
                                                          std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
        lex_number(t);
      } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
          advance();
        t.text = src_.substr(start, pos_ - start);
        t.kind = t.text == "let"      ? Tok::kw_let
                 : t.text == "if"     ? Tok::kw_if
                 : t.text == "else"   ? Tok::kw_else
                 : t.text == "return" ? Tok::kw_return
                                      : Tok::ident;
      } else {
        lex_punct(t);
      }
      out.push_back(t);
    }
  }

 private:
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void skip_space() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (std::isspace(static_cast<unsigned char>(c))) {
        advance();
      } else if (c == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else {
        return;
      }
    }
  }

  void lex_number(Token& t) {
    std::size_t start = pos_;
    bool fractional = false;
    while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      fractional = true;
      advance();
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t save = pos_;
      int save_col = col_;
      advance();
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) advance();
      if (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        fractional = true;
        while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) advance();
      } else {
        pos_ = save;
        col_ = save_col;
      }
    }
    t.kind = Tok::number;
    t.text = src_.substr(start, pos_ - start);
    t.fractional = fractional;
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
    if (ec != std::errc{} || ptr != t.text.data() + t.text.size() || !std::isfinite(v))
      throw SyntaxError(t.loc, "invalid numeric literal '" + std::string(t.text) + "'");
    t.number = v;
  }

  void lex_punct(Token& t) {
    auto two = [&](char a, char b) {
      return src_[pos_] == a && pos_ + 1 < src_.size() && src_[pos_ + 1] == b;
    };
    struct Pair { char a, b; Tok kind; };
    static constexpr Pair pairs[] = {
        {'<', '=', Tok::le},  {'>', '=', Tok::ge},         {'=', '=', Tok::eqeq},
        {'!', '=', Tok::ne},  {'&', '&', Tok::andand},     {'|', '|', Tok::oror},
        {'+', '=', Tok::plus_assign}, {'-', '=', Tok::minus_assign},
    };
    for (const auto& p : pairs) {
      if (two(p.a, p.b)) {
        t.kind = p.kind;
        t.text = src_.substr(pos_, 2);
        advance();
        advance();
        return;
      }
    }
    char c = src_[pos_];
    switch (c) {
      case '(': t.kind = Tok::lparen; break;
      case ')': t.kind = Tok::rparen; break;
      case '{': t.kind = Tok::lbrace; break;
      case '}': t.kind = Tok::rbrace; break;
      case ',': t.kind = Tok::comma; break;
      case ';': t.kind = Tok::semi; break;
      case '?': t.kind = Tok::question; break;
      case ':': t.kind = Tok::colon; break;
      case '+': t.kind = Tok::plus; break;
      case '-': t.kind = Tok::minus; break;
      case '*': t.kind = Tok::star; break;
      case '/': t.kind = Tok::slash; break;
      case '%': t.kind = Tok::percent; break;
      case '<': t.kind = Tok::lt; break;
      case '>': t.kind = Tok::gt; break;
      case '!': t.kind = Tok::bang; break;
      case '=': t.kind = Tok::assign; break;
      default:
        throw SyntaxError(t.loc, std::string("unexpected character '") + c + "'");
    }
    t.text = src_.substr(pos_, 1);
    advance();
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

class Parser {
 public:
  static constexpr int kMaxDepth = 200;

  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Program program(Mode mode) {
    Program p;
    p.mode = mode;
    while (peek().kind != Tok::kw_return) {
      if (peek().kind == Tok::end) fail(peek(), "expected 'return <expr>;' at end of program");
      p.body.push_back(statement());
    }
    p.result_loc = peek().loc;
    next();
    p.result = expression();
    expect(Tok::semi, "';' after return expression");
    if (peek().kind != Tok::end) fail(peek(), "unexpected input after return statement");
    return p;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    std::size_t i = std::min(pos_ + ahead, toks_.size() - 1);
    return toks_[i];
  }
  const Token& next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }
  [[noreturn]] void fail(const Token& t, const std::string& msg) const {
    std::string near = t.kind == Tok::end ? "end of input" : "'" + std::string(t.text) + "'";
    throw SyntaxError(t.loc, msg + " (near " + near + ")");
  }
  const Token& expect(Tok k, const char* what) {
    if (peek().kind != k) fail(peek(), std::string("expected ") + what);
    return next();
  }

  struct DepthGuard {
    Parser& p;
    explicit DepthGuard(Parser& parser) : p(parser) {
      if (++p.depth_ > kMaxDepth) p.fail(p.peek(), "nesting too deep");
    }
    ~DepthGuard() { --p.depth_; }
  };

  std::vector<Stmt> block() {
    expect(Tok::lbrace, "'{'");
    std::vector<Stmt> out;
    while (peek().kind != Tok::rbrace) {
      if (peek().kind == Tok::end) fail(peek(), "expected '}'");
      out.push_back(statement());
    }
    next();
    return out;
  }

  Stmt statement() {
    DepthGuard guard(*this);
    Stmt s;
    s.loc = peek().loc;
    switch (peek().kind) {
      case Tok::kw_let: {
        next();
        s.kind = Stmt::Kind::let;
        s.target = std::string(expect(Tok::ident, "identifier after 'let'").text);
        expect(Tok::assign, "'=' in let");
        s.expr = expression();
        expect(Tok::semi, "';'");
        return s;
      }
      case Tok::kw_if: {
        next();
        s.kind = Stmt::Kind::if_;
        expect(Tok::lparen, "'(' after 'if'");
        s.expr = expression();
        expect(Tok::rparen, "')'");
        s.then_body = block();
        if (peek().kind == Tok::kw_else) {
          next();
          s.has_else = true;
          s.else_body = block();
        }
        return s;
      }
      case Tok::ident: {
        s.target = std::string(next().text);
        switch (peek().kind) {
          case Tok::assign: s.kind = Stmt::Kind::assign; break;
          case Tok::plus_assign: s.kind = Stmt::Kind::add_assign; break;
          case Tok::minus_assign: s.kind = Stmt::Kind::sub_assign; break;
          default: fail(peek(), "expected '=', '+=' or '-='");
        }
        next();
        s.expr = expression();
        expect(Tok::semi, "';'");
        return s;
      }
      default:
        fail(peek(), "expected a statement");
    }
  }

  Expr expression() {
    DepthGuard guard(*this);
    Location loc = peek().loc;
    Expr cond = binary(2);
    if (peek().kind != Tok::question) return cond;
    next();
    Expr a = expression();
    expect(Tok::colon, "':' in conditional expression");
    Expr b = expression();
    Expr e = Expr::ternary(std::move(cond), std::move(a), std::move(b));
    e.loc = loc;
    return e;
  }

  static bool binary_op(Tok t, BinaryOp& op) {
    switch (t) {
      case Tok::oror: op = BinaryOp::lor; return true;
      case Tok::andand: op = BinaryOp::land; return true;
      case Tok::eqeq: op = BinaryOp::eq; return true;
      case Tok::ne: op = BinaryOp::ne; return true;
      case Tok::lt: op = BinaryOp::lt; return true;
      case Tok::le: op = BinaryOp::le; return true;
      case Tok::gt: op = BinaryOp::gt; return true;
      case Tok::ge: op = BinaryOp::ge; return true;
      case Tok::plus: op = BinaryOp::add; return true;
      case Tok::minus: op = BinaryOp::sub; return true;
      case Tok::star: op = BinaryOp::mul; return true;
      case Tok::slash: op = BinaryOp::div; return true;
      case Tok::percent: op = BinaryOp::mod; return true;
      default: return false;
    }
  }

  // Precedence climbing; all binary operators are left-associative.
  Expr binary(int min_prec) {
    Expr lhs = unary();
    for (;;) {
      BinaryOp op;
      if (!binary_op(peek().kind, op) || precedence(op) < min_prec) return lhs;
      Location loc = next().loc;
      Expr rhs = binary(precedence(op) + 1);
      lhs = Expr::binary(op, std::move(lhs), std::move(rhs));
      lhs.loc = loc;
    }
  }

  Expr unary() {
    DepthGuard guard(*this);
    Location loc = peek().loc;
    if (peek().kind == Tok::minus || peek().kind == Tok::bang) {
      UnaryOp op = next().kind == Tok::minus ? UnaryOp::neg : UnaryOp::lnot;
      Expr e = Expr::unary(op, unary());
      e.loc = loc;
      return e;
    }
    return primary();
  }

  Expr primary() {
    const Token& t = peek();
    Expr e;
    switch (t.kind) {
      case Tok::number:
        next();
        e = Expr::number(t.number, t.fractional);
        break;
      case Tok::ident: {
        next();
        if (peek().kind == Tok::lparen) {
          next();
          std::vector<Expr> args;
          if (peek().kind != Tok::rparen) {
            args.push_back(expression());
            while (peek().kind == Tok::comma) {
              next();
              args.push_back(expression());
            }
          }
          expect(Tok::rparen, "')' after call arguments");
          e = Expr::call(std::string(t.text), std::move(args));
        } else {
          e = Expr::ident(std::string(t.text));
        }
        break;
      }
      case Tok::lparen: {
        next();
        e = expression();
        expect(Tok::rparen, "')'");
        return e;  // keep the inner location
      }
      default:
        fail(t, "expected an expression");
    }
    e.loc = t.loc;
    return e;
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  int depth_ = 0;
};

}  // namespace detail

/// Parses DSL source. Throws SyntaxError on malformed input.
inline Program parse(std::string_view source, Mode mode) {
  detail::Lexer lexer(source);
  detail::Parser parser(lexer.run());
  Program p = parser.program(mode);
  p.source = std::string(source);
  return p;
}

}  // namespace hsynth::dsl
