#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace hsynth::dsl {

/// Cache programs score objects with real arithmetic; kernel programs run
/// under integer-only, verifier-style rules.
enum class Mode { cache, kernel };

inline std::string_view to_string(Mode m) { return m == Mode::cache ? "cache" : "kernel"; }

struct Location {
  int line = 1;
  int column = 1;
  bool operator==(const Location&) const = default;
};

enum class BinaryOp { add, sub, mul, div, mod, lt, le, gt, ge, eq, ne, land, lor };
enum class UnaryOp { neg, lnot };

inline std::string_view spelling(BinaryOp op) {
  switch (op) {
    case BinaryOp::add: return "+";
    case BinaryOp::sub: return "-";
    case BinaryOp::mul: return "*";
    case BinaryOp::div: return "/";
    case BinaryOp::mod: return "%";
    case BinaryOp::lt: return "<";
    case BinaryOp::le: return "<=";
    case BinaryOp::gt: return ">";
    case BinaryOp::ge: return ">=";
    case BinaryOp::eq: return "==";
    case BinaryOp::ne: return "!=";
    case BinaryOp::land: return "&&";
    case BinaryOp::lor: return "||";
  }
  return "?";
}

inline bool is_comparison(BinaryOp op) {
  return op == BinaryOp::lt || op == BinaryOp::le || op == BinaryOp::gt || op == BinaryOp::ge ||
         op == BinaryOp::eq || op == BinaryOp::ne;
}

/// Binding strength, higher binds tighter. Ternary sits below all of these.
inline int precedence(BinaryOp op) {
  switch (op) {
    case BinaryOp::lor: return 2;
    case BinaryOp::land: return 3;
    case BinaryOp::eq:
    case BinaryOp::ne: return 4;
    case BinaryOp::lt:
    case BinaryOp::le:
    case BinaryOp::gt:
    case BinaryOp::ge: return 5;
    case BinaryOp::add:
    case BinaryOp::sub: return 6;
    case BinaryOp::mul:
    case BinaryOp::div:
    case BinaryOp::mod: return 7;
  }
  return 0;
}

struct Expr {
  enum class Kind { number, ident, unary, binary, ternary, call };

  Kind kind = Kind::number;
  // number: value is always >= 0; negation is a unary node. `fractional`
  // records whether the literal was written with a decimal point or exponent.
  double value = 0.0;
  bool fractional = false;
  std::string name;  // ident name or callee
  UnaryOp uop = UnaryOp::neg;
  BinaryOp bop = BinaryOp::add;
  std::vector<Expr> args;  // unary: 1, binary: 2, ternary: 3, call: n
  Location loc{};

  static Expr number(double v, bool fractional = false) {
    Expr e;
    e.kind = Kind::number;
    e.value = v;
    e.fractional = fractional;
    return e;
  }
  static Expr ident(std::string n) {
    Expr e;
    e.kind = Kind::ident;
    e.name = std::move(n);
    return e;
  }
  static Expr unary(UnaryOp op, Expr a) {
    Expr e;
    e.kind = Kind::unary;
    e.uop = op;
    e.args.push_back(std::move(a));
    return e;
  }
  static Expr binary(BinaryOp op, Expr a, Expr b) {
    Expr e;
    e.kind = Kind::binary;
    e.bop = op;
    e.args.push_back(std::move(a));
    e.args.push_back(std::move(b));
    return e;
  }
  static Expr ternary(Expr c, Expr a, Expr b) {
    Expr e;
    e.kind = Kind::ternary;
    e.args.push_back(std::move(c));
    e.args.push_back(std::move(a));
    e.args.push_back(std::move(b));
    return e;
  }
  static Expr call(std::string callee, std::vector<Expr> args) {
    Expr e;
    e.kind = Kind::call;
    e.name = std::move(callee);
    e.args = std::move(args);
    return e;
  }
};

// Structural equality; source locations are ignored.
inline bool operator==(const Expr& a, const Expr& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Expr::Kind::number: return a.value == b.value && a.fractional == b.fractional;
    case Expr::Kind::ident: return a.name == b.name;
    case Expr::Kind::unary: return a.uop == b.uop && a.args == b.args;
    case Expr::Kind::binary: return a.bop == b.bop && a.args == b.args;
    case Expr::Kind::ternary: return a.args == b.args;
    case Expr::Kind::call: return a.name == b.name && a.args == b.args;
  }
  return false;
}

struct Stmt {
  enum class Kind { let, assign, add_assign, sub_assign, if_ };

  Kind kind = Kind::let;
  std::string target;  // let / assignments
  Expr expr;           // value, or the condition for if_
  std::vector<Stmt> then_body;
  std::vector<Stmt> else_body;
  bool has_else = false;
  Location loc{};
};

inline bool operator==(const Stmt& a, const Stmt& b) {
  if (a.kind != b.kind || !(a.expr == b.expr)) return false;
  if (a.kind == Stmt::Kind::if_)
    return a.has_else == b.has_else && a.then_body == b.then_body && a.else_body == b.else_body;
  return a.target == b.target;
}

/// A candidate heuristic: statements followed by a single return.
struct Program {
  Mode mode = Mode::cache;
  std::vector<Stmt> body;
  Expr result;
  std::string source;  // text it was parsed from, or its rendering
  Location result_loc{};
};

// AST equality: mode, statements and return expression. Source text is not compared.
inline bool operator==(const Program& a, const Program& b) {
  return a.mode == b.mode && a.body == b.body && a.result == b.result;
}

}  // namespace hsynth::dsl
