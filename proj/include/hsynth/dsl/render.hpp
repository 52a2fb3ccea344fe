#pragma once

#include <charconv>
#include <cmath>
#include <string>

#include "hsynth/dsl/ast.hpp"

namespace hsynth::dsl {

namespace detail {

inline constexpr int kTernaryPrec = 1;
inline constexpr int kUnaryPrec = 8;
inline constexpr int kAtomPrec = 9;

inline int expr_prec(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::ternary: return kTernaryPrec;
    case Expr::Kind::binary: return precedence(e.bop);
    case Expr::Kind::unary: return kUnaryPrec;
    default: return kAtomPrec;
  }
}

inline std::string format_number(double v, bool fractional) {
  char buf[64];
  if (!fractional && std::floor(v) == v) {
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed);
    return std::string(buf, p);
  }
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, p);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

inline void render_expr(std::string& out, const Expr& e);

inline void render_child(std::string& out, const Expr& child, bool parens) {
  if (parens) out += '(';
  render_expr(out, child);
  if (parens) out += ')';
}

inline void render_expr(std::string& out, const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::number: out += format_number(e.value, e.fractional); return;
    case Expr::Kind::ident: out += e.name; return;
    case Expr::Kind::unary:
      out += e.uop == UnaryOp::neg ? '-' : '!';
      render_child(out, e.args[0], expr_prec(e.args[0]) < kUnaryPrec);
      return;
    case Expr::Kind::binary: {
      int p = precedence(e.bop);
      render_child(out, e.args[0], expr_prec(e.args[0]) < p);
      out += ' ';
      out += spelling(e.bop);
      out += ' ';
      render_child(out, e.args[1], expr_prec(e.args[1]) <= p);
      return;
    }
    case Expr::Kind::ternary:
      render_child(out, e.args[0], expr_prec(e.args[0]) <= kTernaryPrec);
      out += " ? ";
      render_expr(out, e.args[1]);
      out += " : ";
      render_expr(out, e.args[2]);
      return;
    case Expr::Kind::call:
      out += e.name;
      out += '(';
      for (std::size_t i = 0; i < e.args.size(); ++i) {
        if (i) out += ", ";
        render_expr(out, e.args[i]);
      }
      out += ')';
      return;
  }
}

inline void render_block(std::string& out, const std::vector<Stmt>& body, int indent);

inline void render_stmt(std::string& out, const Stmt& s, int indent) {
  out.append(static_cast<std::size_t>(indent) * 2, ' ');
  switch (s.kind) {
    case Stmt::Kind::let:
      out += "let " + s.target + " = ";
      render_expr(out, s.expr);
      out += ";\n";
      return;
    case Stmt::Kind::assign:
    case Stmt::Kind::add_assign:
    case Stmt::Kind::sub_assign:
      out += s.target;
      out += s.kind == Stmt::Kind::assign ? " = " : s.kind == Stmt::Kind::add_assign ? " += " : " -= ";
      render_expr(out, s.expr);
      out += ";\n";
      return;
    case Stmt::Kind::if_:
      out += "if (";
      render_expr(out, s.expr);
      out += ") {\n";
      render_block(out, s.then_body, indent + 1);
      out.append(static_cast<std::size_t>(indent) * 2, ' ');
      out += '}';
      if (s.has_else) {
        out += " else {\n";
        render_block(out, s.else_body, indent + 1);
        out.append(static_cast<std::size_t>(indent) * 2, ' ');
        out += '}';
      }
      out += '\n';
      return;
  }
}

inline void render_block(std::string& out, const std::vector<Stmt>& body, int indent) {
  for (const auto& s : body) render_stmt(out, s, indent);
}

}  // namespace detail

inline std::string render(const Expr& e) {
  std::string out;
  detail::render_expr(out, e);
  return out;
}

/// Canonical text: one statement per line, two-space indentation, minimal parentheses.
inline std::string render(const Program& p) {
  std::string out;
  detail::render_block(out, p.body, 0);
  out += "return ";
  detail::render_expr(out, p.result);
  out += ';';
  return out;
}

}  // namespace hsynth::dsl
