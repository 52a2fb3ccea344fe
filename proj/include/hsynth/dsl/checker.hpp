#pragma once

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hsynth/dsl/ast.hpp"
#include "hsynth/dsl/features.hpp"
#include "hsynth/dsl/parser.hpp"
#include "hsynth/dsl/render.hpp"

namespace hsynth::dsl {

enum class Category { syntax, unknown_identifier, type, forbidden_construct, unguarded_division };

inline std::string_view to_string(Category c) {
  switch (c) {
    case Category::syntax: return "syntax";
    case Category::unknown_identifier: return "unknown-identifier";
    case Category::type: return "type";
    case Category::forbidden_construct: return "forbidden-construct";
    case Category::unguarded_division: return "unguarded-division";
  }
  return "?";
}

inline std::optional<Category> category_from_string(std::string_view s) {
  for (auto c : {Category::syntax, Category::unknown_identifier, Category::type, Category::forbidden_construct,
                 Category::unguarded_division})
    if (to_string(c) == s) return c;
  return std::nullopt;
}

struct Diagnostic {
  Location loc;
  Category category = Category::syntax;
  std::string message;

  bool operator==(const Diagnostic&) const = default;

  std::string str() const {
    return std::to_string(loc.line) + ":" + std::to_string(loc.column) + ": " + std::string(to_string(category)) +
           ": " + message;
  }
};

struct CheckReport {
  bool ok = true;
  std::vector<Diagnostic> diagnostics;

  bool has(Category c) const {
    for (const auto& d : diagnostics)
      if (d.category == c) return true;
    return false;
  }

  std::string str() const {
    std::string out;
    for (const auto& d : diagnostics) out += d.str() + "\n";
    return out;
  }
};

class CheckFailed : public std::runtime_error {
 public:
  explicit CheckFailed(CheckReport report)
      : std::runtime_error("program failed checking:\n" + report.str()), report_(std::move(report)) {}
  const CheckReport& report() const noexcept { return report_; }

 private:
  CheckReport report_;
};

namespace detail {

class Checker {
 public:
  explicit Checker(Mode mode) : mode_(mode) {}

  CheckReport run(const Program& p) {
    scopes_.emplace_back();
    block(p.body);
    expr(p.result);
    scopes_.pop_back();
    report_.ok = report_.diagnostics.empty();
    return std::move(report_);
  }

 private:
  void diag(Location loc, Category c, std::string msg) { report_.diagnostics.push_back({loc, c, std::move(msg)}); }

  bool is_local(const std::string& name) const {
    for (const auto& s : scopes_)
      if (s.count(name)) return true;
    return false;
  }

  void block(const std::vector<Stmt>& body) {
    for (const auto& s : body) stmt(s);
  }

  void stmt(const Stmt& s) {
    switch (s.kind) {
      case Stmt::Kind::let:
        expr(s.expr);
        if (is_reserved(s.target, mode_))
          diag(s.loc, Category::forbidden_construct, "'" + s.target + "' is a built-in name and cannot be redefined");
        else if (is_local(s.target))
          diag(s.loc, Category::forbidden_construct, "'" + s.target + "' is already declared");
        else
          scopes_.back().insert(s.target);
        return;
      case Stmt::Kind::assign:
      case Stmt::Kind::add_assign:
      case Stmt::Kind::sub_assign:
        expr(s.expr);
        if (!is_local(s.target)) {
          if (is_reserved(s.target, mode_))
            diag(s.loc, Category::forbidden_construct, "cannot assign to feature '" + s.target + "'");
          else
            diag(s.loc, Category::unknown_identifier, "assignment to undeclared variable '" + s.target + "'");
        }
        return;
      case Stmt::Kind::if_: {
        expr(s.expr);
        std::size_t saved = guards_.size();
        if (mode_ == Mode::kernel) push_guards(s.expr, s.then_body);
        scopes_.emplace_back();
        block(s.then_body);
        scopes_.pop_back();
        guards_.resize(saved);
        if (s.has_else) {
          scopes_.emplace_back();
          block(s.else_body);
          scopes_.pop_back();
        }
        return;
      }
    }
  }

  // Expressions the condition proves nonzero: conjuncts of the form
  // `d != 0`, `d > 0`, `d < 0` (either operand order) or a bare `d`.
  static void nonzero_terms(const Expr& cond, std::vector<const Expr*>& out) {
    if (cond.kind == Expr::Kind::binary && cond.bop == BinaryOp::land) {
      nonzero_terms(cond.args[0], out);
      nonzero_terms(cond.args[1], out);
      return;
    }
    auto is_zero = [](const Expr& e) { return e.kind == Expr::Kind::number && e.value == 0.0; };
    if (cond.kind == Expr::Kind::binary) {
      const Expr& l = cond.args[0];
      const Expr& r = cond.args[1];
      switch (cond.bop) {
        case BinaryOp::ne:
          if (is_zero(r)) out.push_back(&l);
          else if (is_zero(l)) out.push_back(&r);
          return;
        case BinaryOp::gt:
        case BinaryOp::lt:
          if (is_zero(r)) out.push_back(&l);
          else if (is_zero(l)) out.push_back(&r);
          return;
        default:
          if (is_comparison(cond.bop) || cond.bop == BinaryOp::lor) return;
          break;
      }
    }
    if (cond.kind == Expr::Kind::unary && cond.uop == UnaryOp::lnot) return;
    out.push_back(&cond);
  }

  static void collect_names(const Expr& e, std::set<std::string>& out) {
    if (e.kind == Expr::Kind::ident) out.insert(e.name);
    for (const auto& a : e.args) collect_names(a, out);
  }

  static bool writes_any(const std::vector<Stmt>& body, const std::set<std::string>& names) {
    for (const auto& s : body) {
      if (s.kind == Stmt::Kind::if_) {
        if (writes_any(s.then_body, names) || writes_any(s.else_body, names)) return true;
      } else if (names.count(s.target)) {
        return true;
      }
    }
    return false;
  }

  // A guard only holds for the branch if nothing in the branch rebinds a
  // name it mentions.
  void push_guards(const Expr& cond, const std::vector<Stmt>& branch) {
    std::vector<const Expr*> terms;
    nonzero_terms(cond, terms);
    for (const Expr* t : terms) {
      std::set<std::string> names;
      collect_names(*t, names);
      if (!writes_any(branch, names)) guards_.push_back(t);
    }
  }

  bool safe_divisor(const Expr& d) const {
    if (d.kind == Expr::Kind::number) return d.value != 0.0;
    if (d.kind == Expr::Kind::call && d.name == "max" && d.args.size() == 2) {
      for (const auto& a : d.args)
        if (a.kind == Expr::Kind::number && a.value >= 1.0) return true;
    }
    for (const Expr* g : guards_)
      if (*g == d) return true;
    return false;
  }

  void expr(const Expr& e) {
    switch (e.kind) {
      case Expr::Kind::number:
        if (mode_ == Mode::kernel) {
          if (e.fractional)
            diag(e.loc, Category::forbidden_construct,
                 "floating-point literal '" + render(e) + "' is not allowed in kernel mode");
          else if (e.value >= 9.2e18)
            diag(e.loc, Category::forbidden_construct, "integer literal exceeds the 64-bit range");
        }
        return;
      case Expr::Kind::ident:
        if (is_local(e.name) || scalar_slot(e.name, mode_) >= 0) return;
        if (series_slot(e.name, mode_) >= 0)
          diag(e.loc, Category::type, "series '" + e.name + "' can only be used as the first argument of percentile()");
        else if (find_builtin(e.name, mode_))
          diag(e.loc, Category::type, "function '" + e.name + "' used without a call");
        else
          diag(e.loc, Category::unknown_identifier, "unknown identifier '" + e.name + "'");
        return;
      case Expr::Kind::unary:
        expr(e.args[0]);
        return;
      case Expr::Kind::binary:
        expr(e.args[0]);
        expr(e.args[1]);
        if (mode_ == Mode::kernel && (e.bop == BinaryOp::div || e.bop == BinaryOp::mod) && !safe_divisor(e.args[1]))
          diag(e.loc, Category::unguarded_division,
               "divisor '" + render(e.args[1]) + "' may be zero; use max(1, ...) or an enclosing != 0 check");
        return;
      case Expr::Kind::ternary: {
        expr(e.args[0]);
        std::size_t saved = guards_.size();
        if (mode_ == Mode::kernel) {
          std::vector<const Expr*> terms;
          nonzero_terms(e.args[0], terms);
          guards_.insert(guards_.end(), terms.begin(), terms.end());
        }
        expr(e.args[1]);
        guards_.resize(saved);
        expr(e.args[2]);
        return;
      }
      case Expr::Kind::call:
        call(e);
        return;
    }
  }

  void call(const Expr& e) {
    const BuiltinInfo* b = find_builtin(e.name, mode_);
    if (!b) {
      diag(e.loc, Category::unknown_identifier, "unknown function '" + e.name + "'");
      for (const auto& a : e.args) expr(a);
      return;
    }
    if (e.args.size() != b->arity) {
      diag(e.loc, Category::type,
           e.name + "() takes " + std::to_string(b->arity) + " argument(s), got " + std::to_string(e.args.size()));
      return;
    }
    switch (b->id) {
      case Builtin::percentile: {
        const Expr& s = e.args[0];
        if (s.kind != Expr::Kind::ident || series_slot(s.name, mode_) < 0)
          diag(s.loc, Category::type, "percentile() expects one of counts, ages, sizes as its first argument");
        const Expr& p = e.args[1];
        if (p.kind != Expr::Kind::number)
          diag(p.loc, Category::type, "percentile() requires a literal p in [0, 1]");
        else if (p.value < 0.0 || p.value > 1.0)
          diag(p.loc, Category::type, "percentile p must lie in [0, 1], got " + render(p));
        return;
      }
      case Builtin::history_contains:
      case Builtin::history_count:
      case Builtin::history_age_at_eviction:
        if (e.args[0].kind != Expr::Kind::ident || e.args[0].name != "obj_id")
          diag(e.args[0].loc, Category::type, e.name + "() takes obj_id as its argument");
        return;
      default:
        for (const auto& a : e.args) expr(a);
        return;
    }
  }

  Mode mode_;
  CheckReport report_;
  std::vector<std::set<std::string>> scopes_;
  std::vector<const Expr*> guards_;
};

}  // namespace detail

/// Static validation. Diagnostics are data; this never throws.
inline CheckReport check_program(const Program& p) { return detail::Checker(p.mode).run(p); }

/// Parses and checks in one step; a syntax error becomes a single diagnostic.
inline CheckReport check_source(std::string_view source, Mode mode) {
  try {
    return check_program(parse(source, mode));
  } catch (const SyntaxError& e) {
    CheckReport r;
    r.ok = false;
    r.diagnostics.push_back({e.location(), Category::syntax, e.message()});
    return r;
  }
}

}  // namespace hsynth::dsl
