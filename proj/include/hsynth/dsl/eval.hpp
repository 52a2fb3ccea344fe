#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "hsynth/dsl/ast.hpp"
#include "hsynth/dsl/checker.hpp"
#include "hsynth/dsl/features.hpp"

namespace hsynth::dsl {

/// Aggregate and eviction-history queries for cache-mode programs.
class FeatureSource {
 public:
  virtual ~FeatureSource() = default;
  virtual double percentile(Series series, double p) const = 0;
  virtual bool history_contains(std::uint64_t id) const = 0;
  virtual std::int64_t history_count(std::uint64_t id) const = 0;
  virtual std::int64_t history_age_at_eviction(std::uint64_t id) const = 0;
};

/// Feature bindings for one evaluation. `scalars` is indexed by the slot
/// order of scalar_features(mode). A null source answers 0 / false.
struct EvalContext {
  Mode mode = Mode::cache;
  std::span<const std::int64_t> scalars;
  std::uint64_t obj_id = 0;
  const FeatureSource* source = nullptr;
};

namespace detail {

enum class Op : std::uint8_t {
  constant, scalar, local, neg, lnot,
  add, sub, mul, div, mod, lt, le, gt, ge, eq, ne, land, lor,
  ternary, percentile, h_contains, h_count, h_age, min, max, abs,
};

struct Node {
  Op op = Op::constant;
  int a = -1, b = -1, c = -1;
  int slot = -1;  // scalar / local slot, or series index
  double real = 0.0;
  std::int64_t integer = 0;
};

struct CStmt {
  enum class Kind : std::uint8_t { set, add, sub, if_ };
  Kind kind = Kind::set;
  int slot = -1;
  int expr = -1;
  std::vector<CStmt> then_body, else_body;
};

inline Op to_op(BinaryOp op) {
  switch (op) {
    case BinaryOp::add: return Op::add;
    case BinaryOp::sub: return Op::sub;
    case BinaryOp::mul: return Op::mul;
    case BinaryOp::div: return Op::div;
    case BinaryOp::mod: return Op::mod;
    case BinaryOp::lt: return Op::lt;
    case BinaryOp::le: return Op::le;
    case BinaryOp::gt: return Op::gt;
    case BinaryOp::ge: return Op::ge;
    case BinaryOp::eq: return Op::eq;
    case BinaryOp::ne: return Op::ne;
    case BinaryOp::land: return Op::land;
    case BinaryOp::lor: return Op::lor;
  }
  return Op::add;
}

// Saturating 64-bit integer arithmetic for kernel mode.
struct IntArith {
  using T = std::int64_t;
  static constexpr T kMax = std::numeric_limits<T>::max();
  static constexpr T kMin = std::numeric_limits<T>::min();

  static T from_literal(const Node& n) { return n.integer; }
  static T from_scalar(std::int64_t v) { return v; }
  static bool truthy(T v) { return v != 0; }
  static T add(T a, T b) {
    T r;
    return __builtin_add_overflow(a, b, &r) ? (b > 0 ? kMax : kMin) : r;
  }
  static T sub(T a, T b) {
    T r;
    return __builtin_sub_overflow(a, b, &r) ? (b < 0 ? kMax : kMin) : r;
  }
  static T mul(T a, T b) {
    T r;
    return __builtin_mul_overflow(a, b, &r) ? ((a < 0) != (b < 0) ? kMin : kMax) : r;
  }
  static T div(T a, T b) {
    if (b == 0) return 0;
    if (a == kMin && b == -1) return kMax;
    return a / b;
  }
  static T mod(T a, T b) {
    if (b == 0 || b == -1) return 0;
    return a % b;
  }
  static T neg(T a) { return a == kMin ? kMax : -a; }
  static T abs(T a) { return a < 0 ? neg(a) : a; }
};

// Real arithmetic for cache mode. Division by zero yields 0 and NaN collapses to 0.
struct RealArith {
  using T = double;

  static T clean(T v) { return std::isnan(v) ? 0.0 : v; }
  static T from_literal(const Node& n) { return n.real; }
  static T from_scalar(std::int64_t v) { return static_cast<double>(v); }
  static bool truthy(T v) { return v != 0.0; }
  static T add(T a, T b) { return clean(a + b); }
  static T sub(T a, T b) { return clean(a - b); }
  static T mul(T a, T b) { return clean(a * b); }
  static T div(T a, T b) { return b == 0.0 ? 0.0 : clean(a / b); }
  static T mod(T a, T b) { return b == 0.0 ? 0.0 : clean(std::fmod(a, b)); }
  static T neg(T a) { return -a; }
  static T abs(T a) { return std::fabs(a); }
};

}  // namespace detail

/// A checked program lowered to slot-resolved form for repeated evaluation.
/// Evaluation is a single walk over a loop-free tree, so it always terminates.
class CompiledProgram {
 public:
  static constexpr std::size_t kMaxLocals = 128;

  /// Throws CheckFailed when the program does not pass check_program.
  explicit CompiledProgram(const Program& p) : mode_(p.mode) {
    CheckReport report = check_program(p);
    if (!report.ok) throw CheckFailed(std::move(report));
    scopes_.emplace_back();
    body_ = lower_block(p.body);
    result_ = lower(p.result);
    scopes_.clear();
    if (num_locals_ > kMaxLocals) {
      CheckReport r;
      r.ok = false;
      r.diagnostics.push_back({{}, Category::forbidden_construct, "too many local variables"});
      throw CheckFailed(std::move(r));
    }
  }

  Mode mode() const noexcept { return mode_; }
  std::size_t node_count() const noexcept { return nodes_.size(); }

  /// Cache mode: real-valued score. Kernel mode: the integer result widened to double.
  double evaluate(const EvalContext& ctx) const {
    if (mode_ == Mode::kernel) return static_cast<double>(run<detail::IntArith>(ctx));
    return run<detail::RealArith>(ctx);
  }

  /// Kernel-mode result in saturating 64-bit integers.
  std::int64_t evaluate_int(const EvalContext& ctx) const {
    if (mode_ == Mode::kernel) return run<detail::IntArith>(ctx);
    double v = run<detail::RealArith>(ctx);
    if (v >= 9.2e18) return detail::IntArith::kMax;
    if (v <= -9.2e18) return detail::IntArith::kMin;
    return static_cast<std::int64_t>(v);
  }

 private:
  using Node = detail::Node;
  using Op = detail::Op;
  using CStmt = detail::CStmt;

  int emit(Node n) {
    nodes_.push_back(n);
    return static_cast<int>(nodes_.size() - 1);
  }

  int local_slot(const std::string& name) const {
    for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
      auto f = it->find(name);
      if (f != it->end()) return f->second;
    }
    return -1;
  }

  std::vector<CStmt> lower_block(const std::vector<Stmt>& body) {
    std::vector<CStmt> out;
    for (const auto& s : body) {
      CStmt c;
      switch (s.kind) {
        case Stmt::Kind::let:
          c.kind = CStmt::Kind::set;
          c.expr = lower(s.expr);
          c.slot = static_cast<int>(num_locals_++);
          scopes_.back()[s.target] = c.slot;
          break;
        case Stmt::Kind::assign:
        case Stmt::Kind::add_assign:
        case Stmt::Kind::sub_assign:
          c.kind = s.kind == Stmt::Kind::assign       ? CStmt::Kind::set
                   : s.kind == Stmt::Kind::add_assign ? CStmt::Kind::add
                                                      : CStmt::Kind::sub;
          c.expr = lower(s.expr);
          c.slot = local_slot(s.target);
          break;
        case Stmt::Kind::if_:
          c.kind = CStmt::Kind::if_;
          c.expr = lower(s.expr);
          scopes_.emplace_back();
          c.then_body = lower_block(s.then_body);
          scopes_.pop_back();
          scopes_.emplace_back();
          c.else_body = lower_block(s.else_body);
          scopes_.pop_back();
          break;
      }
      out.push_back(std::move(c));
    }
    return out;
  }

  int lower(const Expr& e) {
    Node n;
    switch (e.kind) {
      case Expr::Kind::number:
        n.op = Op::constant;
        n.real = e.value;
        n.integer = static_cast<std::int64_t>(e.value);
        return emit(n);
      case Expr::Kind::ident: {
        int local = local_slot(e.name);
        if (local >= 0) {
          n.op = Op::local;
          n.slot = local;
        } else {
          n.op = Op::scalar;
          n.slot = scalar_slot(e.name, mode_);
        }
        return emit(n);
      }
      case Expr::Kind::unary:
        n.op = e.uop == UnaryOp::neg ? Op::neg : Op::lnot;
        n.a = lower(e.args[0]);
        return emit(n);
      case Expr::Kind::binary:
        n.op = detail::to_op(e.bop);
        n.a = lower(e.args[0]);
        n.b = lower(e.args[1]);
        return emit(n);
      case Expr::Kind::ternary:
        n.op = Op::ternary;
        n.a = lower(e.args[0]);
        n.b = lower(e.args[1]);
        n.c = lower(e.args[2]);
        return emit(n);
      case Expr::Kind::call: {
        const BuiltinInfo* b = find_builtin(e.name, mode_);
        switch (b->id) {
          case Builtin::percentile:
            n.op = Op::percentile;
            n.slot = series_slot(e.args[0].name, mode_);
            n.real = e.args[1].value;
            return emit(n);
          case Builtin::history_contains: n.op = Op::h_contains; return emit(n);
          case Builtin::history_count: n.op = Op::h_count; return emit(n);
          case Builtin::history_age_at_eviction: n.op = Op::h_age; return emit(n);
          case Builtin::min: n.op = Op::min; break;
          case Builtin::max: n.op = Op::max; break;
          case Builtin::abs: n.op = Op::abs; break;
        }
        n.a = lower(e.args[0]);
        if (e.args.size() > 1) n.b = lower(e.args[1]);
        return emit(n);
      }
    }
    return emit(n);
  }

  template <typename A>
  typename A::T run(const EvalContext& ctx) const {
    std::array<typename A::T, kMaxLocals> locals{};
    exec<A>(body_, ctx, locals.data());
    return eval<A>(result_, ctx, locals.data());
  }

  template <typename A>
  void exec(const std::vector<CStmt>& body, const EvalContext& ctx, typename A::T* locals) const {
    for (const auto& s : body) {
      switch (s.kind) {
        case CStmt::Kind::set: locals[s.slot] = eval<A>(s.expr, ctx, locals); break;
        case CStmt::Kind::add: locals[s.slot] = A::add(locals[s.slot], eval<A>(s.expr, ctx, locals)); break;
        case CStmt::Kind::sub: locals[s.slot] = A::sub(locals[s.slot], eval<A>(s.expr, ctx, locals)); break;
        case CStmt::Kind::if_:
          if (A::truthy(eval<A>(s.expr, ctx, locals)))
            exec<A>(s.then_body, ctx, locals);
          else
            exec<A>(s.else_body, ctx, locals);
          break;
      }
    }
  }

  template <typename A>
  typename A::T eval(int idx, const EvalContext& ctx, const typename A::T* locals) const {
    using T = typename A::T;
    const Node& n = nodes_[static_cast<std::size_t>(idx)];
    auto arg = [&](int i) { return eval<A>(i, ctx, locals); };
    auto flag = [](bool b) { return b ? T(1) : T(0); };
    switch (n.op) {
      case Op::constant: return A::from_literal(n);
      case Op::scalar:
        return static_cast<std::size_t>(n.slot) < ctx.scalars.size()
                   ? A::from_scalar(ctx.scalars[static_cast<std::size_t>(n.slot)])
                   : T(0);
      case Op::local: return locals[n.slot];
      case Op::neg: return A::neg(arg(n.a));
      case Op::lnot: return flag(!A::truthy(arg(n.a)));
      case Op::add: return A::add(arg(n.a), arg(n.b));
      case Op::sub: return A::sub(arg(n.a), arg(n.b));
      case Op::mul: return A::mul(arg(n.a), arg(n.b));
      case Op::div: return A::div(arg(n.a), arg(n.b));
      case Op::mod: return A::mod(arg(n.a), arg(n.b));
      case Op::lt: return flag(arg(n.a) < arg(n.b));
      case Op::le: return flag(arg(n.a) <= arg(n.b));
      case Op::gt: return flag(arg(n.a) > arg(n.b));
      case Op::ge: return flag(arg(n.a) >= arg(n.b));
      case Op::eq: return flag(arg(n.a) == arg(n.b));
      case Op::ne: return flag(arg(n.a) != arg(n.b));
      case Op::land: return flag(A::truthy(arg(n.a)) && A::truthy(arg(n.b)));
      case Op::lor: return flag(A::truthy(arg(n.a)) || A::truthy(arg(n.b)));
      case Op::ternary: return A::truthy(arg(n.a)) ? arg(n.b) : arg(n.c);
      case Op::min: {
        T x = arg(n.a), y = arg(n.b);
        return y < x ? y : x;
      }
      case Op::max: {
        T x = arg(n.a), y = arg(n.b);
        return x < y ? y : x;
      }
      case Op::abs: return A::abs(arg(n.a));
      case Op::percentile:
        return ctx.source ? static_cast<T>(ctx.source->percentile(static_cast<Series>(n.slot), n.real)) : T(0);
      case Op::h_contains: return flag(ctx.source && ctx.source->history_contains(ctx.obj_id));
      case Op::h_count: return ctx.source ? static_cast<T>(ctx.source->history_count(ctx.obj_id)) : T(0);
      case Op::h_age: return ctx.source ? static_cast<T>(ctx.source->history_age_at_eviction(ctx.obj_id)) : T(0);
    }
    return T(0);
  }

  Mode mode_;
  std::vector<Node> nodes_;
  std::vector<CStmt> body_;
  int result_ = -1;
  std::size_t num_locals_ = 0;
  std::vector<std::unordered_map<std::string, int>> scopes_;
};

/// Convenience: compile then evaluate. Throws CheckFailed for unchecked programs.
inline double evaluate(const Program& p, const EvalContext& ctx) { return CompiledProgram(p).evaluate(ctx); }

}  // namespace hsynth::dsl
