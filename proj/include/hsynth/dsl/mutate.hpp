#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "hsynth/dsl/ast.hpp"
#include "hsynth/dsl/checker.hpp"
#include "hsynth/dsl/features.hpp"
#include "hsynth/dsl/render.hpp"
#include "hsynth/rng.hpp"

namespace hsynth::dsl {

/// Upper bound on AST size for generated programs; larger edits are rejected.
inline constexpr std::size_t kMaxProgramNodes = 160;

namespace detail {

struct ExprSite {
  std::string path;
  Expr* expr = nullptr;
  bool pinned = false;  // direct argument of percentile/history calls
};

struct StmtSite {
  std::string path;
  std::vector<Stmt>* block = nullptr;
  std::size_t index = 0;
};

inline void collect_expr(Expr& e, const std::string& path, bool pinned, std::vector<ExprSite>& out) {
  out.push_back({path, &e, pinned});
  bool pin_children = e.kind == Expr::Kind::call && (e.name == "percentile" || e.name.rfind("history_", 0) == 0);
  for (std::size_t i = 0; i < e.args.size(); ++i)
    collect_expr(e.args[i], path + "." + std::to_string(i), pin_children, out);
}

inline void collect_block(std::vector<Stmt>& body, const std::string& prefix, std::vector<ExprSite>* exprs,
                          std::vector<StmtSite>* stmts) {
  for (std::size_t i = 0; i < body.size(); ++i) {
    std::string p = prefix + "s" + std::to_string(i);
    if (stmts) stmts->push_back({p, &body, i});
    if (exprs) collect_expr(body[i].expr, p + "e", false, *exprs);
    if (body[i].kind == Stmt::Kind::if_) {
      collect_block(body[i].then_body, p + "t", exprs, stmts);
      collect_block(body[i].else_body, p + "f", exprs, stmts);
    }
  }
}

inline std::vector<ExprSite> expr_sites(Program& p) {
  std::vector<ExprSite> out;
  collect_block(p.body, "", &out, nullptr);
  collect_expr(p.result, "r", false, out);
  return out;
}

inline std::vector<StmtSite> stmt_sites(Program& p) {
  std::vector<StmtSite> out;
  collect_block(p.body, "", nullptr, &out);
  return out;
}

inline std::size_t expr_size(const Expr& e) {
  std::size_t n = 1;
  for (const auto& a : e.args) n += expr_size(a);
  return n;
}

inline std::size_t block_size(const std::vector<Stmt>& body) {
  std::size_t n = 0;
  for (const auto& s : body) n += 1 + expr_size(s.expr) + block_size(s.then_body) + block_size(s.else_body);
  return n;
}

inline bool is_integral(double v) { return std::floor(v) == v; }

// Features that make sense as score terms; mostly excludes identifiers.
inline std::vector<std::string> weighted_features(Mode mode) {
  if (mode == Mode::cache) return {"count", "last_access_time", "insert_time", "size", "now"};
  std::vector<std::string> v = {"cwnd", "srtt_us", "rtt_us", "min_rtt_us", "inflight_bytes", "mss", "acked_bytes",
                                "delivery_rate", "h_cwnd_0", "h_srtt_0", "h_rate_0", "h_loss_0", "h_cwnd_9",
                                "h_srtt_9"};
  return v;
}

inline Expr literal(Mode mode, Rng& rng) {
  if (mode == Mode::kernel) {
    static const std::int64_t ints[] = {0, 1, 2, 3, 4, 8, 10, 16, 100, 1000};
    return Expr::number(static_cast<double>(rng.pick(ints)));
  }
  static const double reals[] = {0.01, 0.1, 0.5, 1.5, 2.5};
  static const std::int64_t ints[] = {0, 1, 2, 3, 5, 10, 20, 50, 100, 1000};
  if (rng.chance(0.3)) return Expr::number(rng.pick(reals), true);
  return Expr::number(static_cast<double>(rng.pick(ints)));
}

inline Expr weight(Mode mode, Rng& rng) {
  if (mode == Mode::kernel) {
    static const std::int64_t ints[] = {1, 2, 3, 4, 8, 16};
    return Expr::number(static_cast<double>(rng.pick(ints)));
  }
  static const double reals[] = {0.001, 0.01, 0.1, 0.5, 2.0, 5.0, 10.0, 100.0, 1000.0};
  double w = rng.pick(reals);
  return Expr::number(w, !is_integral(w));
}

inline Expr feature(Mode mode, Rng& rng) { return Expr::ident(rng.pick(weighted_features(mode))); }

inline Expr guarded_div(Expr num, Expr den) {
  return Expr::binary(BinaryOp::div, std::move(num),
                      Expr::call("max", {Expr::number(1.0), std::move(den)}));
}

inline Expr random_expr(Mode mode, Rng& rng, int depth) {
  if (depth <= 0 || rng.chance(0.3)) {
    double r = rng.unit();
    if (mode == Mode::cache && r < 0.12) {
      static const double ps[] = {0.25, 0.5, 0.75, 0.9};
      return Expr::call("percentile", {Expr::ident(std::string(kSeriesNames[rng.index(3)])),
                                       Expr::number(rng.pick(ps), true)});
    }
    if (mode == Mode::cache && r < 0.2) {
      static const char* fns[] = {"history_count", "history_age_at_eviction", "history_contains"};
      return Expr::call(rng.pick(fns), {Expr::ident("obj_id")});
    }
    if (r < 0.65) return feature(mode, rng);
    return literal(mode, rng);
  }
  double r = rng.unit();
  if (r < 0.6) {
    static const BinaryOp ops[] = {BinaryOp::add, BinaryOp::sub, BinaryOp::mul, BinaryOp::div};
    BinaryOp op = rng.pick(ops);
    Expr a = random_expr(mode, rng, depth - 1);
    Expr b = random_expr(mode, rng, depth - 1);
    if (op == BinaryOp::div && mode == Mode::kernel) return guarded_div(std::move(a), std::move(b));
    return Expr::binary(op, std::move(a), std::move(b));
  }
  if (r < 0.75) {
    static const BinaryOp cmps[] = {BinaryOp::lt, BinaryOp::gt, BinaryOp::le, BinaryOp::ge};
    Expr cond = Expr::binary(rng.pick(cmps), random_expr(mode, rng, 0), random_expr(mode, rng, 0));
    return Expr::ternary(std::move(cond), random_expr(mode, rng, depth - 1), random_expr(mode, rng, depth - 1));
  }
  if (r < 0.9) {
    const char* fn = rng.chance(0.5) ? "min" : "max";
    return Expr::call(fn, {random_expr(mode, rng, depth - 1), random_expr(mode, rng, depth - 1)});
  }
  if (r < 0.95) return Expr::call("abs", {random_expr(mode, rng, depth - 1)});
  return Expr::unary(UnaryOp::neg, random_expr(mode, rng, depth - 1));
}

inline Expr random_condition(Mode mode, Rng& rng) {
  static const BinaryOp cmps[] = {BinaryOp::lt, BinaryOp::gt, BinaryOp::le, BinaryOp::ge, BinaryOp::ne};
  BinaryOp op = rng.pick(cmps);
  if (mode == Mode::cache) {
    double r = rng.unit();
    if (r < 0.3) {
      static const char* series[] = {"counts", "sizes", "ages"};
      static const char* feats[] = {"count", "size", "last_access_time"};
      std::size_t i = rng.index(3);
      static const double ps[] = {0.25, 0.5, 0.75, 0.9};
      Expr pct = Expr::call("percentile", {Expr::ident(series[i]), Expr::number(rng.pick(ps), true)});
      Expr lhs = i == 2 ? Expr::binary(BinaryOp::sub, Expr::ident("now"), Expr::ident("last_access_time"))
                        : Expr::ident(feats[i]);
      return Expr::binary(op, std::move(lhs), std::move(pct));
    }
    if (r < 0.45) return Expr::call("history_contains", {Expr::ident("obj_id")});
    if (r < 0.7) {
      return Expr::binary(op, Expr::binary(BinaryOp::sub, Expr::ident("now"), Expr::ident("last_access_time")),
                          literal(mode, rng));
    }
  } else if (rng.chance(0.3)) {
    return Expr::binary(BinaryOp::ne, Expr::ident("loss_flag"), Expr::number(0.0));
  }
  return Expr::binary(op, feature(mode, rng), rng.chance(0.5) ? literal(mode, rng) : feature(mode, rng));
}

inline std::string fresh_local(const Program& p) {
  // Names declared anywhere in the program, so a new top-level name never collides.
  std::vector<std::string> used;
  auto walk = [&](auto&& self, const std::vector<Stmt>& body) -> void {
    for (const auto& s : body) {
      if (s.kind == Stmt::Kind::let) used.push_back(s.target);
      self(self, s.then_body);
      self(self, s.else_body);
    }
  };
  walk(walk, p.body);
  for (int i = 0;; ++i) {
    std::string name = "s" + std::to_string(i);
    if (std::find(used.begin(), used.end(), name) == used.end()) return name;
  }
}

// Ensures the program returns a top-level local; returns its name.
inline std::string score_local(Program& p) {
  if (p.result.kind == Expr::Kind::ident) {
    for (const auto& s : p.body)
      if (s.kind == Stmt::Kind::let && s.target == p.result.name) return s.target;
  }
  std::string name = fresh_local(p);
  Stmt let;
  let.kind = Stmt::Kind::let;
  let.target = name;
  let.expr = std::move(p.result);
  p.body.push_back(std::move(let));
  p.result = Expr::ident(name);
  return name;
}

inline bool perturb_literal(Program& p, Rng& rng) {
  std::vector<Expr*> lits;
  for (auto& s : expr_sites(p))
    if (s.expr->kind == Expr::Kind::number) lits.push_back(s.expr);
  if (lits.empty()) return false;
  Expr& e = *lits[rng.index(lits.size())];
  double v = e.value;
  if (p.mode == Mode::kernel) {
    double r = rng.unit();
    if (r < 0.5) v = v + (rng.chance(0.5) || v < 1.0 ? 1.0 : -1.0);
    else if (r < 0.75) v = v * 2.0;
    else v = std::floor(v / 2.0);
    e.value = v;
    return true;
  }
  if (!e.fractional && is_integral(v) && rng.chance(0.5)) {
    e.value = v + (rng.chance(0.5) || v < 1.0 ? 1.0 : -1.0);
    return true;
  }
  if (v == 0.0) {
    e.value = 1.0;
    return true;
  }
  double f = rng.uniform(1.1, 2.0);
  v = rng.chance(0.5) ? v * f : v / f;
  e.value = v;
  if (!is_integral(v)) e.fractional = true;
  return true;
}

inline bool swap_comparison(Program& p, Rng& rng) {
  std::vector<Expr*> cmps;
  for (auto& s : expr_sites(p))
    if (s.expr->kind == Expr::Kind::binary && is_comparison(s.expr->bop)) cmps.push_back(s.expr);
  if (cmps.empty()) return false;
  static const BinaryOp all[] = {BinaryOp::lt, BinaryOp::le, BinaryOp::gt, BinaryOp::ge, BinaryOp::eq, BinaryOp::ne};
  Expr& e = *cmps[rng.index(cmps.size())];
  BinaryOp op;
  do {
    op = rng.pick(all);
  } while (op == e.bop);
  e.bop = op;
  return true;
}

inline Expr* free_site(Program& p, Rng& rng) {
  std::vector<Expr*> free;
  for (auto& s : expr_sites(p))
    if (!s.pinned) free.push_back(s.expr);
  return free.empty() ? nullptr : free[rng.index(free.size())];
}

inline bool wrap_weighted(Program& p, Rng& rng) {
  Expr* site = rng.chance(0.5) ? &p.result : free_site(p, rng);
  if (!site) return false;
  Expr term = Expr::binary(BinaryOp::mul, weight(p.mode, rng), feature(p.mode, rng));
  *site = Expr::binary(rng.chance(0.5) ? BinaryOp::add : BinaryOp::sub, std::move(*site), std::move(term));
  return true;
}

inline bool insert_if(Program& p, Rng& rng) {
  std::string name = score_local(p);
  Stmt adj;
  adj.kind = rng.chance(0.5) ? Stmt::Kind::add_assign : Stmt::Kind::sub_assign;
  adj.target = name;
  adj.expr = rng.chance(0.7) ? literal(p.mode, rng) : random_expr(p.mode, rng, 1);
  Stmt s;
  s.kind = Stmt::Kind::if_;
  s.expr = random_condition(p.mode, rng);
  s.then_body.push_back(std::move(adj));
  p.body.push_back(std::move(s));
  return true;
}

inline bool delete_if(Program& p, Rng& rng) {
  std::vector<StmtSite> ifs;
  for (auto& s : stmt_sites(p))
    if ((*s.block)[s.index].kind == Stmt::Kind::if_) ifs.push_back(s);
  if (ifs.empty()) return false;
  const StmtSite& s = ifs[rng.index(ifs.size())];
  s.block->erase(s.block->begin() + static_cast<std::ptrdiff_t>(s.index));
  return true;
}

inline bool replace_identifier(Program& p, Rng& rng) {
  std::vector<Expr*> ids;
  for (auto& s : expr_sites(p))
    if (s.expr->kind == Expr::Kind::ident &&
        (scalar_slot(s.expr->name, p.mode) >= 0 || series_slot(s.expr->name, p.mode) >= 0) &&
        s.expr->name != "obj_id")
      ids.push_back(s.expr);
  if (ids.empty()) return false;
  Expr& e = *ids[rng.index(ids.size())];
  std::string next;
  if (series_slot(e.name, p.mode) >= 0) {
    next = std::string(kSeriesNames[rng.index(kSeriesNames.size())]);
  } else {
    auto feats = weighted_features(p.mode);
    next = rng.pick(feats);
  }
  if (next == e.name) return false;
  e.name = next;
  return true;
}

inline bool graft(Program& p, Rng& rng, std::span<const Program> donors) {
  Expr* site = free_site(p, rng);
  if (!site) return false;
  if (!donors.empty() && rng.chance(0.6)) {
    Program donor = donors[rng.index(donors.size())];
    if (donor.mode != p.mode) return false;
    std::vector<Expr*> pool;
    for (auto& s : expr_sites(donor))
      if (!s.pinned) pool.push_back(s.expr);
    if (pool.empty()) return false;
    *site = *pool[rng.index(pool.size())];
    return true;
  }
  *site = random_expr(p.mode, rng, 2);
  return true;
}

inline bool apply_edit(Program& p, Rng& rng, std::span<const Program> donors) {
  switch (rng.index(7)) {
    case 0:
    case 1: return perturb_literal(p, rng);
    case 2: return swap_comparison(p, rng) || perturb_literal(p, rng);
    case 3: return wrap_weighted(p, rng);
    case 4: return rng.chance(0.65) ? insert_if(p, rng) : (delete_if(p, rng) || insert_if(p, rng));
    case 5: return replace_identifier(p, rng);
    default: return graft(p, rng, donors);
  }
}

inline bool acceptable(const Program& p) {
  return block_size(p.body) + expr_size(p.result) <= kMaxProgramNodes && check_program(p).ok;
}

}  // namespace detail

/// Attempts per edit before the edit is skipped.
inline constexpr int kEditAttempts = 12;

/// Applies `intensity` random structural edits. Every edit is re-checked and
/// retried; an edit that never checks is dropped. Deterministic per seed.
inline Program mutate(const Program& p, std::uint64_t rng_seed, int intensity,
                      std::span<const Program> donors = {}) {
  if (intensity <= 0) return p;
  Rng rng(rng_seed);
  Program cur = p;
  for (int edit = 0; edit < intensity; ++edit) {
    for (int attempt = 0; attempt < kEditAttempts; ++attempt) {
      Program next = cur;
      if (!detail::apply_edit(next, rng, donors)) continue;
      if (next == cur || !detail::acceptable(next)) continue;
      cur = std::move(next);
      break;
    }
  }
  if (!(cur == p)) cur.source = render(cur);
  return cur;
}

/// Homologous crossover: a subtree (or statement) of `a` is replaced by the
/// subtree of `b` at the same position. Crossing a program with itself is the
/// identity.
inline Program crossover(const Program& a, const Program& b, std::uint64_t rng_seed) {
  if (a.mode != b.mode) return a;
  Rng rng(rng_seed);
  for (int attempt = 0; attempt < kEditAttempts; ++attempt) {
    Program child = a;
    Program donor = b;
    bool stmt_level = rng.chance(0.3);
    bool changed = false;
    if (stmt_level) {
      auto cs = detail::stmt_sites(child);
      auto ds = detail::stmt_sites(donor);
      std::vector<std::pair<detail::StmtSite, detail::StmtSite>> common;
      for (const auto& c : cs)
        for (const auto& d : ds)
          if (c.path == d.path) common.emplace_back(c, d);
      if (!common.empty()) {
        auto& [c, d] = common[rng.index(common.size())];
        (*c.block)[c.index] = (*d.block)[d.index];
        changed = true;
      }
    }
    if (!changed) {
      auto cs = detail::expr_sites(child);
      auto ds = detail::expr_sites(donor);
      std::vector<std::pair<Expr*, const Expr*>> common;
      for (const auto& c : cs)
        for (const auto& d : ds)
          if (c.path == d.path) common.emplace_back(c.expr, d.expr);
      if (common.empty()) continue;
      auto& [c, d] = common[rng.index(common.size())];
      *c = *d;
    }
    if (child == a) return a;
    if (!detail::acceptable(child)) continue;
    child.source = render(child);
    return child;
  }
  return a;
}

/// Grammar sampler: a fresh random program that passes check_program.
inline Program random_program(Mode mode, std::uint64_t rng_seed) {
  Rng rng(rng_seed);
  for (;;) {
    Program p;
    p.mode = mode;
    p.result = detail::random_expr(mode, rng, 3);
    if (rng.chance(0.5)) {
      int n = 1 + static_cast<int>(rng.index(3));
      for (int i = 0; i < n; ++i) detail::insert_if(p, rng);
      if (rng.chance(0.3) && !p.body.empty()) {
        Stmt& s = p.body.back();
        if (s.kind == Stmt::Kind::if_) {
          s.has_else = true;
          Stmt adj = s.then_body.front();
          adj.kind = adj.kind == Stmt::Kind::add_assign ? Stmt::Kind::sub_assign : Stmt::Kind::add_assign;
          s.else_body.push_back(std::move(adj));
        }
      }
    }
    if (detail::acceptable(p)) {
      p.source = render(p);
      return p;
    }
  }
}

}  // namespace hsynth::dsl
