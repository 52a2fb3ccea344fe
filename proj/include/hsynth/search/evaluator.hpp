#pragma once

#include <memory>
#include <stdexcept>
#include <string>

#include "hsynth/cache/priority_policy.hpp"
#include "hsynth/cache/simulator.hpp"
#include "hsynth/cc/cc_sim.hpp"
#include "hsynth/dsl/ast.hpp"
#include "hsynth/trace.hpp"

namespace hsynth::search {

class EvaluatorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Scores a checked program; higher is better. Implementations are immutable
/// after construction and safe to call from several threads.
class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual dsl::Mode mode() const = 0;
  virtual double fitness(const dsl::Program& p) const = 0;
  virtual std::string describe() const = 0;
};

/// 1 - object miss ratio of the program under the priority template.
class CacheEvaluator final : public Evaluator {
 public:
  CacheEvaluator(Trace trace, Bytes capacity_bytes, std::size_t history_capacity = 1024)
      : trace_(std::move(trace)), config_{capacity_bytes, history_capacity} {
    if (trace_.empty()) throw EvaluatorError("evaluation trace is empty");
    if (capacity_bytes < 1) throw EvaluatorError("cache capacity must be >= 1 byte");
    if (history_capacity < 1) throw EvaluatorError("history capacity must be >= 1");
  }

  dsl::Mode mode() const override { return dsl::Mode::cache; }

  cache::MissReport report(const dsl::Program& p) const {
    cache::PriorityPolicy policy(p, config_.history_capacity);
    return cache::simulate(trace_, policy, config_);
  }

  double fitness(const dsl::Program& p) const override { return 1.0 - report(p).object_miss_ratio; }

  std::string describe() const override {
    return "cache: " + std::to_string(trace_.size()) + " requests, capacity " +
           std::to_string(config_.capacity_bytes) + " bytes";
  }

  const Trace& trace() const { return trace_; }
  const cache::CacheConfig& config() const { return config_; }

 private:
  Trace trace_;
  cache::CacheConfig config_;
};

/// utilization - lambda * avg_queue_delay / budget.
inline double cc_fitness(const cc::CcMetrics& m, double lambda = 0.5, double delay_budget_ms = 100.0) {
  return m.utilization - lambda * (m.avg_queue_delay_ms / delay_budget_ms);
}

class CcEvaluator final : public Evaluator {
 public:
  explicit CcEvaluator(cc::LinkConfig link, double lambda = 0.5, double delay_budget_ms = 100.0)
      : link_(link), lambda_(lambda), budget_ms_(delay_budget_ms) {
    try {
      link_.validate();
    } catch (const cc::ConfigError& e) {
      throw EvaluatorError(e.what());
    }
    if (!(delay_budget_ms > 0.0)) throw EvaluatorError("delay budget must be positive");
    if (lambda < 0.0) throw EvaluatorError("lambda must be non-negative");
  }

  dsl::Mode mode() const override { return dsl::Mode::kernel; }

  cc::CcMetrics metrics(const dsl::Program& p) const { return cc::run_cc(p, link_); }

  double fitness(const dsl::Program& p) const override { return cc_fitness(metrics(p), lambda_, budget_ms_); }

  std::string describe() const override {
    return "cc: " + std::to_string(link_.rate_bps) + " bps, " + std::to_string(link_.one_way_delay_ms) +
           " ms one-way, " + std::to_string(link_.duration_s) + " s";
  }

  const cc::LinkConfig& link() const { return link_; }

 private:
  cc::LinkConfig link_;
  double lambda_;
  double budget_ms_;
};

}  // namespace hsynth::search
