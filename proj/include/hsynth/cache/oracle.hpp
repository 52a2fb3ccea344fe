#pragma once

#include <map>
#include <set>
#include <stdexcept>
#include <string>

#include "hsynth/cache/simulator.hpp"

namespace hsynth::cache {

/// (m_fifo - m_p) / m_fifo over object miss ratios; 0 when FIFO has no misses.
inline double improvement_over_fifo(const MissReport& policy, const MissReport& fifo) {
  if (fifo.object_miss_ratio == 0.0) return 0.0;
  return (fifo.object_miss_ratio - policy.object_miss_ratio) / fifo.object_miss_ratio;
}

inline constexpr const char* kFifoName = "fifo";

/// trace -> policy -> report. Every trace must carry a "fifo" report.
using ReportTable = std::map<std::string, std::map<std::string, MissReport>>;

enum class OraclePool { baselines, baselines_and_synthesized };

struct OracleResult {
  std::map<std::string, double> per_trace;
  std::map<std::string, std::string> chosen;
  double mean = 0.0;
};

/// Per-trace best improvement over FIFO across the pool, plus the mean.
/// Policies named in `synthesized` only join the baselines_and_synthesized pool.
inline OracleResult oracle_improvement(const ReportTable& reports, OraclePool pool,
                                       const std::set<std::string>& synthesized = {}) {
  if (reports.empty()) throw std::invalid_argument("oracle: no traces");
  OracleResult out;
  for (const auto& [trace, by_policy] : reports) {
    auto fifo = by_policy.find(kFifoName);
    if (fifo == by_policy.end()) throw std::invalid_argument("oracle: trace '" + trace + "' has no fifo report");
    bool any = false;
    double best = 0.0;
    std::string best_name;
    for (const auto& [name, rep] : by_policy) {
      if (pool == OraclePool::baselines && synthesized.count(name)) continue;
      double imp = improvement_over_fifo(rep, fifo->second);
      if (!any || imp > best) {
        best = imp;
        best_name = name;
        any = true;
      }
    }
    if (!any) throw std::invalid_argument("oracle: empty pool for trace '" + trace + "'");
    out.per_trace[trace] = best;
    out.chosen[trace] = best_name;
    out.mean += best;
  }
  out.mean /= static_cast<double>(out.per_trace.size());
  return out;
}

}  // namespace hsynth::cache
