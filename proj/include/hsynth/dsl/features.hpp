#pragma once

#include <algorithm>
#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "hsynth/dsl/ast.hpp"

namespace hsynth::dsl {

/// Per-object and clock features bound in cache mode, in slot order.
enum class CacheFeature { now, obj_id, count, last_access_time, insert_time, size };
inline constexpr std::size_t kCacheFeatureCount = 6;

/// Aggregate series a cache program may take percentiles of.
enum class Series { counts, ages, sizes };
inline constexpr std::array<std::string_view, 3> kSeriesNames = {"counts", "ages", "sizes"};

inline constexpr std::size_t kHistoryDepth = 10;

/// Scalar features bound in kernel mode. Slots after `now_us` are the history
/// arrays, most recent interval first: h_cwnd_0..9, h_srtt_0..9, h_rate_0..9, h_loss_0..9.
enum class KernelFeature {
  cwnd, prev_cwnd, srtt_us, rtt_us, min_rtt_us, inflight_bytes, mss, acked_bytes,
  loss_flag, delivery_rate, now_us, history_begin
};
inline constexpr std::array<std::string_view, 4> kHistoryMetrics = {"cwnd", "srtt", "rate", "loss"};

inline std::size_t kernel_history_slot(std::size_t metric, std::size_t age) {
  return static_cast<std::size_t>(KernelFeature::history_begin) + metric * kHistoryDepth + age;
}

/// Built-in functions and their arities.
enum class Builtin { percentile, history_contains, history_count, history_age_at_eviction, min, max, abs };

struct BuiltinInfo {
  std::string_view name;
  Builtin id;
  std::size_t arity;
  bool cache_only;
};

inline constexpr std::array<BuiltinInfo, 7> kBuiltins = {{
    {"percentile", Builtin::percentile, 2, true},
    {"history_contains", Builtin::history_contains, 1, true},
    {"history_count", Builtin::history_count, 1, true},
    {"history_age_at_eviction", Builtin::history_age_at_eviction, 1, true},
    {"min", Builtin::min, 2, false},
    {"max", Builtin::max, 2, false},
    {"abs", Builtin::abs, 1, false},
}};

inline const BuiltinInfo* find_builtin(std::string_view name, Mode mode) {
  for (const auto& b : kBuiltins)
    if (b.name == name && (!b.cache_only || mode == Mode::cache)) return &b;
  return nullptr;
}

inline const std::vector<std::string>& scalar_features(Mode mode) {
  static const std::vector<std::string> cache = {"now", "obj_id", "count", "last_access_time", "insert_time",
                                                 "size"};
  static const std::vector<std::string> kernel = [] {
    std::vector<std::string> v = {"cwnd",        "prev_cwnd", "srtt_us",     "rtt_us",
                                  "min_rtt_us",  "inflight_bytes", "mss", "acked_bytes",
                                  "loss_flag",   "delivery_rate",  "now_us"};
    for (auto metric : kHistoryMetrics)
      for (std::size_t i = 0; i < kHistoryDepth; ++i)
        v.push_back("h_" + std::string(metric) + "_" + std::to_string(i));
    return v;
  }();
  return mode == Mode::cache ? cache : kernel;
}

/// Slot index of a scalar feature, or -1.
inline int scalar_slot(std::string_view name, Mode mode) {
  const auto& names = scalar_features(mode);
  auto it = std::find(names.begin(), names.end(), name);
  return it == names.end() ? -1 : static_cast<int>(it - names.begin());
}

inline int series_slot(std::string_view name, Mode mode) {
  if (mode != Mode::cache) return -1;
  for (std::size_t i = 0; i < kSeriesNames.size(); ++i)
    if (kSeriesNames[i] == name) return static_cast<int>(i);
  return -1;
}

inline bool is_reserved(std::string_view name, Mode mode) {
  return scalar_slot(name, mode) >= 0 || series_slot(name, mode) >= 0 || find_builtin(name, mode) != nullptr;
}

}  // namespace hsynth::dsl
