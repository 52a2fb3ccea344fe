#pragma once

// Deliberately naive cache simulator used as a test oracle. Resident objects
// live in a flat vector; each eviction scans all of them and every aggregate
// is recomputed by sorting. Nothing here shares code with the optimized
// simulator or the policies under test.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hsynth/cache/simulator.hpp"

namespace ref {

using hsynth::Bytes;
using hsynth::ObjectId;
using hsynth::Time;

struct Obj {
  ObjectId id = 0;
  Bytes size = 0;
  std::int64_t count = 0;
  Time last = 0;
  Time insert = 0;
  double score = 0.0;
};

struct Evicted {
  ObjectId id = 0;
  Time when = 0;
  std::int64_t count = 0;
  Time age = 0;
};

struct State {
  std::vector<Obj> resident;
  std::vector<Evicted> history;  // oldest first
  std::size_t history_capacity = 1024;

  const Evicted* find_history(ObjectId id) const {
    std::size_t start = history.size() > history_capacity ? history.size() - history_capacity : 0;
    for (std::size_t i = history.size(); i-- > start;)
      if (history[i].id == id) return &history[i];
    return nullptr;
  }
};

/// Nearest rank with p given as num/den, computed in integers.
inline std::size_t rank(std::int64_t num, std::int64_t den, std::size_t n) {
  std::int64_t r = (num * static_cast<std::int64_t>(n) + den - 1) / den;
  return static_cast<std::size_t>(std::clamp<std::int64_t>(r, 1, static_cast<std::int64_t>(n)));
}

inline double sorted_pick(std::vector<std::int64_t> v, std::int64_t num, std::int64_t den) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  return static_cast<double>(v[rank(num, den, v.size()) - 1]);
}

/// Score of an object at its touch. Lower is evicted first.
using ScoreFn = std::function<double(Time now, const Obj& o, const State& s)>;

inline double fifo_score(Time, const Obj& o, const State&) { return static_cast<double>(o.insert); }
inline double lru_score(Time, const Obj& o, const State&) { return static_cast<double>(o.last); }
inline double lfu_score(Time, const Obj& o, const State&) { return static_cast<double>(o.count); }

inline hsynth::cache::MissReport simulate(const hsynth::Trace& trace, Bytes capacity, const ScoreFn& score,
                                          std::size_t history_capacity = 1024,
                                          std::vector<ObjectId>* evictions = nullptr) {
  State s;
  s.history_capacity = history_capacity;
  hsynth::cache::MissReport rep;
  auto used = [&] {
    Bytes b = 0;
    for (const auto& o : s.resident) b += o.size;
    return b;
  };
  auto evict = [&](Time now) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < s.resident.size(); ++i) {
      const Obj& a = s.resident[i];
      const Obj& b = s.resident[best];
      if (a.score < b.score || (a.score == b.score && (a.insert < b.insert || (a.insert == b.insert && a.id < b.id))))
        best = i;
    }
    const Obj& v = s.resident[best];
    s.history.push_back({v.id, now, v.count, now - v.last});
    if (evictions) evictions->push_back(v.id);
    s.resident.erase(s.resident.begin() + static_cast<std::ptrdiff_t>(best));
    ++rep.evictions;
  };

  for (const auto& r : trace) {
    ++rep.requests;
    rep.bytes_requested += r.size;
    auto it = std::find_if(s.resident.begin(), s.resident.end(), [&](const Obj& o) { return o.id == r.object_id; });
    if (it != s.resident.end()) {
      if (r.size > capacity) {
        s.resident.erase(it);
        ++rep.object_misses;
        rep.byte_misses += r.size;
        continue;
      }
      it->count += 1;
      it->last = r.time;
      it->size = r.size;
      it->score = score(r.time, *it, s);
      while (used() > capacity) evict(r.time);
      continue;
    }
    ++rep.object_misses;
    rep.byte_misses += r.size;
    if (r.size > capacity) continue;
    while (used() + r.size > capacity) evict(r.time);
    s.resident.push_back({r.object_id, r.size, 1, r.time, r.time, 0.0});
    s.resident.back().score = score(r.time, s.resident.back(), s);
  }
  rep.object_miss_ratio = static_cast<double>(rep.object_misses) / static_cast<double>(rep.requests);
  rep.byte_miss_ratio = static_cast<double>(rep.byte_misses) / static_cast<double>(rep.bytes_requested);
  rep.capacity_bytes = capacity;
  return rep;
}

/// Brute-force aggregates over the resident set, for program-driven scores.
inline double percentile_counts(const State& s, std::int64_t num, std::int64_t den) {
  std::vector<std::int64_t> v;
  for (const auto& o : s.resident) v.push_back(o.count);
  return sorted_pick(v, num, den);
}
inline double percentile_sizes(const State& s, std::int64_t num, std::int64_t den) {
  std::vector<std::int64_t> v;
  for (const auto& o : s.resident) v.push_back(o.size);
  return sorted_pick(v, num, den);
}
/// Ages follow the derivation rule: now minus the (1 - p) last-access percentile.
inline double percentile_ages(const State& s, Time now, std::int64_t num, std::int64_t den) {
  if (s.resident.empty()) return 0.0;
  std::vector<std::int64_t> v;
  for (const auto& o : s.resident) v.push_back(o.last);
  return static_cast<double>(now) - sorted_pick(v, den - num, den);
}

}  // namespace ref
