#pragma once

#include <cassert>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <unordered_map>

#include "hsynth/cache/policy.hpp"
#include "hsynth/trace.hpp"

namespace hsynth::cache {

struct CacheConfig {
  Bytes capacity_bytes = 1;
  std::size_t history_capacity = 1024;
};

struct MissReport {
  std::int64_t requests = 0;
  std::int64_t object_misses = 0;
  Bytes byte_misses = 0;
  Bytes bytes_requested = 0;
  double object_miss_ratio = 0.0;
  double byte_miss_ratio = 0.0;
  std::int64_t evictions = 0;
  std::string policy;
  std::string trace;
  Bytes capacity_bytes = 0;

  /// Equality of the counted outcome; labels are not compared.
  bool same_counts(const MissReport& o) const {
    return requests == o.requests && object_misses == o.object_misses && byte_misses == o.byte_misses &&
           evictions == o.evictions;
  }
};

/// Optional per-event hook, e.g. to record the eviction sequence.
using EvictionObserver = std::function<void(Time now, ObjectId victim)>;

/// Replays `trace` against `policy`. Objects larger than the cache bypass it
/// and count as misses. Occupancy never exceeds capacity.
inline MissReport simulate(const Trace& trace, EvictionPolicy& policy, const CacheConfig& config,
                           const EvictionObserver& observer = {}) {
  if (trace.empty()) throw EmptyTrace();
  if (config.capacity_bytes < 1) throw std::invalid_argument("capacity_bytes must be >= 1");

  std::unordered_map<ObjectId, Bytes> resident;
  resident.reserve(1024);
  Bytes occupancy = 0;
  MissReport rep;
  rep.policy = policy.name();
  rep.capacity_bytes = config.capacity_bytes;

  auto evict_one = [&](Time now) {
    ObjectId victim = policy.evict_victim(now);
    auto it = resident.find(victim);
    if (it == resident.end())
      throw PolicyContractViolation(policy.name() + " returned non-resident id " + std::to_string(victim));
    occupancy -= it->second;
    resident.erase(it);
    ++rep.evictions;
    if (observer) observer(now, victim);
  };

  for (const auto& r : trace) {
    ++rep.requests;
    rep.bytes_requested += r.size;
    auto it = resident.find(r.object_id);
    if (it != resident.end()) {
      if (r.size > config.capacity_bytes) {
        // Grew past the whole cache: drop it and serve as a bypassing miss.
        occupancy -= it->second;
        resident.erase(it);
        policy.erase(r.object_id);
        ++rep.object_misses;
        rep.byte_misses += r.size;
        continue;
      }
      occupancy += r.size - it->second;
      it->second = r.size;
      policy.on_hit(r.time, r.object_id, r.size);
      while (occupancy > config.capacity_bytes) evict_one(r.time);
      continue;
    }

    ++rep.object_misses;
    rep.byte_misses += r.size;
    if (r.size > config.capacity_bytes) continue;

    policy.on_miss(r.time, r.object_id, r.size);
    while (occupancy + r.size > config.capacity_bytes) {
      if (resident.empty()) throw PolicyContractViolation("cache empty but object does not fit");
      evict_one(r.time);
    }
    resident.emplace(r.object_id, r.size);
    occupancy += r.size;
    policy.on_insert(r.time, r.object_id, r.size);
    assert(occupancy <= config.capacity_bytes);
  }

  rep.object_miss_ratio = static_cast<double>(rep.object_misses) / static_cast<double>(rep.requests);
  rep.byte_miss_ratio =
      rep.bytes_requested ? static_cast<double>(rep.byte_misses) / static_cast<double>(rep.bytes_requested) : 0.0;
  return rep;
}

}  // namespace hsynth::cache
