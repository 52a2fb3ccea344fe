#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "hsynth/cache/policy.hpp"
#include "hsynth/dsl/eval.hpp"
#include "hsynth/dsl/render.hpp"
#include "hsynth/order_statistic_multiset.hpp"

namespace hsynth::cache {

/// Per-object features handed to a priority program.
struct ObjectMeta {
  ObjectId object_id = 0;
  Bytes size = 0;
  std::int64_t count = 1;
  Time last_access_time = 0;
  Time insert_time = 0;
};

/// Exact order statistics over the resident objects' counts, last-access
/// times and sizes.
class AggregateView {
 public:
  void add(const ObjectMeta& m) {
    counts_.insert(m.count);
    last_access_.insert(m.last_access_time);
    sizes_.insert(m.size);
  }
  void remove(const ObjectMeta& m) {
    counts_.erase_one(m.count);
    last_access_.erase_one(m.last_access_time);
    sizes_.erase_one(m.size);
  }

  /// Nearest-rank percentile. Ages are now - last_access, so the p-th age is
  /// now minus the (1 - p)-th last-access time.
  double percentile(dsl::Series s, double p, Time now) const {
    switch (s) {
      case dsl::Series::counts: return static_cast<double>(counts_.nearest_rank(p, 0));
      case dsl::Series::sizes: return static_cast<double>(sizes_.nearest_rank(p, 0));
      case dsl::Series::ages:
        if (last_access_.empty()) return 0.0;
        return static_cast<double>(now - last_access_.nearest_rank(1.0 - p));
    }
    return 0.0;
  }

  std::size_t size() const { return counts_.size(); }
  std::uint64_t steps() const { return counts_.steps() + last_access_.steps() + sizes_.steps(); }

  const OrderStatisticMultiset<std::int64_t>& counts() const { return counts_; }
  const OrderStatisticMultiset<Time>& last_access_times() const { return last_access_; }
  const OrderStatisticMultiset<Bytes>& sizes() const { return sizes_; }

 private:
  OrderStatisticMultiset<std::int64_t> counts_;
  OrderStatisticMultiset<Time> last_access_;
  OrderStatisticMultiset<Bytes> sizes_;
};

struct EvictionRecord {
  ObjectId object_id = 0;
  Time eviction_time = 0;
  std::int64_t count_at_eviction = 0;
  Time age_at_eviction = 0;  // eviction_time - last_access_time
};

/// The most recent `capacity` evictions in a ring, with an id index. A
/// re-evicted id is answered from its latest record.
class EvictionHistory {
 public:
  explicit EvictionHistory(std::size_t capacity) : ring_(capacity) {
    if (capacity == 0) throw std::invalid_argument("history capacity must be >= 1");
  }

  void record(const EvictionRecord& r) {
    std::size_t slot = next_ % ring_.size();
    if (next_ >= ring_.size()) {
      auto it = index_.find(ring_[slot].object_id);
      if (it != index_.end() && it->second == slot) index_.erase(it);
    }
    ring_[slot] = r;
    index_[r.object_id] = slot;
    ++next_;
  }

  const EvictionRecord* find(ObjectId id) const {
    auto it = index_.find(id);
    return it == index_.end() ? nullptr : &ring_[it->second];
  }

  bool contains(ObjectId id) const { return find(id) != nullptr; }
  std::int64_t count(ObjectId id) const {
    auto* r = find(id);
    return r ? r->count_at_eviction : 0;
  }
  std::int64_t age_at_eviction(ObjectId id) const {
    auto* r = find(id);
    return r ? r->age_at_eviction : 0;
  }

  std::size_t capacity() const { return ring_.size(); }
  std::size_t size() const { return index_.size(); }

 private:
  std::vector<EvictionRecord> ring_;
  std::unordered_map<ObjectId, std::size_t> index_;
  std::size_t next_ = 0;
};

/// Binds the cache-mode evaluation context for one object.
class CacheFeatureView final : public dsl::FeatureSource {
 public:
  CacheFeatureView(const AggregateView& agg, const EvictionHistory& hist, Time now)
      : agg_(agg), hist_(hist), now_(now) {}

  double percentile(dsl::Series s, double p) const override { return agg_.percentile(s, p, now_); }
  bool history_contains(std::uint64_t id) const override { return hist_.contains(id); }
  std::int64_t history_count(std::uint64_t id) const override { return hist_.count(id); }
  std::int64_t history_age_at_eviction(std::uint64_t id) const override { return hist_.age_at_eviction(id); }

 private:
  const AggregateView& agg_;
  const EvictionHistory& hist_;
  Time now_;
};

inline std::array<std::int64_t, dsl::kCacheFeatureCount> cache_scalars(Time now, const ObjectMeta& m) {
  return {now, static_cast<std::int64_t>(m.object_id), m.count, m.last_access_time, m.insert_time, m.size};
}

/// Scores `meta` with `program` against the given cache state.
inline double score_object(const dsl::CompiledProgram& program, Time now, const ObjectMeta& meta,
                           const AggregateView& agg, const EvictionHistory& hist) {
  auto scalars = cache_scalars(now, meta);
  CacheFeatureView view(agg, hist, now);
  dsl::EvalContext ctx{dsl::Mode::cache, scalars, meta.object_id, &view};
  return program.evaluate(ctx);
}

/// Priority-queue eviction whose key is a cache-mode DSL program. The program
/// runs on every insertion and hit; the lowest score is evicted, ties going to
/// the earliest insert_time, then the lowest id. Stored scores are snapshots
/// from the object's last touch.
class PriorityPolicy final : public EvictionPolicy {
 public:
  /// Throws dsl::CheckFailed if the program does not check in cache mode.
  PriorityPolicy(const dsl::Program& program, std::size_t history_capacity = 1024, std::string label = {})
      : program_(require_cache_mode(program)),
        history_(history_capacity),
        label_(label.empty() ? "program" : std::move(label)) {}

  std::string name() const override { return label_; }

  void on_insert(Time now, ObjectId id, Bytes size) override {
    Entry e;
    e.meta = {id, size, 1, now, now};
    agg_.add(e.meta);
    e.score = score_object(program_, now, e.meta, agg_, history_);
    queue_.insert(key_of(e));
    entries_.emplace(id, e);
  }

  void on_hit(Time now, ObjectId id, Bytes size) override {
    Entry& e = entries_.at(id);
    queue_.erase(key_of(e));
    agg_.remove(e.meta);
    e.meta.count += 1;
    e.meta.last_access_time = now;
    e.meta.size = size;
    agg_.add(e.meta);
    e.score = score_object(program_, now, e.meta, agg_, history_);
    queue_.insert(key_of(e));
  }

  ObjectId evict_victim(Time now) override {
    if (queue_.empty()) throw PolicyContractViolation(label_ + ": evict from empty cache");
    auto [score, insert_time, id] = *queue_.begin();
    queue_.erase(queue_.begin());
    auto it = entries_.find(id);
    const ObjectMeta& m = it->second.meta;
    agg_.remove(m);
    history_.record({id, now, m.count, now - m.last_access_time});
    entries_.erase(it);
    return id;
  }

  void erase(ObjectId id) override {
    auto it = entries_.find(id);
    if (it == entries_.end()) return;
    queue_.erase(key_of(it->second));
    agg_.remove(it->second.meta);
    entries_.erase(it);
  }

  const AggregateView& aggregates() const { return agg_; }
  const EvictionHistory& history() const { return history_; }
  const dsl::CompiledProgram& program() const { return program_; }

  /// Stored score of a resident object; throws std::out_of_range otherwise.
  double score_of(ObjectId id) const { return entries_.at(id).score; }
  const ObjectMeta& meta_of(ObjectId id) const { return entries_.at(id).meta; }
  std::size_t resident() const { return entries_.size(); }

  /// Work counter: multiset node visits plus queue operations.
  std::uint64_t steps() const { return agg_.steps() + queue_ops_; }

 private:
  using Key = std::tuple<double, Time, ObjectId>;

  struct Entry {
    ObjectMeta meta;
    double score = 0.0;
  };

  static const dsl::Program& require_cache_mode(const dsl::Program& p) {
    if (p.mode != dsl::Mode::cache) {
      dsl::CheckReport r;
      r.ok = false;
      r.diagnostics.push_back({{}, dsl::Category::type, "priority programs must be cache-mode"});
      throw dsl::CheckFailed(std::move(r));
    }
    return p;
  }

  Key key_of(const Entry& e) {
    ++queue_ops_;
    return {e.score, e.meta.insert_time, e.meta.object_id};
  }

  dsl::CompiledProgram program_;
  AggregateView agg_;
  EvictionHistory history_;
  std::string label_;
  std::unordered_map<ObjectId, Entry> entries_;
  std::set<Key> queue_;
  std::uint64_t queue_ops_ = 0;
};

inline std::unique_ptr<EvictionPolicy> make_priority_policy(const dsl::Program& program,
                                                            std::size_t history_capacity = 1024,
                                                            std::string label = {}) {
  return std::make_unique<PriorityPolicy>(program, history_capacity, std::move(label));
}

}  // namespace hsynth::cache
