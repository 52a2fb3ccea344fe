#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <list>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "hsynth/cache/policy.hpp"

namespace hsynth::cache {

/// Fields every baseline tracks per resident object.
struct ObjState {
  Time insert_time = 0;
  Time last_access = 0;
  std::int64_t count = 0;
  Bytes size = 0;
};

/// Policies that evict the minimum of a per-object key held in an ordered
/// set. Keys are recomputed whenever the object is touched. All keys end in
/// (insert_time, id) so ties resolve identically everywhere.
template <typename Key>
class OrderedPolicy : public EvictionPolicy {
 public:
  void on_hit(Time now, ObjectId id, Bytes size) override {
    auto& e = entries_.at(id);
    order_.erase(e.key);
    e.state.last_access = now;
    e.state.count += 1;
    e.state.size = size;
    e.key = make_key(id, e.state);
    order_.insert(e.key);
  }

  void on_insert(Time now, ObjectId id, Bytes size) override {
    Entry e;
    e.state = {now, now, 1, size};
    e.key = make_key(id, e.state);
    order_.insert(e.key);
    entries_.emplace(id, e);
  }

  ObjectId evict_victim(Time /*now*/) override {
    if (order_.empty()) throw PolicyContractViolation(name() + ": evict from empty cache");
    Key k = *order_.begin();
    order_.erase(order_.begin());
    ObjectId id = std::get<std::tuple_size_v<Key> - 1>(k);
    entries_.erase(id);
    evicted(k);
    return id;
  }

  void erase(ObjectId id) override {
    auto it = entries_.find(id);
    if (it == entries_.end()) return;
    order_.erase(it->second.key);
    entries_.erase(it);
  }

  std::size_t size() const { return entries_.size(); }

 protected:
  virtual Key make_key(ObjectId id, const ObjState& s) const = 0;
  virtual void evicted(const Key&) {}

 private:
  struct Entry {
    ObjState state;
    Key key;
  };
  std::unordered_map<ObjectId, Entry> entries_;
  std::set<Key> order_;
};

class FifoPolicy final : public OrderedPolicy<std::tuple<Time, ObjectId>> {
 public:
  std::string name() const override { return "fifo"; }

 protected:
  std::tuple<Time, ObjectId> make_key(ObjectId id, const ObjState& s) const override { return {s.insert_time, id}; }
};

class LruPolicy final : public OrderedPolicy<std::tuple<Time, Time, ObjectId>> {
 public:
  std::string name() const override { return "lru"; }

 protected:
  std::tuple<Time, Time, ObjectId> make_key(ObjectId id, const ObjState& s) const override {
    return {s.last_access, s.insert_time, id};
  }
};

class LfuPolicy final : public OrderedPolicy<std::tuple<std::int64_t, Time, ObjectId>> {
 public:
  std::string name() const override { return "lfu"; }

 protected:
  std::tuple<std::int64_t, Time, ObjectId> make_key(ObjectId id, const ObjState& s) const override {
    return {s.count, s.insert_time, id};
  }
};

class MruPolicy final : public OrderedPolicy<std::tuple<Time, Time, ObjectId>> {
 public:
  std::string name() const override { return "mru"; }

 protected:
  std::tuple<Time, Time, ObjectId> make_key(ObjectId id, const ObjState& s) const override {
    return {-s.last_access, s.insert_time, id};
  }
};

/// Greedy-Dual-Size-Frequency with unit cost: H = L + count / size, where the
/// inflation value L becomes the H of each evicted object.
class GdsfPolicy final : public OrderedPolicy<std::tuple<double, Time, ObjectId>> {
 public:
  std::string name() const override { return "gdsf"; }
  double inflation() const { return clock_; }

 protected:
  std::tuple<double, Time, ObjectId> make_key(ObjectId id, const ObjState& s) const override {
    return {clock_ + static_cast<double>(s.count) / static_cast<double>(s.size), s.insert_time, id};
  }
  void evicted(const std::tuple<double, Time, ObjectId>& k) override { clock_ = std::get<0>(k); }

 private:
  double clock_ = 0.0;
};

/// FIFO with one reinsertion per access bit (second chance / CLOCK).
class FifoReinsertionPolicy final : public EvictionPolicy {
 public:
  std::string name() const override { return "fifo-reinsertion"; }

  void on_hit(Time, ObjectId id, Bytes) override { index_.at(id).visited = true; }
  void on_insert(Time, ObjectId id, Bytes) override {
    queue_.push_back(id);
    index_[id] = {std::prev(queue_.end()), false};
  }
  ObjectId evict_victim(Time) override {
    if (queue_.empty()) throw PolicyContractViolation("fifo-reinsertion: evict from empty cache");
    for (;;) {
      ObjectId id = queue_.front();
      auto& e = index_.at(id);
      if (e.visited) {
        e.visited = false;
        queue_.splice(queue_.end(), queue_, queue_.begin());
        continue;
      }
      queue_.pop_front();
      index_.erase(id);
      return id;
    }
  }
  void erase(ObjectId id) override {
    auto it = index_.find(id);
    if (it == index_.end()) return;
    queue_.erase(it->second.pos);
    index_.erase(it);
  }

 private:
  struct Entry {
    std::list<ObjectId>::iterator pos;
    bool visited = false;
  };
  std::list<ObjectId> queue_;  // front is oldest
  std::unordered_map<ObjectId, Entry> index_;
};

/// SIEVE: FIFO order with a hand that sweeps from old to new, clearing visited
/// bits and evicting the first unvisited object. Survivors stay in place.
class SievePolicy final : public EvictionPolicy {
 public:
  std::string name() const override { return "sieve"; }

  void on_hit(Time, ObjectId id, Bytes) override { index_.at(id).visited = true; }
  void on_insert(Time, ObjectId id, Bytes) override {
    queue_.push_front(id);
    index_[id] = {queue_.begin(), false};
  }
  ObjectId evict_victim(Time) override {
    if (queue_.empty()) throw PolicyContractViolation("sieve: evict from empty cache");
    auto hand = hand_valid_ ? hand_ : std::prev(queue_.end());
    for (;;) {
      auto& e = index_.at(*hand);
      if (!e.visited) break;
      e.visited = false;
      hand = hand == queue_.begin() ? std::prev(queue_.end()) : std::prev(hand);
    }
    ObjectId victim = *hand;
    if (hand == queue_.begin()) {
      hand_valid_ = false;
    } else {
      hand_ = std::prev(hand);
      hand_valid_ = true;
    }
    queue_.erase(hand);
    index_.erase(victim);
    return victim;
  }
  void erase(ObjectId id) override {
    auto it = index_.find(id);
    if (it == index_.end()) return;
    if (hand_valid_ && hand_ == it->second.pos) {
      if (hand_ == queue_.begin()) hand_valid_ = false;
      else hand_ = std::prev(hand_);
    }
    queue_.erase(it->second.pos);
    index_.erase(it);
  }

 private:
  struct Entry {
    std::list<ObjectId>::iterator pos;
    bool visited = false;
  };
  std::list<ObjectId> queue_;  // front is newest, back is oldest
  std::unordered_map<ObjectId, Entry> index_;
  std::list<ObjectId>::iterator hand_{};
  bool hand_valid_ = false;
};

namespace detail {

/// FIFO of ids with byte accounting; used for queues and ghost lists.
class ByteQueue {
 public:
  void push_front(ObjectId id, Bytes size) {
    items_.push_front({id, size});
    pos_[id] = items_.begin();
    bytes_ += size;
  }
  bool contains(ObjectId id) const { return pos_.count(id) != 0; }
  bool empty() const { return items_.empty(); }
  Bytes bytes() const { return bytes_; }
  std::pair<ObjectId, Bytes> back() const { return items_.back(); }
  std::pair<ObjectId, Bytes> pop_back() {
    auto item = items_.back();
    pos_.erase(item.first);
    items_.pop_back();
    bytes_ -= item.second;
    return item;
  }
  Bytes remove(ObjectId id) {
    auto it = pos_.find(id);
    if (it == pos_.end()) return 0;
    Bytes sz = it->second->second;
    bytes_ -= sz;
    items_.erase(it->second);
    pos_.erase(it);
    return sz;
  }
  void move_to_front(ObjectId id) {
    auto it = pos_.at(id);
    items_.splice(items_.begin(), items_, it);
  }
  void resize(ObjectId id, Bytes size) {
    auto it = pos_.at(id);
    bytes_ += size - it->second;
    it->second = size;
  }

 private:
  std::list<std::pair<ObjectId, Bytes>> items_;  // front is newest
  std::unordered_map<ObjectId, std::list<std::pair<ObjectId, Bytes>>::iterator> pos_;
  Bytes bytes_ = 0;
};

}  // namespace detail

/// S3-FIFO: a small probationary FIFO, a main FIFO with lazy reinsertion, and
/// a ghost FIFO of ids recently evicted from the small queue.
class S3FifoPolicy final : public EvictionPolicy {
 public:
  S3FifoPolicy(Bytes capacity, double small_fraction = 0.10, int move_threshold = 1)
      : small_cap_(std::max<Bytes>(1, static_cast<Bytes>(std::floor(static_cast<double>(capacity) * small_fraction)))),
        ghost_cap_(std::max<Bytes>(1, capacity - small_cap_)),
        move_threshold_(move_threshold) {}

  std::string name() const override { return "s3fifo"; }

  void on_miss(Time, ObjectId id, Bytes) override {
    pending_main_ = ghost_.contains(id);
    if (pending_main_) ghost_.remove(id);
  }
  void on_insert(Time, ObjectId id, Bytes size) override {
    (pending_main_ ? main_ : small_).push_front(id, size);
    freq_[id] = 0;
    pending_main_ = false;
  }
  void on_hit(Time, ObjectId id, Bytes size) override {
    auto& f = freq_.at(id);
    f = std::min(f + 1, 3);
    (small_.contains(id) ? small_ : main_).resize(id, size);
  }
  ObjectId evict_victim(Time) override {
    for (;;) {
      if (small_.empty() && main_.empty()) throw PolicyContractViolation("s3fifo: evict from empty cache");
      if (!small_.empty() && (small_.bytes() >= small_cap_ || main_.empty())) {
        auto [id, size] = small_.pop_back();
        if (freq_.at(id) >= move_threshold_) {
          freq_[id] = 0;
          main_.push_front(id, size);
          continue;
        }
        freq_.erase(id);
        ghost_.push_front(id, size);
        while (ghost_.bytes() > ghost_cap_) ghost_.pop_back();
        return id;
      }
      auto [id, size] = main_.back();
      auto& f = freq_.at(id);
      if (f > 0) {
        --f;
        main_.move_to_front(id);
        continue;
      }
      main_.pop_back();
      freq_.erase(id);
      return id;
    }
  }
  void erase(ObjectId id) override {
    small_.remove(id);
    main_.remove(id);
    freq_.erase(id);
  }

 private:
  Bytes small_cap_;
  Bytes ghost_cap_;
  int move_threshold_;
  detail::ByteQueue small_, main_, ghost_;
  std::unordered_map<ObjectId, int> freq_;
  bool pending_main_ = false;
};

/// Adaptive Replacement Cache with byte-weighted lists and target p.
class ArcPolicy final : public EvictionPolicy {
 public:
  explicit ArcPolicy(Bytes capacity) : capacity_(capacity) {}

  std::string name() const override { return "arc"; }

  void on_miss(Time, ObjectId id, Bytes size) override {
    pending_ = Pending::none;
    double b1 = static_cast<double>(b1_.bytes()), b2 = static_cast<double>(b2_.bytes());
    if (b1_.contains(id)) {
      double delta = std::max(1.0, b2 / std::max(1.0, b1)) * static_cast<double>(size);
      p_ = std::min(static_cast<double>(capacity_), p_ + delta);
      b1_.remove(id);
      pending_ = Pending::b1;
    } else if (b2_.contains(id)) {
      double delta = std::max(1.0, b1 / std::max(1.0, b2)) * static_cast<double>(size);
      p_ = std::max(0.0, p_ - delta);
      b2_.remove(id);
      pending_ = Pending::b2;
    }
  }
  void on_insert(Time, ObjectId id, Bytes size) override {
    (pending_ == Pending::none ? t1_ : t2_).push_front(id, size);
    pending_ = Pending::none;
    trim_ghosts();
  }
  void on_hit(Time, ObjectId id, Bytes size) override {
    Bytes old = t1_.remove(id);
    if (old == 0) old = t2_.remove(id);
    (void)old;
    t2_.push_front(id, size);
  }
  ObjectId evict_victim(Time) override {
    if (t1_.empty() && t2_.empty()) throw PolicyContractViolation("arc: evict from empty cache");
    double t1 = static_cast<double>(t1_.bytes());
    bool from_t1 = !t1_.empty() && (t2_.empty() || t1 > p_ || (pending_ == Pending::b2 && t1 >= p_));
    auto [id, size] = (from_t1 ? t1_ : t2_).pop_back();
    (from_t1 ? b1_ : b2_).push_front(id, size);
    trim_ghosts();
    return id;
  }
  void erase(ObjectId id) override {
    t1_.remove(id);
    t2_.remove(id);
  }

  double target() const { return p_; }

 private:
  enum class Pending { none, b1, b2 };

  void trim_ghosts() {
    while (!b1_.empty() && t1_.bytes() + b1_.bytes() > capacity_) b1_.pop_back();
    while (t1_.bytes() + t2_.bytes() + b1_.bytes() + b2_.bytes() > 2 * capacity_) {
      if (!b2_.empty()) b2_.pop_back();
      else if (!b1_.empty()) b1_.pop_back();
      else break;
    }
  }

  Bytes capacity_;
  double p_ = 0.0;
  Pending pending_ = Pending::none;
  detail::ByteQueue t1_, t2_, b1_, b2_;
};

/// Full 2Q: A1in FIFO for first-time objects, A1out ghost ids, Am LRU.
class TwoQPolicy final : public EvictionPolicy {
 public:
  TwoQPolicy(Bytes capacity, double kin = 0.25, double kout = 0.50)
      : kin_(static_cast<Bytes>(std::floor(static_cast<double>(capacity) * kin))),
        kout_(std::max<Bytes>(1, static_cast<Bytes>(std::floor(static_cast<double>(capacity) * kout)))) {}

  std::string name() const override { return "twoq"; }

  void on_miss(Time, ObjectId id, Bytes) override {
    pending_am_ = a1out_.contains(id);
    if (pending_am_) a1out_.remove(id);
  }
  void on_insert(Time, ObjectId id, Bytes size) override {
    (pending_am_ ? am_ : a1in_).push_front(id, size);
    pending_am_ = false;
  }
  void on_hit(Time, ObjectId id, Bytes size) override {
    if (am_.contains(id)) {
      am_.move_to_front(id);
      am_.resize(id, size);
    } else {
      a1in_.resize(id, size);
    }
  }
  ObjectId evict_victim(Time) override {
    if (a1in_.empty() && am_.empty()) throw PolicyContractViolation("twoq: evict from empty cache");
    if (!a1in_.empty() && (a1in_.bytes() > kin_ || am_.empty())) {
      auto [id, size] = a1in_.pop_back();
      a1out_.push_front(id, size);
      while (a1out_.bytes() > kout_) a1out_.pop_back();
      return id;
    }
    return am_.pop_back().first;
  }
  void erase(ObjectId id) override {
    a1in_.remove(id);
    am_.remove(id);
  }

 private:
  Bytes kin_;
  Bytes kout_;
  detail::ByteQueue a1in_, a1out_, am_;
  bool pending_am_ = false;
};

// ---------------------------------------------------------------------------

enum class PolicyName { fifo, lru, lfu, mru, fifo_reinsertion, sieve, s3fifo, gdsf, arc, twoq };

inline constexpr PolicyName kAllBaselines[] = {PolicyName::fifo,  PolicyName::lru,    PolicyName::lfu,
                                               PolicyName::mru,   PolicyName::fifo_reinsertion,
                                               PolicyName::sieve, PolicyName::s3fifo, PolicyName::gdsf,
                                               PolicyName::arc,   PolicyName::twoq};

inline std::string_view to_string(PolicyName n) {
  switch (n) {
    case PolicyName::fifo: return "fifo";
    case PolicyName::lru: return "lru";
    case PolicyName::lfu: return "lfu";
    case PolicyName::mru: return "mru";
    case PolicyName::fifo_reinsertion: return "fifo-reinsertion";
    case PolicyName::sieve: return "sieve";
    case PolicyName::s3fifo: return "s3fifo";
    case PolicyName::gdsf: return "gdsf";
    case PolicyName::arc: return "arc";
    case PolicyName::twoq: return "twoq";
  }
  return "?";
}

class UnknownPolicy : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline std::optional<PolicyName> policy_from_string(std::string_view s) {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  static const std::map<std::string, PolicyName, std::less<>> names = {
      {"fifo", PolicyName::fifo},
      {"lru", PolicyName::lru},
      {"lfu", PolicyName::lfu},
      {"mru", PolicyName::mru},
      {"fifo-reinsertion", PolicyName::fifo_reinsertion},
      {"fifo-re", PolicyName::fifo_reinsertion},
      {"clock", PolicyName::fifo_reinsertion},
      {"sieve", PolicyName::sieve},
      {"s3fifo", PolicyName::s3fifo},
      {"s3-fifo", PolicyName::s3fifo},
      {"gdsf", PolicyName::gdsf},
      {"arc", PolicyName::arc},
      {"twoq", PolicyName::twoq},
      {"2q", PolicyName::twoq},
  };
  auto it = names.find(lower);
  if (it == names.end()) return std::nullopt;
  return it->second;
}

using PolicyParams = std::map<std::string, double>;

/// Fresh, empty baseline instance. Accepted params: s3fifo {small, threshold},
/// twoq {kin, kout}. Capacity is needed by the queue-partitioning policies.
inline std::unique_ptr<EvictionPolicy> make_policy(PolicyName name, const PolicyParams& params, Bytes capacity) {
  auto allow = [&](std::initializer_list<std::string_view> keys) {
    for (const auto& [k, v] : params) {
      if (std::find(keys.begin(), keys.end(), k) == keys.end())
        throw std::invalid_argument(std::string(to_string(name)) + ": unknown parameter '" + k + "'");
    }
  };
  auto get = [&](const std::string& k, double def) {
    auto it = params.find(k);
    return it == params.end() ? def : it->second;
  };
  auto fraction = [&](const std::string& k, double def) {
    double v = get(k, def);
    if (!(v > 0.0 && v < 1.0)) throw std::invalid_argument(k + " must be in (0, 1)");
    return v;
  };
  if (capacity < 1) throw std::invalid_argument("capacity must be >= 1");

  switch (name) {
    case PolicyName::fifo: allow({}); return std::make_unique<FifoPolicy>();
    case PolicyName::lru: allow({}); return std::make_unique<LruPolicy>();
    case PolicyName::lfu: allow({}); return std::make_unique<LfuPolicy>();
    case PolicyName::mru: allow({}); return std::make_unique<MruPolicy>();
    case PolicyName::fifo_reinsertion: allow({}); return std::make_unique<FifoReinsertionPolicy>();
    case PolicyName::sieve: allow({}); return std::make_unique<SievePolicy>();
    case PolicyName::gdsf: allow({}); return std::make_unique<GdsfPolicy>();
    case PolicyName::arc: allow({}); return std::make_unique<ArcPolicy>(capacity);
    case PolicyName::s3fifo: {
      allow({"small", "threshold"});
      double threshold = get("threshold", 1.0);
      if (threshold < 0 || threshold > 3 || std::floor(threshold) != threshold)
        throw std::invalid_argument("threshold must be an integer in [0, 3]");
      return std::make_unique<S3FifoPolicy>(capacity, fraction("small", 0.10), static_cast<int>(threshold));
    }
    case PolicyName::twoq:
      allow({"kin", "kout"});
      return std::make_unique<TwoQPolicy>(capacity, fraction("kin", 0.25), fraction("kout", 0.50));
  }
  throw UnknownPolicy("unknown policy");
}

struct PolicySpec {
  PolicyName name;
  PolicyParams params;
};

/// Parses "name" or "name:key=value,key=value", e.g. "s3fifo:small=0.1".
inline PolicySpec parse_policy_spec(std::string_view spec) {
  auto colon = spec.find(':');
  auto name = policy_from_string(spec.substr(0, colon));
  if (!name) throw UnknownPolicy("unknown policy '" + std::string(spec.substr(0, colon)) + "'");
  PolicySpec out{*name, {}};
  if (colon == std::string_view::npos) return out;
  std::string_view rest = spec.substr(colon + 1);
  while (!rest.empty()) {
    auto comma = rest.find(',');
    std::string_view kv = rest.substr(0, comma);
    auto eq = kv.find('=');
    if (eq == std::string_view::npos || eq == 0) throw std::invalid_argument("bad policy parameter '" + std::string(kv) + "'");
    std::string key(kv.substr(0, eq));
    std::string val(kv.substr(eq + 1));
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(val, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != val.size() || val.empty()) throw std::invalid_argument("bad value for '" + key + "'");
    out.params[key] = v;
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return out;
}

inline std::unique_ptr<EvictionPolicy> make_policy(std::string_view spec, Bytes capacity) {
  auto s = parse_policy_spec(spec);
  return make_policy(s.name, s.params, capacity);
}

}  // namespace hsynth::cache
