#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

namespace hsynth {

/// Multiset with rank queries, backed by a treap whose nodes carry a
/// multiplicity and a subtree total. insert, erase_one and kth are expected
/// O(log n). `steps()` counts node visits for complexity instrumentation.
template <typename T, typename Compare = std::less<T>>
class OrderStatisticMultiset {
 public:
  std::size_t size() const noexcept { return root_ == kNil ? 0 : nodes_[root_].total; }
  bool empty() const noexcept { return size() == 0; }
  std::uint64_t steps() const noexcept { return steps_; }

  void insert(const T& v) { root_ = insert(root_, v); }

  /// Removes one copy of v. Returns false if v was absent.
  bool erase_one(const T& v) {
    bool found = false;
    root_ = erase(root_, v, found);
    return found;
  }

  std::size_t count(const T& v) const {
    Index n = root_;
    while (n != kNil) {
      ++steps_;
      const Node& x = nodes_[n];
      if (cmp_(v, x.key)) n = x.left;
      else if (cmp_(x.key, v)) n = x.right;
      else return x.mult;
    }
    return 0;
  }

  /// k-th smallest element, 1-based. Requires 1 <= k <= size().
  const T& kth(std::size_t k) const {
    if (k < 1 || k > size()) throw std::out_of_range("kth: rank out of range");
    Index n = root_;
    for (;;) {
      ++steps_;
      const Node& x = nodes_[n];
      std::size_t left = total(x.left);
      if (k <= left) {
        n = x.left;
      } else if (k <= left + x.mult) {
        return x.key;
      } else {
        k -= left + x.mult;
        n = x.right;
      }
    }
  }

  /// Nearest-rank percentile: element at 1-based rank ceil(p * n), with p = 0
  /// mapping to the minimum. Returns `empty_value` for an empty multiset.
  T nearest_rank(double p, T empty_value = T{}) const {
    std::size_t n = size();
    if (n == 0) return empty_value;
    return kth(nearest_rank_index(p, n));
  }

  static std::size_t nearest_rank_index(double p, std::size_t n) {
    // The small slack keeps p * n from rounding past an exact integer (0.7 * 10).
    double r = std::ceil(p * static_cast<double>(n) - 1e-9);
    if (r < 1.0) return 1;
    if (r > static_cast<double>(n)) return n;
    return static_cast<std::size_t>(r);
  }

  /// In-order contents with multiplicity.
  std::vector<T> to_vector() const {
    std::vector<T> out;
    out.reserve(size());
    collect(root_, out);
    return out;
  }

  void clear() {
    nodes_.clear();
    free_.clear();
    root_ = kNil;
  }

 private:
  using Index = std::uint32_t;
  static constexpr Index kNil = ~Index{0};

  struct Node {
    T key;
    std::uint32_t prio;
    std::size_t mult;
    std::size_t total;
    Index left;
    Index right;
  };

  std::size_t total(Index n) const { return n == kNil ? 0 : nodes_[n].total; }
  void pull(Index n) {
    Node& x = nodes_[n];
    x.total = x.mult + total(x.left) + total(x.right);
  }

  std::uint32_t next_prio() {
    // xorshift32: deterministic shapes keep step counts reproducible.
    prio_state_ ^= prio_state_ << 13;
    prio_state_ ^= prio_state_ >> 17;
    prio_state_ ^= prio_state_ << 5;
    return prio_state_;
  }

  Index alloc(const T& v) {
    Node n{v, next_prio(), 1, 1, kNil, kNil};
    if (!free_.empty()) {
      Index i = free_.back();
      free_.pop_back();
      nodes_[i] = n;
      return i;
    }
    nodes_.push_back(n);
    return static_cast<Index>(nodes_.size() - 1);
  }

  Index rotate_right(Index n) {
    Index l = nodes_[n].left;
    nodes_[n].left = nodes_[l].right;
    nodes_[l].right = n;
    pull(n);
    pull(l);
    return l;
  }

  Index rotate_left(Index n) {
    Index r = nodes_[n].right;
    nodes_[n].right = nodes_[r].left;
    nodes_[r].left = n;
    pull(n);
    pull(r);
    return r;
  }

  Index insert(Index n, const T& v) {
    ++steps_;
    if (n == kNil) return alloc(v);
    if (cmp_(v, nodes_[n].key)) {
      Index l = insert(nodes_[n].left, v);
      nodes_[n].left = l;
      pull(n);
      if (nodes_[l].prio > nodes_[n].prio) n = rotate_right(n);
    } else if (cmp_(nodes_[n].key, v)) {
      Index r = insert(nodes_[n].right, v);
      nodes_[n].right = r;
      pull(n);
      if (nodes_[r].prio > nodes_[n].prio) n = rotate_left(n);
    } else {
      ++nodes_[n].mult;
      pull(n);
    }
    return n;
  }

  Index erase(Index n, const T& v, bool& found) {
    ++steps_;
    if (n == kNil) return n;
    if (cmp_(v, nodes_[n].key)) {
      nodes_[n].left = erase(nodes_[n].left, v, found);
    } else if (cmp_(nodes_[n].key, v)) {
      nodes_[n].right = erase(nodes_[n].right, v, found);
    } else {
      found = true;
      if (nodes_[n].mult > 1) {
        --nodes_[n].mult;
      } else {
        return remove_node(n);
      }
    }
    pull(n);
    return n;
  }

  // Rotates n down until it is a leaf or has one child, then unlinks it.
  Index remove_node(Index n) {
    ++steps_;
    Node& x = nodes_[n];
    if (x.left == kNil || x.right == kNil) {
      Index child = x.left == kNil ? x.right : x.left;
      free_.push_back(n);
      return child;
    }
    Index top;
    if (nodes_[x.left].prio > nodes_[x.right].prio) {
      top = rotate_right(n);
      nodes_[top].right = remove_node(n);
    } else {
      top = rotate_left(n);
      nodes_[top].left = remove_node(n);
    }
    pull(top);
    return top;
  }

  void collect(Index n, std::vector<T>& out) const {
    if (n == kNil) return;
    collect(nodes_[n].left, out);
    out.insert(out.end(), nodes_[n].mult, nodes_[n].key);
    collect(nodes_[n].right, out);
  }

  std::vector<Node> nodes_;
  std::vector<Index> free_;
  Index root_ = kNil;
  std::uint32_t prio_state_ = 2463534242u;
  mutable std::uint64_t steps_ = 0;
  [[no_unique_address]] Compare cmp_{};
};

}  // namespace hsynth
