#pragma once

#include <stdexcept>
#include <string>

#include "hsynth/trace.hpp"

namespace hsynth::cache {

/// Eviction policy driven by the simulator.
///
/// Call order on a miss: on_miss, then evict_victim until the object fits,
/// then on_insert. On a hit: on_hit with the (possibly changed) size. A
/// policy must only return resident ids from evict_victim and must forget an
/// id once it has returned it.
class EvictionPolicy {
 public:
  virtual ~EvictionPolicy() = default;

  virtual void on_hit(Time now, ObjectId id, Bytes size) = 0;
  virtual void on_insert(Time now, ObjectId id, Bytes size) = 0;
  virtual ObjectId evict_victim(Time now) = 0;

  /// Drops a resident id without treating it as an eviction (an object that
  /// grew past the cache capacity).
  virtual void erase(ObjectId id) = 0;

  /// Notification before eviction for an admissible miss. Ghost-list policies
  /// use it to learn which id is about to be inserted.
  virtual void on_miss(Time /*now*/, ObjectId /*id*/, Bytes /*size*/) {}

  virtual std::string name() const = 0;
};

class PolicyContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

}  // namespace hsynth::cache
