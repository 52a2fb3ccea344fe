#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

#include "hsynth/dsl/eval.hpp"
#include "hsynth/dsl/parser.hpp"
#include "hsynth/order_statistic_multiset.hpp"
#include "hsynth/rng.hpp"

namespace hsynth::cc {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Single bottleneck link. Times are kept in microseconds internally.
struct LinkConfig {
  std::int64_t rate_bps = 12'000'000;
  std::int64_t one_way_delay_ms = 20;
  std::int64_t queue_capacity_bytes = 60'000;  // 1 x BDP at the defaults
  std::int64_t mss_bytes = 1500;
  double duration_s = 60.0;
  int flows = 1;
  std::uint64_t rng_seed = 1;

  /// rate/8 x round-trip propagation.
  std::int64_t bdp_bytes() const { return rate_bps / 8 * 2 * one_way_delay_ms / 1000; }

  void validate() const {
    if (rate_bps <= 0) throw ConfigError("rate_bps must be positive");
    if (one_way_delay_ms <= 0) throw ConfigError("one_way_delay_ms must be positive");
    if (queue_capacity_bytes <= 0) throw ConfigError("queue_capacity_bytes must be positive");
    if (mss_bytes <= 0) throw ConfigError("mss_bytes must be positive");
    if (!(duration_s > 0.0)) throw ConfigError("duration_s must be positive");
    if (flows <= 0) throw ConfigError("flows must be positive");
    if (queue_capacity_bytes < mss_bytes) throw ConfigError("queue must hold at least one packet");
    if (bdp_bytes() < mss_bytes) throw ConfigError("bandwidth-delay product below one packet");
  }
};

/// Aggregate outcome of one run. Byte counters cover all flows.
struct CcMetrics {
  double utilization = 0.0;
  double avg_queue_delay_ms = 0.0;
  double p95_queue_delay_ms = 0.0;
  double loss_rate = 0.0;  // dropped / sent packets
  std::int64_t retransmits = 0;

  std::int64_t sent_bytes = 0;
  std::int64_t delivered_bytes = 0;  // acknowledged
  std::int64_t dropped_bytes = 0;    // loss already detected by the sender
  std::int64_t inflight_bytes = 0;   // outstanding at the end of the run
  std::int64_t served_bytes = 0;     // transmitted by the link within the run
  std::int64_t min_rtt_us = 0;
  std::int64_t invocations = 0;
  double duration_s = 0.0;
  std::string program;
};

/// One cwnd decision, reported to an optional observer.
struct Decision {
  std::int64_t now_us = 0;
  int flow = 0;
  bool loss = false;
  std::int64_t cwnd = 0;  // after clamping
  std::int64_t raw = 0;   // program output
  std::int64_t inflight = 0;
  std::int64_t rtt_us = 0;
  std::int64_t srtt_us = 0;
  std::int64_t min_rtt_us = 0;
};
using DecisionObserver = std::function<void(const Decision&)>;

namespace detail {

/// Per-flow sender state, including the sampled history ring.
struct FlowState {
  std::int64_t cwnd = 0;
  std::int64_t prev_cwnd = 0;
  std::int64_t inflight = 0;
  std::int64_t srtt_us = 0;
  std::int64_t rtt_us = 0;
  std::int64_t min_rtt_us = 0;
  std::int64_t delivered = 0;
  std::int64_t delivery_rate = 0;  // bytes per second
  std::int64_t loss_events = 0;
  std::uint64_t next_seq = 0;
  std::uint64_t recovery_seq = 0;
  bool in_recovery = false;

  // Smoothed samples, EWMA gain 1/8, and the losses in the current interval.
  std::int64_t ewma_cwnd = 0, ewma_srtt = 0, ewma_rate = 0;
  std::int64_t interval_losses = 0;
  std::int64_t next_sample_us = 0;
  // history[metric][age], age 0 = most recently completed interval.
  std::array<std::array<std::int64_t, dsl::kHistoryDepth>, 4> history{};
};

inline std::int64_t ewma(std::int64_t s, std::int64_t x) { return s == 0 ? x : s + (x - s) / 8; }

struct Packet {
  int flow;
  std::uint64_t seq;
  std::int64_t sent_us;
  std::int64_t delivered_at_send;
};

enum class EventKind { ack, loss };

struct Event {
  std::int64_t time_us;
  std::uint64_t order;  // FIFO among simultaneous events
  EventKind kind;
  Packet pkt;
  bool operator>(const Event& o) const { return time_us != o.time_us ? time_us > o.time_us : order > o.order; }
};

}  // namespace detail

/// Replays a bulk-transfer flow set over a drop-tail bottleneck, asking the
/// kernel-mode program for a new cwnd on every ACK and once per loss window.
///
/// Packets join the bottleneck queue the moment they are sent. The buffer
/// counts the packet in service. An ACK returns at departure + 2 x delay; a
/// dropped packet is noticed when its ACK would have arrived (no timeouts).
inline CcMetrics run_cc(const dsl::Program& program, const LinkConfig& link,
                        const DecisionObserver& observer = {}) {
  link.validate();
  if (program.mode != dsl::Mode::kernel) throw ConfigError("congestion control programs must be kernel-mode");
  dsl::CompiledProgram compiled(program);

  const std::int64_t mss = link.mss_bytes;
  const std::int64_t bdp = link.bdp_bytes();
  const std::int64_t cwnd_max = 10 * bdp;
  const std::int64_t prop_us = link.one_way_delay_ms * 1000;
  const double bytes_per_us = static_cast<double>(link.rate_bps) / 8.0 / 1e6;
  const auto service_us = static_cast<std::int64_t>(std::llround(static_cast<double>(mss) / bytes_per_us));
  const auto end_us = static_cast<std::int64_t>(std::llround(link.duration_s * 1e6));

  std::vector<detail::FlowState> flows(static_cast<std::size_t>(link.flows));
  std::priority_queue<detail::Event, std::vector<detail::Event>, std::greater<>> events;
  std::uint64_t order = 0;

  // Bottleneck: departure times of packets in the system (queued or in service).
  std::deque<std::int64_t> in_system;
  std::int64_t busy_until = 0;

  CcMetrics m;
  m.program = program.source;
  m.duration_s = link.duration_s;
  std::int64_t packets_sent = 0, packets_dropped = 0;
  OrderStatisticMultiset<std::int64_t> waits;
  double wait_sum = 0.0;

  auto send_one = [&](int f, std::int64_t now) {
    auto& fs = flows[static_cast<std::size_t>(f)];
    detail::Packet pkt{f, fs.next_seq++, now, fs.delivered};
    fs.inflight += mss;
    m.sent_bytes += mss;
    ++packets_sent;
    while (!in_system.empty() && in_system.front() <= now) in_system.pop_front();
    std::int64_t start = std::max(now, busy_until);
    if (static_cast<std::int64_t>(in_system.size() + 1) * mss > link.queue_capacity_bytes) {
      ++packets_dropped;
      events.push({start + service_us + 2 * prop_us, order++, detail::EventKind::loss, pkt});
      return;
    }
    std::int64_t depart = start + service_us;
    busy_until = depart;
    in_system.push_back(depart);
    if (depart <= end_us) m.served_bytes += mss;
    std::int64_t wait = start - now;
    waits.insert(wait);
    wait_sum += static_cast<double>(wait);
    events.push({depart + 2 * prop_us, order++, detail::EventKind::ack, pkt});
  };

  auto pump = [&](int f, std::int64_t now) {
    auto& fs = flows[static_cast<std::size_t>(f)];
    while (fs.inflight + mss <= fs.cwnd) send_one(f, now);
  };

  std::vector<std::int64_t> scalars(dsl::scalar_features(dsl::Mode::kernel).size());
  auto decide = [&](int f, std::int64_t now, std::int64_t acked, bool loss) {
    auto& fs = flows[static_cast<std::size_t>(f)];
    using KF = dsl::KernelFeature;
    auto set = [&](KF k, std::int64_t v) { scalars[static_cast<std::size_t>(k)] = v; };
    set(KF::cwnd, fs.cwnd);
    set(KF::prev_cwnd, fs.prev_cwnd);
    set(KF::srtt_us, fs.srtt_us);
    set(KF::rtt_us, fs.rtt_us);
    set(KF::min_rtt_us, fs.min_rtt_us);
    set(KF::inflight_bytes, fs.inflight);
    set(KF::mss, mss);
    set(KF::acked_bytes, acked);
    set(KF::loss_flag, loss ? 1 : 0);
    set(KF::delivery_rate, fs.delivery_rate);
    set(KF::now_us, now);
    for (std::size_t metric = 0; metric < 4; ++metric)
      for (std::size_t age = 0; age < dsl::kHistoryDepth; ++age)
        scalars[dsl::kernel_history_slot(metric, age)] = fs.history[metric][age];
    std::int64_t raw = compiled.evaluate_int(dsl::EvalContext{dsl::Mode::kernel, scalars});
    ++m.invocations;
    fs.prev_cwnd = fs.cwnd;
    fs.cwnd = std::clamp(raw, mss, cwnd_max);
    fs.ewma_cwnd = detail::ewma(fs.ewma_cwnd, fs.cwnd);
    if (observer)
      observer({now, f, loss, fs.cwnd, raw, fs.inflight, fs.rtt_us, fs.srtt_us, fs.min_rtt_us});
  };

  auto sample_history = [&](detail::FlowState& fs, std::int64_t now) {
    if (now < fs.next_sample_us) return;
    const std::int64_t sample[4] = {fs.ewma_cwnd, fs.ewma_srtt, fs.ewma_rate, fs.interval_losses};
    for (std::size_t metric = 0; metric < 4; ++metric) {
      auto& h = fs.history[metric];
      std::rotate(h.rbegin(), h.rbegin() + 1, h.rend());
      h[0] = sample[metric];
    }
    fs.interval_losses = 0;
    fs.next_sample_us = now + std::max<std::int64_t>(fs.srtt_us, 1);
  };

  Rng rng(link.rng_seed);
  for (int f = 0; f < link.flows; ++f) {
    auto& fs = flows[static_cast<std::size_t>(f)];
    fs.cwnd = fs.prev_cwnd = std::min(10 * mss, cwnd_max);
    // Additional flows start within the first millisecond, in seeded order.
    std::int64_t start = f == 0 ? 0 : static_cast<std::int64_t>(rng.below(1000));
    events.push({start, order++, detail::EventKind::ack, {f, ~std::uint64_t{0}, start, 0}});
  }

  while (!events.empty() && events.top().time_us <= end_us) {
    detail::Event ev = events.top();
    events.pop();
    int f = ev.pkt.flow;
    auto& fs = flows[static_cast<std::size_t>(f)];
    std::int64_t now = ev.time_us;

    if (ev.pkt.seq == ~std::uint64_t{0}) {  // flow start
      pump(f, now);
      continue;
    }

    fs.inflight -= mss;
    if (ev.kind == detail::EventKind::ack) {
      fs.delivered += mss;
      m.delivered_bytes += mss;
      std::int64_t rtt = now - ev.pkt.sent_us;
      fs.rtt_us = rtt;
      fs.min_rtt_us = fs.min_rtt_us == 0 ? rtt : std::min(fs.min_rtt_us, rtt);
      fs.srtt_us = fs.srtt_us == 0 ? rtt : fs.srtt_us + (rtt - fs.srtt_us) / 8;
      if (rtt > 0) fs.delivery_rate = (fs.delivered - ev.pkt.delivered_at_send) * 1'000'000 / rtt;
      fs.ewma_srtt = detail::ewma(fs.ewma_srtt, fs.srtt_us);
      fs.ewma_rate = detail::ewma(fs.ewma_rate, fs.delivery_rate);
      if (fs.in_recovery && ev.pkt.seq >= fs.recovery_seq) fs.in_recovery = false;
      sample_history(fs, now);
      decide(f, now, mss, false);
    } else {
      m.dropped_bytes += mss;
      ++m.retransmits;  // the backlog resends the lost bytes as fresh packets
      ++fs.interval_losses;
      if (!fs.in_recovery || ev.pkt.seq >= fs.recovery_seq) {
        // One reaction per window of data: later losses from the same window are absorbed.
        fs.in_recovery = true;
        fs.recovery_seq = fs.next_seq;
        ++fs.loss_events;
        sample_history(fs, now);
        decide(f, now, 0, true);
      }
    }
    pump(f, now);
  }

  for (const auto& fs : flows) m.inflight_bytes += fs.inflight;
  std::int64_t min_rtt = 0;
  for (const auto& fs : flows)
    if (fs.min_rtt_us > 0) min_rtt = min_rtt == 0 ? fs.min_rtt_us : std::min(min_rtt, fs.min_rtt_us);
  m.min_rtt_us = min_rtt;
  m.utilization = static_cast<double>(m.served_bytes) / (bytes_per_us * static_cast<double>(end_us));
  m.loss_rate = packets_sent ? static_cast<double>(packets_dropped) / static_cast<double>(packets_sent) : 0.0;
  if (!waits.empty()) {
    m.avg_queue_delay_ms = wait_sum / static_cast<double>(waits.size()) / 1000.0;
    m.p95_queue_delay_ms = static_cast<double>(waits.nearest_rank(0.95)) / 1000.0;
  }
  return m;
}

/// Seed controllers for the congestion-control search.
struct CcSeeds {
  dsl::Program aimd;
  dsl::Program fixed_cwnd;
};

inline const char* kAimdSource =
    "let next = cwnd + mss * mss / max(1, cwnd);\n"
    "if (loss_flag != 0) {\n"
    "  next = max(mss, cwnd / 2);\n"
    "}\n"
    "return next;";

/// A constant window of k packets.
inline dsl::Program fixed_cwnd_program(std::int64_t k) {
  return dsl::parse("return " + std::to_string(k) + " * mss;", dsl::Mode::kernel);
}

inline CcSeeds cc_seed_programs(std::int64_t fixed_packets = 2) {
  return {dsl::parse(kAimdSource, dsl::Mode::kernel), fixed_cwnd_program(fixed_packets)};
}

}  // namespace hsynth::cc
