#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "hsynth/cache/oracle.hpp"
#include "hsynth/cache/simulator.hpp"
#include "hsynth/cc/cc_sim.hpp"
#include "hsynth/io/csv.hpp"

namespace hsynth::io {

// ---------------------------------------------------------------------------
// MissReport

inline const std::vector<std::string> kMissReportColumns = {
    "trace", "policy", "capacity_bytes", "requests", "object_misses", "byte_misses",
    "object_miss_ratio", "byte_miss_ratio", "evictions"};

inline nlohmann::json to_json(const cache::MissReport& r) {
  return {{"trace", r.trace},
          {"policy", r.policy},
          {"capacity_bytes", r.capacity_bytes},
          {"requests", r.requests},
          {"object_misses", r.object_misses},
          {"byte_misses", r.byte_misses},
          {"object_miss_ratio", r.object_miss_ratio},
          {"byte_miss_ratio", r.byte_miss_ratio},
          {"evictions", r.evictions}};
}

inline cache::MissReport miss_report_from_json(const nlohmann::json& j) {
  cache::MissReport r;
  r.trace = j.at("trace").get<std::string>();
  r.policy = j.at("policy").get<std::string>();
  r.capacity_bytes = j.at("capacity_bytes").get<Bytes>();
  r.requests = j.at("requests").get<std::int64_t>();
  r.object_misses = j.at("object_misses").get<std::int64_t>();
  r.byte_misses = j.at("byte_misses").get<Bytes>();
  r.object_miss_ratio = j.at("object_miss_ratio").get<double>();
  r.byte_miss_ratio = j.at("byte_miss_ratio").get<double>();
  r.evictions = j.at("evictions").get<std::int64_t>();
  return r;
}

inline std::vector<std::string> csv_fields(const cache::MissReport& r) {
  return {r.trace,
          r.policy,
          std::to_string(r.capacity_bytes),
          std::to_string(r.requests),
          std::to_string(r.object_misses),
          std::to_string(r.byte_misses),
          format_double(r.object_miss_ratio),
          format_double(r.byte_miss_ratio),
          std::to_string(r.evictions)};
}

inline std::string miss_reports_csv(const std::vector<cache::MissReport>& reports) {
  std::string out = csv_row(kMissReportColumns) + "\n";
  for (const auto& r : reports) out += csv_row(csv_fields(r)) + "\n";
  return out;
}

inline std::vector<cache::MissReport> load_miss_reports_csv(std::istream& in) {
  std::vector<cache::MissReport> out;
  for (const auto& f : csv_read(in, kMissReportColumns)) {
    cache::MissReport r;
    r.trace = f[0];
    r.policy = f[1];
    r.capacity_bytes = to_int(f[2]);
    r.requests = to_int(f[3]);
    r.object_misses = to_int(f[4]);
    r.byte_misses = to_int(f[5]);
    r.object_miss_ratio = to_double(f[6]);
    r.byte_miss_ratio = to_double(f[7]);
    r.evictions = to_int(f[8]);
    out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// CcMetrics

inline const std::vector<std::string> kCcMetricsColumns = {
    "program", "duration_s", "utilization", "avg_queue_delay_ms", "p95_queue_delay_ms", "loss_rate",
    "retransmits", "sent_bytes", "delivered_bytes", "dropped_bytes", "served_bytes", "min_rtt_us"};

inline nlohmann::json to_json(const cc::CcMetrics& m) {
  return {{"program", m.program},
          {"duration_s", m.duration_s},
          {"utilization", m.utilization},
          {"avg_queue_delay_ms", m.avg_queue_delay_ms},
          {"p95_queue_delay_ms", m.p95_queue_delay_ms},
          {"loss_rate", m.loss_rate},
          {"retransmits", m.retransmits},
          {"sent_bytes", m.sent_bytes},
          {"delivered_bytes", m.delivered_bytes},
          {"dropped_bytes", m.dropped_bytes},
          {"served_bytes", m.served_bytes},
          {"min_rtt_us", m.min_rtt_us}};
}

inline cc::CcMetrics cc_metrics_from_json(const nlohmann::json& j) {
  cc::CcMetrics m;
  m.program = j.at("program").get<std::string>();
  m.duration_s = j.at("duration_s").get<double>();
  m.utilization = j.at("utilization").get<double>();
  m.avg_queue_delay_ms = j.at("avg_queue_delay_ms").get<double>();
  m.p95_queue_delay_ms = j.at("p95_queue_delay_ms").get<double>();
  m.loss_rate = j.at("loss_rate").get<double>();
  m.retransmits = j.at("retransmits").get<std::int64_t>();
  m.sent_bytes = j.at("sent_bytes").get<std::int64_t>();
  m.delivered_bytes = j.at("delivered_bytes").get<std::int64_t>();
  m.dropped_bytes = j.at("dropped_bytes").get<std::int64_t>();
  m.served_bytes = j.at("served_bytes").get<std::int64_t>();
  m.min_rtt_us = j.at("min_rtt_us").get<std::int64_t>();
  return m;
}

inline std::string cc_metrics_csv(const std::vector<cc::CcMetrics>& rows) {
  std::string out = csv_row(kCcMetricsColumns) + "\n";
  for (const auto& m : rows)
    out += csv_row({m.program, format_double(m.duration_s), format_double(m.utilization),
                    format_double(m.avg_queue_delay_ms), format_double(m.p95_queue_delay_ms),
                    format_double(m.loss_rate), std::to_string(m.retransmits), std::to_string(m.sent_bytes),
                    std::to_string(m.delivered_bytes), std::to_string(m.dropped_bytes),
                    std::to_string(m.served_bytes), std::to_string(m.min_rtt_us)}) +
           "\n";
  return out;
}

inline std::vector<cc::CcMetrics> load_cc_metrics_csv(std::istream& in) {
  std::vector<cc::CcMetrics> out;
  for (const auto& f : csv_read(in, kCcMetricsColumns)) {
    cc::CcMetrics m;
    m.program = f[0];
    m.duration_s = to_double(f[1]);
    m.utilization = to_double(f[2]);
    m.avg_queue_delay_ms = to_double(f[3]);
    m.p95_queue_delay_ms = to_double(f[4]);
    m.loss_rate = to_double(f[5]);
    m.retransmits = to_int(f[6]);
    m.sent_bytes = to_int(f[7]);
    m.delivered_bytes = to_int(f[8]);
    m.dropped_bytes = to_int(f[9]);
    m.served_bytes = to_int(f[10]);
    m.min_rtt_us = to_int(f[11]);
    out.push_back(m);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Comparison table

inline const std::vector<std::string> kCompareColumns = {"trace", "policy", "object_miss_ratio",
                                                         "improvement_over_fifo"};
inline constexpr const char* kBaselineOracle = "B-Oracle";
inline constexpr const char* kSynthOracle = "PS-Oracle";

struct CompareRow {
  std::string trace;
  std::string policy;
  double object_miss_ratio = 0.0;
  double improvement_over_fifo = 0.0;

  bool operator==(const CompareRow&) const = default;
};

/// One row per (trace, policy) plus the two oracle rows per trace, sorted by
/// (trace, policy) bytewise. Policies in `synthesized` only enter PS-Oracle.
inline std::vector<CompareRow> compare_rows(const cache::ReportTable& table,
                                            const std::set<std::string>& synthesized) {
  std::vector<CompareRow> rows;
  auto b = cache::oracle_improvement(table, cache::OraclePool::baselines, synthesized);
  auto ps = cache::oracle_improvement(table, cache::OraclePool::baselines_and_synthesized, synthesized);
  for (const auto& [trace, by_policy] : table) {
    const auto& fifo = by_policy.at(cache::kFifoName);
    for (const auto& [policy, rep] : by_policy)
      rows.push_back({trace, policy, rep.object_miss_ratio, cache::improvement_over_fifo(rep, fifo)});
    rows.push_back({trace, kBaselineOracle, by_policy.at(b.chosen.at(trace)).object_miss_ratio, b.per_trace.at(trace)});
    rows.push_back({trace, kSynthOracle, by_policy.at(ps.chosen.at(trace)).object_miss_ratio, ps.per_trace.at(trace)});
  }
  std::sort(rows.begin(), rows.end(), [](const CompareRow& x, const CompareRow& y) {
    return std::tie(x.trace, x.policy) < std::tie(y.trace, y.policy);
  });
  return rows;
}

inline std::string compare_csv(const std::vector<CompareRow>& rows) {
  std::string out = csv_row(kCompareColumns) + "\n";
  for (const auto& r : rows)
    out += csv_row({r.trace, r.policy, format_double(r.object_miss_ratio), format_double(r.improvement_over_fifo)}) +
           "\n";
  return out;
}

inline std::vector<CompareRow> load_compare_csv(std::istream& in) {
  std::vector<CompareRow> out;
  for (const auto& f : csv_read(in, kCompareColumns)) out.push_back({f[0], f[1], to_double(f[2]), to_double(f[3])});
  return out;
}

// ---------------------------------------------------------------------------
// Files

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw FormatError("write failed on '" + path.string() + "'");
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace hsynth::io
