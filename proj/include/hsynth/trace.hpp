#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace hsynth {

using Time = std::int64_t;
using ObjectId = std::uint64_t;
using Bytes = std::int64_t;

/// One trace record. Times are logical units; only differences carry meaning.
struct Request {
  Time time = 0;
  ObjectId object_id = 0;
  Bytes size = 1;

  friend bool operator==(const Request&, const Request&) = default;
};

using Trace = std::vector<Request>;

struct TraceStats {
  std::int64_t request_count = 0;
  std::int64_t unique_objects = 0;
  Bytes footprint_bytes = 0;
  Time time_span = 0;
};

class TraceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public TraceError {
 public:
  ParseError(std::size_t line, std::string reason)
      : TraceError("line " + std::to_string(line) + ": " + reason),
        line_(line),
        reason_(std::move(reason)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::size_t line_;
  std::string reason_;
};

class EmptyTrace : public TraceError {
 public:
  EmptyTrace() : TraceError("trace is empty") {}
};

namespace detail {

template <typename Int>
bool parse_int(std::string_view field, Int& out) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r'))
    field.remove_suffix(1);
  if (field.empty()) return false;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  return ec == std::errc{} && ptr == field.data() + field.size();
}

}  // namespace detail

inline constexpr std::string_view kTraceHeader = "time,object_id,size";

/// Parses `time,object_id,size` lines. The first line may be the header.
/// Any malformed line rejects the whole input.
inline Trace parse_trace_stream(std::istream& in) {
  Trace out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1 && line == kTraceHeader) continue;
    if (line.empty()) throw ParseError(line_no, "empty line");

    std::string_view view(line);
    auto c1 = view.find(',');
    auto c2 = c1 == std::string_view::npos ? c1 : view.find(',', c1 + 1);
    if (c2 == std::string_view::npos || view.find(',', c2 + 1) != std::string_view::npos)
      throw ParseError(line_no, "expected 3 comma-separated fields");

    Request r;
    if (!detail::parse_int(view.substr(0, c1), r.time) || r.time < 0)
      throw ParseError(line_no, "time must be a non-negative integer");
    if (!detail::parse_int(view.substr(c1 + 1, c2 - c1 - 1), r.object_id))
      throw ParseError(line_no, "object_id must be an unsigned integer");
    if (!detail::parse_int(view.substr(c2 + 1), r.size))
      throw ParseError(line_no, "size must be an integer");
    if (r.size < 1) throw ParseError(line_no, "size must be ≥ 1");
    if (!out.empty() && r.time < out.back().time) throw ParseError(line_no, "time decreased");
    out.push_back(r);
  }
  return out;
}

inline Trace parse_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw TraceError("cannot open trace file: " + path);
  return parse_trace_stream(in);
}

inline void write_trace(std::ostream& out, const Trace& trace, bool header = false) {
  if (header) out << kTraceHeader << '\n';
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& r = trace[i];
    out << r.time << ',' << r.object_id << ',' << r.size;
    if (i + 1 < trace.size()) out << '\n';
  }
}

inline std::string trace_to_csv(const Trace& trace, bool header = false) {
  std::ostringstream os;
  write_trace(os, trace, header);
  return os.str();
}

inline void save_trace(const std::string& path, const Trace& trace, bool header = false) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw TraceError("cannot write trace file: " + path);
  write_trace(out, trace, header);
  out << '\n';
}

/// Footprint counts each distinct id once, at its last observed size.
inline TraceStats compute_stats(const Trace& trace) {
  if (trace.empty()) throw EmptyTrace();
  std::unordered_map<ObjectId, Bytes> last_size;
  last_size.reserve(trace.size());
  for (const auto& r : trace) last_size[r.object_id] = r.size;

  TraceStats s;
  s.request_count = static_cast<std::int64_t>(trace.size());
  s.unique_objects = static_cast<std::int64_t>(last_size.size());
  for (const auto& [id, size] : last_size) s.footprint_bytes += size;
  s.time_span = trace.back().time - trace.front().time;
  return s;
}

// ---------------------------------------------------------------------------
// Synthetic workloads

struct SizeDist {
  enum class Kind { fixed, uniform };
  Kind kind = Kind::fixed;
  Bytes lo = 1;
  Bytes hi = 1;

  static SizeDist fixed(Bytes b) { return {Kind::fixed, b, b}; }
  static SizeDist uniform(Bytes lo, Bytes hi) { return {Kind::uniform, lo, hi}; }
};

namespace detail {

// Platform-stable draws: mt19937_64 is fully specified, the std distributions are not.
inline double unit_draw(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t n) { return rng() % n; }

inline Bytes draw_size(std::mt19937_64& rng, const SizeDist& dist) {
  if (dist.kind == SizeDist::Kind::fixed) return dist.lo;
  return dist.lo + static_cast<Bytes>(bounded_draw(rng, static_cast<std::uint64_t>(dist.hi - dist.lo + 1)));
}

}  // namespace detail

/// Object i in [1, n_objects] is drawn with probability proportional to i^-alpha.
/// Each object keeps one size for the whole trace.
inline Trace synth_zipf(std::int64_t n_requests, std::int64_t n_objects, double alpha,
                        SizeDist size_dist, std::uint64_t seed) {
  if (n_requests < 1 || n_objects < 1) throw std::invalid_argument("synth_zipf: counts must be >= 1");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("synth_zipf: alpha must be >= 0");
  if (size_dist.lo < 1 || size_dist.hi < size_dist.lo)
    throw std::invalid_argument("synth_zipf: invalid size distribution");

  std::vector<double> cdf(static_cast<std::size_t>(n_objects));
  double acc = 0.0;
  for (std::int64_t i = 0; i < n_objects; ++i) {
    acc += std::pow(static_cast<double>(i + 1), -alpha);
    cdf[static_cast<std::size_t>(i)] = acc;
  }

  std::mt19937_64 rng(seed);
  std::vector<Bytes> sizes(static_cast<std::size_t>(n_objects));
  for (auto& s : sizes) s = detail::draw_size(rng, size_dist);

  Trace out;
  out.reserve(static_cast<std::size_t>(n_requests));
  for (std::int64_t t = 0; t < n_requests; ++t) {
    double u = detail::unit_draw(rng) * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    auto idx = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cdf.begin(), n_objects - 1));
    out.push_back({t, static_cast<ObjectId>(idx + 1), sizes[idx]});
  }
  return out;
}

struct Phase {
  enum class Kind { scan, churn };
  Kind kind = Kind::churn;
  std::int64_t length = 0;
  std::int64_t working_set = 0;  // churn only
  ObjectId base = 1;             // churn ids are [base, base + working_set)
};

inline constexpr ObjectId kScanIdBase = ObjectId{1} << 40;

/// Scan phases emit ids never seen before; churn phases draw uniformly from
/// their working set. Time equals the request index.
inline Trace synth_scan_churn(const std::vector<Phase>& phases, std::uint64_t seed,
                              Bytes object_size = 1) {
  if (phases.empty()) throw std::invalid_argument("synth_scan_churn: at least one phase required");
  if (object_size < 1) throw std::invalid_argument("synth_scan_churn: object size must be >= 1");
  for (const auto& p : phases) {
    if (p.length < 1) throw std::invalid_argument("synth_scan_churn: phase length must be >= 1");
    if (p.kind == Phase::Kind::churn && p.working_set < 1)
      throw std::invalid_argument("synth_scan_churn: churn working set must be >= 1");
    if (p.kind == Phase::Kind::churn && p.base + static_cast<ObjectId>(p.working_set) > kScanIdBase)
      throw std::invalid_argument("synth_scan_churn: churn ids overlap the scan id range");
  }

  std::mt19937_64 rng(seed);
  ObjectId next_scan = kScanIdBase;
  Trace out;
  Time t = 0;
  for (const auto& p : phases) {
    for (std::int64_t i = 0; i < p.length; ++i, ++t) {
      ObjectId id = p.kind == Phase::Kind::scan
                        ? next_scan++
                        : p.base + detail::bounded_draw(rng, static_cast<std::uint64_t>(p.working_set));
      out.push_back({t, id, object_size});
    }
  }
  return out;
}

}  // namespace hsynth
