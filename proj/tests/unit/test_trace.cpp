#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "hsynth/trace.hpp"

using namespace hsynth;

namespace {

Trace parse_text(const std::string& s) {
  std::istringstream in(s);
  return parse_trace_stream(in);
}

std::size_t parse_error_line(const std::string& s) {
  try {
    parse_text(s);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

}  // namespace

TEST(ParseTrace, FieldMapping) {
  auto t = parse_text("0,1,100\n1,2,100\n2,1,100");
  Trace expected = {{0, 1, 100}, {1, 2, 100}, {2, 1, 100}};
  EXPECT_EQ(t, expected);
}

TEST(ParseTrace, OptionalHeaderAndCrlf) {
  auto t = parse_text("time,object_id,size\r\n3,9,7\r\n");
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0], (Request{3, 9, 7}));
}

TEST(ParseTrace, ZeroSizeRejected) {
  try {
    parse_text("0,1,0");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
    EXPECT_EQ(e.reason(), "size must be ≥ 1");
  }
}

TEST(ParseTrace, DecreasingTimeRejected) {
  try {
    parse_text("5,1,100\n3,2,100");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.reason(), "time decreased");
  }
}

TEST(ParseTrace, MalformedLinesFailFast) {
  EXPECT_EQ(parse_error_line("0,1,1\nx,2,3"), 2u);
  EXPECT_EQ(parse_error_line("0,1"), 1u);
  EXPECT_EQ(parse_error_line("0,1,1,4"), 1u);
  EXPECT_EQ(parse_error_line("0,-1,1"), 1u);
  EXPECT_EQ(parse_error_line("0,1,1.5"), 1u);
  EXPECT_EQ(parse_error_line("0,1,1\n\n1,1,1"), 2u);
}

TEST(ParseTrace, MissingFileIsIoError) {
  EXPECT_THROW(parse_trace("/nonexistent/trace.csv"), TraceError);
}

TEST(ParseTrace, SerializeRoundTripIsByteExact) {
  auto t = synth_zipf(500, 50, 0.8, SizeDist::uniform(1, 4096), 11);
  std::string csv = trace_to_csv(t);
  EXPECT_EQ(trace_to_csv(parse_text(csv)), csv);
  EXPECT_EQ(trace_to_csv(parse_text(trace_to_csv(t, true))), csv);
}

TEST(ComputeStats, DistinctSizes) {
  auto s = compute_stats({{0, 'A', 100}, {1, 'B', 50}, {2, 'A', 100}});
  EXPECT_EQ(s.footprint_bytes, 150);
  EXPECT_EQ(s.unique_objects, 2);
  EXPECT_EQ(s.request_count, 3);
  EXPECT_EQ(s.time_span, 2);
}

TEST(ComputeStats, SingleRequest) { EXPECT_EQ(compute_stats({{0, 'A', 100}}).footprint_bytes, 100); }

TEST(ComputeStats, LastSizeWins) { EXPECT_EQ(compute_stats({{0, 'A', 100}, {1, 'A', 200}}).footprint_bytes, 200); }

TEST(ComputeStats, EmptyTraceThrows) { EXPECT_THROW(compute_stats({}), EmptyTrace); }

TEST(SynthZipf, Deterministic) {
  auto a = synth_zipf(2000, 100, 1.0, SizeDist::fixed(10), 42);
  auto b = synth_zipf(2000, 100, 1.0, SizeDist::fixed(10), 42);
  EXPECT_EQ(trace_to_csv(a), trace_to_csv(b));
  EXPECT_NE(trace_to_csv(a), trace_to_csv(synth_zipf(2000, 100, 1.0, SizeDist::fixed(10), 43)));
}

TEST(SynthZipf, UniformWhenAlphaZero) {
  // Each bucket of a uniform multinomial(n, 1/k) lies within 3 sigma of n/k.
  const int n = 100000, k = 10;
  auto t = synth_zipf(n, k, 0.0, SizeDist::fixed(1), 5);
  std::map<ObjectId, int> freq;
  for (const auto& r : t) ++freq[r.object_id];
  ASSERT_EQ(freq.size(), static_cast<std::size_t>(k));
  double expected = static_cast<double>(n) / k;
  double sigma = std::sqrt(n * (1.0 / k) * (1.0 - 1.0 / k));
  double chi2 = 0.0;
  for (const auto& [id, c] : freq) {
    EXPECT_LE(std::abs(c - expected), 3 * sigma) << "object " << id;
    chi2 += (c - expected) * (c - expected) / expected;
  }
  // 9 degrees of freedom: P(chi2 > 27.88) = 0.001.
  EXPECT_LT(chi2, 27.88);
}

TEST(SynthZipf, SingleObject) {
  auto t = synth_zipf(5, 1, 1.0, SizeDist::fixed(3), 1);
  ASSERT_EQ(t.size(), 5u);
  for (const auto& r : t) EXPECT_EQ(r.object_id, 1u);
}

TEST(SynthZipf, SkewFavoursLowRanks) {
  auto t = synth_zipf(20000, 1000, 1.2, SizeDist::fixed(1), 3);
  std::map<ObjectId, int> freq;
  for (const auto& r : t) ++freq[r.object_id];
  EXPECT_GT(freq[1], freq[2]);
  EXPECT_GT(freq[2], freq[10]);
  EXPECT_LE(compute_stats(t).unique_objects, 1000);
}

TEST(SynthZipf, UniformSizesStayInRangeAndPerObject) {
  auto t = synth_zipf(3000, 30, 0.5, SizeDist::uniform(10, 20), 9);
  std::map<ObjectId, Bytes> size_of;
  for (const auto& r : t) {
    EXPECT_GE(r.size, 10);
    EXPECT_LE(r.size, 20);
    auto [it, fresh] = size_of.emplace(r.object_id, r.size);
    EXPECT_EQ(it->second, r.size);
  }
}

TEST(SynthZipf, InvalidParameters) {
  EXPECT_THROW(synth_zipf(0, 10, 1.0, SizeDist::fixed(1), 1), std::invalid_argument);
  EXPECT_THROW(synth_zipf(10, 0, 1.0, SizeDist::fixed(1), 1), std::invalid_argument);
  EXPECT_THROW(synth_zipf(10, 10, -1.0, SizeDist::fixed(1), 1), std::invalid_argument);
  EXPECT_THROW(synth_zipf(10, 10, 1.0, SizeDist::uniform(5, 2), 1), std::invalid_argument);
}

TEST(SynthScanChurn, ScanEmitsFreshIds) {
  auto t = synth_scan_churn({{Phase::Kind::scan, 5, 0}}, 1);
  std::set<ObjectId> ids;
  for (const auto& r : t) ids.insert(r.object_id);
  EXPECT_EQ(ids.size(), 5u);
}

TEST(SynthScanChurn, ChurnStaysInWorkingSet) {
  auto t = synth_scan_churn({{Phase::Kind::churn, 100, 4}}, 1);
  std::set<ObjectId> ids;
  for (const auto& r : t) ids.insert(r.object_id);
  EXPECT_LE(ids.size(), 4u);
  for (auto id : ids) EXPECT_LT(id, 5u);
}

TEST(SynthScanChurn, DeterministicAndMonotoneTime) {
  std::vector<Phase> ph = {{Phase::Kind::churn, 50, 8}, {Phase::Kind::scan, 20, 0}, {Phase::Kind::churn, 50, 8, 100}};
  auto a = synth_scan_churn(ph, 77);
  EXPECT_EQ(a, synth_scan_churn(ph, 77));
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].time, static_cast<Time>(i));
}

TEST(SynthScanChurn, InvalidDescriptors) {
  EXPECT_THROW(synth_scan_churn({}, 1), std::invalid_argument);
  EXPECT_THROW(synth_scan_churn({{Phase::Kind::churn, 10, 0}}, 1), std::invalid_argument);
  EXPECT_THROW(synth_scan_churn({{Phase::Kind::scan, 0, 0}}, 1), std::invalid_argument);
}
