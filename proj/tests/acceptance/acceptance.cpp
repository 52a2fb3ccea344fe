// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails. Tolerances are fixed below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "hsynth/cache/baselines.hpp"
#include "hsynth/cache/oracle.hpp"
#include "hsynth/cache/priority_policy.hpp"
#include "hsynth/cc/cc_sim.hpp"
#include "hsynth/dsl.hpp"
#include "hsynth/search/llm_generator.hpp"
#include "hsynth/search/search.hpp"
#include "support/listing_program.hpp"
#include "support/reference_sim.hpp"
#include "support/stub_llm_server.hpp"
#include "support/traces.hpp"

namespace fs = std::filesystem;
using namespace hsynth;
using namespace hsynth::search;

namespace {

// ---- pinned thresholds ----------------------------------------------------
constexpr int kDefaultRounds = 20;
constexpr int kDefaultCandidates = 25;
constexpr double kStructuralBudgetS = 300.0;       // criterion 1
constexpr int kEquivalenceTraces = 1000;           // criteria 2 and 3
constexpr std::size_t kEquivalenceMaxLen = 1000;
constexpr double kImprovementPp = 0.02;            // criterion 4: fitness = 1 - miss ratio
constexpr int kImprovementRuns = 10;
constexpr int kImprovementMinWins = 8;
constexpr std::uint64_t kCompositeSeed = 2024;
constexpr double kFixedUtilTarget = 0.05;          // criterion 7
constexpr double kFixedUtilTol = 0.005;
constexpr double kAimdMinUtil = 0.80;
constexpr double kAimdMaxAvgQueueMs = 40.0;
constexpr double kCcBudgetS = 30.0;
constexpr int kRobustnessPrograms = 10000;         // criterion 9

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

fs::path scratch_dir() {
  auto p = fs::temp_directory_path() / ("hsynth_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(p);
  return p;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// Every search run in this binary is checked for monotonicity and the seed floor.
struct SearchLog {
  std::vector<SearchResult> runs;
  void add(const SearchResult& r) { runs.push_back(r); }
};
SearchLog g_searches;

/// Interleaved scan and churn phases whose working set moves halfway through.
/// LRU is flushed by the scans; LFU keeps the stale first working set.
Trace composite_trace() {
  std::vector<Phase> phases;
  constexpr int kBlocks = 200;
  for (int b = 0; b < kBlocks; ++b) {
    ObjectId base = b < kBlocks / 2 ? 1 : 100001;
    phases.push_back({Phase::Kind::churn, 50, 100, base});
    phases.push_back({Phase::Kind::scan, 30, 0, 1});
  }
  return synth_scan_churn(phases, kCompositeSeed);
}
constexpr Bytes kCompositeCapacity = 80;

// Records the exemplars handed to the wrapped generator each round.
class RecordingGenerator final : public Generator {
 public:
  explicit RecordingGenerator(Generator& inner) : inner_(inner) {}
  std::vector<Proposal> generate(const GenerationRequest& req, std::size_t k) override {
    std::vector<std::pair<std::string, double>> ex;
    for (const auto& e : req.exemplars) ex.emplace_back(dsl::render(e.program), e.fitness);
    seen[req.round] = ex;
    return inner_.generate(req, k);
  }
  Proposal repair(const GenerationRequest& req, std::size_t i, const std::string& prev, const std::string& fb,
                  int attempt) override {
    return inner_.repair(req, i, prev, fb, attempt);
  }
  std::string label() const override { return inner_.label(); }

  std::map<int, std::vector<std::pair<std::string, double>>> seen;

 private:
  Generator& inner_;
};

// ---- criteria ---------------------------------------------------------------

Outcome criterion1(const fs::path& dir) {
  Trace trace = synth_zipf(100000, 1000, 0.9, SizeDist::uniform(100, 2000), 42);
  Bytes capacity = compute_stats(trace).footprint_bytes / 10;
  CacheEvaluator ev(trace, capacity);
  SearchConfig cfg;
  cfg.db_path = dir / "c1.jsonl";
  cfg.overwrite = true;
  MockGenerator mock;
  RecordingGenerator gen(mock);
  auto t0 = Clock::now();
  auto res = run_search(cfg, gen, ev);
  double elapsed = seconds_since(t0);
  g_searches.add(res);

  auto records = db_load(cfg.db_path).records;
  std::map<int, int> per_round;
  std::int64_t generated = 0;
  for (const auto& r : records) {
    ++per_round[r.round];
    generated += r.round > 0;
  }
  bool shape = generated == kDefaultRounds * kDefaultCandidates && per_round.size() == kDefaultRounds + 1 &&
               per_round[0] == 2;
  for (int r = 1; r <= kDefaultRounds; ++r) shape = shape && per_round[r] == kDefaultCandidates;
  bool seeds = records.size() >= 2 && records[0].round == 0 && records[0].source == kLruSeed &&
               records[1].round == 0 && records[1].source == kLfuSeed;

  // Exemplars for round r must be the global top 2 of rounds < r.
  bool exemplars = gen.seen.size() == kDefaultRounds;
  for (const auto& [round, ex] : gen.seen) {
    std::vector<CandidateRecord> prior;
    for (const auto& r : records)
      if (r.round < round) prior.push_back(r);
    auto top = search::detail::top_k(prior, 2);
    exemplars = exemplars && ex.size() == top.size();
    for (std::size_t i = 0; exemplars && i < top.size(); ++i)
      exemplars = ex[i].first == top[i]->source && ex[i].second == *top[i]->fitness;
  }
  bool fast = elapsed < kStructuralBudgetS;
  return {shape && seeds && exemplars && fast,
          fmt("%lld generated + %d seed records over %zu rounds, top-2 exemplars %s, %.1f s (budget %.0f s)",
              static_cast<long long>(generated), per_round[0], per_round.size() - 1,
              exemplars ? "verified" : "MISMATCH", elapsed, kStructuralBudgetS)};
}

Outcome criterion2() {
  auto lru_prog = dsl::parse(kLruSeed, dsl::Mode::cache);
  auto lfu_prog = dsl::parse(kLfuSeed, dsl::Mode::cache);
  int mismatches = 0;
  for (int i = 0; i < kEquivalenceTraces; ++i) {
    auto seed = static_cast<std::uint64_t>(i) + 1;
    auto trace = testing_traces::small_random(seed, kEquivalenceMaxLen);
    Bytes cap = testing_traces::small_capacity(seed);
    cache::CacheConfig cfg{cap, 1024};
    for (auto [prog, name] : {std::pair{&lru_prog, "lru"}, std::pair{&lfu_prog, "lfu"}}) {
      cache::PriorityPolicy p(*prog);
      auto base = cache::make_policy(name, cap);
      if (!cache::simulate(trace, p, cfg).same_counts(cache::simulate(trace, *base, cfg))) ++mismatches;
    }
  }
  return {mismatches == 0, fmt("%d traces x {LRU, LFU}: %d mismatching reports", kEquivalenceTraces, mismatches)};
}

Outcome criterion3() {
  int mismatches = 0;
  for (int i = 0; i < kEquivalenceTraces; ++i) {
    auto seed = static_cast<std::uint64_t>(i) + 50000;
    auto trace = testing_traces::small_random(seed, kEquivalenceMaxLen);
    Bytes cap = testing_traces::small_capacity(seed);
    cache::CacheConfig cfg{cap, 1024};
    for (auto [score, name] : {std::pair{&ref::fifo_score, "fifo"}, std::pair{&ref::lru_score, "lru"},
                               std::pair{&ref::lfu_score, "lfu"}}) {
      auto fast = cache::make_policy(name, cap);
      auto expected = ref::simulate(trace, cap, *score);
      if (!cache::simulate(trace, *fast, cfg).same_counts(expected)) ++mismatches;
    }
  }
  return {mismatches == 0,
          fmt("%d traces x {FIFO, LRU, LFU} vs naive reference: %d mismatching reports", kEquivalenceTraces,
              mismatches)};
}

dsl::Program g_composite_best;  // reused by criterion 8

Outcome criterion4(const fs::path& dir) {
  Trace trace = composite_trace();
  CacheEvaluator ev(trace, kCompositeCapacity);
  double lru = ev.fitness(dsl::parse(kLruSeed, dsl::Mode::cache));
  double lfu = ev.fitness(dsl::parse(kLfuSeed, dsl::Mode::cache));
  int wins = 0;
  double min_gain = 1.0, max_gain = -1.0;
  double best_fitness = -1.0;
  for (int run = 1; run <= kImprovementRuns; ++run) {
    SearchConfig cfg;
    cfg.db_path = dir / ("c4_" + std::to_string(run) + ".jsonl");
    cfg.overwrite = true;
    cfg.seed = static_cast<std::uint64_t>(run);
    MockGenerator gen;
    auto res = run_search(cfg, gen, ev);
    g_searches.add(res);
    double gain = res.fitness - std::max(lru, lfu);
    wins += gain >= kImprovementPp;
    min_gain = std::min(min_gain, gain);
    max_gain = std::max(max_gain, gain);
    if (res.fitness > best_fitness) {
      best_fitness = res.fitness;
      g_composite_best = res.best;
    }
  }
  return {wins >= kImprovementMinWins,
          fmt("seeds miss LRU %.4f / LFU %.4f; %d of %d runs gained >= %.0f pp (gain range %.2f..%.2f pp)", 1 - lru,
              1 - lfu, wins, kImprovementRuns, kImprovementPp * 100, min_gain * 100, max_gain * 100)};
}

Outcome criterion5(const fs::path& dir) {
  // Add a congestion-control search so both contexts are covered.
  cc::LinkConfig link;
  link.duration_s = 5.0;
  CcEvaluator ev(link);
  SearchConfig cfg;
  cfg.rounds = 5;
  cfg.candidates_per_round = 10;
  cfg.db_path = dir / "c5.jsonl";
  cfg.overwrite = true;
  MockGenerator gen;
  g_searches.add(run_search(cfg, gen, ev));

  int violations = 0;
  for (const auto& r : g_searches.runs) {
    for (std::size_t i = 1; i < r.best_by_round.size(); ++i)
      if (r.best_by_round[i] < r.best_by_round[i - 1]) ++violations;
    if (r.fitness < r.best_by_round.front()) ++violations;
  }
  return {violations == 0 && !g_searches.runs.empty(),
          fmt("%zu search runs: %d monotonicity or seed-floor violations", g_searches.runs.size(), violations)};
}

struct Sample {
  const char* source;
  bool valid;
};

// 25 valid kernel programs, then 25 with fractional literals or unguarded division.
const Sample kKernelCorpus[] = {
    {"return cwnd;", true},
    {"return cwnd + mss;", true},
    {"return max(mss, cwnd / 2);", true},
    {"return cwnd * 2;", true},
    {"let x = cwnd + mss * mss / max(1, cwnd);\nreturn x;", true},
    {"let next = cwnd + mss * mss / max(1, cwnd);\nif (loss_flag != 0) {\n  next = max(mss, cwnd / 2);\n}\nreturn next;",
     true},
    {"return min(cwnd + mss, 10 * mss);", true},
    {"let n = cwnd + mss;\nif (loss_flag != 0) {\n  n = cwnd / 2;\n}\nreturn n;", true},
    {"let r = 0;\nif (srtt_us != 0) {\n  r = cwnd * min_rtt_us / srtt_us;\n}\nreturn max(mss, r);", true},
    {"return delivery_rate * min_rtt_us / 1000000;", true},
    {"return h_cwnd_0 + mss;", true},
    {"return (h_cwnd_0 + h_cwnd_1 + h_cwnd_2) / 3;", true},
    {"return cwnd % 7 + mss;", true},
    {"return cwnd * 1000 / max(1, rtt_us - min_rtt_us);", true},
    {"return srtt_us > 2 * min_rtt_us ? cwnd - mss : cwnd + mss;", true},
    {"return abs(cwnd - prev_cwnd) + mss;", true},
    {"let g = inflight_bytes / max(1, mss);\nreturn g * mss + mss;", true},
    {"return acked_bytes + cwnd;", true},
    {"return loss_flag != 0 && cwnd > 4 * mss ? cwnd * 7 / 8 : cwnd + mss;", true},
    {"let q = 0;\nif (mss != 0) {\n  q = cwnd / mss;\n}\nreturn q * mss + mss;", true},
    {"return now_us / 1000 % 2 == 0 ? cwnd + mss : cwnd;", true},
    {"return h_rate_9 * h_srtt_9 / 1000000 + mss;", true},
    {"return 3 * mss - cwnd / 4;", true},
    {"let a = cwnd;\na += mss;\na -= mss / 2;\nreturn a;", true},
    {"return h_loss_0 > 0 ? max(mss, cwnd / 2) : cwnd + mss * mss / max(1, cwnd);", true},

    {"return cwnd * 0.5;", false},
    {"return cwnd / srtt_us;", false},
    {"return cwnd / rtt_us;", false},
    {"let x = 1.5;\nreturn cwnd * x;", false},
    {"return cwnd / (srtt_us - min_rtt_us);", false},
    {"return cwnd % inflight_bytes;", false},
    {"return delivery_rate / h_rate_0;", false},
    {"return cwnd + 0.1 * mss;", false},
    {"let d = rtt_us;\nreturn cwnd / d;", false},
    {"return 0.75;", false},
    {"return cwnd / (0 - 1 + 1);", false},
    {"let n = cwnd;\nif (loss_flag != 0) {\n  n = cwnd / inflight_bytes;\n}\nreturn n;", false},
    {"return cwnd * 2.0;", false},
    {"return mss / max(0, cwnd);", false},
    {"return cwnd / h_srtt_3;", false},
    {"return cwnd / 0;", false},
    {"return min(cwnd, 3.25 * mss);", false},
    {"let r = cwnd / acked_bytes;\nreturn r;", false},
    {"return loss_flag != 0 ? cwnd / 2.5 : cwnd;", false},
    {"return cwnd / (cwnd - cwnd);", false},
    {"return cwnd * mss / min(1, srtt_us);", false},
    {"let q = 0;\nif (mss != 0) {\n  q = cwnd / srtt_us;\n}\nreturn q;", false},
    {"return 0.5 + cwnd;", false},
    {"return cwnd / abs(prev_cwnd);", false},
    {"let a = cwnd;\na -= 0.25;\nreturn a;", false},
};

// Invalid kernel program first, then a valid one on every repair request.
class TwoShotGenerator final : public Generator {
 public:
  std::vector<Proposal> generate(const GenerationRequest&, std::size_t k) override {
    return std::vector<Proposal>(k, Proposal{"return cwnd / srtt_us;", {}, 0, 0});
  }
  Proposal repair(const GenerationRequest&, std::size_t, const std::string&, const std::string& feedback,
                  int) override {
    std::lock_guard lock(mu_);
    got_feedback = got_feedback || feedback.find("unguarded-division") != std::string::npos;
    return {"let r = cwnd;\nif (srtt_us != 0) {\n  r = cwnd * min_rtt_us / srtt_us + mss;\n}\nreturn r;", {}, 0, 0};
  }
  std::string label() const override { return "two-shot"; }
  bool got_feedback = false;

 private:
  std::mutex mu_;
};

Outcome criterion6(const fs::path& dir) {
  int correct = 0, total = 0, n_valid = 0;
  std::string wrong;
  for (const auto& s : kKernelCorpus) {
    ++total;
    n_valid += s.valid;
    auto rep = dsl::check_source(s.source, dsl::Mode::kernel);
    bool expected_category = s.valid || rep.has(dsl::Category::forbidden_construct) ||
                             rep.has(dsl::Category::unguarded_division);
    if (rep.ok == s.valid && expected_category) ++correct;
    else wrong += std::string(" [") + s.source + "]";
  }
  cc::LinkConfig link;
  link.duration_s = 2.0;
  CcEvaluator ev(link);
  SearchConfig cfg;
  cfg.rounds = 1;
  cfg.candidates_per_round = 1;
  cfg.db_path = dir / "c6.jsonl";
  cfg.overwrite = true;
  TwoShotGenerator gen;
  run_search(cfg, gen, ev);
  auto records = db_load(cfg.db_path).records;
  bool repaired = records.size() == 3 && records[2].status == Status::ok && records[2].repairs == 1 &&
                  gen.got_feedback;
  bool corpus_ok = correct == total && total == 50 && n_valid == 25;
  return {corpus_ok && repaired, fmt("corpus %d/%d classified correctly%s; two-shot repair %s", correct, total,
                                     wrong.c_str(), repaired ? "gives ok record with repairs=1" : "FAILED")};
}

Outcome criterion7() {
  auto t0 = Clock::now();
  cc::LinkConfig link;  // 12 Mbps, 20 ms one-way, 1 x BDP buffer, 60 s
  int violations = 0;
  std::int64_t floor_us = 2 * link.one_way_delay_ms * 1000;
  auto observer = [&](const cc::Decision& d) {
    if (d.rtt_us != 0 && d.rtt_us < floor_us) ++violations;
    if (d.min_rtt_us != 0 && d.min_rtt_us < floor_us) ++violations;
    if (d.cwnd < link.mss_bytes || d.cwnd > 10 * link.bdp_bytes()) ++violations;
  };
  auto conserve = [&](const cc::CcMetrics& m) {
    if (m.delivered_bytes + m.inflight_bytes + m.dropped_bytes != m.sent_bytes) ++violations;
    if (m.min_rtt_us < floor_us) ++violations;
  };
  auto seeds = cc::cc_seed_programs(2);
  auto fixed = cc::run_cc(seeds.fixed_cwnd, link, observer);
  conserve(fixed);
  auto aimd = cc::run_cc(seeds.aimd, link, observer);
  conserve(aimd);
  double elapsed = seconds_since(t0);

  bool fixed_ok = std::abs(fixed.utilization - kFixedUtilTarget) <= kFixedUtilTol;
  bool aimd_ok = aimd.utilization >= kAimdMinUtil && aimd.avg_queue_delay_ms > 0.0 &&
                 aimd.avg_queue_delay_ms <= kAimdMaxAvgQueueMs;
  return {fixed_ok && aimd_ok && violations == 0 && elapsed < kCcBudgetS,
          fmt("fixed 2-packet util %.4f (target %.2f +/- %.3f); AIMD util %.4f, avg queue %.2f ms; "
              "%d invariant violations; %.2f s",
              fixed.utilization, kFixedUtilTarget, kFixedUtilTol, aimd.utilization, aimd.avg_queue_delay_ms,
              violations, elapsed)};
}

Outcome criterion8() {
  // Trace set: several Zipf workloads plus the scan/churn composite.
  std::map<std::string, std::pair<Trace, Bytes>> traces;
  for (int i = 0; i < 4; ++i) {
    auto t = synth_zipf(20000, 500, 0.6 + 0.2 * i, SizeDist::uniform(10, 200), 100 + static_cast<std::uint64_t>(i));
    Bytes cap = compute_stats(t).footprint_bytes / 10;
    traces["zipf_" + std::to_string(i)] = {std::move(t), cap};
  }
  traces["composite"] = {composite_trace(), kCompositeCapacity};

  std::map<std::string, dsl::Program> programs = {
      {"program:listing", dsl::parse(listing_program_source(), dsl::Mode::cache)},
      {"program:searched", g_composite_best}};
  std::set<std::string> synthesized;
  for (const auto& [name, p] : programs) synthesized.insert(name);

  cache::ReportTable table;
  for (const auto& [tname, tc] : traces) {
    const auto& [trace, cap] = tc;
    cache::CacheConfig cfg{cap, 1024};
    for (auto n : cache::kAllBaselines) {
      auto p = cache::make_policy(n, {}, cap);
      table[tname][std::string(cache::to_string(n))] = cache::simulate(trace, *p, cfg);
    }
    for (const auto& [pname, prog] : programs) {
      cache::PriorityPolicy p(prog);
      table[tname][pname] = cache::simulate(trace, p, cfg);
    }
  }
  auto b = cache::oracle_improvement(table, cache::OraclePool::baselines, synthesized);
  auto ps = cache::oracle_improvement(table, cache::OraclePool::baselines_and_synthesized, synthesized);
  bool per_trace = true;
  for (const auto& [t, v] : b.per_trace) per_trace = per_trace && ps.per_trace.at(t) >= v;
  double gap = ps.per_trace.at("composite") - b.per_trace.at("composite");
  return {ps.mean >= b.mean && per_trace && gap > 0.0,
          fmt("mean improvement B-Oracle %.4f, PS-Oracle %.4f over %zu traces; composite gap %.4f (%s vs %s)", b.mean,
              ps.mean, traces.size(), gap, ps.chosen.at("composite").c_str(), b.chosen.at("composite").c_str())};
}

class ArbitrarySource final : public dsl::FeatureSource {
 public:
  explicit ArbitrarySource(std::uint64_t seed) : seed_(seed) {}
  double percentile(dsl::Series s, double p) const override {
    return static_cast<double>((seed_ * 2654435761u + static_cast<std::uint64_t>(s)) % 100003) * p;
  }
  bool history_contains(std::uint64_t id) const override { return ((id ^ seed_) & 1) != 0; }
  std::int64_t history_count(std::uint64_t id) const override { return static_cast<std::int64_t>((id + seed_) % 9); }
  std::int64_t history_age_at_eviction(std::uint64_t) const override {
    return static_cast<std::int64_t>(seed_ % 100000);
  }

 private:
  std::uint64_t seed_;
};

Outcome criterion9() {
  Rng rng(9);
  int traps = 0, not_checked = 0, round_trip_failures = 0;
  for (int i = 0; i < kRobustnessPrograms; ++i) {
    dsl::Mode mode = i % 2 ? dsl::Mode::kernel : dsl::Mode::cache;
    auto p = dsl::random_program(mode, static_cast<std::uint64_t>(i) + 1000);
    if (!dsl::check_program(p).ok) {
      ++not_checked;
      continue;
    }
    auto text = dsl::render(p);
    try {
      if (dsl::render(dsl::parse(text, mode)) != text) ++round_trip_failures;
    } catch (const std::exception&) {
      ++round_trip_failures;
    }
    try {
      dsl::CompiledProgram c(p);
      std::vector<std::int64_t> scalars(dsl::scalar_features(mode).size());
      for (int trial = 0; trial < 3; ++trial) {
        for (auto& x : scalars) {
          switch (rng.below(3)) {
            case 0: x = 0; break;
            case 1: x = static_cast<std::int64_t>(rng.below(1u << 20)); break;
            default: x = static_cast<std::int64_t>(rng.next() >> 1) * (rng.chance(0.5) ? 1 : -1); break;
          }
        }
        ArbitrarySource src(rng.next());
        dsl::EvalContext ctx{mode, scalars, rng.next(), &src};
        if (!std::isfinite(c.evaluate(ctx))) ++traps;
      }
    } catch (const std::exception&) {
      ++traps;
    }
  }
  bool ok = traps == 0 && not_checked == 0 && round_trip_failures == 0;
  return {ok, fmt("%d random programs x 3 contexts: %d traps, %d unchecked, %d round-trip failures",
                  kRobustnessPrograms, traps, not_checked, round_trip_failures)};
}

Outcome criterion10(const fs::path& dir) {
  std::vector<std::string> failures;
  auto config_for = [](const stub::Server& s) {
    LlmConfig c;
    c.base_url = s.base_url();
    c.model = "stub";
    c.api_key = "token";
    c.initial_backoff = std::chrono::milliseconds(1);
    c.max_retries = 3;
    c.timeout = std::chrono::seconds(5);
    return c;
  };
  Trace trace = synth_zipf(2000, 200, 1.0, SizeDist::fixed(1), 5);
  CacheEvaluator cache_ev(trace, 20);
  auto one_round = [&](const std::string& name, int k, int repairs) {
    SearchConfig cfg;
    cfg.rounds = 1;
    cfg.candidates_per_round = k;
    cfg.repair_attempts = repairs;
    cfg.db_path = dir / name;
    cfg.overwrite = true;
    return cfg;
  };

  {  // fixed valid reply: k identical ok candidates, request shape and usage
    stub::Server s([](std::size_t, const std::string&) { return stub::Reply{200, stub::fenced("return count * 3;")}; });
    LlmGenerator gen(config_for(s));
    run_search(one_round("c10a.jsonl", 4, 3), gen, cache_ev);
    auto recs = db_load(dir / "c10a.jsonl").records;
    bool ok = recs.size() == 6;
    for (std::size_t i = 2; ok && i < recs.size(); ++i)
      ok = recs[i].status == Status::ok && recs[i].source == "return count * 3;" && recs[i].prompt_tokens == 10 &&
           recs[i].completion_tokens == 5;
    for (const auto& seen : s.seen())
      ok = ok && seen.path == "/v1/chat/completions" && seen.authorization == "Bearer token" &&
           seen.body["model"] == "stub";
    ok = ok && gen.prompt_tokens() == 40 && gen.completion_tokens() == 20;
    if (!ok) failures.push_back("fixed reply");
  }
  {  // prose without a fence: check_failed with a syntax diagnostic
    stub::Server s([](std::size_t, const std::string&) { return stub::Reply{200, "Use LRU."}; });
    LlmGenerator gen(config_for(s));
    run_search(one_round("c10b.jsonl", 2, 0), gen, cache_ev);
    auto recs = db_load(dir / "c10b.jsonl").records;
    bool ok = recs.size() == 4;
    for (std::size_t i = 2; ok && i < recs.size(); ++i)
      ok = recs[i].status == Status::check_failed && !recs[i].diagnostics.empty() &&
           recs[i].diagnostics[0].category == dsl::Category::syntax;
    if (!ok) failures.push_back("no fence");
  }
  {  // kernel-illegal then fixed on retry: ok, repairs = 1
    stub::Server s([](std::size_t, const std::string& prompt) {
      if (prompt.find("rejected by the checker") != std::string::npos)
        return stub::Reply{200, stub::fenced("return max(mss, cwnd / 2);")};
      return stub::Reply{200, stub::fenced("return cwnd / 1.5;")};
    });
    LlmGenerator gen(config_for(s));
    cc::LinkConfig link;
    link.duration_s = 2.0;
    CcEvaluator cc_ev(link);
    run_search(one_round("c10c.jsonl", 1, 3), gen, cc_ev);
    auto recs = db_load(dir / "c10c.jsonl").records;
    bool ok = recs.size() == 3 && recs[2].status == Status::ok && recs[2].repairs == 1 && recs[2].prompt_tokens == 20;
    if (!ok) failures.push_back("repair");
  }
  {  // transient server errors are retried with backoff
    stub::Server s([](std::size_t n, const std::string&) {
      if (n < 2) return stub::Reply{500, "", 0, 0, "{}"};
      return stub::Reply{200, stub::fenced("return count;")};
    });
    LlmGenerator gen(config_for(s));
    auto c = gen.complete("x");
    if (gen.requests() != 3 || !extract_code_block(c.content)) failures.push_back("retry");
  }
  {  // persistent failure surfaces as GeneratorUnavailable
    stub::Server s([](std::size_t, const std::string&) { return stub::Reply{503, "", 0, 0, "{}"}; });
    LlmGenerator gen(config_for(s));
    bool thrown = false;
    try {
      gen.complete("x");
    } catch (const GeneratorUnavailable&) {
      thrown = true;
    }
    if (!thrown || s.seen().size() != 4) failures.push_back("unavailable");
  }
  std::string detail = "fixed reply, missing fence, repair, retry, unavailable: ";
  if (failures.empty()) detail += "all contract checks hold against a local stub";
  for (const auto& f : failures) detail += f + " FAILED; ";
  return {failures.empty(), detail};
}

}  // namespace

int main() {
  auto dir = scratch_dir();
  std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, [&] { return criterion1(dir); }}, {2, criterion2},
      {3, criterion3},                      {4, [&] { return criterion4(dir); }},
      {5, [&] { return criterion5(dir); }}, {6, [&] { return criterion6(dir); }},
      {7, criterion7},                      {8, criterion8},
      {9, criterion9},                      {10, [&] { return criterion10(dir); }},
  };
  int failed = 0;
  for (auto& [n, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("criterion %2d: %s  %s\n", n, o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  fs::remove_all(dir);
  return failed == 0 ? 0 : 1;
}
