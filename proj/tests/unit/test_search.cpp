#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>

#include "hsynth/cache/baselines.hpp"
#include "hsynth/search/search.hpp"

namespace fs = std::filesystem;
using namespace hsynth;
using namespace hsynth::search;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static std::atomic<int> counter{0};
    path = fs::temp_directory_path() /
           ("hsynth_search_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  fs::path operator/(const std::string& name) const { return path / name; }
};

Trace zipf_trace() { return synth_zipf(5000, 500, 1.0, SizeDist::fixed(1), 7); }

double baseline_fitness(const Trace& t, const std::string& name, Bytes capacity) {
  auto p = cache::make_policy(name, capacity);
  return 1.0 - cache::simulate(t, *p, {capacity, 1024}).object_miss_ratio;
}

SearchConfig small_config(const fs::path& db, int rounds = 3, int k = 6) {
  SearchConfig c;
  c.rounds = rounds;
  c.candidates_per_round = k;
  c.db_path = db;
  c.jobs = 4;
  c.seed = 11;
  return c;
}

// Drops wall-clock fields so records can be compared across runs.
std::vector<CandidateRecord> stable(std::vector<CandidateRecord> rs) {
  for (auto& r : rs) r.wall_ms = 0.0;
  return rs;
}

}  // namespace

TEST(SearchDb, AppendThenLoadPreservesOrder) {
  TempDir dir;
  auto path = dir / "db.jsonl";
  std::vector<CandidateRecord> written;
  {
    HeuristicDb db(path, HeuristicDb::Mode::truncate);
    for (int i = 0; i < 3; ++i) {
      CandidateRecord r;
      r.candidate_id = i;
      r.round = i;
      r.source = "return count;";
      r.generator = "mock";
      r.fitness = 0.125 * i;
      if (i == 2) {
        r.status = Status::check_failed;
        r.fitness.reset();
        r.diagnostics.push_back({{1, 8}, dsl::Category::syntax, "expected ';'"});
      }
      db.append(r);
      written.push_back(r);
    }
  }
  auto loaded = db_load(path);
  EXPECT_TRUE(loaded.warnings.empty());
  EXPECT_EQ(loaded.records, written);
}

TEST(SearchDb, TruncatedFinalLineDroppedWithWarning) {
  TempDir dir;
  auto path = dir / "db.jsonl";
  {
    HeuristicDb db(path, HeuristicDb::Mode::truncate);
    for (int i = 0; i < 3; ++i) {
      CandidateRecord r;
      r.candidate_id = i;
      r.source = "return count;";
      r.fitness = 0.5;
      db.append(r);
    }
  }
  auto size = fs::file_size(path);
  fs::resize_file(path, size - 20);
  auto loaded = db_load(path);
  EXPECT_EQ(loaded.records.size(), 2u);
  EXPECT_EQ(loaded.warnings.size(), 1u);
}

TEST(SearchDb, CorruptMiddleLineIsAnError) {
  TempDir dir;
  auto path = dir / "db.jsonl";
  std::ofstream(path) << "{not json}\n{\"also\": \"bad\"}\n";
  EXPECT_THROW(db_load(path), DbError);
}

TEST(SearchDb, FitnessPresentExactlyWhenOk) {
  CandidateRecord r;
  r.source = "return count;";
  auto j = to_json(r);
  EXPECT_THROW(record_from_json(j), std::invalid_argument);  // ok without fitness
  r.status = Status::check_failed;
  r.fitness = 0.3;
  EXPECT_THROW(record_from_json(to_json(r)), std::invalid_argument);
}

TEST(SearchConfigCheck, RejectsInvalidValues) {
  SearchConfig c;
  c.rounds = 0;
  EXPECT_THROW(c.validate(), SearchConfigError);
  c = {};
  c.candidates_per_round = 0;
  EXPECT_THROW(c.validate(), SearchConfigError);
  c = {};
  c.exemplar_count = 0;
  EXPECT_THROW(c.validate(), SearchConfigError);
  c = {};
  c.resume = c.overwrite = true;
  EXPECT_THROW(c.validate(), SearchConfigError);
}

TEST(SearchConfigCheck, SeedsMustPassChecker) {
  TempDir dir;
  auto cfg = small_config(dir / "db.jsonl", 1, 1);
  cfg.seeds = {dsl::parse("return mystery;", dsl::Mode::cache)};
  CacheEvaluator ev(zipf_trace(), 50);
  MockGenerator gen;
  EXPECT_THROW(run_search(cfg, gen, ev), SearchConfigError);
}

TEST(MockGenerate, ReproducibleAndChecked) {
  std::vector<Exemplar> ex = {{dsl::parse(kLruSeed, dsl::Mode::cache), 0.5}, {dsl::parse(kLfuSeed, dsl::Mode::cache), 0.6}};
  auto a = mock_generate(ex, 25, 1234);
  auto b = mock_generate(ex, 25, 1234);
  ASSERT_EQ(a.size(), 25u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(dsl::render(a[i]), dsl::render(b[i]));
    EXPECT_TRUE(dsl::check_program(a[i]).ok) << dsl::render(a[i]);
  }
  auto c = mock_generate(ex, 25, 1235);
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += dsl::render(a[i]) == dsl::render(c[i]);
  EXPECT_LT(same, a.size());
}

TEST(MockGenerate, KernelModeOutputsPassChecker) {
  auto seeds = default_seeds(dsl::Mode::kernel);
  std::vector<Exemplar> ex = {{seeds[0], 0.9}, {seeds[1], 0.1}};
  for (const auto& p : mock_generate(ex, 200, 99, dsl::Mode::kernel)) {
    EXPECT_EQ(p.mode, dsl::Mode::kernel);
    EXPECT_TRUE(dsl::check_program(p).ok) << dsl::render(p);
  }
}

TEST(MockGenerate, SelfCrossoverWithOneExemplar) {
  auto p = dsl::parse("let s = count * 2;\nreturn s - last_access_time;", dsl::Mode::cache);
  std::vector<Exemplar> ex = {{p, 0.5}};
  for (std::uint64_t seed = 0; seed < 50; ++seed)
    EXPECT_EQ(dsl::render(dsl::crossover(p, p, seed)), dsl::render(p));
  // Every draw is still produced and checked.
  auto out = mock_generate(ex, 100, 5);
  EXPECT_EQ(out.size(), 100u);
  for (const auto& q : out) EXPECT_TRUE(dsl::check_program(q).ok);
}

TEST(Search, DefaultShapeGives500GeneratedPlusTwoSeeds) {
  TempDir dir;
  SearchConfig cfg;  // 20 rounds x 25 candidates, top-2 exemplars
  cfg.db_path = dir / "db.jsonl";
  cfg.jobs = 4;
  CacheEvaluator ev(synth_zipf(2000, 300, 1.0, SizeDist::fixed(1), 3), 30);
  MockGenerator gen;
  auto res = run_search(cfg, gen, ev);
  auto db = db_load(cfg.db_path);
  ASSERT_EQ(db.records.size(), 502u);
  EXPECT_EQ(res.generated, 500);
  std::map<int, int> per_round;
  for (const auto& r : db.records) ++per_round[r.round];
  EXPECT_EQ(per_round[0], 2);
  for (int r = 1; r <= 20; ++r) EXPECT_EQ(per_round[r], 25) << r;
  EXPECT_EQ(db.records[0].source, "return last_access_time;");
  EXPECT_EQ(db.records[1].source, "return count;");
  EXPECT_EQ(db.records[0].generator, "seed");
  std::set<std::int64_t> ids;
  for (const auto& r : db.records) ids.insert(r.candidate_id);
  EXPECT_EQ(ids.size(), 502u);
}

TEST(Search, LfuSeedWinsRoundZeroOnSkewedZipf) {
  auto trace = zipf_trace();
  Bytes cap = 50;
  double lru = baseline_fitness(trace, "lru", cap);
  double lfu = baseline_fitness(trace, "lfu", cap);
  ASSERT_GT(lfu, lru);  // precondition established by the baselines themselves

  TempDir dir;
  auto cfg = small_config(dir / "db.jsonl", 5, 10);
  CacheEvaluator ev(trace, cap);
  MockGenerator gen;
  auto res = run_search(cfg, gen, ev);
  ASSERT_EQ(res.best_by_round.size(), 6u);
  EXPECT_EQ(res.best_by_round[0], lfu);
  EXPECT_GE(res.fitness, lfu);
}

TEST(Search, MonotoneAndAboveSeedFloorAcrossSeeds) {
  auto trace = zipf_trace();
  CacheEvaluator ev(trace, 40);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    TempDir dir;
    auto cfg = small_config(dir / "db.jsonl", 4, 8);
    cfg.seed = seed;
    MockGenerator gen;
    auto res = run_search(cfg, gen, ev);
    for (std::size_t i = 1; i < res.best_by_round.size(); ++i)
      EXPECT_GE(res.best_by_round[i], res.best_by_round[i - 1]);
    EXPECT_GE(res.fitness, res.best_by_round[0]);
    EXPECT_EQ(res.fitness, res.best_by_round.back());
  }
}

TEST(Search, BitIdenticalAcrossRunsAndJobCounts) {
  auto trace = zipf_trace();
  CacheEvaluator ev(trace, 40);
  std::vector<std::vector<CandidateRecord>> runs;
  for (unsigned jobs : {1u, 8u}) {
    TempDir dir;
    auto cfg = small_config(dir / "db.jsonl", 4, 8);
    cfg.jobs = jobs;
    MockGenerator gen;
    run_search(cfg, gen, ev);
    runs.push_back(stable(db_load(cfg.db_path).records));
  }
  EXPECT_EQ(runs[0], runs[1]);
}

TEST(Search, OkRecordsEqualEvaluations) {
  auto trace = zipf_trace();
  TempDir dir;
  auto cfg = small_config(dir / "db.jsonl", 5, 10);
  CacheEvaluator ev(trace, 40);
  MockGenerator gen;
  auto res = run_search(cfg, gen, ev);
  auto db = db_load(cfg.db_path);
  std::int64_t ok = 0;
  for (const auto& r : db.records) {
    ok += r.status == Status::ok;
    EXPECT_EQ(r.fitness.has_value(), r.status == Status::ok);
  }
  EXPECT_EQ(ok, res.evaluations);
  EXPECT_EQ(ok, res.ok_records);
}

TEST(Search, RefusesExistingDbUnlessResumeOrOverwrite) {
  auto trace = zipf_trace();
  CacheEvaluator ev(trace, 40);
  TempDir dir;
  auto cfg = small_config(dir / "db.jsonl", 2, 4);
  MockGenerator gen;
  run_search(cfg, gen, ev);
  EXPECT_THROW(run_search(cfg, gen, ev), DbExists);

  auto over = cfg;
  over.overwrite = true;
  run_search(over, gen, ev);
  EXPECT_EQ(db_load(cfg.db_path).records.size(), 2u + 8u);

  // Resuming a finished search with more rounds only adds the new rounds.
  auto more = cfg;
  more.resume = true;
  more.rounds = 3;
  auto res = run_search(more, gen, ev);
  EXPECT_EQ(db_load(cfg.db_path).records.size(), 2u + 12u);
  EXPECT_EQ(res.generated, 4);
}

TEST(Search, ResumeAfterCrashMatchesUninterruptedRun) {
  auto trace = zipf_trace();
  CacheEvaluator ev(trace, 40);
  TempDir dir;
  auto full_cfg = small_config(dir / "full.jsonl", 4, 6);
  MockGenerator gen;
  run_search(full_cfg, gen, ev);
  auto full = db_load(full_cfg.db_path).records;

  // Simulate a crash in round 3: rounds 0-2 complete, two round-3 records
  // written, then a torn line.
  auto crash_path = dir / "crash.jsonl";
  {
    std::ofstream out(crash_path);
    std::size_t keep = 2 + 2 * 6 + 2;
    for (std::size_t i = 0; i < keep; ++i) out << to_json(full[i]).dump() << '\n';
    out << to_json(full[keep]).dump().substr(0, 30);
  }
  auto cfg = small_config(crash_path, 4, 6);
  cfg.resume = true;
  auto res = run_search(cfg, gen, ev);
  EXPECT_FALSE(res.warnings.empty());
  EXPECT_EQ(stable(db_load(crash_path).records), stable(full));
}

namespace {

// Invalid program first, then a valid one for every repair request.
class TwoShotGenerator final : public Generator {
 public:
  std::vector<Proposal> generate(const GenerationRequest&, std::size_t k) override {
    return std::vector<Proposal>(k, Proposal{"let x = 1.5;\nreturn cwnd * x;", {}, 0, 0});
  }
  Proposal repair(const GenerationRequest&, std::size_t, const std::string& previous, const std::string& feedback,
                  int attempt) override {
    std::lock_guard lock(mu);
    feedbacks.push_back(feedback);
    previous_sources.push_back(previous);
    attempts.push_back(attempt);
    return {"return cwnd + mss;", {}, 0, 0};
  }
  std::string label() const override { return "two-shot"; }

  std::mutex mu;
  std::vector<std::string> feedbacks;
  std::vector<std::string> previous_sources;
  std::vector<int> attempts;
};

class AlwaysBadGenerator final : public Generator {
 public:
  std::vector<Proposal> generate(const GenerationRequest&, std::size_t k) override {
    return std::vector<Proposal>(k, Proposal{"return cwnd / rtt_us;", {}, 0, 0});
  }
  Proposal repair(const GenerationRequest&, std::size_t, const std::string&, const std::string&, int) override {
    return {"return cwnd +;", {}, 0, 0};
  }
  std::string label() const override { return "bad"; }
};

cc::LinkConfig short_link() {
  cc::LinkConfig l;
  l.duration_s = 2.0;
  return l;
}

}  // namespace

TEST(SearchRepair, TwoShotGeneratorBecomesOkAfterOneRepair) {
  TempDir dir;
  auto cfg = small_config(dir / "db.jsonl", 1, 3);
  CcEvaluator ev(short_link());
  TwoShotGenerator gen;
  run_search(cfg, gen, ev);
  auto db = db_load(cfg.db_path).records;
  ASSERT_EQ(db.size(), 2u + 3u);
  for (std::size_t i = 2; i < db.size(); ++i) {
    EXPECT_EQ(db[i].status, Status::ok);
    EXPECT_EQ(db[i].repairs, 1);
    EXPECT_EQ(db[i].source, "return cwnd + mss;");
    EXPECT_TRUE(db[i].diagnostics.empty());
  }
  ASSERT_EQ(gen.feedbacks.size(), 3u);
  for (const auto& f : gen.feedbacks) EXPECT_NE(f.find("forbidden-construct"), std::string::npos) << f;
  for (int a : gen.attempts) EXPECT_EQ(a, 1);
}

TEST(SearchRepair, ExhaustedRepairsAreRecordedWithDiagnostics) {
  TempDir dir;
  auto cfg = small_config(dir / "db.jsonl", 1, 2);
  cfg.repair_attempts = 2;
  CcEvaluator ev(short_link());
  AlwaysBadGenerator gen;
  auto res = run_search(cfg, gen, ev);
  auto db = db_load(cfg.db_path).records;
  ASSERT_EQ(db.size(), 4u);
  for (std::size_t i = 2; i < 4; ++i) {
    EXPECT_EQ(db[i].status, Status::repair_exhausted);
    EXPECT_EQ(db[i].repairs, 2);
    EXPECT_FALSE(db[i].fitness);
    ASSERT_FALSE(db[i].diagnostics.empty());
    EXPECT_EQ(db[i].diagnostics[0].category, dsl::Category::syntax);
  }
  // Seeds remain the best.
  EXPECT_EQ(res.best_candidate_id, 0);
}

TEST(SearchRepair, NoRepairBudgetMeansCheckFailed) {
  TempDir dir;
  auto cfg = small_config(dir / "db.jsonl", 1, 2);
  cfg.repair_attempts = 0;
  CcEvaluator ev(short_link());
  AlwaysBadGenerator gen;
  run_search(cfg, gen, ev);
  auto db = db_load(cfg.db_path).records;
  for (std::size_t i = 2; i < db.size(); ++i) {
    EXPECT_EQ(db[i].status, Status::check_failed);
    ASSERT_FALSE(db[i].diagnostics.empty());
    EXPECT_EQ(db[i].diagnostics[0].category, dsl::Category::unguarded_division);
  }
}

TEST(SearchExemplars, GlobalTopKWithIdTieBreak) {
  std::vector<CandidateRecord> all(5);
  double f[] = {0.3, 0.7, 0.7, 0.1, 0.5};
  for (int i = 0; i < 5; ++i) {
    all[i].candidate_id = 10 - i;
    all[i].fitness = f[i];
    all[i].round = i;
  }
  all[3].status = Status::check_failed;
  all[3].fitness.reset();
  auto top = search::detail::top_k(all, 3);
  ASSERT_EQ(top.size(), 3u);
  EXPECT_EQ(top[0]->candidate_id, 8);
  EXPECT_EQ(top[1]->candidate_id, 9);
  EXPECT_EQ(top[2]->candidate_id, 6);
}

TEST(SearchCc, MockSearchOverKernelPrograms) {
  TempDir dir;
  auto cfg = small_config(dir / "db.jsonl", 2, 4);
  CcEvaluator ev(short_link());
  MockGenerator gen;
  auto res = run_search(cfg, gen, ev);
  EXPECT_EQ(res.best.mode, dsl::Mode::kernel);
  EXPECT_GE(res.fitness, res.best_by_round[0]);
  EXPECT_EQ(db_load(cfg.db_path).records.size(), 2u + 8u);
}

TEST(SearchEvaluator, CacheFitnessInUnitInterval) {
  CacheEvaluator ev(zipf_trace(), 40);
  for (const auto& p : mock_generate({}, 50, 3)) {
    double f = ev.fitness(p);
    EXPECT_GE(f, 0.0);
    EXPECT_LE(f, 1.0);
  }
  EXPECT_THROW(CacheEvaluator({}, 10), EvaluatorError);
  EXPECT_THROW(CacheEvaluator(zipf_trace(), 0), EvaluatorError);
  cc::LinkConfig bad;
  bad.duration_s = 0;
  EXPECT_THROW(CcEvaluator{bad}, EvaluatorError);
}

TEST(SearchEvaluator, CcFitnessFormula) {
  cc::CcMetrics m;
  m.utilization = 0.9;
  m.avg_queue_delay_ms = 20.0;
  EXPECT_DOUBLE_EQ(cc_fitness(m), 0.9 - 0.5 * 0.2);
  EXPECT_DOUBLE_EQ(cc_fitness(m, 1.0, 40.0), 0.4);
}
