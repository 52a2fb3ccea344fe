#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <exception>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "hsynth/dsl/checker.hpp"
#include "hsynth/dsl/parser.hpp"
#include "hsynth/search/db.hpp"
#include "hsynth/search/evaluator.hpp"
#include "hsynth/search/generator.hpp"

namespace hsynth::search {

class SearchConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when the DB file already exists and neither resume nor overwrite was asked for.
class DbExists : public SearchConfigError {
 public:
  using SearchConfigError::SearchConfigError;
};

struct SearchConfig {
  int rounds = 20;
  int candidates_per_round = 25;
  int exemplar_count = 2;
  int repair_attempts = 3;
  std::vector<dsl::Program> seeds;  // empty: mode defaults
  std::uint64_t seed = 1;
  unsigned jobs = 0;  // 0: hardware concurrency
  std::filesystem::path db_path = "heuristics.jsonl";
  bool resume = false;
  bool overwrite = false;

  void validate() const {
    if (rounds < 1) throw SearchConfigError("rounds must be >= 1");
    if (candidates_per_round < 1) throw SearchConfigError("candidates_per_round must be >= 1");
    if (exemplar_count < 1) throw SearchConfigError("exemplar_count must be >= 1");
    if (repair_attempts < 0) throw SearchConfigError("repair_attempts must be >= 0");
    if (resume && overwrite) throw SearchConfigError("resume and overwrite are mutually exclusive");
  }
};

inline const char* kLruSeed = "return last_access_time;";
inline const char* kLfuSeed = "return count;";

/// LRU and LFU one-liners for caching; the AIMD and fixed-window controllers
/// for congestion control.
inline std::vector<dsl::Program> default_seeds(dsl::Mode mode) {
  if (mode == dsl::Mode::cache) return {dsl::parse(kLruSeed, mode), dsl::parse(kLfuSeed, mode)};
  auto s = cc::cc_seed_programs();
  return {s.aimd, s.fixed_cwnd};
}

struct SearchResult {
  dsl::Program best;
  double fitness = 0.0;
  std::int64_t best_candidate_id = 0;
  std::filesystem::path db_path;
  std::vector<double> best_by_round;  // index 0 is the seed round
  std::int64_t generated = 0;         // non-seed records written by this run
  std::int64_t evaluations = 0;       // fitness evaluations performed by this run
  std::int64_t ok_records = 0;        // across the whole DB
  std::vector<std::string> warnings;
};

/// Progress callback, called after each round is persisted.
using RoundObserver = std::function<void(int round, const std::vector<CandidateRecord>& records, double best)>;

namespace detail {

/// Global top-k ok records: fitness descending, candidate_id ascending.
inline std::vector<const CandidateRecord*> top_k(const std::vector<CandidateRecord>& all, int k) {
  std::vector<const CandidateRecord*> ok;
  for (const auto& r : all)
    if (r.status == Status::ok) ok.push_back(&r);
  std::sort(ok.begin(), ok.end(), [](const CandidateRecord* a, const CandidateRecord* b) {
    if (*a->fitness != *b->fitness) return *a->fitness > *b->fitness;
    return a->candidate_id < b->candidate_id;
  });
  if (ok.size() > static_cast<std::size_t>(k)) ok.resize(static_cast<std::size_t>(k));
  return ok;
}

inline std::optional<dsl::Program> try_parse(const std::string& src, dsl::Mode mode, dsl::CheckReport& report) {
  report = dsl::check_source(src, mode);
  if (!report.ok) return std::nullopt;
  return dsl::parse(src, mode);
}

/// Parallel for over [0, n) with at most `jobs` workers.
template <typename Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  unsigned workers = std::min<unsigned>(jobs, static_cast<unsigned>(n));
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

/// Generate -> check/repair -> evaluate -> persist, for config.rounds rounds.
/// Seeds are scored and stored as round 0. With resume, complete rounds in
/// the DB are kept and the search continues after the last of them.
inline SearchResult run_search(const SearchConfig& config, Generator& generator, const Evaluator& evaluator,
                               const RoundObserver& observer = {}) {
  config.validate();
  const dsl::Mode mode = evaluator.mode();
  std::vector<dsl::Program> seeds = config.seeds.empty() ? default_seeds(mode) : config.seeds;
  for (const auto& s : seeds) {
    if (s.mode != mode) throw SearchConfigError("seed program mode does not match the evaluator");
    auto rep = dsl::check_program(s);
    if (!rep.ok) throw SearchConfigError("seed program fails checking:\n" + rep.str());
  }
  unsigned jobs = config.jobs ? config.jobs : std::max(1u, std::thread::hardware_concurrency());

  SearchResult result;
  result.db_path = config.db_path;
  std::vector<CandidateRecord> all;
  int first_round = 0;

  bool exists = std::filesystem::exists(config.db_path);
  if (exists && !config.resume && !config.overwrite)
    throw DbExists("heuristic DB '" + config.db_path.string() + "' exists; pass resume or overwrite");
  if (exists && config.resume) {
    auto loaded = db_load(config.db_path);
    result.warnings = loaded.warnings;
    // Keep the prefix of complete rounds only.
    std::map<int, std::size_t> per_round;
    for (const auto& r : loaded.records) ++per_round[r.round];
    int complete = -1;
    for (int r = 0;; ++r) {
      std::size_t want = r == 0 ? seeds.size() : static_cast<std::size_t>(config.candidates_per_round);
      auto it = per_round.find(r);
      if (it == per_round.end() || it->second != want) break;
      complete = r;
    }
    for (auto& r : loaded.records)
      if (r.round <= complete) all.push_back(std::move(r));
    if (all.size() != loaded.records.size())
      result.warnings.push_back("discarded " + std::to_string(loaded.records.size() - all.size()) +
                                " records from an incomplete round");
    first_round = complete + 1;
    db_rewrite(config.db_path, all);
  }
  HeuristicDb db(config.db_path, exists && config.resume ? HeuristicDb::Mode::append : HeuristicDb::Mode::truncate);

  std::int64_t next_id = 0;
  for (const auto& r : all) next_id = std::max(next_id, r.candidate_id + 1);

  auto best_fitness = [&]() -> double {
    auto top = detail::top_k(all, 1);
    return top.empty() ? -std::numeric_limits<double>::infinity() : *top.front()->fitness;
  };
  for (int r = 0; r < first_round; ++r) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& rec : all)
      if (rec.round <= r && rec.status == Status::ok) best = std::max(best, *rec.fitness);
    result.best_by_round.push_back(best);
  }

  using Clock = std::chrono::steady_clock;
  auto elapsed_ms = [](Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  };

  if (first_round == 0) {
    std::vector<CandidateRecord> seed_records(seeds.size());
    detail::parallel_for(seeds.size(), jobs, [&](std::size_t i) {
      auto t0 = Clock::now();
      auto& rec = seed_records[i];
      rec.round = 0;
      rec.source = dsl::render(seeds[i]);
      rec.generator = "seed";
      rec.status = Status::ok;
      rec.fitness = evaluator.fitness(seeds[i]);
      rec.wall_ms = elapsed_ms(t0);
    });
    for (auto& rec : seed_records) {
      rec.candidate_id = next_id++;
      db.append(rec);
      all.push_back(rec);
    }
    result.evaluations += static_cast<std::int64_t>(seeds.size());
    result.best_by_round.push_back(best_fitness());
    if (observer) observer(0, seed_records, result.best_by_round.back());
    first_round = 1;
  }

  for (int round = first_round; round <= config.rounds; ++round) {
    GenerationRequest req;
    req.mode = mode;
    req.round = round;
    req.run_seed = config.seed;
    for (const auto* r : detail::top_k(all, config.exemplar_count))
      req.exemplars.push_back({dsl::parse(r->source, mode), *r->fitness});

    auto k = static_cast<std::size_t>(config.candidates_per_round);
    auto proposals = generator.generate(req, k);
    if (proposals.size() != k) throw GeneratorUnavailable("generator returned the wrong number of candidates");

    std::vector<CandidateRecord> records(k);
    std::atomic<std::int64_t> evaluations{0};
    detail::parallel_for(k, jobs, [&](std::size_t i) {
      auto t0 = Clock::now();
      CandidateRecord& rec = records[i];
      rec.round = round;
      rec.generator = generator.label();
      Proposal prop = std::move(proposals[i]);
      dsl::CheckReport report;
      std::optional<dsl::Program> program;
      for (int attempt = 0;; ++attempt) {
        rec.prompt_tokens += prop.prompt_tokens;
        rec.completion_tokens += prop.completion_tokens;
        rec.source = prop.source;
        if (!prop.error.empty()) {
          report = {};
          report.ok = false;
          report.diagnostics.push_back({{1, 1}, dsl::Category::syntax, prop.error});
        } else {
          program = detail::try_parse(prop.source, mode, report);
          if (program) {
            try {
              rec.fitness = evaluator.fitness(*program);
              ++evaluations;
            } catch (const dsl::CheckFailed& e) {
              // Limits enforced at compile time (e.g. local count) surface here.
              report = e.report();
              program.reset();
            }
          }
        }
        if (program) break;
        if (attempt >= config.repair_attempts) break;
        rec.repairs = attempt + 1;
        prop = generator.repair(req, i, prop.source, report.str(), attempt + 1);
      }
      if (program) {
        rec.status = Status::ok;
        rec.diagnostics.clear();
        rec.source = dsl::render(*program);
      } else {
        rec.status = rec.repairs > 0 ? Status::repair_exhausted : Status::check_failed;
        rec.diagnostics = report.diagnostics;
      }
      rec.wall_ms = elapsed_ms(t0);
    });

    for (auto& rec : records) {
      rec.candidate_id = next_id++;
      db.append(rec);
      all.push_back(rec);
    }
    result.generated += static_cast<std::int64_t>(k);
    result.evaluations += evaluations.load();
    result.best_by_round.push_back(best_fitness());
    if (observer) observer(round, records, result.best_by_round.back());
  }

  auto top = detail::top_k(all, 1);
  result.best = dsl::parse(top.front()->source, mode);
  result.fitness = *top.front()->fitness;
  result.best_candidate_id = top.front()->candidate_id;
  for (const auto& r : all) result.ok_records += r.status == Status::ok;
  return result;
}

}  // namespace hsynth::search
