#pragma once

// Search runs described by a flat key = value file. Recognized keys:
//
//   context            cache | cc
//   rounds, candidates_per_round, exemplar_count, repair_attempts, seed, jobs
//   seeds              default, or a comma list of lru, lfu, aimd, fixed:<packets>, or .dsl paths
//   generator          mock | llm
//   db                 heuristic DB path (default heuristics.jsonl)
//   prompt_template    template file for the llm generator
//   cache context:     trace (CSV path), capacity (bytes or N%), history_capacity,
//                      or synth_requests, synth_objects, synth_alpha, synth_size_min,
//                      synth_size_max, synth_seed for a generated Zipf trace
//   cc context:        rate_bps, one_way_delay_ms, queue_capacity_bytes, mss_bytes,
//                      duration_s, flows, link_seed, lambda, delay_budget_ms
//
// Relative paths resolve against the config file's directory.

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "hsynth/io/csv.hpp"
#include "hsynth/io/kv_config.hpp"
#include "hsynth/search/evaluator.hpp"
#include "hsynth/search/search.hpp"
#include "hsynth/trace.hpp"

namespace hsynth::search {

struct SynthSpec {
  std::int64_t requests = 100000;
  std::int64_t objects = 1000;
  double alpha = 1.0;
  Bytes size_min = 1;
  Bytes size_max = 1;
  std::uint64_t seed = 42;
};

struct SearchFile {
  SearchConfig search;
  dsl::Mode mode = dsl::Mode::cache;
  std::string generator = "mock";
  std::optional<std::filesystem::path> prompt_template;
  std::vector<std::string> seed_specs;

  std::optional<std::filesystem::path> trace_path;
  SynthSpec synth;
  std::string capacity = "10%";
  std::size_t history_capacity = 1024;

  cc::LinkConfig link;
  double lambda = 0.5;
  double delay_budget_ms = 100.0;
};

/// "lru", "lfu", "aimd", "fixed:<k>" or a path to a DSL file.
inline dsl::Program seed_program(const std::string& spec, dsl::Mode mode, const std::filesystem::path& base) {
  if (spec == "lru" && mode == dsl::Mode::cache) return dsl::parse(kLruSeed, mode);
  if (spec == "lfu" && mode == dsl::Mode::cache) return dsl::parse(kLfuSeed, mode);
  if (spec == "aimd" && mode == dsl::Mode::kernel) return cc::cc_seed_programs().aimd;
  if (spec.rfind("fixed:", 0) == 0 && mode == dsl::Mode::kernel) {
    std::int64_t k = 0;
    try {
      k = io::to_int(spec.substr(6));
    } catch (const std::exception&) {
      throw io::ConfigError("bad seed '" + spec + "'");
    }
    if (k < 1) throw io::ConfigError("fixed seed needs at least one packet");
    return cc::fixed_cwnd_program(k);
  }
  std::filesystem::path p(spec);
  if (!p.is_absolute()) p = base / p;
  if (p.extension() != ".dsl") throw io::ConfigError("unknown seed '" + spec + "' for this context");
  std::ifstream in(p);
  if (!in) throw io::ConfigError("cannot read seed program '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return dsl::parse(ss.str(), mode);
  } catch (const std::exception& e) {
    throw io::ConfigError("seed program '" + p.string() + "': " + e.what());
  }
}

inline SearchFile parse_search_file(const io::KvConfig& kv, const std::filesystem::path& base = ".") {
  SearchFile f;
  std::string ctx = kv.get_or("context", "cache");
  if (ctx == "cache") f.mode = dsl::Mode::cache;
  else if (ctx == "cc") f.mode = dsl::Mode::kernel;
  else throw io::ConfigError("context must be cache or cc, got '" + ctx + "'");

  auto& s = f.search;
  s.rounds = static_cast<int>(kv.get_int("rounds", s.rounds));
  s.candidates_per_round = static_cast<int>(kv.get_int("candidates_per_round", s.candidates_per_round));
  s.exemplar_count = static_cast<int>(kv.get_int("exemplar_count", s.exemplar_count));
  s.repair_attempts = static_cast<int>(kv.get_int("repair_attempts", s.repair_attempts));
  auto seed = kv.get_int("seed", 1);
  if (seed < 0) throw io::ConfigError("seed must be >= 0");
  s.seed = static_cast<std::uint64_t>(seed);
  auto jobs = kv.get_int("jobs", 0);
  if (jobs < 0) throw io::ConfigError("jobs must be >= 0");
  s.jobs = static_cast<unsigned>(jobs);
  s.db_path = kv.get_path("db").value_or(base / "heuristics.jsonl");

  f.generator = kv.get_or("generator", "mock");
  if (f.generator != "mock" && f.generator != "llm") throw io::ConfigError("generator must be mock or llm");
  f.prompt_template = kv.get_path("prompt_template");

  std::string seeds = kv.get_or("seeds", "default");
  if (seeds != "default") {
    std::stringstream ss(seeds);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = io::trim(item);
      if (item.empty()) continue;
      f.seed_specs.push_back(item);
      s.seeds.push_back(seed_program(item, f.mode, base));
    }
    if (s.seeds.empty()) throw io::ConfigError("seeds list is empty");
  }

  if (f.mode == dsl::Mode::cache) {
    f.trace_path = kv.get_path("trace");
    f.synth.requests = kv.get_int("synth_requests", f.synth.requests);
    f.synth.objects = kv.get_int("synth_objects", f.synth.objects);
    f.synth.alpha = kv.get_double("synth_alpha", f.synth.alpha);
    f.synth.size_min = kv.get_int("synth_size_min", f.synth.size_min);
    f.synth.size_max = kv.get_int("synth_size_max", f.synth.size_max);
    f.synth.seed = static_cast<std::uint64_t>(kv.get_int("synth_seed", static_cast<std::int64_t>(f.synth.seed)));
    f.capacity = kv.get_or("capacity", f.capacity);
    auto hc = kv.get_int("history_capacity", 1024);
    if (hc < 1) throw io::ConfigError("history_capacity must be >= 1");
    f.history_capacity = static_cast<std::size_t>(hc);
  } else {
    auto& l = f.link;
    l.rate_bps = kv.get_int("rate_bps", l.rate_bps);
    l.one_way_delay_ms = kv.get_int("one_way_delay_ms", l.one_way_delay_ms);
    l.mss_bytes = kv.get_int("mss_bytes", l.mss_bytes);
    l.queue_capacity_bytes = kv.get_int("queue_capacity_bytes", l.bdp_bytes());
    l.duration_s = kv.get_double("duration_s", l.duration_s);
    l.flows = static_cast<int>(kv.get_int("flows", l.flows));
    l.rng_seed = static_cast<std::uint64_t>(kv.get_int("link_seed", static_cast<std::int64_t>(l.rng_seed)));
    f.lambda = kv.get_double("lambda", f.lambda);
    f.delay_budget_ms = kv.get_double("delay_budget_ms", f.delay_budget_ms);
  }

  auto unused = kv.unused();
  if (!unused.empty()) {
    std::string keys;
    for (const auto& k : unused) keys += (keys.empty() ? "" : ", ") + k;
    throw io::ConfigError("unknown or misplaced config keys: " + keys);
  }
  try {
    s.validate();
  } catch (const SearchConfigError& e) {
    throw io::ConfigError(e.what());
  }
  return f;
}

inline SearchFile load_search_file(const std::filesystem::path& path) {
  auto kv = io::KvConfig::load(path);
  return parse_search_file(kv, path.parent_path().empty() ? std::filesystem::path(".") : path.parent_path());
}

/// The evaluation trace: the configured file or the synthetic Zipf workload.
inline Trace load_context_trace(const SearchFile& f) {
  if (f.trace_path) return parse_trace(f.trace_path->string());
  const auto& z = f.synth;
  return synth_zipf(z.requests, z.objects, z.alpha, z.size_min == z.size_max ? SizeDist::fixed(z.size_min)
                                                                             : SizeDist::uniform(z.size_min, z.size_max),
                    z.seed);
}

struct BuiltEvaluator {
  std::unique_ptr<Evaluator> evaluator;
  Bytes capacity_bytes = 0;  // cache context only
};

inline BuiltEvaluator build_evaluator(const SearchFile& f) {
  BuiltEvaluator out;
  if (f.mode == dsl::Mode::kernel) {
    out.evaluator = std::make_unique<CcEvaluator>(f.link, f.lambda, f.delay_budget_ms);
    return out;
  }
  Trace trace;
  try {
    trace = load_context_trace(f);
  } catch (const std::exception& e) {
    throw EvaluatorError(e.what());
  }
  Bytes footprint = compute_stats(trace).footprint_bytes;
  try {
    out.capacity_bytes = io::parse_capacity(f.capacity, footprint);
  } catch (const io::ConfigError& e) {
    throw EvaluatorError(e.what());
  }
  out.evaluator = std::make_unique<CacheEvaluator>(std::move(trace), out.capacity_bytes, f.history_capacity);
  return out;
}

/// Fully resolved settings, for the run manifest.
inline nlohmann::json resolved_json(const SearchFile& f, Bytes capacity_bytes) {
  const auto& s = f.search;
  nlohmann::json j = {{"context", f.mode == dsl::Mode::cache ? "cache" : "cc"},
                      {"rounds", s.rounds},
                      {"candidates_per_round", s.candidates_per_round},
                      {"exemplar_count", s.exemplar_count},
                      {"repair_attempts", s.repair_attempts},
                      {"seed", s.seed},
                      {"jobs", s.jobs},
                      {"db", s.db_path.string()},
                      {"generator", f.generator},
                      {"resume", s.resume},
                      {"overwrite", s.overwrite}};
  nlohmann::json seeds = nlohmann::json::array();
  for (const auto& p : s.seeds.empty() ? default_seeds(f.mode) : s.seeds) seeds.push_back(dsl::render(p));
  j["seeds"] = seeds;
  if (f.prompt_template) j["prompt_template"] = f.prompt_template->string();
  if (f.mode == dsl::Mode::cache) {
    if (f.trace_path) {
      j["trace"] = f.trace_path->string();
    } else {
      j["synth"] = {{"requests", f.synth.requests}, {"objects", f.synth.objects}, {"alpha", f.synth.alpha},
                    {"size_min", f.synth.size_min}, {"size_max", f.synth.size_max}, {"seed", f.synth.seed}};
    }
    j["capacity"] = f.capacity;
    j["capacity_bytes"] = capacity_bytes;
    j["history_capacity"] = f.history_capacity;
  } else {
    const auto& l = f.link;
    j["link"] = {{"rate_bps", l.rate_bps},       {"one_way_delay_ms", l.one_way_delay_ms},
                 {"queue_capacity_bytes", l.queue_capacity_bytes}, {"mss_bytes", l.mss_bytes},
                 {"duration_s", l.duration_s},   {"flows", l.flows},
                 {"link_seed", l.rng_seed}};
    j["lambda"] = f.lambda;
    j["delay_budget_ms"] = f.delay_budget_ms;
  }
  return j;
}

}  // namespace hsynth::search
