// hsynth command-line tool: simulate, compare, search, check, ccsim, synth-trace.
//
// Exit codes: 0 success, 1 domain failure (check failed, no ok candidates,
// generator failure), 2 usage or configuration error.

#include <glob.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hsynth/cache/baselines.hpp"
#include "hsynth/cache/oracle.hpp"
#include "hsynth/cache/priority_policy.hpp"
#include "hsynth/cache/simulator.hpp"
#include "hsynth/cc/cc_sim.hpp"
#include "hsynth/dsl.hpp"
#include "hsynth/io/kv_config.hpp"
#include "hsynth/io/manifest.hpp"
#include "hsynth/io/reports.hpp"
#include "hsynth/search/config_file.hpp"
#include "hsynth/search/llm_generator.hpp"
#include "hsynth/search/search.hpp"
#include "hsynth/trace.hpp"
#include "hsynth/version.hpp"

namespace fs = std::filesystem;
using namespace hsynth;
using json = nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kDomainFailure = 1;
constexpr int kUsage = 2;

/// Raised for bad flag combinations or values CLI11 cannot validate itself.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Raised when a program fails checking; diagnostics were already printed.
struct ProgramRejected : std::runtime_error {
  using std::runtime_error::runtime_error;
};

using Clock = std::chrono::steady_clock;

/// `--out results/run.json` and `--out results/run` both name the stem results/run.
fs::path stem_of(const std::string& out) {
  fs::path p(out);
  if (p.extension() == ".json" || p.extension() == ".csv") p.replace_extension();
  return p;
}

fs::path with_suffix(const fs::path& stem, const std::string& suffix) { return fs::path(stem.string() + suffix); }

void finish_manifest(io::RunManifest& m, const fs::path& stem, Clock::time_point t0, int exit_code) {
  m.wall_time_s = std::chrono::duration<double>(Clock::now() - t0).count();
  m.exit_code = exit_code;
  io::write_manifest(with_suffix(stem, ".manifest.json"), m);
}

void print_diagnostics(const std::string& label, const dsl::CheckReport& rep) {
  for (const auto& d : rep.diagnostics) std::cerr << label << ":" << d.str() << "\n";
}

/// Reads, parses and checks a DSL file. Throws ProgramRejected after printing
/// the diagnostics.
dsl::Program load_program(const fs::path& path, dsl::Mode mode) {
  std::string src;
  try {
    src = io::read_text(path);
  } catch (const io::FormatError& e) {
    throw UsageError(e.what());
  }
  auto rep = dsl::check_source(src, mode);
  if (!rep.ok) {
    print_diagnostics(path.string(), rep);
    throw ProgramRejected("program '" + path.string() + "' failed checking");
  }
  return dsl::parse(src, mode);
}

Trace load_trace(const fs::path& path) {
  try {
    return parse_trace(path.string());
  } catch (const TraceError& e) {
    throw UsageError(e.what());
  }
}

Bytes resolve_capacity(const std::string& spec, const Trace& trace) {
  try {
    return io::parse_capacity(spec, compute_stats(trace).footprint_bytes);
  } catch (const io::ConfigError& e) {
    throw UsageError(e.what());
  }
}

constexpr std::string_view kProgramPrefix = "program:";

bool is_program_spec(const std::string& spec) { return spec.rfind(kProgramPrefix, 0) == 0; }

/// A baseline spec ("lru", "s3fifo:small=0.1") or "program:<path>".
struct PolicyChoice {
  std::string label;
  std::optional<cache::PolicySpec> baseline;
  std::optional<dsl::Program> program;
  fs::path program_path;
};

PolicyChoice resolve_policy(const std::string& spec) {
  PolicyChoice c;
  if (is_program_spec(spec)) {
    c.program_path = spec.substr(kProgramPrefix.size());
    c.program = load_program(c.program_path, dsl::Mode::cache);
    c.label = "program:" + c.program_path.filename().string();
    return c;
  }
  try {
    c.baseline = cache::parse_policy_spec(spec);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  c.label = spec;
  return c;
}

cache::MissReport run_policy(const PolicyChoice& c, const Trace& trace, Bytes capacity, std::size_t history) {
  std::unique_ptr<cache::EvictionPolicy> policy =
      c.program ? cache::make_priority_policy(*c.program, history, c.label)
                : cache::make_policy(c.baseline->name, c.baseline->params, capacity);
  auto rep = cache::simulate(trace, *policy, {capacity, history});
  rep.policy = c.label;
  return rep;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = io::trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<std::string> expand_globs(const std::vector<std::string>& patterns) {
  std::set<std::string> out;
  for (const auto& pat : patterns) {
    glob_t g{};
    int rc = ::glob(pat.c_str(), 0, nullptr, &g);
    if (rc == 0)
      for (std::size_t i = 0; i < g.gl_pathc; ++i) out.insert(g.gl_pathv[i]);
    globfree(&g);
    if (rc == GLOB_NOMATCH) throw UsageError("no trace files match '" + pat + "'");
    if (rc != 0 && rc != GLOB_NOMATCH) throw UsageError("cannot expand '" + pat + "'");
  }
  return {out.begin(), out.end()};
}

json link_json(const cc::LinkConfig& l) {
  return {{"rate_bps", l.rate_bps},       {"one_way_delay_ms", l.one_way_delay_ms},
          {"queue_capacity_bytes", l.queue_capacity_bytes}, {"mss_bytes", l.mss_bytes},
          {"duration_s", l.duration_s},   {"flows", l.flows},
          {"rng_seed", l.rng_seed}};
}

// ---------------------------------------------------------------------------
// simulate

struct SimulateArgs {
  std::string trace;
  std::string policy;
  std::string capacity;
  std::size_t history = 1024;
  std::string out = "simulate";
};

int cmd_simulate(const SimulateArgs& a) {
  auto t0 = Clock::now();
  const std::string started = io::utc_now_iso8601();
  Trace trace = load_trace(a.trace);
  Bytes capacity = resolve_capacity(a.capacity, trace);
  PolicyChoice choice = resolve_policy(a.policy);
  auto rep = run_policy(choice, trace, capacity, a.history);
  rep.trace = fs::path(a.trace).filename().string();

  fs::path stem = stem_of(a.out);
  io::RunManifest m;
  m.subcommand = "simulate";
  m.started_at = started;
  m.config = {{"trace", a.trace},       {"policy", a.policy},           {"capacity", a.capacity},
              {"capacity_bytes", capacity}, {"footprint_bytes", compute_stats(trace).footprint_bytes},
              {"history_capacity", a.history}};
  m.add_input("trace", a.trace);
  if (choice.program) m.add_input("program", choice.program_path);
  io::write_text(with_suffix(stem, ".json"), io::to_json(rep).dump(2) + "\n");
  io::write_text(with_suffix(stem, ".csv"), io::miss_reports_csv({rep}));
  m.add_output(with_suffix(stem, ".json"));
  m.add_output(with_suffix(stem, ".csv"));
  finish_manifest(m, stem, t0, kOk);

  std::printf("%s on %s (capacity %lld bytes): object miss ratio %.6f, byte miss ratio %.6f\n", rep.policy.c_str(),
              rep.trace.c_str(), static_cast<long long>(capacity), rep.object_miss_ratio, rep.byte_miss_ratio);
  return kOk;
}

// ---------------------------------------------------------------------------
// compare

struct CompareArgs {
  std::vector<std::string> traces;
  std::string policies;
  std::vector<std::string> programs;
  std::string capacity = "10%";
  std::size_t history = 1024;
  unsigned jobs = 0;
  std::string out = "compare";
};

int cmd_compare(const CompareArgs& a) {
  auto t0 = Clock::now();
  const std::string started = io::utc_now_iso8601();
  auto files = expand_globs(a.traces);

  std::vector<PolicyChoice> pool;
  std::set<std::string> labels;
  auto add = [&](PolicyChoice c) {
    if (!labels.insert(c.label).second) throw UsageError("policy '" + c.label + "' listed twice");
    pool.push_back(std::move(c));
  };
  std::vector<std::string> baseline_specs;
  if (a.policies.empty()) {
    for (auto n : cache::kAllBaselines) baseline_specs.emplace_back(cache::to_string(n));
  } else {
    baseline_specs = split_list(a.policies);
  }
  if (std::find(baseline_specs.begin(), baseline_specs.end(), cache::kFifoName) == baseline_specs.end())
    baseline_specs.insert(baseline_specs.begin(), cache::kFifoName);
  for (const auto& s : baseline_specs) {
    if (is_program_spec(s)) throw UsageError("pass programs with --program, not --policies");
    add(resolve_policy(s));
  }
  std::set<std::string> synthesized;
  for (const auto& p : a.programs) {
    auto c = resolve_policy(std::string(kProgramPrefix) + p);
    synthesized.insert(c.label);
    add(std::move(c));
  }

  std::vector<Trace> traces;
  std::vector<Bytes> capacities;
  for (const auto& f : files) {
    traces.push_back(load_trace(f));
    capacities.push_back(resolve_capacity(a.capacity, traces.back()));
  }

  std::size_t n = files.size() * pool.size();
  std::vector<cache::MissReport> reports(n);
  unsigned jobs = a.jobs ? a.jobs : std::max(1u, std::thread::hardware_concurrency());
  search::detail::parallel_for(n, jobs, [&](std::size_t i) {
    std::size_t t = i / pool.size(), p = i % pool.size();
    reports[i] = run_policy(pool[p], traces[t], capacities[t], a.history);
    reports[i].trace = files[t];
  });

  cache::ReportTable table;
  for (const auto& r : reports) table[r.trace][r.policy] = r;
  auto rows = io::compare_rows(table, synthesized);
  auto b = cache::oracle_improvement(table, cache::OraclePool::baselines, synthesized);
  auto ps = cache::oracle_improvement(table, cache::OraclePool::baselines_and_synthesized, synthesized);

  fs::path stem = stem_of(a.out);
  json reps = json::array();
  for (const auto& r : reports) reps.push_back(io::to_json(r));
  json summary = {{"reports", reps},
                  {"b_oracle_mean_improvement", b.mean},
                  {"ps_oracle_mean_improvement", ps.mean},
                  {"b_oracle_choice", b.chosen},
                  {"ps_oracle_choice", ps.chosen}};
  io::write_text(with_suffix(stem, ".csv"), io::compare_csv(rows));
  io::write_text(with_suffix(stem, ".json"), summary.dump(2) + "\n");

  io::RunManifest m;
  m.subcommand = "compare";
  m.started_at = started;
  json caps = json::object();
  for (std::size_t t = 0; t < files.size(); ++t) caps[files[t]] = capacities[t];
  m.config = {{"traces", a.traces},        {"policies", baseline_specs}, {"programs", a.programs},
              {"capacity", a.capacity},    {"capacity_bytes", caps},    {"history_capacity", a.history},
              {"jobs", jobs}};
  for (const auto& f : files) m.add_input("trace", f);
  for (const auto& c : pool)
    if (c.program) m.add_input("program", c.program_path);
  m.add_output(with_suffix(stem, ".csv"));
  m.add_output(with_suffix(stem, ".json"));
  finish_manifest(m, stem, t0, kOk);

  std::printf("%zu traces x %zu policies\n", files.size(), pool.size());
  std::printf("B-Oracle mean improvement over FIFO:  %.6f\n", b.mean);
  std::printf("PS-Oracle mean improvement over FIFO: %.6f\n", ps.mean);
  return kOk;
}

// ---------------------------------------------------------------------------
// search

struct SearchArgs {
  std::string config;
  std::string generator;
  std::string db;
  std::string out;
  bool resume = false;
  bool overwrite = false;
  int jobs = -1;
  bool quiet = false;
};

int cmd_search(const SearchArgs& a) {
  auto t0 = Clock::now();
  const std::string started = io::utc_now_iso8601();
  search::SearchFile f;
  try {
    f = search::load_search_file(a.config);
  } catch (const io::ConfigError& e) {
    throw UsageError(e.what());
  }
  if (!a.generator.empty()) f.generator = a.generator;
  if (!a.db.empty()) f.search.db_path = a.db;
  if (a.jobs >= 0) f.search.jobs = static_cast<unsigned>(a.jobs);
  f.search.resume = a.resume;
  f.search.overwrite = a.overwrite;

  // Everything that can be wrong with the setup is reported before round 0.
  std::unique_ptr<search::Generator> gen;
  if (f.generator == "llm") {
    try {
      auto prompt = f.prompt_template ? search::PromptTemplate::load(*f.prompt_template) : search::PromptTemplate();
      gen = std::make_unique<search::LlmGenerator>(search::LlmConfig::from_env(), std::move(prompt));
    } catch (const std::exception& e) {
      throw UsageError(std::string("llm generator: ") + e.what());
    }
  } else {
    gen = std::make_unique<search::MockGenerator>();
  }
  search::BuiltEvaluator built;
  try {
    built = search::build_evaluator(f);
  } catch (const search::EvaluatorError& e) {
    throw UsageError(e.what());
  }
  if (fs::exists(f.search.db_path) && !f.search.resume && !f.search.overwrite)
    throw UsageError("heuristic DB '" + f.search.db_path.string() + "' exists; pass --resume or --overwrite");
  if (f.search.db_path.has_parent_path()) fs::create_directories(f.search.db_path.parent_path());

  std::fprintf(stderr, "search: %s, generator %s\n", built.evaluator->describe().c_str(), gen->label().c_str());
  auto observer = [&](int round, const std::vector<search::CandidateRecord>& recs, double best) {
    if (a.quiet) return;
    int ok = 0;
    for (const auto& r : recs) ok += r.status == search::Status::ok;
    std::fprintf(stderr, "round %2d: %d/%zu ok, best fitness %.6f\n", round, ok, recs.size(), best);
  };
  search::SearchResult res;
  try {
    res = search::run_search(f.search, *gen, *built.evaluator, observer);
  } catch (const search::SearchConfigError& e) {
    throw UsageError(e.what());
  }

  std::int64_t generated_ok = 0;
  for (const auto& r : search::db_load(f.search.db_path).records)
    generated_ok += r.round > 0 && r.status == search::Status::ok;

  fs::path stem = a.out.empty() ? fs::path(f.search.db_path).replace_extension() : stem_of(a.out);
  auto best_path = with_suffix(stem, ".best.dsl");
  io::write_text(best_path, dsl::render(res.best) + "\n");
  json summary = {{"best_fitness", res.fitness},
                  {"best_candidate_id", res.best_candidate_id},
                  {"best_source", dsl::render(res.best)},
                  {"best_by_round", res.best_by_round},
                  {"generated", res.generated},
                  {"evaluations", res.evaluations},
                  {"ok_records", res.ok_records},
                  {"generated_ok", generated_ok},
                  {"warnings", res.warnings}};
  if (auto* llm = dynamic_cast<search::LlmGenerator*>(gen.get())) {
    summary["prompt_tokens"] = llm->prompt_tokens();
    summary["completion_tokens"] = llm->completion_tokens();
    summary["requests"] = llm->requests();
  }
  io::write_text(with_suffix(stem, ".json"), summary.dump(2) + "\n");

  int code = generated_ok > 0 ? kOk : kDomainFailure;
  io::RunManifest m;
  m.subcommand = "search";
  m.started_at = started;
  m.config = search::resolved_json(f, built.capacity_bytes);
  m.add_input("config", a.config);
  if (f.trace_path) m.add_input("trace", *f.trace_path);
  if (f.prompt_template) m.add_input("prompt_template", *f.prompt_template);
  m.add_output(f.search.db_path);
  m.add_output(best_path);
  m.add_output(with_suffix(stem, ".json"));
  finish_manifest(m, stem, t0, code);

  for (const auto& w : res.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  std::printf("best fitness: %.6f (candidate %lld)\n", res.fitness, static_cast<long long>(res.best_candidate_id));
  std::printf("%s\n", dsl::render(res.best).c_str());
  if (code != kOk) std::fprintf(stderr, "search produced no ok candidates\n");
  return code;
}

// ---------------------------------------------------------------------------
// check

struct CheckArgs {
  std::string program;
  std::string mode = "cache";
  std::string out;
};

int cmd_check(const CheckArgs& a) {
  auto t0 = Clock::now();
  const std::string started = io::utc_now_iso8601();
  dsl::Mode mode = a.mode == "kernel" ? dsl::Mode::kernel : dsl::Mode::cache;
  std::string src;
  try {
    src = io::read_text(a.program);
  } catch (const io::FormatError& e) {
    throw UsageError(e.what());
  }
  auto rep = dsl::check_source(src, mode);
  if (rep.ok) std::printf("%s: ok\n", a.program.c_str());
  else
    for (const auto& d : rep.diagnostics) std::printf("%s:%s\n", a.program.c_str(), d.str().c_str());
  int code = rep.ok ? kOk : kDomainFailure;

  if (!a.out.empty()) {
    fs::path stem = stem_of(a.out);
    json diags = json::array();
    for (const auto& d : rep.diagnostics)
      diags.push_back({{"line", d.loc.line},
                       {"column", d.loc.column},
                       {"category", std::string(dsl::to_string(d.category))},
                       {"message", d.message}});
    io::write_text(with_suffix(stem, ".json"), json{{"ok", rep.ok}, {"diagnostics", diags}}.dump(2) + "\n");
    io::RunManifest m;
    m.subcommand = "check";
    m.started_at = started;
    m.config = {{"program", a.program}, {"mode", a.mode}};
    m.add_input("program", a.program);
    m.add_output(with_suffix(stem, ".json"));
    finish_manifest(m, stem, t0, code);
  }
  return code;
}

// ---------------------------------------------------------------------------
// ccsim

struct CcsimArgs {
  std::string program;
  cc::LinkConfig link;
  std::optional<std::int64_t> queue_bytes;
  double lambda = 0.5;
  double budget_ms = 100.0;
  std::string out = "ccsim";
};

int cmd_ccsim(CcsimArgs a) {
  auto t0 = Clock::now();
  const std::string started = io::utc_now_iso8601();
  a.link.queue_capacity_bytes = a.queue_bytes.value_or(a.link.bdp_bytes());
  try {
    a.link.validate();
  } catch (const cc::ConfigError& e) {
    throw UsageError(e.what());
  }
  auto program = load_program(a.program, dsl::Mode::kernel);
  auto metrics = cc::run_cc(program, a.link);
  metrics.program = fs::path(a.program).filename().string();
  double fitness = search::cc_fitness(metrics, a.lambda, a.budget_ms);

  fs::path stem = stem_of(a.out);
  json j = io::to_json(metrics);
  j["fitness"] = fitness;
  io::write_text(with_suffix(stem, ".json"), j.dump(2) + "\n");
  io::write_text(with_suffix(stem, ".csv"), io::cc_metrics_csv({metrics}));

  io::RunManifest m;
  m.subcommand = "ccsim";
  m.started_at = started;
  m.config = {{"program", a.program}, {"link", link_json(a.link)}, {"lambda", a.lambda}, {"delay_budget_ms", a.budget_ms}};
  m.add_input("program", a.program);
  m.add_output(with_suffix(stem, ".json"));
  m.add_output(with_suffix(stem, ".csv"));
  finish_manifest(m, stem, t0, kOk);

  std::printf("utilization %.4f, avg queue delay %.2f ms, p95 %.2f ms, loss rate %.5f, fitness %.6f\n",
              metrics.utilization, metrics.avg_queue_delay_ms, metrics.p95_queue_delay_ms, metrics.loss_rate, fitness);
  return kOk;
}

// ---------------------------------------------------------------------------
// synth-trace

struct SynthArgs {
  std::string kind = "zipf";
  std::int64_t requests = 100000;
  std::int64_t objects = 1000;
  double alpha = 1.0;
  Bytes size_min = 1;
  Bytes size_max = 1;
  std::uint64_t seed = 42;
  std::string phases;
  bool header = false;
  std::string out;
};

/// "churn:<length>:<working_set>[:<base>]" or "scan:<length>", comma separated.
std::vector<Phase> parse_phases(const std::string& spec) {
  std::vector<Phase> out;
  ObjectId next_base = 1;
  for (const auto& item : split_list(spec)) {
    std::vector<std::string> parts;
    std::stringstream ss(item);
    std::string p;
    while (std::getline(ss, p, ':')) parts.push_back(p);
    try {
      Phase ph;
      if (parts.size() == 2 && parts[0] == "scan") {
        ph.kind = Phase::Kind::scan;
        ph.length = io::to_int(parts[1]);
      } else if ((parts.size() == 3 || parts.size() == 4) && parts[0] == "churn") {
        ph.kind = Phase::Kind::churn;
        ph.length = io::to_int(parts[1]);
        ph.working_set = io::to_int(parts[2]);
        ph.base = parts.size() == 4 ? static_cast<ObjectId>(io::to_int(parts[3])) : next_base;
      } else {
        throw UsageError("bad phase '" + item + "'");
      }
      out.push_back(ph);
    } catch (const io::FormatError&) {
      throw UsageError("bad phase '" + item + "'");
    }
  }
  if (out.empty()) throw UsageError("--phases is empty");
  return out;
}

int cmd_synth_trace(const SynthArgs& a) {
  auto t0 = Clock::now();
  const std::string started = io::utc_now_iso8601();
  Trace t;
  json cfg;
  try {
    if (a.kind == "zipf") {
      auto sizes = a.size_min == a.size_max ? SizeDist::fixed(a.size_min) : SizeDist::uniform(a.size_min, a.size_max);
      t = synth_zipf(a.requests, a.objects, a.alpha, sizes, a.seed);
      cfg = {{"kind", a.kind},         {"requests", a.requests}, {"objects", a.objects}, {"alpha", a.alpha},
             {"size_min", a.size_min}, {"size_max", a.size_max}, {"seed", a.seed}};
    } else {
      t = synth_scan_churn(parse_phases(a.phases), a.seed, a.size_min);
      cfg = {{"kind", a.kind}, {"phases", a.phases}, {"object_size", a.size_min}, {"seed", a.seed}};
    }
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  fs::path out(a.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  save_trace(out.string(), t, a.header);

  fs::path stem = out;
  stem.replace_extension();
  io::RunManifest m;
  m.subcommand = "synth-trace";
  m.started_at = started;
  cfg["header"] = a.header;
  m.config = cfg;
  m.add_output(out);
  finish_manifest(m, stem, t0, kOk);

  auto st = compute_stats(t);
  std::printf("wrote %s: %lld requests, %lld objects, footprint %lld bytes\n", a.out.c_str(),
              static_cast<long long>(st.request_count), static_cast<long long>(st.unique_objects),
              static_cast<long long>(st.footprint_bytes));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heuristic synthesis toolkit: cache and congestion-control simulation, program checking and search"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Replay a trace through one eviction policy");
  simulate->add_option("--trace", sim.trace, "Trace CSV (time,object_id,size)")->required();
  simulate->add_option("--policy", sim.policy, "Baseline name[:k=v,...] or program:<path.dsl>")->required();
  simulate->add_option("--capacity", sim.capacity, "Cache size in bytes, or N% of the trace footprint")->required();
  simulate->add_option("--history-capacity", sim.history, "Eviction-history entries for programs")
      ->check(CLI::PositiveNumber);
  simulate->add_option("--out", sim.out, "Output stem; writes <stem>.json, <stem>.csv, <stem>.manifest.json");

  CompareArgs cmp;
  auto* compare = app.add_subcommand("compare", "Compare policies across traces, with oracle rows");
  compare->add_option("--traces", cmp.traces, "Trace files or glob patterns")->required();
  compare->add_option("--policies", cmp.policies, "Comma-separated baselines (default: all); fifo is always included");
  compare->add_option("--program", cmp.programs, "Cache-mode DSL program (repeatable)");
  compare->add_option("--capacity", cmp.capacity, "Cache size in bytes, or N% of each trace's footprint");
  compare->add_option("--history-capacity", cmp.history)->check(CLI::PositiveNumber);
  compare->add_option("--jobs", cmp.jobs, "Worker threads (0: all cores)");
  compare->add_option("--out", cmp.out, "Output stem");

  SearchArgs srch;
  auto* searchc = app.add_subcommand("search", "Run the generate/check/evaluate search loop");
  searchc->add_option("config", srch.config, "Search config file (key = value)")->required();
  searchc->add_option("--generator", srch.generator, "mock or llm (overrides the config)")
      ->check(CLI::IsMember({"mock", "llm"}));
  searchc->add_option("--db", srch.db, "Heuristic DB path (overrides the config)");
  searchc->add_option("--out", srch.out, "Output stem (default: DB path without extension)");
  searchc->add_option("--jobs", srch.jobs, "Worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
  auto* resume = searchc->add_flag("--resume", srch.resume, "Continue from the complete rounds in the DB");
  auto* overwrite = searchc->add_flag("--overwrite", srch.overwrite, "Replace an existing DB");
  resume->excludes(overwrite);
  searchc->add_flag("--quiet", srch.quiet, "No per-round progress");

  CheckArgs chk;
  auto* check = app.add_subcommand("check", "Check a DSL program");
  check->add_option("program", chk.program, "DSL file")->required();
  check->add_option("--mode", chk.mode, "cache or kernel")->check(CLI::IsMember({"cache", "kernel"}));
  check->add_option("--out", chk.out, "Also write <stem>.json diagnostics and a manifest");

  CcsimArgs ccs;
  std::int64_t queue_bytes = 0;
  auto* ccsim = app.add_subcommand("ccsim", "Run a kernel-mode program in the congestion-control simulator");
  ccsim->add_option("program", ccs.program, "Kernel-mode DSL file")->required();
  ccsim->add_option("--rate-bps", ccs.link.rate_bps, "Bottleneck rate")->check(CLI::PositiveNumber);
  ccsim->add_option("--delay-ms", ccs.link.one_way_delay_ms, "One-way propagation delay")->check(CLI::PositiveNumber);
  auto* qopt = ccsim->add_option("--queue-bytes", queue_bytes, "Drop-tail buffer (default: 1 x BDP)")
                   ->check(CLI::PositiveNumber);
  ccsim->add_option("--mss", ccs.link.mss_bytes, "Segment size")->check(CLI::PositiveNumber);
  ccsim->add_option("--duration", ccs.link.duration_s, "Simulated seconds")->check(CLI::PositiveNumber);
  ccsim->add_option("--flows", ccs.link.flows, "Competing flows running the program")->check(CLI::PositiveNumber);
  ccsim->add_option("--seed", ccs.link.rng_seed, "Start-jitter seed");
  ccsim->add_option("--lambda", ccs.lambda, "Delay weight in the fitness")->check(CLI::NonNegativeNumber);
  ccsim->add_option("--delay-budget-ms", ccs.budget_ms, "Delay normalizer in the fitness")
      ->check(CLI::PositiveNumber);
  ccsim->add_option("--out", ccs.out, "Output stem");

  SynthArgs syn;
  auto* synth = app.add_subcommand("synth-trace", "Generate a synthetic trace CSV");
  synth->add_option("--kind", syn.kind, "zipf or scan-churn")->check(CLI::IsMember({"zipf", "scan-churn"}));
  synth->add_option("--requests", syn.requests)->check(CLI::PositiveNumber);
  synth->add_option("--objects", syn.objects)->check(CLI::PositiveNumber);
  synth->add_option("--alpha", syn.alpha, "Zipf exponent")->check(CLI::NonNegativeNumber);
  synth->add_option("--size-min", syn.size_min, "Object size lower bound (scan-churn: the fixed size)")
      ->check(CLI::PositiveNumber);
  synth->add_option("--size-max", syn.size_max)->check(CLI::PositiveNumber);
  synth->add_option("--seed", syn.seed);
  synth->add_option("--phases", syn.phases, "scan-churn phases, e.g. churn:5000:200,scan:1000");
  synth->add_flag("--header", syn.header, "Write a header line");
  synth->add_option("--out", syn.out, "Output CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*simulate) return cmd_simulate(sim);
    if (*compare) return cmd_compare(cmp);
    if (*searchc) return cmd_search(srch);
    if (*check) return cmd_check(chk);
    if (*ccsim) {
      if (qopt->count()) ccs.queue_bytes = queue_bytes;
      return cmd_ccsim(ccs);
    }
    if (*synth) {
      if (syn.size_max < syn.size_min) syn.size_max = syn.size_min;
      if (syn.kind == "scan-churn" && syn.phases.empty()) throw UsageError("scan-churn needs --phases");
      return cmd_synth_trace(syn);
    }
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kUsage;
  } catch (const ProgramRejected& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kDomainFailure;
  } catch (const search::GeneratorUnavailable& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kDomainFailure;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kDomainFailure;
  }
  return kUsage;
}
