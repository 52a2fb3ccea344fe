#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "hsynth/dsl/checker.hpp"

namespace hsynth::search {

enum class Status { ok, check_failed, repair_exhausted };

inline std::string_view to_string(Status s) {
  switch (s) {
    case Status::ok: return "ok";
    case Status::check_failed: return "check_failed";
    case Status::repair_exhausted: return "repair_exhausted";
  }
  return "?";
}

inline Status status_from_string(std::string_view s) {
  if (s == "ok") return Status::ok;
  if (s == "check_failed") return Status::check_failed;
  if (s == "repair_exhausted") return Status::repair_exhausted;
  throw std::invalid_argument("unknown status '" + std::string(s) + "'");
}

/// One generated (or seed) program and its outcome. `fitness` is set exactly
/// when status is ok.
struct CandidateRecord {
  std::int64_t candidate_id = 0;
  int round = 0;
  std::string source;
  Status status = Status::ok;
  std::vector<dsl::Diagnostic> diagnostics;
  std::optional<double> fitness;
  std::string generator;
  double wall_ms = 0.0;
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
  int repairs = 0;

  bool operator==(const CandidateRecord&) const = default;
};

inline nlohmann::json to_json(const CandidateRecord& r) {
  nlohmann::json diags = nlohmann::json::array();
  for (const auto& d : r.diagnostics)
    diags.push_back({{"category", std::string(dsl::to_string(d.category))},
                     {"line", d.loc.line},
                     {"column", d.loc.column},
                     {"message", d.message}});
  nlohmann::json j = {{"candidate_id", r.candidate_id},
                      {"round", r.round},
                      {"source", r.source},
                      {"status", std::string(to_string(r.status))},
                      {"diagnostics", diags},
                      {"generator", r.generator},
                      {"wall_ms", r.wall_ms},
                      {"prompt_tokens", r.prompt_tokens},
                      {"completion_tokens", r.completion_tokens},
                      {"repairs", r.repairs}};
  j["fitness"] = r.fitness ? nlohmann::json(*r.fitness) : nlohmann::json(nullptr);
  return j;
}

/// Throws std::invalid_argument (or a json exception) on malformed input.
inline CandidateRecord record_from_json(const nlohmann::json& j) {
  CandidateRecord r;
  r.candidate_id = j.at("candidate_id").get<std::int64_t>();
  r.round = j.at("round").get<int>();
  r.source = j.at("source").get<std::string>();
  r.status = status_from_string(j.at("status").get<std::string>());
  for (const auto& d : j.at("diagnostics")) {
    auto cat = dsl::category_from_string(d.at("category").get<std::string>());
    if (!cat) throw std::invalid_argument("unknown diagnostic category");
    r.diagnostics.push_back({{d.at("line").get<int>(), d.at("column").get<int>()}, *cat, d.at("message").get<std::string>()});
  }
  if (j.contains("fitness") && !j["fitness"].is_null()) r.fitness = j["fitness"].get<double>();
  r.generator = j.value("generator", "");
  r.wall_ms = j.value("wall_ms", 0.0);
  r.prompt_tokens = j.value("prompt_tokens", std::int64_t{0});
  r.completion_tokens = j.value("completion_tokens", std::int64_t{0});
  r.repairs = j.value("repairs", 0);
  if (r.fitness.has_value() != (r.status == Status::ok))
    throw std::invalid_argument("fitness must be present exactly for ok records");
  return r;
}

}  // namespace hsynth::search
