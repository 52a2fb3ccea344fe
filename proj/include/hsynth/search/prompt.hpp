#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include "hsynth/dsl/features.hpp"
#include "hsynth/dsl/render.hpp"
#include "hsynth/search/generator.hpp"

namespace hsynth::search {

inline const char* kDefaultPromptTemplate = R"(You are improving a heuristic written in a small expression language.

{interface_description}

Write the body of:
{signature}

Language: `let x = e;`, assignments (`=`, `+=`, `-=`), `if (c) { ... } else { ... }`, and a single final
`return e;`. Operators: + - * / % < <= > >= == != && || ! and `c ? a : b`. No loops, no other functions.

Best programs found so far, with their fitness (higher is better):
{exemplars}
{feedback}
Reply with one new program in a single fenced code block.
)";

inline std::string interface_description(dsl::Mode mode) {
  if (mode == dsl::Mode::cache) {
    return "The cache keeps objects in a priority queue. Your program computes the priority of one object each "
           "time it is inserted or accessed; the object with the lowest priority is evicted.\n"
           "Object features: now, obj_id, count (accesses since insertion), last_access_time, insert_time, size "
           "(bytes).\n"
           "Cache aggregates: percentile(counts|ages|sizes, p) with a literal p in [0, 1].\n"
           "Eviction history: history_contains(obj_id), history_count(obj_id), history_age_at_eviction(obj_id).\n"
           "Helpers: min(a, b), max(a, b), abs(a). Arithmetic is real-valued.";
  }
  return "Your program sets the congestion window (bytes) after every ACK and once per loss episode. The "
         "result is clamped to [mss, 10 x BDP].\n"
         "Features: cwnd, prev_cwnd, srtt_us, rtt_us, min_rtt_us, inflight_bytes, mss, acked_bytes, loss_flag, "
         "delivery_rate (bytes/s), now_us.\n"
         "History of the last 10 round trips, 0 = most recent: h_cwnd_i, h_srtt_i, h_rate_i, h_loss_i.\n"
         "Helpers: min(a, b), max(a, b), abs(a). Arithmetic is 64-bit integer: no fractional literals, and every "
         "divisor must be provably nonzero (a nonzero literal, max(1, x), or guarded by `x != 0`).";
}

inline std::string signature(dsl::Mode mode) {
  return mode == dsl::Mode::cache ? "priority(object) -> number" : "cong_control(state) -> cwnd_bytes";
}

inline std::string format_exemplars(const std::vector<Exemplar>& exemplars) {
  std::string out;
  for (std::size_t i = 0; i < exemplars.size(); ++i) {
    char fit[64];
    std::snprintf(fit, sizeof fit, "%.6f", exemplars[i].fitness);
    out += "Example " + std::to_string(i + 1) + " (fitness " + fit + "):\n```\n" + dsl::render(exemplars[i].program) +
           "\n```\n";
  }
  return out;
}

inline std::string format_feedback(const std::string& previous, const std::string& diagnostics) {
  if (diagnostics.empty()) return "";
  return "\nYour previous attempt was rejected by the checker:\n```\n" + previous + "\n```\nDiagnostics:\n" +
         diagnostics + "Fix these problems.\n";
}

/// Plain-text template with {interface_description}, {signature},
/// {exemplars} and {feedback} placeholders.
class PromptTemplate {
 public:
  PromptTemplate() : text_(kDefaultPromptTemplate) {}
  explicit PromptTemplate(std::string text) : text_(std::move(text)) {}

  static PromptTemplate load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read prompt template '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return PromptTemplate(ss.str());
  }

  std::string render(const GenerationRequest& req, const std::string& feedback = {}) const {
    std::string out = text_;
    replace(out, "{interface_description}", interface_description(req.mode));
    replace(out, "{signature}", signature(req.mode));
    replace(out, "{exemplars}", format_exemplars(req.exemplars));
    replace(out, "{feedback}", feedback);
    return out;
  }

  const std::string& text() const { return text_; }

 private:
  static void replace(std::string& s, const std::string& key, const std::string& value) {
    for (std::size_t pos = s.find(key); pos != std::string::npos; pos = s.find(key, pos + value.size()))
      s.replace(pos, key.size(), value);
  }

  std::string text_;
};

/// Body of the first fenced code block, or nullopt when there is none.
inline std::optional<std::string> extract_code_block(const std::string& reply) {
  auto open = reply.find("```");
  if (open == std::string::npos) return std::nullopt;
  auto body = reply.find('\n', open);
  auto inline_close = reply.find("```", open + 3);
  if (inline_close != std::string::npos && (body == std::string::npos || inline_close < body))
    return reply.substr(open + 3, inline_close - open - 3);
  if (body == std::string::npos) return std::nullopt;
  auto close = reply.find("```", body + 1);
  if (close == std::string::npos) return std::nullopt;
  std::string code = reply.substr(body + 1, close - body - 1);
  while (!code.empty() && (code.back() == '\n' || code.back() == '\r')) code.pop_back();
  return code;
}

}  // namespace hsynth::search
