#pragma once

// Chat-completions client for candidate generation. Requires cpp-httplib
// (with CPPHTTPLIB_OPENSSL_SUPPORT for https endpoints) and nlohmann::json.

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "hsynth/search/generator.hpp"
#include "hsynth/search/prompt.hpp"

namespace hsynth::search {

class LlmConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct LlmConfig {
  std::string base_url;  // e.g. https://api.example.com/v1
  std::string model;
  std::string api_key;
  int max_retries = 4;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::seconds timeout{120};
  unsigned max_in_flight = 4;
  double temperature = 1.0;

  /// Reads HSYNTH_LLM_BASE_URL, HSYNTH_LLM_MODEL and HSYNTH_LLM_API_KEY.
  static LlmConfig from_env() {
    auto get = [](const char* name) {
      const char* v = std::getenv(name);
      if (!v || !*v) throw LlmConfigError(std::string("environment variable ") + name + " is not set");
      return std::string(v);
    };
    LlmConfig c;
    c.base_url = get("HSYNTH_LLM_BASE_URL");
    c.model = get("HSYNTH_LLM_MODEL");
    c.api_key = get("HSYNTH_LLM_API_KEY");
    return c;
  }
};

/// Splits "scheme://host[:port][/prefix]" into the client address and path prefix.
inline std::pair<std::string, std::string> split_base_url(const std::string& url) {
  auto scheme = url.find("://");
  if (scheme == std::string::npos) throw LlmConfigError("base URL needs a scheme: '" + url + "'");
  auto slash = url.find('/', scheme + 3);
  std::string host = slash == std::string::npos ? url : url.substr(0, slash);
  std::string prefix = slash == std::string::npos ? "" : url.substr(slash);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {host, prefix};
}

struct Completion {
  std::string content;
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
};

class LlmGenerator final : public Generator {
 public:
  explicit LlmGenerator(LlmConfig config, PromptTemplate prompt = {})
      : config_(std::move(config)), prompt_(std::move(prompt)) {
    if (config_.model.empty()) throw LlmConfigError("model name is empty");
    if (config_.max_retries < 0) throw LlmConfigError("max_retries must be >= 0");
    split_base_url(config_.base_url);
  }

  std::string label() const override { return "llm:" + config_.model; }

  std::vector<Proposal> generate(const GenerationRequest& req, std::size_t k) override {
    std::string prompt = prompt_.render(req);
    std::vector<Proposal> out(k);
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex mu;
    auto worker = [&] {
      for (std::size_t i = next++; i < k; i = next++) {
        try {
          out[i] = to_proposal(complete(prompt));
        } catch (...) {
          std::lock_guard lock(mu);
          if (!error) error = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    unsigned n = std::max(1u, std::min<unsigned>(config_.max_in_flight, static_cast<unsigned>(k)));
    for (unsigned w = 0; w < n; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    return out;
  }

  Proposal repair(const GenerationRequest& req, std::size_t, const std::string& previous,
                  const std::string& feedback, int) override {
    return to_proposal(complete(prompt_.render(req, format_feedback(previous, feedback))));
  }

  /// One chat completion with bounded exponential-backoff retries.
  Completion complete(const std::string& prompt) {
    auto [host, prefix] = split_base_url(config_.base_url);
    nlohmann::json body = {{"model", config_.model},
                           {"temperature", config_.temperature},
                           {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})}};
    std::string payload = body.dump();
    httplib::Headers headers = {{"Authorization", "Bearer " + config_.api_key}};

    std::string last_error;
    auto backoff = config_.initial_backoff;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(backoff);
        backoff *= 2;
      }
      httplib::Client client(host);
      client.set_connection_timeout(config_.timeout);
      client.set_read_timeout(config_.timeout);
      client.set_write_timeout(config_.timeout);
      auto res = client.Post(prefix + "/chat/completions", headers, payload, "application/json");
      ++requests_;
      if (!res) {
        last_error = "request failed: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status != 200) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      try {
        auto j = nlohmann::json::parse(res->body);
        Completion c;
        c.content = j.at("choices").at(0).at("message").at("content").get<std::string>();
        if (j.contains("usage")) {
          c.prompt_tokens = j["usage"].value("prompt_tokens", std::int64_t{0});
          c.completion_tokens = j["usage"].value("completion_tokens", std::int64_t{0});
        }
        prompt_tokens_ += c.prompt_tokens;
        completion_tokens_ += c.completion_tokens;
        return c;
      } catch (const std::exception& e) {
        last_error = std::string("malformed response: ") + e.what();
      }
    }
    throw GeneratorUnavailable("LLM endpoint unavailable after " + std::to_string(config_.max_retries + 1) +
                               " attempts: " + last_error);
  }

  std::int64_t prompt_tokens() const { return prompt_tokens_; }
  std::int64_t completion_tokens() const { return completion_tokens_; }
  std::int64_t requests() const { return requests_; }

 private:
  static Proposal to_proposal(const Completion& c) {
    Proposal p;
    p.prompt_tokens = c.prompt_tokens;
    p.completion_tokens = c.completion_tokens;
    auto code = extract_code_block(c.content);
    if (code) {
      p.source = *code;
    } else {
      p.source = c.content;  // kept for the record and the repair prompt
      p.error = "reply contained no fenced code block";
    }
    return p;
  }

  LlmConfig config_;
  PromptTemplate prompt_;
  std::atomic<std::int64_t> prompt_tokens_{0};
  std::atomic<std::int64_t> completion_tokens_{0};
  std::atomic<std::int64_t> requests_{0};
};

}  // namespace hsynth::search
