#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hsynth/dsl/mutate.hpp"
#include "hsynth/dsl/render.hpp"
#include "hsynth/rng.hpp"

namespace hsynth::search {

class GeneratorUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Exemplar {
  dsl::Program program;
  double fitness = 0.0;
};

/// What a generator is asked for in one round.
struct GenerationRequest {
  dsl::Mode mode = dsl::Mode::cache;
  std::vector<Exemplar> exemplars;
  int round = 1;
  std::uint64_t run_seed = 0;
};

/// Raw candidate text plus accounting. `error` is set when the reply held no
/// usable program text.
struct Proposal {
  std::string source;
  std::string error;
  std::int64_t prompt_tokens = 0;
  std::int64_t completion_tokens = 0;
};

/// Candidate source. generate() and repair() may be called concurrently.
class Generator {
 public:
  virtual ~Generator() = default;

  virtual std::vector<Proposal> generate(const GenerationRequest& req, std::size_t k) = 0;

  /// Another attempt at candidate `index`, given the checker's complaints
  /// about `previous`. `attempt` counts from 1.
  virtual Proposal repair(const GenerationRequest& req, std::size_t index, const std::string& previous,
                          const std::string& feedback, int attempt) = 0;

  virtual std::string label() const = 0;
};

/// One evolutionary candidate: 70% mutation of an exemplar, 20% crossover of
/// two exemplars (possibly the same one), 10% a fresh sampled program.
inline dsl::Program mock_candidate(std::span<const Exemplar> exemplars, dsl::Mode mode, std::uint64_t seed) {
  Rng rng(seed);
  double u = rng.unit();
  if (exemplars.empty() || u >= 0.9) return dsl::random_program(mode, rng.next());
  std::vector<dsl::Program> donors;
  donors.reserve(exemplars.size());
  for (const auto& e : exemplars) donors.push_back(e.program);
  if (u < 0.7) {
    const auto& parent = donors[rng.index(donors.size())];
    int intensity = 1 + static_cast<int>(rng.below(3));
    return dsl::mutate(parent, rng.next(), intensity, donors);
  }
  const auto& a = donors[rng.index(donors.size())];
  const auto& b = donors[rng.index(donors.size())];
  return dsl::crossover(a, b, rng.next());
}

/// k candidates, candidate i drawn with seed mix_seed(seed, i).
inline std::vector<dsl::Program> mock_generate(std::span<const Exemplar> exemplars, std::size_t k,
                                               std::uint64_t seed, dsl::Mode mode = dsl::Mode::cache) {
  std::vector<dsl::Program> out;
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) out.push_back(mock_candidate(exemplars, mode, mix_seed(seed, i)));
  return out;
}

/// Network-free generator built on the evolutionary operators. Candidate i of
/// round r uses derive_seed(run_seed, r, i).
class MockGenerator final : public Generator {
 public:
  std::vector<Proposal> generate(const GenerationRequest& req, std::size_t k) override {
    std::vector<Proposal> out(k);
    for (std::size_t i = 0; i < k; ++i) {
      auto seed = derive_seed(req.run_seed, static_cast<std::uint64_t>(req.round), i);
      out[i].source = dsl::render(mock_candidate(req.exemplars, req.mode, seed));
    }
    return out;
  }

  Proposal repair(const GenerationRequest& req, std::size_t index, const std::string&, const std::string&,
                  int attempt) override {
    auto seed = mix_seed(derive_seed(req.run_seed, static_cast<std::uint64_t>(req.round), index),
                         static_cast<std::uint64_t>(attempt));
    return {dsl::render(mock_candidate(req.exemplars, req.mode, seed)), {}, 0, 0};
  }

  std::string label() const override { return "mock"; }
};

}  // namespace hsynth::search
