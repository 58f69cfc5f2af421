#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace lander {

// Deterministic random stream. All stochastic code in the library draws from
// one of these; streams for independent stages/episodes are derived with
// derive_seed so results do not depend on scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(gen_);
  }
  double normal() { return normal_(gen_); }
  double normal(double mean, double stddev) { return mean + stddev * normal(); }
  // Uniform integer in [0, n).
  std::uint64_t index(std::uint64_t n) {
    return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(gen_);
  }
  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// Stable 64-bit stream seed from (master seed, stage label). Distinct labels
// give distinct streams; used to fan out per-stage and per-episode RNGs.
std::uint64_t derive_seed(std::uint64_t master_seed, const std::string& stage_label);

}  // namespace lander
