#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace rsub {

/// Deterministic sub-seed for a named pipeline stage.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label);

/// Seed for the i-th parallel worker or trial: run seed xor worker index, then mixed.
std::uint64_t worker_seed(std::uint64_t run_seed, std::uint64_t worker_index);

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state = 0xcbf29ce484222325ULL);

/// Explicit random stream threaded through every stochastic operation.
class SeedStream {
 public:
  explicit SeedStream(std::uint64_t seed) : engine_(seed) {}

  int uniform_int(int lo, int hi) {  // inclusive bounds
    return std::uniform_int_distribution<int>(lo, hi)(engine_);
  }
  double uniform_real(double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(engine_);
  }
  double normal(double mean = 0.0, double sd = 1.0) {
    return std::normal_distribution<double>(mean, sd)(engine_);
  }
  std::uint64_t next() { return engine_(); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace rsub
