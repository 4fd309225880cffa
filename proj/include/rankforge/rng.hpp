#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace rankforge {

/// SplitMix64 finalizer; used to hash seeds and path components together.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Derives an independent stream seed from a master seed and a path of
/// integer tags (e.g. {kReplicateTag, replicate_index}).  Counter-based:
/// streams for different paths never share state, so replicates can be
/// evaluated in any order or in parallel with identical results.
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = mix64(master);
  for (std::uint64_t t : path) s = mix64(s ^ mix64(t));
  return s;
}

// Stream-derivation tags. Values are frozen: changing them changes every
// seeded result.
inline constexpr std::uint64_t kTagReplicate = 0x01;
inline constexpr std::uint64_t kTagSample = 0x02;
inline constexpr std::uint64_t kTagCell = 0x03;
inline constexpr std::uint64_t kTagRestart = 0x04;
inline constexpr std::uint64_t kTagPerturb = 0x05;

/// A self-contained random stream. One instance per logical unit of work
/// (bootstrap replicate, Monte Carlo replication, ...).
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  double normal() { return normal_(engine_); }
  double uniform() { return uniform_(engine_); }
  double student_t(double df) {
    std::student_t_distribution<double> d(df);
    return d(engine_);
  }
  bool bernoulli(double p) {
    std::bernoulli_distribution d(p);
    return d(engine_);
  }
  std::uint64_t next_u64() { return engine_(); }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
  std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace rankforge
