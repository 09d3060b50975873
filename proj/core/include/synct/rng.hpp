#pragma once

#include <array>
#include <cstdint>
#include <string>

namespace synct {

// Deterministic, serializable PRNG (xoshiro256++ seeded through splitmix64).
// All randomness in the project flows through explicit Rng instances so that
// runs are reproducible and checkpoints can resume bit-identically.
class Rng {
 public:
  Rng() : Rng(0) {}
  explicit Rng(std::uint64_t seed);

  std::uint64_t next_u64();
  // uniform in [0, 1)
  double uniform();
  double uniform(double lo, double hi);
  // standard normal via Box-Muller (two uniforms per sample, no hidden state)
  double normal();
  double normal(double mean, double stddev);
  // uniform integer in [0, n)
  std::uint64_t next_below(std::uint64_t n);
  // true with probability p
  bool bernoulli(double p);

  // Fisher-Yates
  template <typename Vec>
  void shuffle(Vec& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(next_below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  std::array<std::uint64_t, 4> state() const { return s_; }
  void set_state(const std::array<std::uint64_t, 4>& s) { s_ = s; }
  // FNV-1a over the state words; used for log digests
  std::uint64_t state_digest() const;

 private:
  std::array<std::uint64_t, 4> s_{};
};

// splitmix64 step; the documented per-record / per-component seed derivation:
// derive_seed(master, k) feeds master through k+1 splitmix64 increments.
std::uint64_t splitmix64(std::uint64_t& state);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

// FNV-1a over arbitrary bytes; used for parameter digests and arch hashes
std::uint64_t fnv1a(const void* data, std::size_t n, std::uint64_t seed = 0xcbf29ce484222325ull);
std::uint64_t fnv1a(const std::string& s, std::uint64_t seed = 0xcbf29ce484222325ull);

}  // namespace synct
