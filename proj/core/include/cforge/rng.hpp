#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace cforge {

// Seeded, splittable random stream. Every stochastic component owns a stream
// derived from the run seed by label, so results do not depend on the order in
// which unrelated components draw.
//
// derive() hashes the stream's root seed with the label, not the engine state,
// so child streams are stable regardless of how much the parent has consumed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  Rng derive(std::string_view label) const;
  Rng derive(std::uint64_t index) const;

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64();
  double uniform();                      // [0, 1)
  double uniform(double lo, double hi);  // [lo, hi)
  double normal();                       // standard normal, Box-Muller with cached spare
  // Unbiased integer in [0, n), n >= 1.
  std::uint64_t uniform_int(std::uint64_t n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Textual state, exact round-trip (used by the model checkpoint).
  std::string serialize() const;
  static Rng deserialize(const std::string& text);

  bool operator==(const Rng& other) const;

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// SplitMix64-style avalanche, also used for label hashing.
std::uint64_t hash_mix(std::uint64_t x);
std::uint64_t hash_label(std::uint64_t seed, std::string_view label);

}  // namespace cforge
