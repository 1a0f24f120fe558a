#include "cforge/rng.hpp"

#include <cmath>
#include <cstring>
#include <numbers>
#include <sstream>

#include "cforge/error.hpp"

namespace cforge {

std::uint64_t hash_mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

std::uint64_t hash_label(std::uint64_t seed, std::string_view label) {
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a over the label bytes
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return hash_mix(seed ^ h);
}

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(hash_mix(seed)) {}

Rng Rng::derive(std::string_view label) const { return Rng(hash_label(seed_, label)); }

Rng Rng::derive(std::uint64_t index) const { return Rng(hash_mix(seed_ ^ hash_mix(index + 1))); }

std::uint64_t Rng::next_u64() { return engine_(); }

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // u1 in (0, 1] so the log is finite.
  double u1 = 1.0 - uniform();
  double u2 = uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

std::uint64_t Rng::uniform_int(std::uint64_t n) {
  if (n == 0) fail(errc::contract, "uniform_int bound must be positive");
  // Rejection sampling on the top of the range keeps the draw unbiased.
  std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = next_u64();
  while (x >= limit) x = next_u64();
  return x % n;
}

std::string Rng::serialize() const {
  std::ostringstream out;
  out << seed_ << ' ' << (has_spare_ ? 1 : 0) << ' ';
  std::uint64_t bits;
  static_assert(sizeof(bits) == sizeof(spare_));
  std::memcpy(&bits, &spare_, sizeof(bits));
  out << bits << ' ' << engine_;
  return out.str();
}

Rng Rng::deserialize(const std::string& text) {
  std::istringstream in(text);
  std::uint64_t seed = 0, bits = 0;
  int has_spare = 0;
  in >> seed >> has_spare >> bits;
  Rng rng(seed);
  in >> rng.engine_;
  if (!in) fail(errc::parse, "malformed rng state");
  rng.has_spare_ = has_spare != 0;
  std::memcpy(&rng.spare_, &bits, sizeof(bits));
  return rng;
}

bool Rng::operator==(const Rng& other) const {
  return seed_ == other.seed_ && engine_ == other.engine_ &&
         has_spare_ == other.has_spare_ &&
         (!has_spare_ || spare_ == other.spare_);
}

}  // namespace cforge
