#pragma once

#include <cstdint>
#include <cmath>

namespace qdopfo {

// Counter-based random streams: every consumer derives an independent stream
// from a 64-bit seed plus integer tags, so draws for one (agent, round,
// purpose) never shift draws for another. All floating-point conversion is
// explicit; nothing here depends on the standard library's distributions.

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// stream purposes; values are part of the determinism contract
enum class StreamTag : std::uint64_t {
  Features = 1,
  LabelNoise = 2,
  GroundTruth = 3,
  GraphTopology = 4,
  StateQuant = 5,
  GradQuant = 6,
  Generic = 7,
};

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : state_(key) {}

  std::uint64_t next_u64() { return splitmix64(state_); }

  // uniform in [0, 1)
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // uniform integer in [0, n), n > 0 (Lemire reduction)
  std::uint64_t uniform_int(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // standard normal via Box-Muller
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    double u2 = uniform01();
    while (u1 <= 0.0) u1 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  // UniformRandomBitGenerator interface
  using result_type = std::uint64_t;
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~0ULL; }
  result_type operator()() { return next_u64(); }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

inline std::uint64_t mix_key(std::uint64_t seed, std::uint64_t a,
                             std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = seed;
  splitmix64(s);
  s ^= a * 0x9e3779b97f4a7c15ULL;
  splitmix64(s);
  s ^= b * 0xc2b2ae3d27d4eb4fULL;
  splitmix64(s);
  s ^= c * 0x165667b19e3779f9ULL;
  splitmix64(s);
  return s;
}

inline CounterRng derive_stream(std::uint64_t seed, StreamTag tag,
                                std::uint64_t i = 0, std::uint64_t t = 0) {
  return CounterRng(mix_key(seed, static_cast<std::uint64_t>(tag), i, t));
}

// stable 64-bit string hash (FNV-1a), for per-variant stream separation
inline std::uint64_t hash_string(const char* s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (; *s; ++s) {
    h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(*s));
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace qdopfo
