#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>

#include "qdopfo/rng.hpp"

namespace qdopfo {

enum class QuantizerKind { Identity, Probabilistic, KLevel };

// Level schedule: either k_t = ceil(t^exponent), or a target resolution
// eps_t = kappa1 / t^xi with the level backed out as ceil(sqrt(d t^xi / (4 kappa1))).
struct LevelSchedule {
  enum class Type { Power, Resolution };
  Type type = Type::Power;
  double exponent = 1.0;  // Power
  double kappa1 = 1.0;    // Resolution
  double xi = 1.0;        // Resolution

  static LevelSchedule power(double exponent) {
    LevelSchedule s;
    s.type = Type::Power;
    s.exponent = exponent;
    return s;
  }
  static LevelSchedule resolution(double kappa1, double xi) {
    LevelSchedule s;
    s.type = Type::Resolution;
    s.kappa1 = kappa1;
    s.xi = xi;
    return s;
  }
};

struct QuantizerSpec {
  QuantizerKind kind = QuantizerKind::Probabilistic;
  LevelSchedule schedule = LevelSchedule::power(1.0);
  std::optional<std::uint64_t> cap;  // B: max level, if set
  // half-width of the representable interval; used only for bit accounting
  double value_range = 1.0;

  void validate() const;
};

struct QuantizedMessage {
  Eigen::VectorXd payload;
  std::uint64_t bits = 0;
  bool exact = false;  // payload is bit-equal to the input
};

// effective level k_t, including the cap
std::uint64_t level_at(const QuantizerSpec& spec, int d, std::uint64_t t);

// resolution eps_{d,k_t}; 0 for the identity kind
double resolution(const QuantizerSpec& spec, int d, std::uint64_t t);

// per-message bit cost at the declared value_range
std::uint64_t message_bits(const QuantizerSpec& spec, int d, std::uint64_t t);

// bit cost for one full-precision (exact) message
std::uint64_t exact_message_bits(int d);

QuantizedMessage quantize(const QuantizerSpec& spec, const Eigen::VectorXd& y,
                          std::uint64_t t, CounterRng& rng);

}  // namespace qdopfo
