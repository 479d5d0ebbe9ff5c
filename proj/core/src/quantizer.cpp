#include "qdopfo/quantizer.hpp"

#include <cmath>
#include <stdexcept>

namespace qdopfo {

namespace {

// ceil(x) robust to pow() landing a hair above an exact integer
std::uint64_t ceil_guarded(double x) {
  const double r = std::round(x);
  if (std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(r)))
    return static_cast<std::uint64_t>(r);
  return static_cast<std::uint64_t>(std::ceil(x));
}

std::uint64_t bits_for_range(double range, std::uint64_t k, int d) {
  const double points = 2.0 * std::ceil(range * static_cast<double>(k)) + 1.0;
  const std::uint64_t per_coord =
      static_cast<std::uint64_t>(std::ceil(std::log2(std::max(points, 2.0))));
  return static_cast<std::uint64_t>(d) * per_coord;
}

}  // namespace

void QuantizerSpec::validate() const {
  if (!(value_range > 0.0))
    throw std::invalid_argument("quantizer: value_range must be > 0");
  if (cap && *cap == 0)
    throw std::invalid_argument("quantizer: cap B must be a positive integer");
  if (schedule.type == LevelSchedule::Type::Power) {
    if (!(schedule.exponent >= 0.0))
      throw std::invalid_argument("quantizer: power exponent must be >= 0");
  } else {
    if (!(schedule.kappa1 > 0.0) || !(schedule.xi > 0.0))
      throw std::invalid_argument("quantizer: resolution schedule needs kappa1 > 0, xi > 0");
  }
}

std::uint64_t level_at(const QuantizerSpec& spec, int d, std::uint64_t t) {
  if (t < 1) throw std::invalid_argument("level_at: t must be >= 1");
  if (spec.kind == QuantizerKind::Identity) return 1;
  std::uint64_t k;
  if (spec.schedule.type == LevelSchedule::Type::Power) {
    k = ceil_guarded(std::pow(static_cast<double>(t), spec.schedule.exponent));
  } else {
    const double target =
        std::sqrt(static_cast<double>(d) *
                  std::pow(static_cast<double>(t), spec.schedule.xi) /
                  (4.0 * spec.schedule.kappa1));
    k = ceil_guarded(target);
  }
  if (k < 1) k = 1;
  if (spec.cap && k > *spec.cap) k = *spec.cap;
  return k;
}

double resolution(const QuantizerSpec& spec, int d, std::uint64_t t) {
  if (t < 1) throw std::invalid_argument("resolution: t must be >= 1");
  if (spec.kind == QuantizerKind::Identity) return 0.0;
  const std::uint64_t k = level_at(spec, d, t);
  const double kd = static_cast<double>(k);
  if (spec.kind == QuantizerKind::Probabilistic) {
    if (spec.schedule.type == LevelSchedule::Type::Resolution) {
      // the schedule's target, unless the cap has saturated the level
      const double target =
          spec.schedule.kappa1 / std::pow(static_cast<double>(t), spec.schedule.xi);
      const double floor_eps = static_cast<double>(d) / (4.0 * kd * kd);
      return std::max(target, floor_eps);
    }
    return static_cast<double>(d) / (4.0 * kd * kd);
  }
  // stochastic k-level: relative variance min(d/k^2, sqrt(d)/k)
  const double dd = static_cast<double>(d);
  return std::min(dd / (kd * kd), std::sqrt(dd) / kd);
}

std::uint64_t exact_message_bits(int d) {
  return static_cast<std::uint64_t>(d) * 64;
}

std::uint64_t message_bits(const QuantizerSpec& spec, int d, std::uint64_t t) {
  if (t < 1) throw std::invalid_argument("message_bits: t must be >= 1");
  if (spec.kind == QuantizerKind::Identity) return exact_message_bits(d);
  return bits_for_range(spec.value_range, level_at(spec, d, t), d);
}

QuantizedMessage quantize(const QuantizerSpec& spec, const Eigen::VectorXd& y,
                          std::uint64_t t, CounterRng& rng) {
  if (t < 1) throw std::invalid_argument("quantize: t must be >= 1");
  const int d = static_cast<int>(y.size());
  for (int j = 0; j < d; ++j) {
    if (!std::isfinite(y[j]))
      throw std::invalid_argument("quantize: non-finite input coordinate");
  }

  QuantizedMessage msg;
  if (spec.kind == QuantizerKind::Identity) {
    msg.payload = y;
    msg.bits = exact_message_bits(d);
    msg.exact = true;
    return msg;
  }

  const std::uint64_t k = level_at(spec, d, t);
  const double kd = static_cast<double>(k);
  msg.payload.resize(d);

  if (spec.kind == QuantizerKind::Probabilistic) {
    // coordinatewise rounding to the grid of multiples of 1/k: up with
    // probability proportional to proximity, down otherwise
    for (int j = 0; j < d; ++j) {
      const double g = y[j] * kd;
      const double lo = std::floor(g);
      const double frac = g - lo;
      const double u = rng.uniform01();  // one draw per coordinate, always
      msg.payload[j] = (u < frac ? lo + 1.0 : lo) / kd;
    }
  } else {
    // stochastic k-level: levels of |y_j|/||y|| on the grid {0, 1/k, ..., 1}
    const double norm = y.norm();
    if (norm == 0.0) {
      msg.payload.setZero();
      for (int j = 0; j < d; ++j) (void)rng.uniform01();
    } else {
      for (int j = 0; j < d; ++j) {
        const double r = std::abs(y[j]) / norm;
        const double g = r * kd;
        const double lo = std::floor(g);
        const double frac = g - lo;
        const double u = rng.uniform01();
        const double level = (u < frac ? lo + 1.0 : lo) / kd;
        const double sign = y[j] > 0.0 ? 1.0 : (y[j] < 0.0 ? -1.0 : 0.0);
        msg.payload[j] = norm * sign * level;
      }
    }
  }

  // accounting uses the declared range unless the data exceeds it
  double range = spec.value_range;
  const double observed = y.size() > 0 ? y.cwiseAbs().maxCoeff() : 0.0;
  if (observed > range) range = std::ceil(observed);
  msg.bits = bits_for_range(range, k, d);
  msg.exact = (msg.payload == y);
  return msg;
}

}  // namespace qdopfo
