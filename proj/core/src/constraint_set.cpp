#include "qdopfo/constraint_set.hpp"

#include <cmath>
#include <stdexcept>

namespace qdopfo {

void ConstraintSet::validate() const {
  if (!(radius > 0.0)) throw std::invalid_argument("constraint set: radius must be > 0");
  if (dim < 1) throw std::invalid_argument("constraint set: dimension must be >= 1");
}

ConstraintSet make_l1_ball(int dim, double radius) {
  ConstraintSet s{SetKind::L1Ball, radius, dim};
  s.validate();
  return s;
}

ConstraintSet make_l2_ball(int dim, double radius) {
  ConstraintSet s{SetKind::L2Ball, radius, dim};
  s.validate();
  return s;
}

Eigen::VectorXd lmo(const ConstraintSet& set, const Eigen::VectorXd& direction) {
  if (direction.size() != set.dim)
    throw std::invalid_argument("lmo: direction has wrong dimension");
  Eigen::VectorXd v = Eigen::VectorXd::Zero(set.dim);
  if (set.kind == SetKind::L1Ball) {
    int best = 0;
    double best_abs = std::abs(direction[0]);
    for (int j = 1; j < set.dim; ++j) {
      const double a = std::abs(direction[j]);
      if (a > best_abs) {
        best_abs = a;
        best = j;
      }
    }
    const double sign = direction[best] >= 0.0 ? 1.0 : -1.0;
    v[best] = -set.radius * sign;
  } else {
    const double norm = direction.norm();
    if (norm == 0.0) {
      v[0] = -set.radius;
    } else {
      v = -(set.radius / norm) * direction;
    }
  }
  return v;
}

bool contains(const ConstraintSet& set, const Eigen::VectorXd& x, double tol) {
  if (x.size() != set.dim)
    throw std::invalid_argument("contains: point has wrong dimension");
  const double norm = set.kind == SetKind::L1Ball ? x.lpNorm<1>() : x.norm();
  return norm <= set.radius + tol;
}

Eigen::VectorXd sample_point(const ConstraintSet& set, CounterRng& rng) {
  const int d = set.dim;
  Eigen::VectorXd x(d);
  if (set.kind == SetKind::L1Ball) {
    // signed exponential direction, radial factor u^(1/d)
    double l1 = 0.0;
    for (int j = 0; j < d; ++j) {
      double u = rng.uniform01();
      while (u <= 0.0) u = rng.uniform01();
      const double mag = -std::log(u);
      const double sign = rng.uniform01() < 0.5 ? -1.0 : 1.0;
      x[j] = sign * mag;
      l1 += mag;
    }
    const double scale =
        set.radius * std::pow(rng.uniform01(), 1.0 / d) / (l1 > 0 ? l1 : 1.0);
    x *= scale;
  } else {
    for (int j = 0; j < d; ++j) x[j] = rng.normal();
    const double norm = x.norm();
    const double scale =
        set.radius * std::pow(rng.uniform01(), 1.0 / d) / (norm > 0 ? norm : 1.0);
    x *= scale;
  }
  return x;
}

}  // namespace qdopfo
