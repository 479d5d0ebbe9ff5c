#pragma once

#include <Eigen/Dense>

#include "qdopfo/rng.hpp"

namespace qdopfo {

enum class SetKind { L1Ball, L2Ball };

// Convex compact feasible set with a linear minimization oracle.
struct ConstraintSet {
  SetKind kind = SetKind::L1Ball;
  double radius = 1.0;
  int dim = 1;

  // radius of the smallest origin-centered Euclidean ball containing the set
  double enclosing_radius() const { return radius; }

  void validate() const;
};

ConstraintSet make_l1_ball(int dim, double radius);
ConstraintSet make_l2_ball(int dim, double radius);

inline constexpr double kFeasTol = 1e-9;

// argmin_{x in X} <x, direction>. Ties on the l1 ball break toward the lowest
// coordinate index, with sign(0) = +1, so lmo(0) = -radius * e0.
Eigen::VectorXd lmo(const ConstraintSet& set, const Eigen::VectorXd& direction);

bool contains(const ConstraintSet& set, const Eigen::VectorXd& x,
              double tol = kFeasTol);

// uniform-ish random member of the set (exact for both ball types)
Eigen::VectorXd sample_point(const ConstraintSet& set, CounterRng& rng);

}  // namespace qdopfo
