#pragma once

#include "mgfsi/cases.hpp"

#include <random>

namespace mgfsi::testing {

/// Boundary-condition-consistent state with a random perturbation on the
/// free DoFs (small on the displacement field to keep J > 0).
inline Vector random_admissible_state(const FESpace& space, const CaseBcs& bcs,
                                      double scale_vp, double scale_u,
                                      unsigned seed) {
  ConstraintSet full = dirichlet_constraints(space, bcs);
  full.merge(space.hanging_constraints());
  full.close();
  Vector U = Vector::Zero(space.n_dofs());
  full.distribute(U);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  const int uf = space.spec().field_index("u");
  for (int i = 0; i < space.n_dofs(); ++i) {
    if (full.is_constrained(i)) continue;
    U[i] += (space.dof_field(i) == uf ? scale_u : scale_vp) * d(rng);
  }
  full.distribute(U);  // keep hanging DoFs consistent
  return U;
}

/// Max relative disagreement between the assembled Jacobian and central
/// finite differences of the residual over n random directions.
inline double jacobian_fd_error(const FsiAssembler& assembler, const Vector& U,
                                int n_dirs, unsigned seed,
                                double eps = 1e-6) {
  const SparseMatrix K = assembler.jacobian(U);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < n_dirs; ++k) {
    Vector d(U.size());
    for (int i = 0; i < d.size(); ++i) d[i] = dist(rng);
    d /= d.cwiseAbs().maxCoeff();
    const Vector rp = assembler.residual(U + eps * d);
    const Vector rm = assembler.residual(U - eps * d);
    // residual = -A, so the directional derivative of A is -(rp - rm)/2eps
    const Vector fd = -(rp - rm) / (2.0 * eps);
    const Vector jd = K.multiply(d);
    const double denom = std::max(jd.norm(), 1e-30);
    worst = std::max(worst, (jd - fd).norm() / denom);
  }
  return worst;
}

}  // namespace mgfsi::testing
