#pragma once

#include "mgfsi/goals.hpp"

namespace mgfsi {

/// Combined functional J_c over several goals. The plain combination
/// sum omega_i J_i is what tables report; the sign-corrected weights
/// w_i = omega_i sigma_i only drive the adjoint right-hand side.
struct CombinedGoal {
  struct Entry {
    GoalSpec goal;
    double omega = 1.0;
    int sigma = +1;
  };
  std::vector<Entry> entries;

  int size() const { return static_cast<int>(entries.size()); }

  std::vector<double> eval_each(const FESpace& space,
                                const MaterialParams& params,
                                const Vector& U) const;
  double combine_plain(const std::vector<double>& J) const;
  double combine_weighted(const std::vector<double>& J) const;
  double eval_plain(const FESpace& space, const MaterialParams& params,
                    const Vector& U) const;

  /// d/deps J_c(U + eps phi) with the effective weights w_i = omega_i sigma_i.
  Vector derivative(const FESpace& space, const MaterialParams& params,
                    const Vector& U) const;
};

/// sigma_i = sign(J_i(enriched) - J_i(low)), sign(0) := +1.
std::vector<int> compute_signs(const std::vector<double>& J_low,
                               const std::vector<double>& J_enriched);

struct EnrichedPrimal {
  Vector U;           // on the enriched space
  NewtonLog log;
  std::vector<double> J;  // goal values on the enriched solution
};

/// Fixed-budget Newton iteration on the enriched space starting from the
/// injected low-order state; supplies the higher-order goal values used
/// for the sign computation.
EnrichedPrimal enriched_primal_solve(const FsiAssembler& low_assembler,
                                     const FESpace& enriched,
                                     const Vector& U_low,
                                     const CombinedGoal& cg, int budget = 2);

}  // namespace mgfsi
