#include "mgfsi/multigoal.hpp"

namespace mgfsi {

std::vector<double> CombinedGoal::eval_each(const FESpace& space,
                                            const MaterialParams& params,
                                            const Vector& U) const {
  std::vector<double> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(eval_goal(e.goal, space, params, U));
  return out;
}

double CombinedGoal::combine_plain(const std::vector<double>& J) const {
  MGFSI_CHECK(J.size() == entries.size(), "goal value count mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < entries.size(); ++i) s += entries[i].omega * J[i];
  return s;
}

double CombinedGoal::combine_weighted(const std::vector<double>& J) const {
  MGFSI_CHECK(J.size() == entries.size(), "goal value count mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < entries.size(); ++i)
    s += entries[i].omega * entries[i].sigma * J[i];
  return s;
}

double CombinedGoal::eval_plain(const FESpace& space,
                                const MaterialParams& params,
                                const Vector& U) const {
  return combine_plain(eval_each(space, params, U));
}

Vector CombinedGoal::derivative(const FESpace& space,
                                const MaterialParams& params,
                                const Vector& U) const {
  Vector out = Vector::Zero(space.n_dofs());
  for (const auto& e : entries) {
    const double w = e.omega * e.sigma;
    if (w == 0.0) continue;
    out += w * goal_derivative(e.goal, space, params, U);
  }
  return out;
}

std::vector<int> compute_signs(const std::vector<double>& J_low,
                               const std::vector<double>& J_enriched) {
  MGFSI_CHECK(J_low.size() == J_enriched.size(), "goal count mismatch");
  std::vector<int> sigma(J_low.size(), +1);
  for (std::size_t i = 0; i < J_low.size(); ++i)
    sigma[i] = (J_enriched[i] - J_low[i]) < 0.0 ? -1 : +1;
  return sigma;
}

EnrichedPrimal enriched_primal_solve(const FsiAssembler& low_assembler,
                                     const FESpace& enriched,
                                     const Vector& U_low,
                                     const CombinedGoal& cg, int budget) {
  const FESpace& low = low_assembler.space();
  Vector injected = interpolate(low, enriched, U_low);
  FsiAssembler enr(enriched, low_assembler.params(), low_assembler.bcs());
  PrimalResult r = solve_primal_budget(enr, budget, &injected);
  EnrichedPrimal out;
  out.U = std::move(r.U);
  out.log = std::move(r.log);
  out.J = cg.eval_each(enriched, low_assembler.params(), out.U);
  return out;
}

}  // namespace mgfsi
