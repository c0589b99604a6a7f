#include "mgfsi/adapt.hpp"

#include "mgfsi/cases.hpp"
#include "mgfsi/output.hpp"

#include <algorithm>
#include <chrono>

namespace mgfsi {

std::set<int> mark_cells(const std::vector<double>& eta_i, double alpha,
                         const PartitionOfUnity& pu, const QuadMesh& mesh) {
  const int m_el = mesh.n_active_cells();
  double sum_abs = 0.0, sum = 0.0;
  for (double e : eta_i) {
    sum += e;
    sum_abs += std::abs(e);
  }
  std::set<int> marked;
  if (sum_abs == 0.0) return marked;
  // Threshold against the magnitude of the signed estimator sum: under
  // cancellation the threshold drops and marking widens, which is what
  // keeps regions with sign-alternating indicators refining.
  const double threshold = alpha * std::abs(sum) / m_el;
  for (std::size_t i = 0; i < eta_i.size(); ++i) {
    if (std::abs(eta_i[i]) < threshold) continue;
    for (int ac : pu.support(static_cast<int>(i)))
      marked.insert(mesh.active_cells()[ac]);
  }
  if (!marked.empty()) return marked;
  // Fallback: top decile of indicators by magnitude, at least one.
  std::vector<int> order(eta_i.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return std::abs(eta_i[a]) > std::abs(eta_i[b]);
  });
  const int take = std::max<int>(1, static_cast<int>(order.size()) / 10);
  for (int k = 0; k < take; ++k) {
    if (eta_i[order[k]] == 0.0) break;
    for (int ac : pu.support(order[k])) marked.insert(mesh.active_cells()[ac]);
  }
  return marked;
}

RunResult adaptive_loop(const CaseConfig& config, const AdaptParams& params,
                        const std::string& vtk_dir) {
  MGFSI_CHECK(params.alpha > 0.0 && params.tol > 0.0 && params.max_levels >= 1,
              "invalid adaptive parameters");
  RunResult result;

  QuadMesh mesh = build_case_geometry(config);
  for (int r = 0; r < config.initial_refinements; ++r) mesh = mesh.uniform_refine();

  const MaterialParams materials = make_materials(config);
  const CaseBcs bcs = make_bcs(config);
  CombinedGoal cg = make_goals(config);
  const std::vector<GoalSpec> tracked = make_tracked(config);
  const double jc_ref = effective_jc_reference(config);

  for (int level = 1; level <= params.max_levels; ++level) {
    const auto t0 = std::chrono::steady_clock::now();
    LevelReport rep;
    rep.level = level;

    std::set<int> marked;
    {
      FESpace space(mesh, ElementSpec::taylor_hood());
      rep.n_dofs = space.n_dofs();
      FsiAssembler assembler(space, materials, bcs);
      PrimalResult primal = solve_primal(assembler, params.newton);
      rep.newton_iterations = primal.log.iterations;

      rep.J = cg.eval_each(space, materials, primal.U);
      rep.J_c = cg.combine_plain(rep.J);
      if (!std::isnan(jc_ref)) rep.true_error = std::abs(jc_ref - rep.J_c);
      for (const auto& g : tracked)
        rep.tracked.push_back(eval_goal(g, space, materials, primal.U));

      bool stop = false;
      if (params.estimate) {
        FESpace enriched(mesh, ElementSpec::enriched());
        EnrichedPrimal ep =
            enriched_primal_solve(assembler, enriched, primal.U, cg,
                                  params.sign_budget);
        const std::vector<int> sigma = compute_signs(rep.J, ep.J);
        for (int i = 0; i < cg.size(); ++i) cg.entries[i].sigma = sigma[i];
        rep.sigma = sigma;
        for (int i = 0; i < cg.size(); ++i)
          rep.w.push_back(cg.entries[i].omega * sigma[i]);

        AdjointResult adj = solve_enriched_adjoint(assembler, enriched,
                                                   primal.U, cg);
        PartitionOfUnity pu(mesh);
        EstimatorOptions opt;
        opt.half_factor = params.half_factor;
        Estimate est;
        est.eta_i.assign(pu.n_dofs(), 0.0);
        if (adj.degenerate) {
          rep.degenerate_adjoint = true;
          result.warnings.push_back(
              "level " + std::to_string(level) +
              ": goal derivative vanishes (grid-point evaluation); adjoint "
              "and estimator are identically zero");
        } else {
          est = estimate_primal(assembler, enriched, primal.U, adj.Z, pu, opt);
          if (params.estimator == EstimatorKind::Full)
            rep.eta_full = estimate_full(assembler, enriched, primal.U, ep.U,
                                         adj.Z, cg, pu,
                                         FullWeight::Interpolated, opt);
        }
        rep.eta_h = est.eta_h;
        rep.sum_abs = est.sum_abs;
        rep.pu_gap = std::abs(est.eta_h - est.eta_direct);
        rep.galerkin = est.galerkin;
        if (!std::isnan(rep.true_error) && rep.true_error > 0.0) {
          const QualityIndices qi = indices(est.eta_h, est.sum_abs, rep.true_error);
          rep.indices_defined = qi.defined;
          rep.i_eff = qi.i_eff;
          rep.i_ind = qi.i_ind;
        }

        if (!vtk_dir.empty()) {
          std::vector<double> cell_eta(mesh.n_active_cells(), 0.0);
          for (int i = 0; i < pu.n_dofs(); ++i) {
            const auto& sup = pu.support(i);
            for (int ac : sup)
              cell_eta[ac] += std::abs(est.eta_i[i]) / sup.size();
          }
          const Vector z_low = interpolate(enriched, space, adj.Z);
          write_vtk(space, primal.U, &z_low, &cell_eta,
                    vtk_dir + "/solution_" + std::to_string(level) + ".vtk");
        }

        if (std::abs(est.eta_h) <= params.tol) stop = true;
        if (adj.degenerate) stop = true;
        if (!stop && level < params.max_levels) {
          if (params.mode == RefineMode::Uniform) {
            marked.insert(mesh.active_cells().begin(), mesh.active_cells().end());
          } else {
            marked = mark_cells(est.eta_i, params.alpha, pu, mesh);
          }
        }
      } else {
        if (!vtk_dir.empty())
          write_vtk(space, primal.U, nullptr, nullptr,
                    vtk_dir + "/solution_" + std::to_string(level) + ".vtk");
        if (level < params.max_levels)
          marked.insert(mesh.active_cells().begin(), mesh.active_cells().end());
      }

      rep.marked = static_cast<int>(marked.size());
      rep.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count();
      result.levels.push_back(rep);
      if (stop || level == params.max_levels || marked.empty()) break;
    }
    mesh = mesh.refine_marked(marked);
  }
  return result;
}

}  // namespace mgfsi
