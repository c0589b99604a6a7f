#pragma once

#include "mgfsi/dwr.hpp"

#include <cmath>

namespace mgfsi {

struct CaseConfig;  // cases.hpp

enum class RefineMode { Adaptive, Uniform };
enum class EstimatorKind { Primal, Full };

struct AdaptParams {
  double alpha = 1.0;    // marking factor
  double tol = 1e-16;    // stop when |eta_h| <= tol
  int max_levels = 6;
  RefineMode mode = RefineMode::Adaptive;
  EstimatorKind estimator = EstimatorKind::Primal;
  int sign_budget = 2;       // enriched Newton steps for the sign solve
  bool half_factor = false;
  bool estimate = true;      // false: solve/report only (no adjoint machinery)
  NewtonSettings newton;
};

struct LevelReport {
  int level = 0;
  int n_dofs = 0;
  std::vector<double> J;
  double J_c = 0.0;
  double true_error = std::nan("");
  double eta_h = std::nan("");
  double sum_abs = std::nan("");
  double i_eff = std::nan("");
  double i_ind = std::nan("");
  bool indices_defined = false;
  double eta_full = std::nan("");
  std::vector<int> sigma;
  std::vector<double> w;
  std::vector<double> tracked;
  int marked = 0;
  double pu_gap = 0.0;    // |sum eta_i - direct residual pairing|
  double galerkin = 0.0;  // residual against the low-order adjoint
  bool degenerate_adjoint = false;
  int newton_iterations = 0;
  double wall_seconds = 0.0;
};

struct RunResult {
  std::vector<LevelReport> levels;
  std::vector<std::string> warnings;
};

/// Cells touching a PU DoF whose |eta_i| exceeds alpha * sum_j|eta_j| / M_el.
/// Falls back to the top decile by |eta_i| if the threshold marks nothing.
std::set<int> mark_cells(const std::vector<double>& eta_i, double alpha,
                         const PartitionOfUnity& pu, const QuadMesh& mesh);

/// The adaptive cycle: solve, combine, adjoint, estimate, stop-or-mark,
/// refine. Uniform mode replaces marking by uniform refinement.
RunResult adaptive_loop(const CaseConfig& config, const AdaptParams& params,
                        const std::string& vtk_dir = "");

}  // namespace mgfsi
