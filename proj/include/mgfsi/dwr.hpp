#pragma once

#include "mgfsi/multigoal.hpp"

namespace mgfsi {

/// Scalar bilinear partition of unity on the mesh: the free (unconstrained)
/// DoFs of a Q1 space, with hanging DoFs folded into their masters so the
/// functions still sum to one.
struct PartitionOfUnity {
  explicit PartitionOfUnity(const QuadMesh& mesh);

  const FESpace& space() const { return q1_; }
  int n_dofs() const { return static_cast<int>(free_dofs_.size()); }
  /// Expansion of local corner l of active cell ac into PU indices.
  const std::vector<std::pair<int, double>>& corner_expansion(int ac, int l) const {
    return expansion_[ac][l];
  }
  /// Active-cell indices touched by PU dof i.
  const std::vector<int>& support(int i) const { return support_[i]; }
  Vec2 dof_point(int i) const { return q1_.dof_point(free_dofs_[i]); }

 private:
  FESpace q1_;
  std::vector<int> free_dofs_;
  std::vector<std::array<std::vector<std::pair<int, double>>, 4>> expansion_;
  std::vector<std::vector<int>> support_;
};

struct AdjointResult {
  Vector Z;                 // on the enriched space
  bool degenerate = false;  // the whole right-hand side vanished
  std::vector<std::string> degenerate_goals;
};

/// True when x coincides with a support point of the field in this space.
bool point_is_node(const FESpace& space, int field, const Vec2& x);

/// Linear adjoint solve on the enriched space: the system matrix is the
/// transpose of the enriched Jacobian at the injected primal state,
/// right-hand side J_c'; homogeneous Dirichlet data throughout.
///
/// Point evaluations at nodes of the low-order space are degenerate: their
/// interpolated contribution to the right-hand side vanishes, which is
/// detected and reported rather than worked around.
AdjointResult solve_enriched_adjoint(const FsiAssembler& low_assembler,
                                     const FESpace& enriched,
                                     const Vector& U_low,
                                     const CombinedGoal& cg);

struct EstimatorOptions {
  bool half_factor = false;  // apply the displayed-equation 1/2 convention
};

struct Estimate {
  double eta_h = 0.0;       // sum of the PU indicators
  double eta_direct = 0.0;  // residual dotted with the full weight
  double sum_abs = 0.0;     // sum |eta_i|
  std::vector<double> eta_i;
  double galerkin = 0.0;    // residual against the low-order adjoint
};

/// Primal DWR estimator with partition-of-unity localization:
/// eta_i = -A(U_h)((Z - i_a Z) psi_i).
Estimate estimate_primal(const FsiAssembler& low_assembler,
                         const FESpace& enriched, const Vector& U_low,
                         const Vector& Z, const PartitionOfUnity& pu,
                         const EstimatorOptions& opt = {});

enum class FullWeight {
  Interpolated,  // adjoint residual weighted with i_a Z (default)
  Enriched,      // literal enriched-adjoint weight (telescopes to ~0)
};

/// Two-sided estimator: primal half plus adjoint residual
/// rho*(U_h, .)(U_enr - i_p U_enr).
double estimate_full(const FsiAssembler& low_assembler, const FESpace& enriched,
                     const Vector& U_low, const Vector& U_enriched,
                     const Vector& Z, const CombinedGoal& cg,
                     const PartitionOfUnity& pu,
                     FullWeight weight = FullWeight::Interpolated,
                     const EstimatorOptions& opt = {});

struct QualityIndices {
  double i_eff = 0.0;
  double i_ind = 0.0;
  bool defined = false;  // false when the true error vanishes
};

QualityIndices indices(double eta_h, double sum_abs, double true_error);

}  // namespace mgfsi
