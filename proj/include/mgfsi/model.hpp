#pragma once

#include "mgfsi/linsolve.hpp"

#include <optional>
#include <set>

namespace mgfsi {

struct MaterialParams {
  double rho_f = 1.0;   // fluid density
  double nu_f = 1.0;    // kinematic viscosity
  double rho_s = 1.0;   // solid density
  double mu_s = 1.0;    // shear modulus
  double nu_s = 0.4;    // Poisson ratio, < 0.5
  double alpha_u = 1.0; // mesh-motion diffusion
  double convection = 1.0;  // scale of the convective term (0 = Stokes)
  // Test the mesh-motion equation with all displacement functions (the
  // printed global form) instead of excluding interface test DoFs. With a
  // small alpha_u this acts as a weak interface spring.
  bool global_mesh_coupling = false;

  double lambda_s() const {
    MGFSI_CHECK(nu_s < 0.5, "Poisson ratio must be < 0.5");
    return 2.0 * mu_s * nu_s / (1.0 - 2.0 * nu_s);
  }

  // Body forces on the reference domain (null = zero).
  std::function<Vec2(const Vec2&)> f_fluid;
  std::function<Vec2(const Vec2&)> f_solid;
};

/// Deformation-gradient quantities at a quadrature point.
struct Kinematics {
  Mat2 F, Finv, FinvT, E;
  double J = 1.0;
};

/// Throws when det(I + grad_u) <= 0 (mesh tangling).
Kinematics kinematics_at(const Mat2& grad_u);

/// ALE-transformed Cauchy stress of the fluid.
Mat2 stress_fluid(const MaterialParams& p, const Kinematics& kin,
                  const Mat2& grad_v, double pressure);

/// First Piola form of the Saint Venant-Kirchhoff stress,
/// F * (lambda tr(E) I + 2 mu E) = J sigma_s F^{-T}.
Mat2 stress_solid_stvk(const MaterialParams& p, const Kinematics& kin);

struct DirichletBc {
  int marker;
  int field;  // index into the element spec
  std::function<double(const Vec2&, int comp)> value;
};

/// Prescribed-pressure boundary with do-nothing correction: the traction
/// -P n + rho_f nu_f J F^{-T} grad(v)^T F^{-T} n enters residual and
/// Jacobian (the correction is state-dependent).
struct NeumannPressureBc {
  int marker;
  double pressure;
};

struct PressurePin {
  Vec2 point;
  double value = 0.0;
};

/// Mean-value gauge over the fluid: one pressure DoF is slaved so that
/// the mean of p over the fluid subdomain equals `target`. A hard
/// constraint on the pressure level; unlike a point pin it also removes
/// the ill-conditioned pressure/solid-compression direction in fully
/// Dirichlet-bounded configurations.
struct MeanPressureGauge {
  bool enabled = false;
  double target = 0.0;
};

/// Volume gauge for fully Dirichlet-bounded configurations: the net
/// interface displacement flux int_Gamma_i u.n ds (n out of the solid) is
/// constrained to `target`. This selects the volume-preserving member of
/// the stationary pressure/deformation family, the stationary limit of
/// the dynamic problem; the pressure level then follows from the solid
/// compliance.
struct VolumeGauge {
  bool enabled = false;
  double target = 0.0;
};

struct CaseBcs {
  std::vector<DirichletBc> dirichlet;
  std::vector<NeumannPressureBc> neumann;
  std::optional<PressurePin> pin;
  MeanPressureGauge mean_gauge;
  VolumeGauge volume_gauge;
};

/// Dirichlet values (and the pressure pin) as an inhomogeneous constraint
/// set for the given space.
ConstraintSet dirichlet_constraints(const FESpace& space, const CaseBcs& bcs);

/// Physics integrand of the semi-linear form at one quadrature point,
/// written as coefficients of the test function:
///   A-integrand = rv.psi^v + Rv:grad(psi^v) + ru.psi^u + Ru:grad(psi^u)
///                 + rp psi^p
/// (already multiplied by the quadrature weight times |det J_geo|).
struct ResidualCoeffs {
  Vec2 rv = Vec2::Zero();
  Mat2 Rv = Mat2::Zero();
  Vec2 ru = Vec2::Zero();
  Mat2 Ru = Mat2::Zero();
  double rp = 0.0;
};

/// Monolithic variational ALE FSI operator on a mixed space
/// (v, u : vector fields of equal degree; p : scalar).
class FsiAssembler {
 public:
  FsiAssembler(const FESpace& space, MaterialParams params, CaseBcs bcs,
               int n_gauss = 0);

  const FESpace& space() const { return *space_; }
  const MaterialParams& params() const { return params_; }
  const CaseBcs& bcs() const { return bcs_; }

  /// Residual vector R_j = -A(U)(phi_j), raw (no constraint handling).
  /// with_gauge adds the solid pressure closure term; the estimator uses
  /// the pure physics form (with_gauge = false).
  Vector residual(const Vector& U, bool with_gauge = true) const;

  /// Jacobian A'(U), rows = test DoFs, columns = trial DoFs, raw.
  /// `pattern_constraints` (when given) are condensed into the matrix
  /// later; the sparsity pattern is widened with their master couplings.
  SparseMatrix jacobian(const Vector& U, bool with_gauge = true,
                        const ConstraintSet* pattern_constraints = nullptr) const;

  /// Pressure DoFs on fluid-solid interface faces (excluded from the
  /// gauge term so the discrete mass balance stays exact).
  const std::set<int>& interface_pressure_dofs() const { return iface_p_; }

  /// Displacement DoFs on fluid-solid interface faces. The mesh-motion
  /// term is not tested with these: the interface displacement is
  /// determined by momentum balance, and the harmonic extension sees it
  /// as Dirichlet data (otherwise a spurious zero-flux condition clamps
  /// the interface).
  const std::set<int>& interface_displacement_dofs() const { return iface_u_; }

  /// Physics integrand (gauge-free) per quadrature point of a cell.
  void cell_residual_coeffs(int ac, const Vector& U, const QuadratureCell& quad,
                            std::vector<ResidualCoeffs>& out) const;

  /// Neumann faces: active cell, local face, prescribed pressure.
  struct NeumannFace {
    int ac, f;
    double pressure;
  };
  const std::vector<NeumannFace>& neumann_faces() const { return neumann_faces_; }

  /// Boundary traction contribution at 1D quadrature points of a Neumann
  /// face: A-integrand is -t(q).psi^v, t already multiplied by ds*weight.
  /// Also returns the reference-cell coordinates of the face points.
  void face_traction(const NeumannFace& nf, const Vector& U, int n_q,
                     std::vector<Vec2>& traction,
                     std::vector<Vec2>& xi_points) const;

  int n_gauss() const { return n_gauss_; }

 private:
  struct FieldCache {
    int degree, ncomp;
    ShapeTable table;  // at the assembly quadrature points
  };

  void build_pattern(const ConstraintSet* extra) const;

  const FESpace* space_;
  MaterialParams params_;
  CaseBcs bcs_;
  int n_gauss_;
  QuadratureCell quad_;
  std::vector<FieldCache> fields_;
  std::set<int> iface_p_, iface_u_;
  std::vector<NeumannFace> neumann_faces_;
  mutable std::vector<std::vector<int>> pattern_;
  mutable int pattern_signature_ = -1;
};

struct PrimalResult {
  Vector U;
  NewtonLog log;
};

/// Newton solve of A(U) = 0 with Dirichlet data embedded in the initial
/// guess and hanging/Dirichlet constraints condensed into every linear
/// system. Throws on non-convergence.
PrimalResult solve_primal(const FsiAssembler& assembler,
                          const NewtonSettings& settings = {},
                          const Vector* initial = nullptr);

/// Fixed-budget Newton iteration (no convergence requirement); used for
/// the enriched-space primal approximation.
PrimalResult solve_primal_budget(const FsiAssembler& assembler, int steps,
                                 const Vector* initial = nullptr);

}  // namespace mgfsi
