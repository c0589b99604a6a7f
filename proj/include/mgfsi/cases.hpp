#pragma once

#include "mgfsi/adapt.hpp"

namespace mgfsi {

/// Symbolic boundary-condition entry; resolved by make_bcs.
struct BcEntry {
  int marker = -1;
  std::string kind;  // noslip_v, fixed_u, lid_profile, parabolic_inflow,
                     // pressure, pin_p, stokes_mms_v, elasticity_mms_u
  std::vector<double> params;
};

/// Symbolic goal entry; resolved by make_goals.
struct GoalEntry {
  std::string kind;  // drag, lift, point_disp, point_pressure, flux
  std::string name;
  double omega = 1.0;
  std::vector<double> params;  // kind-specific (markers, points, components)
};

struct ReferenceValues {
  std::vector<double> goal_refs;  // empty if unknown
  double jc_ref = std::nan("");   // NaN: derive from goal_refs with omegas
  std::string provenance;
};

/// Data-only case description; round-trips through the config file format.
struct CaseConfig {
  std::string id;
  std::string description;
  std::string geometry;        // ex1_cavity, ex2_chamber, fsi1,
                               // unit_square_fluid, unit_square_solid,
                               // file:<path>
  int initial_refinements = 0;

  double rho_f = 1.0, nu_f = 1.0, rho_s = 1.0, mu_s = 1.0, nu_s = 0.4;
  double alpha_u = 1.0, convection = 1.0;
  std::string forcing;         // "", stokes_mms, ns_mms, elasticity_mms

  std::vector<BcEntry> bcs;
  std::vector<GoalEntry> goals;
  std::vector<GoalEntry> tracked;  // reported but not part of J_c
  ReferenceValues refs;
  AdaptParams adapt;
};

/// Bundled configurations; id in {ex1, ex2, ex3, verify_stokes, verify_ns,
/// verify_elasticity}. Throws on unknown ids.
CaseConfig builtin_case(const std::string& id);

QuadMesh build_case_geometry(const CaseConfig& config);
QuadMesh build_case_geometry(const std::string& builtin_id);

MaterialParams make_materials(const CaseConfig& config);
CaseBcs make_bcs(const CaseConfig& config);
CombinedGoal make_goals(const CaseConfig& config);
std::vector<GoalSpec> make_tracked(const CaseConfig& config);

/// Effective combined reference value for the current weights; NaN when
/// the case carries no usable reference.
double effective_jc_reference(const CaseConfig& config);

/// Manufactured solutions for the verification cases.
struct ManufacturedSolution {
  std::function<Vec2(const Vec2&)> velocity;
  std::function<Mat2(const Vec2&)> velocity_gradient;
  std::function<double(const Vec2&)> pressure;
  std::function<Vec2(const Vec2&)> displacement;
};
ManufacturedSolution manufactured_solution(const std::string& forcing);

/// L2 and H1-seminorm errors of the velocity field against the
/// manufactured solution (quadrature order 8).
std::pair<double, double> velocity_error(const FESpace& space, const Vector& U,
                                         const ManufacturedSolution& exact);

}  // namespace mgfsi
