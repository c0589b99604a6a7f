#pragma once

#include "mgfsi/model.hpp"

namespace mgfsi {

/// Scalar quantity of interest evaluated on an FSI state.
struct GoalSpec {
  enum class Kind { DragLift, PointDisplacement, PointPressure, BoundaryFlux };

  Kind kind = Kind::BoundaryFlux;
  std::string name;

  // DragLift: force component integrated over the fluid-side reference
  // path J sigma_f F^{-T} n, n pointing out of the fluid.
  int component = 0;  // 0 = drag, 1 = lift
  std::set<int> path_markers;
  bool include_interface = false;

  // Point evaluations.
  Vec2 point{0.0, 0.0};

  // BoundaryFlux: integral of v . n over the marked boundary.
  int flux_marker = -1;

  static GoalSpec drag(std::set<int> markers, bool interface_path,
                       const std::string& name = "Drag");
  static GoalSpec lift(std::set<int> markers, bool interface_path,
                       const std::string& name = "Lift");
  static GoalSpec point_displacement(const Vec2& x, int comp,
                                     const std::string& name);
  static GoalSpec point_pressure(const Vec2& x, const std::string& name);
  static GoalSpec flux(int marker, const std::string& name = "Flux");
};

double eval_goal(const GoalSpec& goal, const FESpace& space,
                 const MaterialParams& params, const Vector& U);

/// Gateaux derivative dJ(U)(phi) as a vector over the space's test DoFs.
/// Point and flux goals are linear (state-independent vectors); drag/lift
/// carries the stress linearization and the ALE geometry terms.
Vector goal_derivative(const GoalSpec& goal, const FESpace& space,
                       const MaterialParams& params, const Vector& U);

}  // namespace mgfsi
