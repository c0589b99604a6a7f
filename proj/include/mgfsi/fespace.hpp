#pragma once

#include "mgfsi/fe_basis.hpp"
#include "mgfsi/mesh.hpp"

#include <functional>
#include <map>
#include <string>

namespace mgfsi {

struct FieldSpec {
  std::string name;
  int degree = 1;
  int components = 1;
};

struct ElementSpec {
  std::vector<FieldSpec> fields;

  /// Primal: biquadratic velocity/displacement, bilinear pressure.
  static ElementSpec taylor_hood();
  /// Adjoint enrichment: quartic velocity/displacement, quadratic pressure.
  static ElementSpec enriched();
  static ElementSpec scalar(int degree, const std::string& name = "s");

  int n_fields() const { return static_cast<int>(fields.size()); }
  int field_index(const std::string& name) const;
};

/// Affine constraints slave = sum_i coeff_i * master_i + inhomogeneity.
/// Dirichlet conditions are lines without masters.
class ConstraintSet {
 public:
  struct Line {
    std::vector<std::pair<int, double>> masters;
    double inhom = 0.0;
  };

  void add_line(int slave, std::vector<std::pair<int, double>> masters,
                double inhom = 0.0);
  bool is_constrained(int dof) const { return lines_.count(dof) > 0; }
  const Line* line(int dof) const;
  const std::map<int, Line>& lines() const { return lines_; }
  int n_constraints() const { return static_cast<int>(lines_.size()); }

  /// Resolve chains so that no master is itself constrained.
  void close();

  /// Overwrite constrained entries from masters and inhomogeneities.
  void distribute(Vector& x) const;

  /// Copy with all inhomogeneities zeroed (for update equations).
  ConstraintSet homogeneous() const;

  /// Merge another set; existing slaves keep their line.
  void merge(const ConstraintSet& other);

 private:
  std::map<int, Line> lines_;
};

/// Continuous tensor-product finite element space for a mixed vector/scalar
/// element on all active cells of a mesh. Hanging-node DoFs carry no
/// unknowns; they are interpolation-constrained to the coarse side.
class FESpace {
 public:
  FESpace(const QuadMesh& mesh, ElementSpec spec);

  const QuadMesh& mesh() const { return *mesh_; }
  const ElementSpec& spec() const { return spec_; }
  int n_dofs() const { return n_dofs_; }

  /// DoFs of `field` on active cell `ac` (index into mesh.active_cells()),
  /// component-major: entry c*(k+1)^2 + node.
  const std::vector<int>& cell_field_dofs(int ac, int field) const {
    return cell_dofs_[ac][field];
  }
  /// All DoFs of a cell, concatenated over fields.
  std::vector<int> cell_dofs(int ac) const;

  /// DoFs of `field` on face f of active cell `ac`, component-major,
  /// (k+1) nodes per component ordered from corner f to corner (f+1)%4.
  std::vector<int> face_field_dofs(int ac, int f, int field) const;

  Vec2 dof_point(int dof) const { return dof_points_[dof]; }
  int dof_field(int dof) const { return dof_field_[dof]; }
  int dof_component(int dof) const { return dof_comp_[dof]; }

  const ConstraintSet& hanging_constraints() const { return hanging_; }

  CellGeometry cell_geometry(int ac) const;

  /// Value of each component of `field` at point x (cell search + bilinear
  /// map inversion). Throws if x lies outside the mesh.
  std::vector<double> evaluate_at_point(const Vector& coeffs, int field,
                                        const Vec2& x) const;
  /// Cell and reference coordinates containing x.
  std::pair<int, Vec2> locate(const Vec2& x) const;

 private:
  void distribute_dofs();
  void build_hanging_constraints();

  const QuadMesh* mesh_;
  ElementSpec spec_;
  int n_dofs_ = 0;
  std::vector<std::vector<std::vector<int>>> cell_dofs_;
  std::vector<Vec2> dof_points_;
  std::vector<int> dof_field_, dof_comp_;
  ConstraintSet hanging_;
};

/// Nodal interpolation between spaces on the same mesh with identical field
/// lists (degrees may differ). Realizes both the restriction i_a, i_p
/// (high -> low) and the exact injection (low -> high).
Vector interpolate(const FESpace& from, const FESpace& to, const Vector& coeffs);

}  // namespace mgfsi
