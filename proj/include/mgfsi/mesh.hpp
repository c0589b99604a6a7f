#pragma once

#include "mgfsi/common.hpp"

#include <array>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>

namespace mgfsi {

enum class Material : int { Fluid = 0, Solid = 1 };

/// New vertices created on faces carrying one of these markers are
/// projected onto the circle (polygonal boundary approximation with
/// vertex snapping at each refinement).
struct CircleSnap {
  Vec2 center{0.0, 0.0};
  double radius = 0.0;
  std::set<int> markers;
};

/// Hierarchical quadrilateral mesh with 1-irregular adaptive refinement.
///
/// The full refinement tree is stored; "active" cells (no children) form
/// the current computational mesh. Meshes are immutable after
/// construction: refinement returns a new mesh.
class QuadMesh {
 public:
  struct Cell {
    std::array<int, 4> verts{};  // counterclockwise
    int level = 0;
    Material material = Material::Fluid;
    int parent = -1;
    std::array<int, 4> children{-1, -1, -1, -1};
    bool is_active() const { return children[0] < 0; }
  };

  /// Hanging vertex record: the vertex sits at the (parametric) midpoint
  /// of face (v0,v1) of the active coarse cell `coarse_cell`.
  struct Hanging {
    int coarse_cell = -1;
    int v0 = -1, v1 = -1;
  };

  QuadMesh(std::vector<Vec2> vertices, std::vector<std::array<int, 4>> cells,
           std::vector<Material> materials,
           std::map<std::pair<int, int>, int> face_markers);

  int n_vertices() const { return static_cast<int>(vertices_.size()); }
  int n_cells_total() const { return static_cast<int>(cells_.size()); }
  int n_active_cells() const { return static_cast<int>(active_.size()); }
  const std::vector<int>& active_cells() const { return active_; }
  const Cell& cell(int c) const { return cells_[c]; }
  const Vec2& vertex(int v) const { return vertices_[v]; }

  /// Face f of a cell connects local corners f and (f+1)%4.
  std::pair<int, int> face_vertices(int c, int f) const {
    return {cells_[c].verts[f], cells_[c].verts[(f + 1) % 4]};
  }

  /// Boundary marker of face (a,b), or -1 if the face is interior.
  int face_marker(int a, int b) const;
  bool face_on_boundary(int a, int b) const { return face_marker(a, b) >= 0; }

  /// Midpoint vertex of edge (a,b) if one was ever created, else -1.
  int edge_midpoint(int a, int b) const;

  const std::map<int, Hanging>& hanging_vertices() const { return hanging_; }

  /// Active cells adjacent to cell c across face f (same level, finer,
  /// or one coarser). Empty on the boundary.
  std::vector<int> active_neighbors(int c, int f) const;

  /// True if the face between cell c (active) and its neighbors separates
  /// different materials.
  bool face_is_interface(int c, int f) const;

  QuadMesh uniform_refine() const;
  QuadMesh refine_marked(const std::set<int>& marked) const;

  bool is_one_irregular() const;
  double active_area() const;
  /// Positive Jacobian (strict convexity in the corner sense) for every
  /// active cell.
  bool all_cells_valid() const;

  void set_snap(const CircleSnap& snap) { snap_ = snap; }
  const std::optional<CircleSnap>& snap() const { return snap_; }

  // Plain-text mesh format; see README for the grammar.
  static QuadMesh read(std::istream& in);
  void write(std::ostream& out) const;
  static QuadMesh read_file(const std::string& path);
  void write_file(const std::string& path) const;

 private:
  QuadMesh() = default;

  int get_or_create_midpoint(int a, int b);
  void split_cell(int c);
  void rebuild_caches();
  /// Levels of all active cells adjacent across face (a,b), excluding
  /// `self`, descending into refined sub-faces.
  void collect_across(int a, int b, int self, std::vector<int>& out) const;

  std::vector<Vec2> vertices_;
  std::vector<Cell> cells_;
  std::vector<int> active_;
  std::map<std::pair<int, int>, int> edge_midpoint_;
  std::map<int, std::pair<int, int>> midpoint_parent_edge_;
  std::map<std::pair<int, int>, int> face_markers_;
  std::map<std::pair<int, int>, std::vector<int>> active_faces_;
  std::map<int, Hanging> hanging_;
  std::optional<CircleSnap> snap_;
};

/// Tensor-product grid helper: cells between consecutive x/y lines,
/// counterclockwise vertex order, all Fluid, no markers.
QuadMesh tensor_grid(const std::vector<double>& x_lines,
                     const std::vector<double>& y_lines);

}  // namespace mgfsi
