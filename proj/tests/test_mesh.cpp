#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mgfsi/mesh.hpp"

#include <sstream>

using namespace mgfsi;

namespace {

QuadMesh unit_grid(int n) {
  std::vector<double> lines;
  for (int i = 0; i <= n; ++i) lines.push_back(static_cast<double>(i) / n);
  return tensor_grid(lines, lines);
}

}  // namespace

TEST_CASE("uniform refinement of a single cell") {
  QuadMesh m = unit_grid(1);
  CHECK(m.n_active_cells() == 1);
  QuadMesh r = m.uniform_refine();
  CHECK(r.n_active_cells() == 4);
  CHECK(r.hanging_vertices().empty());
}

TEST_CASE("uniform refinement of a 2x2 grid gives 16 cells, 25 vertices") {
  QuadMesh r = unit_grid(2).uniform_refine();
  CHECK(r.n_active_cells() == 16);
  CHECK(r.n_vertices() == 25);
  CHECK(r.hanging_vertices().empty());
}

TEST_CASE("two refinements set level 2 everywhere") {
  QuadMesh r = unit_grid(1).uniform_refine().uniform_refine();
  for (int c : r.active_cells()) CHECK(r.cell(c).level == 2);
}

TEST_CASE("marking one cell of a 2x2 grid: 7 active cells, 2 hanging vertices") {
  QuadMesh m = unit_grid(2);
  QuadMesh r = m.refine_marked({m.active_cells()[0]});
  CHECK(r.n_active_cells() == 7);
  CHECK(r.hanging_vertices().size() == 2);
  CHECK(r.is_one_irregular());
}

TEST_CASE("marking all cells equals uniform refinement") {
  QuadMesh m = unit_grid(2);
  std::set<int> all(m.active_cells().begin(), m.active_cells().end());
  QuadMesh a = m.refine_marked(all);
  QuadMesh b = m.uniform_refine();
  CHECK(a.n_active_cells() == b.n_active_cells());
  CHECK(a.n_vertices() == b.n_vertices());
}

TEST_CASE("diagonal marking on 4x4 grid needs no closure") {
  QuadMesh m = unit_grid(4);
  QuadMesh r = m.refine_marked({m.active_cells()[0], m.active_cells()[5]});
  CHECK(r.n_active_cells() == 16 - 2 + 8);
  CHECK(r.is_one_irregular());
}

TEST_CASE("closure restores 1-irregularity after repeated local refinement") {
  QuadMesh m = unit_grid(2);
  // Repeatedly refine the cell containing a corner point; closure must kick in.
  for (int step = 0; step < 4; ++step) {
    int pick = -1;
    for (int c : m.active_cells()) {
      const auto& verts = m.cell(c).verts;
      bool corner = false;
      for (int k = 0; k < 4; ++k)
        if ((m.vertex(verts[k]) - Vec2(0, 0)).norm() < 1e-14) corner = true;
      if (corner) {
        pick = c;
        break;
      }
    }
    REQUIRE(pick >= 0);
    m = m.refine_marked({pick});
    CHECK(m.is_one_irregular());
  }
  CHECK(m.all_cells_valid());
}

TEST_CASE("area is conserved under refinement (polygonal geometry)") {
  QuadMesh m = unit_grid(3);
  const double a0 = m.active_area();
  QuadMesh r = m.refine_marked({m.active_cells()[4]});
  CHECK(r.active_area() == doctest::Approx(a0).epsilon(1e-12));
  QuadMesh r2 = r.uniform_refine();
  CHECK(r2.active_area() == doctest::Approx(a0).epsilon(1e-12));
}

TEST_CASE("parent/child links invert") {
  QuadMesh m = unit_grid(2).uniform_refine();
  for (int c = 0; c < m.n_cells_total(); ++c) {
    const auto& cell = m.cell(c);
    if (cell.is_active()) continue;
    for (int k = 0; k < 4; ++k) CHECK(m.cell(cell.children[k]).parent == c);
  }
}

TEST_CASE("hanging vertices sit at face midpoints and vanish when both sides refine") {
  QuadMesh m = unit_grid(2);
  QuadMesh r = m.refine_marked({m.active_cells()[0]});
  for (const auto& [mid, h] : r.hanging_vertices()) {
    const Vec2 expect = 0.5 * (r.vertex(h.v0) + r.vertex(h.v1));
    CHECK((r.vertex(mid) - expect).norm() < 1e-14);
  }
  // Refine everything: previous hanging vertices become regular.
  QuadMesh r2 = r.uniform_refine();
  for (const auto& [mid, h] : r2.hanging_vertices()) {
    // All hanging vertices in r2 are new (midpoints of level-1 faces).
    CHECK(r2.cell(h.coarse_cell).level >= 1);
  }
  CHECK(r2.is_one_irregular());
}

TEST_CASE("mesh file round-trip") {
  QuadMesh m = unit_grid(2);
  std::stringstream ss;
  m.write(ss);
  QuadMesh back = QuadMesh::read(ss);
  CHECK(back.n_active_cells() == m.n_active_cells());
  CHECK(back.n_vertices() == m.n_vertices());
  CHECK(back.active_area() == doctest::Approx(m.active_area()).epsilon(1e-14));
}

TEST_CASE("circle snapping moves new boundary vertices onto the circle") {
  // Square with a marked bottom face, snapped to a circle through its corners.
  std::vector<Vec2> verts = {{-1, -1}, {1, -1}, {1, 1}, {-1, 1}};
  std::vector<std::array<int, 4>> cells = {{0, 1, 2, 3}};
  std::map<std::pair<int, int>, int> markers;
  markers[{0, 1}] = 7;
  QuadMesh m(verts, cells, {Material::Fluid}, markers);
  CircleSnap snap;
  snap.center = Vec2(0, 3);
  snap.radius = std::sqrt(1 + 16.0);  // circle through (-1,-1),(1,-1)
  snap.markers = {7};
  m.set_snap(snap);
  QuadMesh r = m.uniform_refine();
  bool found = false;
  for (int v = 4; v < r.n_vertices(); ++v) {
    const double d = (r.vertex(v) - snap.center).norm();
    if (std::abs(r.vertex(v).x()) < 1e-12 && r.vertex(v).y() < 0) {
      CHECK(d == doctest::Approx(snap.radius).epsilon(1e-12));
      found = true;
    }
  }
  CHECK(found);
}
