#include "mgfsi/mesh.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

namespace mgfsi {

QuadMesh::QuadMesh(std::vector<Vec2> vertices,
                   std::vector<std::array<int, 4>> cells,
                   std::vector<Material> materials,
                   std::map<std::pair<int, int>, int> face_markers)
    : vertices_(std::move(vertices)), face_markers_(std::move(face_markers)) {
  MGFSI_CHECK(cells.size() == materials.size(),
              "cell/material count mismatch");
  cells_.reserve(cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    Cell c;
    c.verts = cells[i];
    c.material = materials[i];
    cells_.push_back(c);
  }
  rebuild_caches();
  MGFSI_CHECK(all_cells_valid(), "input mesh contains inverted cells");
}

int QuadMesh::face_marker(int a, int b) const {
  auto it = face_markers_.find(sorted_pair(a, b));
  return it == face_markers_.end() ? -1 : it->second;
}

int QuadMesh::edge_midpoint(int a, int b) const {
  auto it = edge_midpoint_.find(sorted_pair(a, b));
  return it == edge_midpoint_.end() ? -1 : it->second;
}

int QuadMesh::get_or_create_midpoint(int a, int b) {
  const auto key = sorted_pair(a, b);
  auto it = edge_midpoint_.find(key);
  if (it != edge_midpoint_.end()) return it->second;

  Vec2 m = 0.5 * (vertices_[a] + vertices_[b]);
  auto mk = face_markers_.find(key);
  if (snap_ && mk != face_markers_.end() && snap_->markers.count(mk->second)) {
    Vec2 d = m - snap_->center;
    MGFSI_CHECK(d.norm() > 1e-14, "degenerate snap");
    m = snap_->center + snap_->radius * d.normalized();
  }
  const int id = static_cast<int>(vertices_.size());
  vertices_.push_back(m);
  edge_midpoint_[key] = id;
  midpoint_parent_edge_[id] = key;
  if (mk != face_markers_.end()) {
    face_markers_[sorted_pair(a, id)] = mk->second;
    face_markers_[sorted_pair(id, b)] = mk->second;
  }
  return id;
}

void QuadMesh::split_cell(int c) {
  Cell& parent = cells_[c];
  MGFSI_CHECK(parent.is_active(), "split of non-active cell");
  const auto v = parent.verts;
  std::array<int, 4> mid;
  for (int f = 0; f < 4; ++f) mid[f] = get_or_create_midpoint(v[f], v[(f + 1) % 4]);
  const int ctr = static_cast<int>(vertices_.size());
  vertices_.push_back(0.25 * (vertices_[v[0]] + vertices_[v[1]] +
                              vertices_[v[2]] + vertices_[v[3]]));

  const std::array<std::array<int, 4>, 4> kids = {{
      {v[0], mid[0], ctr, mid[3]},
      {mid[0], v[1], mid[1], ctr},
      {ctr, mid[1], v[2], mid[2]},
      {mid[3], ctr, mid[2], v[3]},
  }};
  for (int k = 0; k < 4; ++k) {
    Cell child;
    child.verts = kids[k];
    child.level = parent.level + 1;
    child.material = parent.material;
    child.parent = c;
    cells_[c].children[k] = static_cast<int>(cells_.size());
    cells_.push_back(child);
  }
}

void QuadMesh::rebuild_caches() {
  active_.clear();
  active_faces_.clear();
  for (int c = 0; c < n_cells_total(); ++c) {
    if (!cells_[c].is_active()) continue;
    active_.push_back(c);
    for (int f = 0; f < 4; ++f) {
      auto [a, b] = face_vertices(c, f);
      active_faces_[sorted_pair(a, b)].push_back(c);
    }
  }

  hanging_.clear();
  for (int c : active_) {
    for (int f = 0; f < 4; ++f) {
      auto [a, b] = face_vertices(c, f);
      const int m = edge_midpoint(a, b);
      if (m < 0) continue;
      // The face is owned whole by c; if active cells use either half on
      // the other side, m hangs relative to this coarse face.
      auto uses = [&](int p, int q) {
        auto it = active_faces_.find(sorted_pair(p, q));
        return it != active_faces_.end();
      };
      auto key = sorted_pair(a, b);
      auto owners = active_faces_.find(key);
      const bool only_owner =
          owners != active_faces_.end() && owners->second.size() == 1 &&
          owners->second[0] == c;
      if (only_owner && (uses(a, m) || uses(m, b))) {
        Hanging h;
        h.coarse_cell = c;
        h.v0 = a;
        h.v1 = b;
        hanging_[m] = h;
      }
    }
  }
}

void QuadMesh::collect_across(int a, int b, int self,
                              std::vector<int>& out) const {
  std::vector<std::pair<int, int>> stack = {sorted_pair(a, b)};
  while (!stack.empty()) {
    auto key = stack.back();
    stack.pop_back();
    auto it = active_faces_.find(key);
    if (it != active_faces_.end()) {
      for (int c : it->second)
        if (c != self) out.push_back(c);
    }
    auto mit = edge_midpoint_.find(key);
    if (mit != edge_midpoint_.end()) {
      stack.push_back(sorted_pair(key.first, mit->second));
      stack.push_back(sorted_pair(mit->second, key.second));
    }
  }
}

std::vector<int> QuadMesh::active_neighbors(int c, int f) const {
  auto [a, b] = face_vertices(c, f);
  std::vector<int> out;
  // Same-level or finer neighbors.
  collect_across(a, b, c, out);
  if (!out.empty()) return out;
  // Coarser neighbor: walk up while one endpoint is a midpoint of an edge
  // containing the other.
  int p = a, q = b;
  for (int hop = 0; hop < 64; ++hop) {
    auto step = [&](int mid, int other, int& np, int& nq) -> bool {
      auto it = midpoint_parent_edge_.find(mid);
      if (it == midpoint_parent_edge_.end()) return false;
      auto [x, y] = it->second;
      if (other != x && other != y) return false;
      np = x;
      nq = y;
      return true;
    };
    int np, nq;
    if (step(p, q, np, nq) || step(q, p, np, nq)) {
      p = np;
      q = nq;
      auto it = active_faces_.find(sorted_pair(p, q));
      if (it != active_faces_.end()) {
        for (int d : it->second)
          if (d != c) out.push_back(d);
        if (!out.empty()) return out;
      }
    } else {
      break;
    }
  }
  return out;
}

bool QuadMesh::face_is_interface(int c, int f) const {
  for (int n : active_neighbors(c, f))
    if (cells_[n].material != cells_[c].material) return true;
  return false;
}

QuadMesh QuadMesh::uniform_refine() const {
  std::set<int> all(active_.begin(), active_.end());
  return refine_marked(all);
}

QuadMesh QuadMesh::refine_marked(const std::set<int>& marked) const {
  QuadMesh m = *this;
  for (int c : marked) {
    MGFSI_CHECK(c >= 0 && c < m.n_cells_total(), "marked cell out of range");
    if (m.cells_[c].is_active()) m.split_cell(c);
  }
  m.rebuild_caches();

  // Closure: sweep until no active cell has a neighbor two or more levels
  // finer across any face.
  for (;;) {
    std::set<int> violators;
    for (int c : m.active_) {
      for (int f = 0; f < 4; ++f) {
        auto [a, b] = m.face_vertices(c, f);
        std::vector<int> across;
        m.collect_across(a, b, c, across);
        for (int d : across) {
          if (m.cells_[d].level >= m.cells_[c].level + 2) {
            violators.insert(c);
            break;
          }
        }
      }
    }
    if (violators.empty()) break;
    for (int c : violators)
      if (m.cells_[c].is_active()) m.split_cell(c);
    m.rebuild_caches();
  }
  MGFSI_CHECK(m.all_cells_valid(), "refinement produced an inverted cell");
  return m;
}

bool QuadMesh::is_one_irregular() const {
  for (int c : active_) {
    for (int f = 0; f < 4; ++f) {
      auto [a, b] = face_vertices(c, f);
      std::vector<int> across;
      collect_across(a, b, c, across);
      for (int d : across)
        if (std::abs(cells_[d].level - cells_[c].level) >= 2) return false;
    }
  }
  return true;
}

double QuadMesh::active_area() const {
  double area = 0.0;
  for (int c : active_) {
    const auto& v = cells_[c].verts;
    double s = 0.0;
    for (int k = 0; k < 4; ++k) {
      const Vec2& p = vertices_[v[k]];
      const Vec2& q = vertices_[v[(k + 1) % 4]];
      s += p.x() * q.y() - q.x() * p.y();
    }
    area += 0.5 * s;
  }
  return area;
}

bool QuadMesh::all_cells_valid() const {
  for (int c : active_) {
    const auto& v = cells_[c].verts;
    for (int k = 0; k < 4; ++k) {
      const Vec2 e1 = vertices_[v[(k + 1) % 4]] - vertices_[v[k]];
      const Vec2 e2 = vertices_[v[(k + 3) % 4]] - vertices_[v[k]];
      if (e1.x() * e2.y() - e1.y() * e2.x() <= 0.0) return false;
    }
  }
  return true;
}

QuadMesh QuadMesh::read(std::istream& in) {
  int nv = 0, nc = 0, nf = 0;
  MGFSI_CHECK(static_cast<bool>(in >> nv >> nc >> nf), "bad mesh header");
  std::vector<Vec2> verts(nv);
  for (int i = 0; i < nv; ++i)
    MGFSI_CHECK(static_cast<bool>(in >> verts[i].x() >> verts[i].y()),
                "bad vertex line");
  std::vector<std::array<int, 4>> cells(nc);
  std::vector<Material> mats(nc);
  for (int i = 0; i < nc; ++i) {
    int m;
    MGFSI_CHECK(static_cast<bool>(in >> cells[i][0] >> cells[i][1] >>
                                  cells[i][2] >> cells[i][3] >> m),
                "bad cell line");
    mats[i] = static_cast<Material>(m);
  }
  std::map<std::pair<int, int>, int> markers;
  for (int i = 0; i < nf; ++i) {
    int a, b, mk;
    MGFSI_CHECK(static_cast<bool>(in >> a >> b >> mk), "bad face-marker line");
    markers[sorted_pair(a, b)] = mk;
  }
  return QuadMesh(std::move(verts), std::move(cells), std::move(mats),
                  std::move(markers));
}

void QuadMesh::write(std::ostream& out) const {
  // Coarsest representation only: the format describes a level-0 mesh.
  out.precision(17);
  int nc = 0;
  for (const auto& c : cells_)
    if (c.parent < 0) ++nc;
  std::map<std::pair<int, int>, int> markers;
  int max_vertex = -1;
  for (const auto& c : cells_) {
    if (c.parent >= 0) continue;
    for (int k = 0; k < 4; ++k) max_vertex = std::max(max_vertex, c.verts[k]);
    for (int f = 0; f < 4; ++f) {
      auto key = sorted_pair(c.verts[f], c.verts[(f + 1) % 4]);
      auto it = face_markers_.find(key);
      if (it != face_markers_.end()) markers[key] = it->second;
    }
  }
  out << (max_vertex + 1) << " " << nc << " " << markers.size() << "\n";
  for (int v = 0; v <= max_vertex; ++v)
    out << vertices_[v].x() << " " << vertices_[v].y() << "\n";
  for (const auto& c : cells_) {
    if (c.parent >= 0) continue;
    out << c.verts[0] << " " << c.verts[1] << " " << c.verts[2] << " "
        << c.verts[3] << " " << static_cast<int>(c.material) << "\n";
  }
  for (const auto& [key, mk] : markers)
    out << key.first << " " << key.second << " " << mk << "\n";
}

QuadMesh QuadMesh::read_file(const std::string& path) {
  std::ifstream in(path);
  MGFSI_CHECK(in.good(), "cannot open mesh file " << path);
  return read(in);
}

void QuadMesh::write_file(const std::string& path) const {
  std::ofstream out(path);
  MGFSI_CHECK(out.good(), "cannot open mesh file " << path << " for writing");
  write(out);
}

QuadMesh tensor_grid(const std::vector<double>& x_lines,
                     const std::vector<double>& y_lines) {
  const int nx = static_cast<int>(x_lines.size());
  const int ny = static_cast<int>(y_lines.size());
  MGFSI_CHECK(nx >= 2 && ny >= 2, "tensor_grid needs at least 2 lines per axis");
  std::vector<Vec2> verts;
  verts.reserve(static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) verts.emplace_back(x_lines[i], y_lines[j]);
  auto vid = [nx](int i, int j) { return j * nx + i; };
  std::vector<std::array<int, 4>> cells;
  for (int j = 0; j + 1 < ny; ++j)
    for (int i = 0; i + 1 < nx; ++i)
      cells.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)});
  std::vector<Material> mats(cells.size(), Material::Fluid);
  return QuadMesh(std::move(verts), std::move(cells), std::move(mats), {});
}

}  // namespace mgfsi
