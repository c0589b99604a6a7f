#include "mgfsi/fespace.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace mgfsi {

ElementSpec ElementSpec::taylor_hood() {
  return {{{"v", 2, 2}, {"u", 2, 2}, {"p", 1, 1}}};
}

ElementSpec ElementSpec::enriched() {
  return {{{"v", 4, 2}, {"u", 4, 2}, {"p", 2, 1}}};
}

ElementSpec ElementSpec::scalar(int degree, const std::string& name) {
  return {{{name, degree, 1}}};
}

int ElementSpec::field_index(const std::string& name) const {
  for (int i = 0; i < n_fields(); ++i)
    if (fields[i].name == name) return i;
  MGFSI_CHECK(false, "unknown field " << name);
  return -1;
}

void ConstraintSet::add_line(int slave,
                             std::vector<std::pair<int, double>> masters,
                             double inhom) {
  Line l;
  l.masters = std::move(masters);
  l.inhom = inhom;
  lines_[slave] = std::move(l);
}

const ConstraintSet::Line* ConstraintSet::line(int dof) const {
  auto it = lines_.find(dof);
  return it == lines_.end() ? nullptr : &it->second;
}

void ConstraintSet::close() {
  for (int pass = 0; pass < 64; ++pass) {
    bool changed = false;
    for (auto& [slave, line] : lines_) {
      std::map<int, double> merged;
      double inhom = line.inhom;
      bool expanded = false;
      for (const auto& [m, c] : line.masters) {
        auto it = lines_.find(m);
        if (it != lines_.end()) {
          expanded = true;
          inhom += c * it->second.inhom;
          for (const auto& [mm, cc] : it->second.masters) merged[mm] += c * cc;
        } else {
          merged[m] += c;
        }
      }
      if (expanded) {
        line.masters.assign(merged.begin(), merged.end());
        line.masters.erase(
            std::remove_if(line.masters.begin(), line.masters.end(),
                           [](const auto& p) { return std::abs(p.second) < 1e-14; }),
            line.masters.end());
        line.inhom = inhom;
        changed = true;
      }
    }
    if (!changed) return;
  }
  MGFSI_CHECK(false, "constraint closure did not terminate (cycle?)");
}

void ConstraintSet::distribute(Vector& x) const {
  for (const auto& [slave, line] : lines_) {
    double v = line.inhom;
    for (const auto& [m, c] : line.masters) v += c * x[m];
    x[slave] = v;
  }
}

ConstraintSet ConstraintSet::homogeneous() const {
  ConstraintSet out = *this;
  for (auto& [slave, line] : out.lines_) line.inhom = 0.0;
  return out;
}

void ConstraintSet::merge(const ConstraintSet& other) {
  for (const auto& [slave, line] : other.lines_)
    lines_.emplace(slave, line);
}

FESpace::FESpace(const QuadMesh& mesh, ElementSpec spec)
    : mesh_(&mesh), spec_(std::move(spec)) {
  distribute_dofs();
  build_hanging_constraints();
}

namespace {

// Classification of a local tensor node: vertex (which corner), edge
// (which face + 1D index along the face direction), or interior.
struct NodeEntity {
  enum Kind { Vertex, Edge, Interior } kind;
  int which;  // corner or face
  int t;      // index along the face, 1..k-1 (Edge only)
};

NodeEntity classify_node(int degree, int node) {
  const int k = degree, k1 = degree + 1;
  const int ix = node % k1, iy = node / k1;
  const bool x0 = ix == 0, xk = ix == k, y0 = iy == 0, yk = iy == k;
  if (y0 && x0) return {NodeEntity::Vertex, 0, 0};
  if (y0 && xk) return {NodeEntity::Vertex, 1, 0};
  if (yk && xk) return {NodeEntity::Vertex, 2, 0};
  if (yk && x0) return {NodeEntity::Vertex, 3, 0};
  if (y0) return {NodeEntity::Edge, 0, ix};        // corner0 -> corner1
  if (xk) return {NodeEntity::Edge, 1, iy};        // corner1 -> corner2
  if (yk) return {NodeEntity::Edge, 2, k - ix};    // corner2 -> corner3
  if (x0) return {NodeEntity::Edge, 3, k - iy};    // corner3 -> corner0
  return {NodeEntity::Interior, 0, 0};
}

}  // namespace

void FESpace::distribute_dofs() {
  const auto& active = mesh_->active_cells();
  cell_dofs_.assign(active.size(), {});

  std::map<std::tuple<int, int, int>, int> vertex_dofs;            // field,comp,vertex
  std::map<std::tuple<int, int, int, int, int>, int> edge_dofs;    // field,comp,vmin,vmax,t

  n_dofs_ = 0;
  auto new_dof = [&](int field, int comp, const Vec2& x) {
    dof_points_.push_back(x);
    dof_field_.push_back(field);
    dof_comp_.push_back(comp);
    return n_dofs_++;
  };

  for (std::size_t a = 0; a < active.size(); ++a) {
    const int c = active[a];
    const auto& cv = mesh_->cell(c).verts;
    CellGeometry geo = cell_geometry(static_cast<int>(a));
    cell_dofs_[a].resize(spec_.n_fields());
    for (int fi = 0; fi < spec_.n_fields(); ++fi) {
      const int k = spec_.fields[fi].degree;
      TensorShapes sh{k};
      const int nn = sh.n_nodes();
      auto& dofs = cell_dofs_[a][fi];
      dofs.resize(spec_.fields[fi].components * nn);
      for (int comp = 0; comp < spec_.fields[fi].components; ++comp) {
        for (int n = 0; n < nn; ++n) {
          const NodeEntity e = classify_node(k, n);
          const Vec2 x = geo.map(sh.node_xi(n));
          int dof = -1;
          if (e.kind == NodeEntity::Vertex) {
            auto key = std::make_tuple(fi, comp, cv[e.which]);
            auto it = vertex_dofs.find(key);
            dof = it != vertex_dofs.end() ? it->second : (vertex_dofs[key] = new_dof(fi, comp, x));
          } else if (e.kind == NodeEntity::Edge) {
            const int va = cv[e.which], vb = cv[(e.which + 1) % 4];
            const int t = va < vb ? e.t : k - e.t;
            auto [vmin, vmax] = sorted_pair(va, vb);
            auto key = std::make_tuple(fi, comp, vmin, vmax, t);
            auto it = edge_dofs.find(key);
            dof = it != edge_dofs.end() ? it->second : (edge_dofs[key] = new_dof(fi, comp, x));
          } else {
            dof = new_dof(fi, comp, x);
          }
          dofs[comp * nn + n] = dof;
        }
      }
    }
  }
}

std::vector<int> FESpace::cell_dofs(int ac) const {
  std::vector<int> out;
  for (int fi = 0; fi < spec_.n_fields(); ++fi)
    out.insert(out.end(), cell_dofs_[ac][fi].begin(), cell_dofs_[ac][fi].end());
  return out;
}

std::vector<int> FESpace::face_field_dofs(int ac, int f, int field) const {
  const int k = spec_.fields[field].degree;
  const int k1 = k + 1;
  const int nn = k1 * k1;
  // Local node indices along face f, ordered from corner f to corner f+1.
  std::vector<int> local(k1);
  for (int t = 0; t <= k; ++t) {
    int ix = 0, iy = 0;
    switch (f) {
      case 0: ix = t; iy = 0; break;
      case 1: ix = k; iy = t; break;
      case 2: ix = k - t; iy = k; break;
      default: ix = 0; iy = k - t; break;
    }
    local[t] = iy * k1 + ix;
  }
  std::vector<int> out;
  out.reserve(spec_.fields[field].components * k1);
  const auto& dofs = cell_dofs_[ac][field];
  for (int comp = 0; comp < spec_.fields[field].components; ++comp)
    for (int t = 0; t <= k; ++t) out.push_back(dofs[comp * nn + local[t]]);
  return out;
}

CellGeometry FESpace::cell_geometry(int ac) const {
  const int c = mesh_->active_cells()[ac];
  const auto& cv = mesh_->cell(c).verts;
  CellGeometry geo;
  for (int i = 0; i < 4; ++i) geo.corners[i] = mesh_->vertex(cv[i]);
  return geo;
}

void FESpace::build_hanging_constraints() {
  hanging_ = ConstraintSet();
  const auto& active = mesh_->active_cells();
  // Active-cell index by cell id.
  std::map<int, int> ac_of_cell;
  for (std::size_t a = 0; a < active.size(); ++a) ac_of_cell[active[a]] = static_cast<int>(a);

  for (const auto& [mid, h] : mesh_->hanging_vertices()) {
    const int coarse_ac = ac_of_cell.at(h.coarse_cell);
    // Which local face of the coarse cell is (v0,v1)?
    int cf = -1;
    for (int f = 0; f < 4; ++f) {
      auto [a, b] = mesh_->face_vertices(h.coarse_cell, f);
      if (sorted_pair(a, b) == sorted_pair(h.v0, h.v1)) {
        cf = f;
        break;
      }
    }
    MGFSI_CHECK(cf >= 0, "hanging record face not found");
    auto [fa, fb] = mesh_->face_vertices(h.coarse_cell, cf);
    // Face parameter below runs from fa (t=0) to fb (t=1).

    // Fine cells across the two halves.
    auto fine_owner = [&](int p, int q) -> std::pair<int, int> {
      // active cell owning face (p,q) and its local face index
      for (std::size_t a = 0; a < active.size(); ++a) {
        for (int f = 0; f < 4; ++f) {
          auto [x, y] = mesh_->face_vertices(active[a], f);
          if (sorted_pair(x, y) == sorted_pair(p, q))
            return {static_cast<int>(a), f};
        }
      }
      return {-1, -1};
    };

    for (int fi = 0; fi < spec_.n_fields(); ++fi) {
      const int k = spec_.fields[fi].degree;
      const int ncomp = spec_.fields[fi].components;
      const auto coarse_face = face_field_dofs(coarse_ac, cf, fi);
      // Slave positions (face parameter in [0,1]) and dof ids.
      for (int half = 0; half < 2; ++half) {
        const int p = half == 0 ? fa : mid;
        const int q = half == 0 ? mid : fb;
        auto [fine_ac, fine_f] = fine_owner(p, q);
        if (fine_ac < 0) continue;  // half not present (boundary-ish), skip
        const auto fine_face = face_field_dofs(fine_ac, fine_f, fi);
        auto [sa, sb] = mesh_->face_vertices(active[fine_ac], fine_f);
        // Face parameter of the fine face's node t (fine face runs sa->sb).
        auto coarse_param = [&](int t) {
          const double tau = static_cast<double>(t) / k;
          const double local = sa == p ? tau : 1.0 - tau;  // param from p to q
          return half == 0 ? 0.5 * local : 0.5 + 0.5 * local;
        };
        for (int comp = 0; comp < ncomp; ++comp) {
          for (int t = 0; t <= k; ++t) {
            const double s = coarse_param(t);
            // Endpoints of the coarse face are conforming (s = 0 or 1).
            if (std::abs(s) < 1e-12 || std::abs(s - 1.0) < 1e-12) continue;
            const int slave = fine_face[comp * (k + 1) + t];
            if (hanging_.is_constrained(slave)) continue;
            std::vector<std::pair<int, double>> masters;
            for (int j = 0; j <= k; ++j) {
              const double w = lagrange_value(k, j, -1.0 + 2.0 * s);
              if (std::abs(w) < 1e-14) continue;
              masters.emplace_back(coarse_face[comp * (k + 1) + j], w);
            }
            hanging_.add_line(slave, std::move(masters));
          }
        }
      }
    }
  }
  hanging_.close();
}

std::pair<int, Vec2> FESpace::locate(const Vec2& x) const {
  const auto& active = mesh_->active_cells();
  for (std::size_t a = 0; a < active.size(); ++a) {
    CellGeometry geo = cell_geometry(static_cast<int>(a));
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    for (const auto& c : geo.corners) {
      xmin = std::min(xmin, c.x());
      xmax = std::max(xmax, c.x());
      ymin = std::min(ymin, c.y());
      ymax = std::max(ymax, c.y());
    }
    const double tol = 1e-10 * (1.0 + xmax - xmin);
    if (x.x() < xmin - tol || x.x() > xmax + tol || x.y() < ymin - tol ||
        x.y() > ymax + tol)
      continue;
    Vec2 xi;
    if (!geo.invert(x, xi)) continue;
    if (xi.cwiseAbs().maxCoeff() <= 1.0 + 1e-9)
      return {static_cast<int>(a), xi};
  }
  MGFSI_CHECK(false, "point (" << x.x() << "," << x.y() << ") outside mesh");
  return {-1, {}};
}

std::vector<double> FESpace::evaluate_at_point(const Vector& coeffs, int field,
                                               const Vec2& x) const {
  auto [ac, xi] = locate(x);
  const int k = spec_.fields[field].degree;
  TensorShapes sh{k};
  const int nn = sh.n_nodes();
  const auto& dofs = cell_dofs_[ac][field];
  std::vector<double> out(spec_.fields[field].components, 0.0);
  for (int comp = 0; comp < spec_.fields[field].components; ++comp)
    for (int n = 0; n < nn; ++n)
      out[comp] += coeffs[dofs[comp * nn + n]] * sh.value(n, xi);
  return out;
}

Vector interpolate(const FESpace& from, const FESpace& to, const Vector& coeffs) {
  MGFSI_CHECK(&from.mesh() == &to.mesh(), "interpolation requires the same mesh");
  MGFSI_CHECK(from.spec().n_fields() == to.spec().n_fields(),
              "field lists incompatible");
  MGFSI_CHECK(coeffs.size() == from.n_dofs(), "coefficient size mismatch");
  Vector out = Vector::Zero(to.n_dofs());
  const int n_active = from.mesh().n_active_cells();
  for (int a = 0; a < n_active; ++a) {
    for (int fi = 0; fi < from.spec().n_fields(); ++fi) {
      const int kf = from.spec().fields[fi].degree;
      const int kt = to.spec().fields[fi].degree;
      const int ncomp = from.spec().fields[fi].components;
      MGFSI_CHECK(ncomp == to.spec().fields[fi].components,
                  "component mismatch in field " << fi);
      TensorShapes shf{kf}, sht{kt};
      const int nnf = shf.n_nodes(), nnt = sht.n_nodes();
      const auto& df = from.cell_field_dofs(a, fi);
      const auto& dt = to.cell_field_dofs(a, fi);
      for (int comp = 0; comp < ncomp; ++comp) {
        for (int nt = 0; nt < nnt; ++nt) {
          const Vec2 xi = sht.node_xi(nt);
          double v = 0.0;
          for (int nf = 0; nf < nnf; ++nf)
            v += coeffs[df[comp * nnf + nf]] * shf.value(nf, xi);
          out[dt[comp * nnt + nt]] = v;
        }
      }
    }
  }
  to.hanging_constraints().distribute(out);
  return out;
}

}  // namespace mgfsi
