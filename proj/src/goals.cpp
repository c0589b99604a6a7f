#include "mgfsi/goals.hpp"

namespace mgfsi {

GoalSpec GoalSpec::drag(std::set<int> markers, bool interface_path,
                        const std::string& name) {
  GoalSpec g;
  g.kind = Kind::DragLift;
  g.component = 0;
  g.path_markers = std::move(markers);
  g.include_interface = interface_path;
  g.name = name;
  return g;
}

GoalSpec GoalSpec::lift(std::set<int> markers, bool interface_path,
                        const std::string& name) {
  GoalSpec g = drag(std::move(markers), interface_path, name);
  g.component = 1;
  return g;
}

GoalSpec GoalSpec::point_displacement(const Vec2& x, int comp,
                                      const std::string& name) {
  GoalSpec g;
  g.kind = Kind::PointDisplacement;
  g.point = x;
  g.component = comp;
  g.name = name;
  return g;
}

GoalSpec GoalSpec::point_pressure(const Vec2& x, const std::string& name) {
  GoalSpec g;
  g.kind = Kind::PointPressure;
  g.point = x;
  g.name = name;
  return g;
}

GoalSpec GoalSpec::flux(int marker, const std::string& name) {
  GoalSpec g;
  g.kind = Kind::BoundaryFlux;
  g.flux_marker = marker;
  g.name = name;
  return g;
}

namespace {

struct PathFace {
  int ac, f;
};

// Fluid-side faces of the goal path: marked boundary faces of fluid cells
// plus (optionally) fluid-solid interface faces seen from the fluid cell.
std::vector<PathFace> path_faces(const GoalSpec& goal, const FESpace& space) {
  std::vector<PathFace> out;
  const auto& mesh = space.mesh();
  for (int ac = 0; ac < mesh.n_active_cells(); ++ac) {
    const int c = mesh.active_cells()[ac];
    if (mesh.cell(c).material != Material::Fluid) continue;
    for (int f = 0; f < 4; ++f) {
      auto [a, b] = mesh.face_vertices(c, f);
      const int marker = mesh.face_marker(a, b);
      if (marker >= 0 && goal.path_markers.count(marker)) {
        out.push_back({ac, f});
      } else if (goal.include_interface && marker < 0 &&
                 mesh.face_is_interface(c, f)) {
        out.push_back({ac, f});
      }
    }
  }
  MGFSI_CHECK(!out.empty(), "empty path for goal " << goal.name);
  return out;
}

std::vector<PathFace> flux_faces(const GoalSpec& goal, const FESpace& space) {
  std::vector<PathFace> out;
  const auto& mesh = space.mesh();
  for (int ac = 0; ac < mesh.n_active_cells(); ++ac) {
    const int c = mesh.active_cells()[ac];
    for (int f = 0; f < 4; ++f) {
      auto [a, b] = mesh.face_vertices(c, f);
      if (mesh.face_marker(a, b) == goal.flux_marker) out.push_back({ac, f});
    }
  }
  MGFSI_CHECK(!out.empty(), "empty path for goal " << goal.name);
  return out;
}

// Face geometry helper: normal and arc weight as seen from the owning
// cell. For force paths the normal points out of the body, i.e. into the
// fluid cell that owns the face (positive drag for flow past an obstacle).
struct FaceQuad {
  std::vector<Vec2> xi;    // reference coordinates in the cell
  std::vector<double> w;   // ds * gauss weight
  Vec2 normal;
};

FaceQuad face_quad(const FESpace& space, int ac, int f, int n_q,
                   bool body_outward = false) {
  const CellGeometry geo = space.cell_geometry(ac);
  const Vec2 xa = geo.corners[f];
  const Vec2 xb = geo.corners[(f + 1) % 4];
  const Vec2 e = xb - xa;
  const double len = e.norm();
  FaceQuad fq;
  fq.normal = Vec2(e.y() / len, -e.x() / len);  // outward of the owning cell
  if (body_outward) fq.normal = -fq.normal;
  const Quadrature1D q1 = Quadrature1D::gauss(n_q);
  for (int q = 0; q < n_q; ++q) {
    const double t = 0.5 * (q1.points[q] + 1.0);
    fq.xi.push_back(face_ref_point(f, t));
    fq.w.push_back(0.5 * len * q1.weights[q]);
  }
  return fq;
}

int face_quad_points(const FESpace& space) {
  int max_deg = 1;
  for (const auto& f : space.spec().fields) max_deg = std::max(max_deg, f.degree);
  return max_deg + 2;
}

}  // namespace

double eval_goal(const GoalSpec& goal, const FESpace& space,
                 const MaterialParams& params, const Vector& U) {
  MGFSI_CHECK(U.size() == space.n_dofs(), "state size mismatch");
  switch (goal.kind) {
    case GoalSpec::Kind::PointDisplacement:
      return space.evaluate_at_point(U, space.spec().field_index("u"),
                                     goal.point)[goal.component];
    case GoalSpec::Kind::PointPressure:
      return space.evaluate_at_point(U, space.spec().field_index("p"),
                                     goal.point)[0];
    case GoalSpec::Kind::BoundaryFlux: {
      const int vf = space.spec().field_index("v");
      TensorShapes shv{space.spec().fields[vf].degree};
      const int nn = shv.n_nodes();
      double flux = 0.0;
      for (const auto& pf : flux_faces(goal, space)) {
        const auto& dofs = space.cell_field_dofs(pf.ac, vf);
        const FaceQuad fq = face_quad(space, pf.ac, pf.f, face_quad_points(space));
        for (std::size_t q = 0; q < fq.xi.size(); ++q) {
          Vec2 v = Vec2::Zero();
          for (int n = 0; n < nn; ++n) {
            const double s = shv.value(n, fq.xi[q]);
            v[0] += U[dofs[n]] * s;
            v[1] += U[dofs[nn + n]] * s;
          }
          flux += fq.w[q] * v.dot(fq.normal);
        }
      }
      return flux;
    }
    case GoalSpec::Kind::DragLift: {
      const int vf = space.spec().field_index("v");
      const int uf = space.spec().field_index("u");
      const int pfld = space.spec().field_index("p");
      TensorShapes shv{space.spec().fields[vf].degree};
      TensorShapes shu{space.spec().fields[uf].degree};
      TensorShapes shp{space.spec().fields[pfld].degree};
      const int nnv = shv.n_nodes(), nnu = shu.n_nodes(), nnp = shp.n_nodes();
      double force = 0.0;
      for (const auto& pf : path_faces(goal, space)) {
        const CellGeometry geo = space.cell_geometry(pf.ac);
        const auto& vd = space.cell_field_dofs(pf.ac, vf);
        const auto& ud = space.cell_field_dofs(pf.ac, uf);
        const auto& pd = space.cell_field_dofs(pf.ac, pfld);
        const FaceQuad fq = face_quad(space, pf.ac, pf.f, face_quad_points(space),
                                      /*body_outward=*/true);
        for (std::size_t q = 0; q < fq.xi.size(); ++q) {
          const Mat2 Jg = geo.jacobian(fq.xi[q]);
          const Mat2 jinvT = Jg.inverse().transpose();
          Mat2 Gv = Mat2::Zero(), Gu = Mat2::Zero();
          double p = 0.0;
          for (int n = 0; n < nnv; ++n) {
            const Vec2 g = jinvT * shv.grad(n, fq.xi[q]);
            for (int c = 0; c < 2; ++c) Gv.row(c) += U[vd[c * nnv + n]] * g.transpose();
          }
          for (int n = 0; n < nnu; ++n) {
            const Vec2 g = jinvT * shu.grad(n, fq.xi[q]);
            for (int c = 0; c < 2; ++c) Gu.row(c) += U[ud[c * nnu + n]] * g.transpose();
          }
          for (int n = 0; n < nnp; ++n) p += U[pd[n]] * shp.value(n, fq.xi[q]);
          const Kinematics kin = kinematics_at(Gu);
          const Mat2 sigma = stress_fluid(params, kin, Gv, p);
          const Vec2 t = kin.J * sigma * kin.FinvT * fq.normal;
          force += fq.w[q] * t[goal.component];
        }
      }
      return force;
    }
  }
  MGFSI_CHECK(false, "unreachable");
  return 0.0;
}

Vector goal_derivative(const GoalSpec& goal, const FESpace& space,
                       const MaterialParams& params, const Vector& U) {
  MGFSI_CHECK(U.size() == space.n_dofs(), "state size mismatch");
  Vector out = Vector::Zero(space.n_dofs());
  switch (goal.kind) {
    case GoalSpec::Kind::PointDisplacement:
    case GoalSpec::Kind::PointPressure: {
      const int field = goal.kind == GoalSpec::Kind::PointDisplacement
                            ? space.spec().field_index("u")
                            : space.spec().field_index("p");
      const int comp = goal.kind == GoalSpec::Kind::PointDisplacement
                           ? goal.component
                           : 0;
      auto [ac, xi] = space.locate(goal.point);
      TensorShapes sh{space.spec().fields[field].degree};
      const int nn = sh.n_nodes();
      const auto& dofs = space.cell_field_dofs(ac, field);
      for (int n = 0; n < nn; ++n)
        out[dofs[comp * nn + n]] += sh.value(n, xi);
      return out;
    }
    case GoalSpec::Kind::BoundaryFlux: {
      const int vf = space.spec().field_index("v");
      TensorShapes shv{space.spec().fields[vf].degree};
      const int nn = shv.n_nodes();
      for (const auto& pf : flux_faces(goal, space)) {
        const auto& dofs = space.cell_field_dofs(pf.ac, vf);
        const FaceQuad fq = face_quad(space, pf.ac, pf.f, face_quad_points(space));
        for (std::size_t q = 0; q < fq.xi.size(); ++q) {
          for (int n = 0; n < nn; ++n) {
            const double s = shv.value(n, fq.xi[q]);
            if (s == 0.0) continue;
            out[dofs[n]] += fq.w[q] * s * fq.normal[0];
            out[dofs[nn + n]] += fq.w[q] * s * fq.normal[1];
          }
        }
      }
      return out;
    }
    case GoalSpec::Kind::DragLift: {
      const int vf = space.spec().field_index("v");
      const int uf = space.spec().field_index("u");
      const int pfld = space.spec().field_index("p");
      TensorShapes shv{space.spec().fields[vf].degree};
      TensorShapes shu{space.spec().fields[uf].degree};
      TensorShapes shp{space.spec().fields[pfld].degree};
      const int nnv = shv.n_nodes(), nnu = shu.n_nodes(), nnp = shp.n_nodes();
      const int d = goal.component;
      const double coef = params.rho_f * params.nu_f;
      for (const auto& pf : path_faces(goal, space)) {
        const CellGeometry geo = space.cell_geometry(pf.ac);
        const auto& vd = space.cell_field_dofs(pf.ac, vf);
        const auto& ud = space.cell_field_dofs(pf.ac, uf);
        const auto& pd = space.cell_field_dofs(pf.ac, pfld);
        const FaceQuad fq = face_quad(space, pf.ac, pf.f, face_quad_points(space),
                                      /*body_outward=*/true);
        for (std::size_t q = 0; q < fq.xi.size(); ++q) {
          const Mat2 Jg = geo.jacobian(fq.xi[q]);
          const Mat2 jinvT = Jg.inverse().transpose();
          Mat2 Gv = Mat2::Zero(), Gu = Mat2::Zero();
          double p = 0.0;
          for (int n = 0; n < nnv; ++n) {
            const Vec2 g = jinvT * shv.grad(n, fq.xi[q]);
            for (int c = 0; c < 2; ++c) Gv.row(c) += U[vd[c * nnv + n]] * g.transpose();
          }
          for (int n = 0; n < nnu; ++n) {
            const Vec2 g = jinvT * shu.grad(n, fq.xi[q]);
            for (int c = 0; c < 2; ++c) Gu.row(c) += U[ud[c * nnu + n]] * g.transpose();
          }
          for (int n = 0; n < nnp; ++n) p += U[pd[n]] * shp.value(n, fq.xi[q]);
          const Kinematics kin = kinematics_at(Gu);
          const Mat2 sigma = stress_fluid(params, kin, Gv, p);
          const Vec2 nw = fq.w[q] * fq.normal;

          // velocity direction: rho nu J (H Fi + FiT H^T) FiT n
          for (int n = 0; n < nnv; ++n) {
            const Vec2 g = jinvT * shv.grad(n, fq.xi[q]);
            for (int c = 0; c < 2; ++c) {
              Mat2 H = Mat2::Zero();
              H.row(c) = g.transpose();
              const Vec2 dt =
                  coef * kin.J * ((H * kin.Finv + kin.FinvT * H.transpose()) * kin.FinvT) * nw;
              out[vd[c * nnv + n]] += dt[d];
            }
          }
          // pressure direction: -N J FiT n
          for (int n = 0; n < nnp; ++n) {
            const double N = shp.value(n, fq.xi[q]);
            const Vec2 dt = -N * kin.J * kin.FinvT * nw;
            out[pd[n]] += dt[d];
          }
          // displacement direction: geometry terms
          for (int n = 0; n < nnu; ++n) {
            const Vec2 g = jinvT * shu.grad(n, fq.xi[q]);
            for (int c = 0; c < 2; ++c) {
              Mat2 H = Mat2::Zero();
              H.row(c) = g.transpose();
              const double Jp = kin.J * (kin.Finv * H).trace();
              const Mat2 FiP = -kin.Finv * H * kin.Finv;
              const Mat2 FiTP = FiP.transpose();
              const Mat2 ds = coef * (Gv * FiP + FiTP * Gv.transpose());
              const Vec2 dt =
                  (Jp * sigma * kin.FinvT + kin.J * ds * kin.FinvT +
                   kin.J * sigma * FiTP) * nw;
              out[ud[c * nnu + n]] += dt[d];
            }
          }
        }
      }
      return out;
    }
  }
  MGFSI_CHECK(false, "unreachable");
  return out;
}

}  // namespace mgfsi
