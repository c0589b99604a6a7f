#include "mgfsi/model.hpp"

#include <cmath>

namespace mgfsi {

Kinematics kinematics_at(const Mat2& grad_u) {
  Kinematics k;
  k.F = Mat2::Identity() + grad_u;
  k.J = k.F.determinant();
  MGFSI_CHECK(k.J > 0.0, "non-positive deformation determinant J=" << k.J
                             << " (mesh tangling)");
  k.Finv = k.F.inverse();
  k.FinvT = k.Finv.transpose();
  k.E = 0.5 * (k.F.transpose() * k.F - Mat2::Identity());
  return k;
}

Mat2 stress_fluid(const MaterialParams& p, const Kinematics& kin,
                  const Mat2& grad_v, double pressure) {
  return -pressure * Mat2::Identity() +
         p.rho_f * p.nu_f *
             (grad_v * kin.Finv + kin.FinvT * grad_v.transpose());
}

Mat2 stress_solid_stvk(const MaterialParams& p, const Kinematics& kin) {
  const Mat2 S = p.lambda_s() * kin.E.trace() * Mat2::Identity() +
                 2.0 * p.mu_s * kin.E;
  return kin.F * S;
}

ConstraintSet dirichlet_constraints(const FESpace& space, const CaseBcs& bcs) {
  ConstraintSet out;
  const auto& mesh = space.mesh();
  const int n_active = mesh.n_active_cells();
  for (int ac = 0; ac < n_active; ++ac) {
    const int c = mesh.active_cells()[ac];
    for (int f = 0; f < 4; ++f) {
      auto [a, b] = mesh.face_vertices(c, f);
      const int marker = mesh.face_marker(a, b);
      if (marker < 0) continue;
      for (const auto& bc : bcs.dirichlet) {
        if (bc.marker != marker) continue;
        const int k = space.spec().fields[bc.field].degree;
        const int ncomp = space.spec().fields[bc.field].components;
        const auto dofs = space.face_field_dofs(ac, f, bc.field);
        for (int comp = 0; comp < ncomp; ++comp) {
          for (int t = 0; t <= k; ++t) {
            const int d = dofs[comp * (k + 1) + t];
            out.add_line(d, {}, bc.value(space.dof_point(d), comp));
          }
        }
      }
    }
  }
  if (bcs.pin) {
    const int pf = space.spec().field_index("p");
    int best = -1;
    double best_d = 1e300;
    for (int d = 0; d < space.n_dofs(); ++d) {
      if (space.dof_field(d) != pf) continue;
      const double dist = (space.dof_point(d) - bcs.pin->point).norm();
      if (dist < best_d) {
        best_d = dist;
        best = d;
      }
    }
    MGFSI_CHECK(best >= 0, "no pressure dof found for pin");
    out.add_line(best, {}, bcs.pin->value);
  }
  if (bcs.mean_gauge.enabled) {
    // Weights w_j = integral of the pressure shape over the fluid; the
    // heaviest DoF is slaved to keep sum w_j p_j = target * area.
    const int pf = space.spec().field_index("p");
    const int deg = space.spec().fields[pf].degree;
    TensorShapes sh{deg};
    const QuadratureCell quad = QuadratureCell::gauss(deg + 1);
    std::map<int, double> w;
    double area = 0.0;
    for (int ac = 0; ac < mesh.n_active_cells(); ++ac) {
      const int c = mesh.active_cells()[ac];
      if (mesh.cell(c).material != Material::Fluid) continue;
      CellGeometry geo = space.cell_geometry(ac);
      const auto& dofs = space.cell_field_dofs(ac, pf);
      for (int q = 0; q < quad.size(); ++q) {
        const double jxw =
            geo.jacobian(quad.points[q]).determinant() * quad.weights[q];
        area += jxw;
        for (int n = 0; n < sh.n_nodes(); ++n)
          w[dofs[n]] += jxw * sh.value(n, quad.points[q]);
      }
    }
    int slave = -1;
    double wmax = 0.0;
    for (const auto& [d, wd] : w) {
      if (std::abs(wd) > wmax && !out.is_constrained(d) &&
          !space.hanging_constraints().is_constrained(d)) {
        wmax = std::abs(wd);
        slave = d;
      }
    }
    MGFSI_CHECK(slave >= 0, "no pressure dof available for the mean gauge");
    std::vector<std::pair<int, double>> masters;
    for (const auto& [d, wd] : w)
      if (d != slave && std::abs(wd) > 1e-15 * wmax)
        masters.emplace_back(d, -wd / w[slave]);
    out.add_line(slave, std::move(masters),
                 bcs.mean_gauge.target * area / w[slave]);
  }
  if (bcs.volume_gauge.enabled) {
    // Weights w_j = int_Gamma_i phi_j . n ds over interface faces of solid
    // cells (n pointing out of the solid).
    const int ufld2 = space.spec().field_index("u");
    const int k = space.spec().fields[ufld2].degree;
    const Quadrature1D q1 = Quadrature1D::gauss(k + 1);
    TensorShapes sh{k};
    const int nn = sh.n_nodes();
    std::map<int, double> w;
    for (int ac = 0; ac < mesh.n_active_cells(); ++ac) {
      const int c = mesh.active_cells()[ac];
      if (mesh.cell(c).material != Material::Solid) continue;
      for (int f = 0; f < 4; ++f) {
        if (!mesh.face_is_interface(c, f)) continue;
        CellGeometry geo = space.cell_geometry(ac);
        const Vec2 xa = geo.corners[f], xb = geo.corners[(f + 1) % 4];
        const Vec2 e = xb - xa;
        const double len = e.norm();
        const Vec2 nrm(e.y() / len, -e.x() / len);
        const auto& dofs = space.cell_field_dofs(ac, ufld2);
        for (int q = 0; q < static_cast<int>(q1.points.size()); ++q) {
          const double t = 0.5 * (q1.points[q] + 1.0);
          const Vec2 xi = face_ref_point(f, t);
          const double jxw = 0.5 * len * q1.weights[q];
          for (int n = 0; n < nn; ++n) {
            const double s = sh.value(n, xi);
            if (s == 0.0) continue;
            for (int comp = 0; comp < 2; ++comp)
              w[dofs[comp * nn + n]] += jxw * s * nrm[comp];
          }
        }
      }
    }
    int slave = -1;
    double wmax = 0.0;
    for (const auto& [d, wd] : w) {
      if (std::abs(wd) > wmax && !out.is_constrained(d) &&
          !space.hanging_constraints().is_constrained(d)) {
        wmax = std::abs(wd);
        slave = d;
      }
    }
    MGFSI_CHECK(slave >= 0, "no displacement dof available for the volume gauge");
    std::vector<std::pair<int, double>> masters;
    for (const auto& [d, wd] : w)
      if (d != slave && std::abs(wd) > 1e-15 * wmax)
        masters.emplace_back(d, -wd / w[slave]);
    out.add_line(slave, std::move(masters),
                 bcs.volume_gauge.target / w[slave]);
  }
  return out;
}

FsiAssembler::FsiAssembler(const FESpace& space, MaterialParams params,
                           CaseBcs bcs, int n_gauss)
    : space_(&space), params_(std::move(params)), bcs_(std::move(bcs)) {
  int max_deg = 1;
  for (const auto& f : space.spec().fields) max_deg = std::max(max_deg, f.degree);
  n_gauss_ = n_gauss > 0 ? n_gauss : max_deg + 1;
  quad_ = QuadratureCell::gauss(n_gauss_);
  for (const auto& f : space.spec().fields)
    fields_.push_back({f.degree, f.components, ShapeTable(f.degree, quad_.points)});

  // Pressure and displacement DoFs on faces separating materials.
  const auto& mesh = space.mesh();
  const int pf = space.spec().field_index("p");
  const int ufld = space.spec().field_index("u");
  for (int ac = 0; ac < mesh.n_active_cells(); ++ac) {
    const int c = mesh.active_cells()[ac];
    for (int f = 0; f < 4; ++f) {
      if (!mesh.face_is_interface(c, f)) continue;
      for (int d : space.face_field_dofs(ac, f, pf)) iface_p_.insert(d);
      for (int d : space.face_field_dofs(ac, f, ufld)) iface_u_.insert(d);
    }
  }

  // Neumann faces.
  for (int ac = 0; ac < mesh.n_active_cells(); ++ac) {
    const int c = mesh.active_cells()[ac];
    for (int f = 0; f < 4; ++f) {
      auto [a, b] = mesh.face_vertices(c, f);
      const int marker = mesh.face_marker(a, b);
      if (marker < 0) continue;
      for (const auto& nb : bcs_.neumann)
        if (nb.marker == marker) neumann_faces_.push_back({ac, f, nb.pressure});
    }
  }
}

namespace {

// Per-cell, per-field state at the quadrature points.
struct FieldState {
  std::vector<Vec2> val;   // vector fields; x-component only for scalars
  std::vector<double> sval;
  std::vector<Mat2> grad;        // row c = gradient of component c
  std::vector<Vec2> sgrad;
};

void evaluate_field(const std::vector<double>& local, int ncomp,
                    const ShapeTable& tab, const std::vector<Mat2>& jinvT,
                    FieldState& out) {
  const int nq = static_cast<int>(tab.values.size());
  const int nn = tab.n_nodes();
  if (ncomp == 2) {
    out.val.assign(nq, Vec2::Zero());
    out.grad.assign(nq, Mat2::Zero());
    for (int q = 0; q < nq; ++q) {
      for (int n = 0; n < nn; ++n) {
        const Vec2 g = jinvT[q] * tab.grads[q][n];
        for (int c = 0; c < 2; ++c) {
          const double a = local[c * nn + n];
          out.val[q][c] += a * tab.values[q][n];
          out.grad[q].row(c) += a * g.transpose();
        }
      }
    }
  } else {
    out.sval.assign(nq, 0.0);
    out.sgrad.assign(nq, Vec2::Zero());
    for (int q = 0; q < nq; ++q) {
      for (int n = 0; n < nn; ++n) {
        const double a = local[n];
        out.sval[q] += a * tab.values[q][n];
        out.sgrad[q] += a * (jinvT[q] * tab.grads[q][n]);
      }
    }
  }
}

}  // namespace

void FsiAssembler::cell_residual_coeffs(int ac, const Vector& U,
                                        const QuadratureCell& quad,
                                        std::vector<ResidualCoeffs>& out) const {
  const auto& mesh = space_->mesh();
  const int c = mesh.active_cells()[ac];
  const Material mat = mesh.cell(c).material;
  const CellGeometry geo = space_->cell_geometry(ac);
  const int nq = quad.size();

  std::vector<double> jxw(nq);
  std::vector<Mat2> jinvT(nq);
  std::vector<Vec2> xq(nq);
  for (int q = 0; q < nq; ++q) {
    const Mat2 Jg = geo.jacobian(quad.points[q]);
    const double det = Jg.determinant();
    jxw[q] = det * quad.weights[q];
    jinvT[q] = Jg.inverse().transpose();
    xq[q] = geo.map(quad.points[q]);
  }

  const int vf = space_->spec().field_index("v");
  const int uf = space_->spec().field_index("u");
  const int pf = space_->spec().field_index("p");

  auto gather = [&](int field) {
    const auto& dofs = space_->cell_field_dofs(ac, field);
    std::vector<double> local(dofs.size());
    for (std::size_t i = 0; i < dofs.size(); ++i) local[i] = U[dofs[i]];
    return local;
  };

  FieldState v, u, p;
  ShapeTable tv(space_->spec().fields[vf].degree, quad.points);
  ShapeTable tu(space_->spec().fields[uf].degree, quad.points);
  ShapeTable tp(space_->spec().fields[pf].degree, quad.points);
  evaluate_field(gather(vf), 2, tv, jinvT, v);
  evaluate_field(gather(uf), 2, tu, jinvT, u);
  evaluate_field(gather(pf), 1, tp, jinvT, p);

  out.assign(nq, ResidualCoeffs{});
  for (int q = 0; q < nq; ++q) {
    const Kinematics kin = kinematics_at(u.grad[q]);
    ResidualCoeffs& r = out[q];
    if (mat == Material::Fluid) {
      const Mat2 sigma = stress_fluid(params_, kin, v.grad[q], p.sval[q]);
      r.Rv = kin.J * sigma * kin.FinvT;
      r.rv = params_.convection * params_.rho_f * kin.J *
             (v.grad[q] * (kin.Finv * v.val[q]));
      if (params_.f_fluid)
        r.rv -= params_.rho_f * kin.J * params_.f_fluid(xq[q]);
      r.Ru = params_.alpha_u * u.grad[q];
      r.rp = kin.J * (kin.Finv * v.grad[q]).trace();
    } else {
      r.Rv = stress_solid_stvk(params_, kin);
      if (params_.f_solid) r.rv = -params_.rho_s * params_.f_solid(xq[q]);
      r.ru = v.val[q];
    }
    r.rv *= jxw[q];
    r.Rv *= jxw[q];
    r.ru *= jxw[q];
    r.Ru *= jxw[q];
    r.rp *= jxw[q];
  }
}

void FsiAssembler::face_traction(const NeumannFace& nf, const Vector& U,
                                 int n_q, std::vector<Vec2>& traction,
                                 std::vector<Vec2>& xi_points) const {
  const CellGeometry geo = space_->cell_geometry(nf.ac);
  const Vec2 xa = geo.corners[nf.f];
  const Vec2 xb = geo.corners[(nf.f + 1) % 4];
  const Vec2 e = xb - xa;
  const double len = e.norm();
  const Vec2 nrm(e.y() / len, -e.x() / len);

  const Quadrature1D q1 = Quadrature1D::gauss(n_q);
  traction.resize(n_q);
  xi_points.resize(n_q);

  const int vf = space_->spec().field_index("v");
  const int uf = space_->spec().field_index("u");
  const auto& vdofs = space_->cell_field_dofs(nf.ac, vf);
  const auto& udofs = space_->cell_field_dofs(nf.ac, uf);
  TensorShapes shv{space_->spec().fields[vf].degree};
  TensorShapes shu{space_->spec().fields[uf].degree};
  const int nnv = shv.n_nodes(), nnu = shu.n_nodes();

  for (int q = 0; q < n_q; ++q) {
    const double t = 0.5 * (q1.points[q] + 1.0);
    const Vec2 xi = face_ref_point(nf.f, t);
    xi_points[q] = xi;
    const Mat2 Jg = geo.jacobian(xi);
    const Mat2 jinvT = Jg.inverse().transpose();
    Mat2 Gv = Mat2::Zero(), Gu = Mat2::Zero();
    for (int n = 0; n < nnv; ++n) {
      const Vec2 g = jinvT * shv.grad(n, xi);
      for (int c = 0; c < 2; ++c) Gv.row(c) += U[vdofs[c * nnv + n]] * g.transpose();
    }
    for (int n = 0; n < nnu; ++n) {
      const Vec2 g = jinvT * shu.grad(n, xi);
      for (int c = 0; c < 2; ++c) Gu.row(c) += U[udofs[c * nnu + n]] * g.transpose();
    }
    const Kinematics kin = kinematics_at(Gu);
    // traction = -P n + rho nu J F^{-T} Gv^T F^{-T} n  (do-nothing correction)
    Vec2 tr = -nf.pressure * nrm + params_.rho_f * params_.nu_f * kin.J *
                                       (kin.FinvT * Gv.transpose() * kin.FinvT * nrm);
    traction[q] = tr * (0.5 * len * q1.weights[q]);
  }
}

Vector FsiAssembler::residual(const Vector& U, bool with_gauge) const {
  MGFSI_CHECK(U.size() == space_->n_dofs(), "state size mismatch");
  Vector R = Vector::Zero(space_->n_dofs());
  const auto& mesh = space_->mesh();
  const int vf = space_->spec().field_index("v");
  const int uf = space_->spec().field_index("u");
  const int pf = space_->spec().field_index("p");
  const int nq = quad_.size();

  std::vector<ResidualCoeffs> coeffs;
  for (int ac = 0; ac < mesh.n_active_cells(); ++ac) {
    cell_residual_coeffs(ac, U, quad_, coeffs);
    const CellGeometry geo = space_->cell_geometry(ac);
    const bool fluid =
        mesh.cell(mesh.active_cells()[ac]).material == Material::Fluid;

    std::vector<Mat2> jinvT(nq);
    for (int q = 0; q < nq; ++q)
      jinvT[q] = geo.jacobian(quad_.points[q]).inverse().transpose();

    // R_j -= A-contribution against test function j.
    auto apply_vec = [&](int field, const FieldCache& fc, auto value_coeff,
                         auto grad_coeff, auto skip) {
      const auto& dofs = space_->cell_field_dofs(ac, field);
      const int nn = fc.table.n_nodes();
      for (int comp = 0; comp < 2; ++comp) {
        for (int n = 0; n < nn; ++n) {
          if (skip(dofs[comp * nn + n])) continue;
          double a = 0.0;
          for (int q = 0; q < nq; ++q) {
            const Vec2 g = jinvT[q] * fc.table.grads[q][n];
            a += value_coeff(q, comp) * fc.table.values[q][n] +
                 grad_coeff(q, comp).dot(g);
          }
          R[dofs[comp * nn + n]] -= a;
        }
      }
    };

    auto no_skip = [](int) { return false; };
    apply_vec(vf, fields_[vf],
              [&](int q, int c) { return coeffs[q].rv[c]; },
              [&](int q, int c) { return Vec2(coeffs[q].Rv.row(c)); }, no_skip);
    // On fluid cells the displacement block is pure mesh motion; interface
    // test DoFs are excluded (their equation is the solid-side one).
    apply_vec(uf, fields_[uf],
              [&](int q, int c) { return coeffs[q].ru[c]; },
              [&](int q, int c) { return Vec2(coeffs[q].Ru.row(c)); },
              [&](int d) {
                return fluid && !params_.global_mesh_coupling &&
                       iface_u_.count(d) > 0;
              });
    {
      const auto& dofs = space_->cell_field_dofs(ac, pf);
      const auto& tab = fields_[pf].table;
      const int nn = tab.n_nodes();
      for (int n = 0; n < nn; ++n) {
        double a = 0.0;
        for (int q = 0; q < nq; ++q) a += coeffs[q].rp * tab.values[q][n];
        R[dofs[n]] -= a;
      }
    }

    // Solid pressure closure (gauge), skipping interface test DoFs.
    const int c = mesh.active_cells()[ac];
    if (with_gauge && mesh.cell(c).material == Material::Solid) {
      const auto& dofs = space_->cell_field_dofs(ac, pf);
      const auto& tab = fields_[pf].table;
      const int nn = tab.n_nodes();
      std::vector<double> jxw(nq), pval(nq, 0.0);
      for (int q = 0; q < nq; ++q) {
        jxw[q] = geo.jacobian(quad_.points[q]).determinant() * quad_.weights[q];
        for (int n = 0; n < nn; ++n) pval[q] += U[dofs[n]] * tab.values[q][n];
      }
      for (int n = 0; n < nn; ++n) {
        if (iface_p_.count(dofs[n])) continue;
        double a = 0.0;
        for (int q = 0; q < nq; ++q) a += pval[q] * tab.values[q][n] * jxw[q];
        R[dofs[n]] -= a;
      }
    }
  }

  // Neumann boundary terms: A includes -t.psi^v, so R_j += t.psi_j.
  for (const auto& nf : neumann_faces_) {
    std::vector<Vec2> tr;
    std::vector<Vec2> xi;
    face_traction(nf, U, n_gauss_ + 1, tr, xi);
    const auto& dofs = space_->cell_field_dofs(nf.ac, vf);
    TensorShapes shv{space_->spec().fields[vf].degree};
    const int nn = shv.n_nodes();
    for (std::size_t q = 0; q < tr.size(); ++q) {
      for (int n = 0; n < nn; ++n) {
        const double s = shv.value(n, xi[q]);
        if (s == 0.0) continue;
        for (int c = 0; c < 2; ++c) R[dofs[c * nn + n]] += tr[q][c] * s;
      }
    }
  }
  return R;
}

void FsiAssembler::build_pattern(const ConstraintSet* extra) const {
  const int signature =
      extra == nullptr ? 0 : 1 + extra->n_constraints();
  if (pattern_signature_ == signature) return;
  const auto& mesh = space_->mesh();
  PatternBuilder pb(space_->n_dofs());
  // The caller's (closed) set is authoritative: constraint chains through
  // e.g. the mean gauge widen master lists beyond the raw hanging lines.
  ConstraintSet merged = extra ? *extra : space_->hanging_constraints();
  if (extra) merged.merge(space_->hanging_constraints());
  for (int ac = 0; ac < mesh.n_active_cells(); ++ac)
    pb.add_clique(expand_dofs_with_masters(space_->cell_dofs(ac), merged));
  // Diagonal always present (constraint rows, pins).
  for (int d = 0; d < space_->n_dofs(); ++d) pb.add(d, d);
  // Constraint rows reference all their masters.
  for (const auto& [slave, line] : merged.lines()) {
    std::vector<int> clique = {slave};
    for (const auto& [m, c] : line.masters) clique.push_back(m);
    pb.add_clique(clique);
  }
  pattern_ = pb.take();
  pattern_signature_ = signature;
}

SparseMatrix FsiAssembler::jacobian(const Vector& U, bool with_gauge,
                                    const ConstraintSet* pattern_constraints) const {
  MGFSI_CHECK(U.size() == space_->n_dofs(), "state size mismatch");
  build_pattern(pattern_constraints);
  SparseMatrix K(space_->n_dofs(), pattern_);

  const auto& mesh = space_->mesh();
  const int vf = space_->spec().field_index("v");
  const int uf = space_->spec().field_index("u");
  const int pf = space_->spec().field_index("p");
  const int nq = quad_.size();

  const double rho_f = params_.rho_f, nu_f = params_.nu_f;
  const double mu = params_.mu_s, lambda = params_.lambda_s();

  // Local dof descriptors per field: (field, comp, node).
  struct LocalDof {
    int field, comp, node, global;
  };

  for (int ac = 0; ac < mesh.n_active_cells(); ++ac) {
    const int c = mesh.active_cells()[ac];
    const Material mat = mesh.cell(c).material;
    const CellGeometry geo = space_->cell_geometry(ac);

    std::vector<double> jxw(nq);
    std::vector<Mat2> jinvT(nq);
    for (int q = 0; q < nq; ++q) {
      const Mat2 Jg = geo.jacobian(quad_.points[q]);
      jxw[q] = Jg.determinant() * quad_.weights[q];
      jinvT[q] = Jg.inverse().transpose();
    }

    std::vector<LocalDof> dofs;
    for (int fi : {vf, uf, pf}) {
      const auto& d = space_->cell_field_dofs(ac, fi);
      const int nn = fields_[fi].table.n_nodes();
      for (int comp = 0; comp < fields_[fi].ncomp; ++comp)
        for (int n = 0; n < nn; ++n)
          dofs.push_back({fi, comp, n, d[comp * nn + n]});
    }
    const int nd = static_cast<int>(dofs.size());
    Eigen::MatrixXd Kloc = Eigen::MatrixXd::Zero(nd, nd);

    // State at quadrature points.
    std::vector<ResidualCoeffs> dummy;  // not needed; evaluate inline
    FieldState v, u, p;
    auto gather = [&](int field) {
      const auto& dd = space_->cell_field_dofs(ac, field);
      std::vector<double> local(dd.size());
      for (std::size_t i = 0; i < dd.size(); ++i) local[i] = U[dd[i]];
      return local;
    };
    evaluate_field(gather(vf), 2, fields_[vf].table, jinvT, v);
    evaluate_field(gather(uf), 2, fields_[uf].table, jinvT, u);
    evaluate_field(gather(pf), 1, fields_[pf].table, jinvT, p);

    for (int q = 0; q < nq; ++q) {
      const Kinematics kin = kinematics_at(u.grad[q]);
      const Mat2& Gv = v.grad[q];
      const Vec2& vv = v.val[q];
      const Mat2& Fi = kin.Finv;
      const Mat2& FiT = kin.FinvT;
      const double J = kin.J;

      Mat2 sigma;
      if (mat == Material::Fluid) sigma = stress_fluid(params_, kin, Gv, p.sval[q]);
      const Mat2 Ssolid = mat == Material::Solid
                              ? Mat2(lambda * kin.E.trace() * Mat2::Identity() +
                                     2.0 * mu * kin.E)
                              : Mat2::Zero();

      // Physical shape values/gradients per field at this point.
      struct ShapeAtQ {
        double val;
        Vec2 grad;
      };
      std::vector<ShapeAtQ> sv(fields_[vf].table.n_nodes());
      std::vector<ShapeAtQ> su(fields_[uf].table.n_nodes());
      std::vector<ShapeAtQ> sp(fields_[pf].table.n_nodes());
      for (std::size_t n = 0; n < sv.size(); ++n)
        sv[n] = {fields_[vf].table.values[q][n], jinvT[q] * fields_[vf].table.grads[q][n]};
      for (std::size_t n = 0; n < su.size(); ++n)
        su[n] = {fields_[uf].table.values[q][n], jinvT[q] * fields_[uf].table.grads[q][n]};
      for (std::size_t n = 0; n < sp.size(); ++n)
        sp[n] = {fields_[pf].table.values[q][n], jinvT[q] * fields_[pf].table.grads[q][n]};

      const double w = jxw[q];

      for (int jdof = 0; jdof < nd; ++jdof) {
        const LocalDof& tr = dofs[jdof];
        // Derivative coefficients for this trial direction.
        Vec2 drv = Vec2::Zero();
        Mat2 dRv = Mat2::Zero();
        Vec2 dru = Vec2::Zero();
        Mat2 dRu = Mat2::Zero();
        double drp = 0.0;
        bool any = false;

        if (tr.field == vf) {
          const double N = sv[tr.node].val;
          const Vec2& g = sv[tr.node].grad;
          Mat2 H = Mat2::Zero();
          H.row(tr.comp) = g.transpose();
          if (mat == Material::Fluid) {
            dRv = rho_f * nu_f * J * (H * Fi + FiT * H.transpose()) * FiT;
            Vec2 dv = Vec2::Zero();
            dv[tr.comp] = N;
            const Vec2 conv = H * (Fi * vv) + Gv * (Fi * dv);
            drv = params_.convection * rho_f * J * conv;
            drp = J * (Fi * H).trace();
            any = true;
          } else {
            dru[tr.comp] = N;
            any = true;
          }
        } else if (tr.field == uf) {
          const Vec2& g = su[tr.node].grad;
          Mat2 H = Mat2::Zero();
          H.row(tr.comp) = g.transpose();
          if (mat == Material::Fluid) {
            const double Jp = J * (Fi * H).trace();
            const Mat2 FiP = -Fi * H * Fi;
            const Mat2 FiTP = FiP.transpose();
            const Mat2 dsigma = rho_f * nu_f * (Gv * FiP + FiTP * Gv.transpose());
            dRv = Jp * sigma * FiT + J * dsigma * FiT + J * sigma * FiTP;
            drv = params_.convection * rho_f * (Gv * ((Jp * Fi + J * FiP) * vv));
            dRu = params_.alpha_u * H;
            drp = Jp * (Fi * Gv).trace() + J * (FiP * Gv).trace();
            any = true;
          } else {
            const Mat2 Ep = 0.5 * (H.transpose() * kin.F + kin.F.transpose() * H);
            const Mat2 Sp = lambda * Ep.trace() * Mat2::Identity() + 2.0 * mu * Ep;
            dRv = H * Ssolid + kin.F * Sp;
            any = true;
          }
        } else {  // pressure trial
          if (mat == Material::Fluid) {
            const double N = sp[tr.node].val;
            dRv = -N * J * FiT;
            any = true;
          }
        }
        if (!any) continue;

        // Contract with every test function.
        for (int idof = 0; idof < nd; ++idof) {
          const LocalDof& te = dofs[idof];
          double a = 0.0;
          if (te.field == vf) {
            a = drv[te.comp] * sv[te.node].val + dRv.row(te.comp).dot(sv[te.node].grad);
          } else if (te.field == uf) {
            if (mat == Material::Fluid && !params_.global_mesh_coupling &&
                iface_u_.count(te.global))
              continue;
            a = dru[te.comp] * su[te.node].val + dRu.row(te.comp).dot(su[te.node].grad);
          } else {
            a = drp * sp[te.node].val;
          }
          if (a != 0.0) Kloc(idof, jdof) += w * a;
        }
      }

      // Solid pressure closure block.
      if (with_gauge && mat == Material::Solid) {
        const auto& pd = space_->cell_field_dofs(ac, pf);
        const int base = static_cast<int>(sv.size()) * 2 + static_cast<int>(su.size()) * 2;
        for (std::size_t i = 0; i < sp.size(); ++i) {
          if (iface_p_.count(pd[i])) continue;
          for (std::size_t j = 0; j < sp.size(); ++j)
            Kloc(base + static_cast<int>(i), base + static_cast<int>(j)) +=
                w * sp[i].val * sp[j].val;
        }
      }
    }

    for (int i = 0; i < nd; ++i)
      for (int j = 0; j < nd; ++j)
        if (Kloc(i, j) != 0.0) K.add(dofs[i].global, dofs[j].global, Kloc(i, j));
  }

  // Neumann term Jacobian (state-dependent do-nothing correction).
  for (const auto& nf : neumann_faces_) {
    const CellGeometry geo = space_->cell_geometry(nf.ac);
    const Vec2 xa = geo.corners[nf.f];
    const Vec2 xb = geo.corners[(nf.f + 1) % 4];
    const Vec2 e = xb - xa;
    const double len = e.norm();
    const Vec2 nrm(e.y() / len, -e.x() / len);
    const Quadrature1D q1 = Quadrature1D::gauss(n_gauss_ + 1);

    const auto& vdofs = space_->cell_field_dofs(nf.ac, vf);
    const auto& udofs = space_->cell_field_dofs(nf.ac, uf);
    TensorShapes shv{space_->spec().fields[vf].degree};
    TensorShapes shu{space_->spec().fields[uf].degree};
    const int nnv = shv.n_nodes(), nnu = shu.n_nodes();

    for (int q = 0; q < static_cast<int>(q1.points.size()); ++q) {
      const double t = 0.5 * (q1.points[q] + 1.0);
      const Vec2 xi = face_ref_point(nf.f, t);
      const Mat2 Jg = geo.jacobian(xi);
      const Mat2 jinvT = Jg.inverse().transpose();
      const double w = 0.5 * len * q1.weights[q];
      Mat2 Gv = Mat2::Zero(), Gu = Mat2::Zero();
      for (int n = 0; n < nnv; ++n) {
        const Vec2 g = jinvT * shv.grad(n, xi);
        for (int cc = 0; cc < 2; ++cc) Gv.row(cc) += U[vdofs[cc * nnv + n]] * g.transpose();
      }
      for (int n = 0; n < nnu; ++n) {
        const Vec2 g = jinvT * shu.grad(n, xi);
        for (int cc = 0; cc < 2; ++cc) Gu.row(cc) += U[udofs[cc * nnu + n]] * g.transpose();
      }
      const Kinematics kin = kinematics_at(Gu);
      const double coef = rho_f * nu_f;

      // A-contribution is -t.psi with t = -P n + coef J FiT Gv^T FiT n.
      // d/dv: -coef J FiT H^T FiT n ; d/du via J and FiT derivatives.
      for (int n = 0; n < nnv; ++n) {
        const Vec2 g = jinvT * shv.grad(n, xi);
        for (int cc = 0; cc < 2; ++cc) {
          Mat2 H = Mat2::Zero();
          H.row(cc) = g.transpose();
          const Vec2 dt = coef * kin.J * (kin.FinvT * H.transpose() * kin.FinvT * nrm);
          // row: test v dofs; contribution -dt.psi
          for (int m = 0; m < nnv; ++m) {
            const double s = shv.value(m, xi);
            if (s == 0.0) continue;
            for (int tc = 0; tc < 2; ++tc)
              K.add(vdofs[tc * nnv + m], vdofs[cc * nnv + n], -w * dt[tc] * s);
          }
        }
      }
      for (int n = 0; n < nnu; ++n) {
        const Vec2 g = jinvT * shu.grad(n, xi);
        for (int cc = 0; cc < 2; ++cc) {
          Mat2 H = Mat2::Zero();
          H.row(cc) = g.transpose();
          const double Jp = kin.J * (kin.Finv * H).trace();
          const Mat2 FiTP = (-kin.Finv * H * kin.Finv).transpose();
          const Vec2 dt =
              coef * (Jp * kin.FinvT * Gv.transpose() * kin.FinvT * nrm +
                      kin.J * FiTP * Gv.transpose() * kin.FinvT * nrm +
                      kin.J * kin.FinvT * Gv.transpose() * FiTP * nrm);
          for (int m = 0; m < nnv; ++m) {
            const double s = shv.value(m, xi);
            if (s == 0.0) continue;
            for (int tc = 0; tc < 2; ++tc)
              K.add(vdofs[tc * nnv + m], udofs[cc * nnu + n], -w * dt[tc] * s);
          }
        }
      }
    }
  }
  return K;
}

PrimalResult solve_primal(const FsiAssembler& assembler,
                          const NewtonSettings& settings, const Vector* initial) {
  const FESpace& S = assembler.space();
  ConstraintSet full = dirichlet_constraints(S, assembler.bcs());
  full.merge(S.hanging_constraints());
  full.close();
  const ConstraintSet hom = full.homogeneous();

  PrimalResult out;
  out.U = initial ? *initial : Vector::Zero(S.n_dofs());
  full.distribute(out.U);

  auto residual = [&](const Vector& U) {
    Vector R = assembler.residual(U);
    condense_rhs(R, hom);
    return R;
  };
  auto jacobian = [&](const Vector& U) {
    SparseMatrix K = assembler.jacobian(U, true, &hom);
    Vector dummy = Vector::Zero(S.n_dofs());
    condense(K, dummy, hom);
    return K;
  };
  out.log = newton_solve(residual, jacobian, out.U, settings);
  return out;
}

PrimalResult solve_primal_budget(const FsiAssembler& assembler, int steps,
                                 const Vector* initial) {
  const FESpace& S = assembler.space();
  ConstraintSet full = dirichlet_constraints(S, assembler.bcs());
  full.merge(S.hanging_constraints());
  full.close();
  const ConstraintSet hom = full.homogeneous();

  PrimalResult out;
  out.U = initial ? *initial : Vector::Zero(S.n_dofs());
  full.distribute(out.U);

  Vector R = assembler.residual(out.U);
  condense_rhs(R, hom);
  double norm = R.norm();
  out.log.residual_norms.push_back(norm);
  for (int it = 0; it < steps; ++it) {
    if (norm < 1e-13) break;
    SparseMatrix K = assembler.jacobian(out.U, true, &hom);
    Vector dummy = Vector::Zero(S.n_dofs());
    condense(K, dummy, hom);
    Vector dx = solve_sparse(K, R);
    double step = 1.0;
    for (int ls = 0; ls <= 10; ++ls) {
      Vector trial = out.U + step * dx;
      try {
        Vector Rt = assembler.residual(trial);
        condense_rhs(Rt, hom);
        const double nt = Rt.norm();
        if (nt < norm) {
          out.U = trial;
          R = Rt;
          norm = nt;
          break;
        }
      } catch (const std::exception&) {
      }
      step *= 0.5;
    }
    out.log.residual_norms.push_back(norm);
    out.log.iterations = it + 1;
  }
  out.log.converged = true;
  return out;
}

}  // namespace mgfsi
