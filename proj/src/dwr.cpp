#include "mgfsi/dwr.hpp"

namespace mgfsi {

PartitionOfUnity::PartitionOfUnity(const QuadMesh& mesh)
    : q1_(mesh, ElementSpec::scalar(1, "pu")) {
  const auto& hc = q1_.hanging_constraints();
  std::map<int, int> index_of;
  for (int d = 0; d < q1_.n_dofs(); ++d) {
    if (hc.is_constrained(d)) continue;
    index_of[d] = static_cast<int>(free_dofs_.size());
    free_dofs_.push_back(d);
  }
  const int n_active = mesh.n_active_cells();
  expansion_.resize(n_active);
  support_.resize(free_dofs_.size());
  for (int ac = 0; ac < n_active; ++ac) {
    const auto& dofs = q1_.cell_field_dofs(ac, 0);
    for (int l = 0; l < 4; ++l) {
      const int d = dofs[l];
      auto& exp = expansion_[ac][l];
      if (const auto* line = hc.line(d)) {
        for (const auto& [m, c] : line->masters) exp.emplace_back(index_of.at(m), c);
      } else {
        exp.emplace_back(index_of.at(d), 1.0);
      }
      for (const auto& [i, c] : exp) {
        if (support_[i].empty() || support_[i].back() != ac)
          support_[i].push_back(ac);
      }
    }
  }
}

bool point_is_node(const FESpace& space, int field, const Vec2& x) {
  for (int d = 0; d < space.n_dofs(); ++d) {
    if (space.dof_field(d) != field) continue;
    if ((space.dof_point(d) - x).norm() < 1e-10) return true;
  }
  return false;
}

AdjointResult solve_enriched_adjoint(const FsiAssembler& low_assembler,
                                     const FESpace& enriched,
                                     const Vector& U_low,
                                     const CombinedGoal& cg) {
  const FESpace& low = low_assembler.space();
  const MaterialParams& params = low_assembler.params();
  const Vector injected = interpolate(low, enriched, U_low);

  AdjointResult out;
  Vector rhs = Vector::Zero(enriched.n_dofs());
  for (const auto& e : cg.entries) {
    const double w = e.omega * e.sigma;
    if (w == 0.0) continue;
    const bool point_goal =
        e.goal.kind == GoalSpec::Kind::PointDisplacement ||
        e.goal.kind == GoalSpec::Kind::PointPressure;
    if (point_goal) {
      const int field =
          e.goal.kind == GoalSpec::Kind::PointDisplacement
              ? low.spec().field_index("u")
              : low.spec().field_index("p");
      if (point_is_node(low, field, e.goal.point)) {
        out.degenerate_goals.push_back(e.goal.name);
        continue;
      }
    }
    rhs += w * goal_derivative(e.goal, enriched, params, injected);
  }
  if (rhs.cwiseAbs().maxCoeff() == 0.0) {
    out.Z = Vector::Zero(enriched.n_dofs());
    out.degenerate = true;
    return out;
  }

  FsiAssembler enr(enriched, params, low_assembler.bcs());
  ConstraintSet full = dirichlet_constraints(enriched, low_assembler.bcs());
  full.merge(enriched.hanging_constraints());
  full.close();
  const ConstraintSet hom = full.homogeneous();

  SparseMatrix K = enr.jacobian(injected, true, &hom);
  SparseMatrix Kt = K.transposed();

  condense(Kt, rhs, hom);
  out.Z = solve_sparse(Kt, rhs);
  hom.distribute(out.Z);
  return out;
}

namespace {

// Residual of the low-order state against an arbitrary enriched test
// function given by coefficients W: returns -A(U)(W) assembled with the
// estimator quadrature (physics form, no gauge term).
double weighted_residual(const FsiAssembler& enr_assembler, const Vector& U_inj,
                         const Vector& W) {
  const Vector R = enr_assembler.residual(U_inj, /*with_gauge=*/false);
  return R.dot(W);
}

}  // namespace

Estimate estimate_primal(const FsiAssembler& low_assembler,
                         const FESpace& enriched, const Vector& U_low,
                         const Vector& Z, const PartitionOfUnity& pu,
                         const EstimatorOptions& opt) {
  const FESpace& low = low_assembler.space();
  const MaterialParams& params = low_assembler.params();
  const auto& mesh = low.mesh();

  const Vector U_inj = interpolate(low, enriched, U_low);
  const Vector Z_low = interpolate(enriched, low, Z);
  const Vector iaZ = interpolate(low, enriched, Z_low);
  const Vector W = Z - iaZ;

  // Estimator quadrature: one order beyond the enriched assembly rule.
  int max_deg = 1;
  for (const auto& f : enriched.spec().fields) max_deg = std::max(max_deg, f.degree);
  const int n_gauss = max_deg + 2;
  FsiAssembler enr(enriched, params, low_assembler.bcs(), n_gauss);
  const QuadratureCell quad = QuadratureCell::gauss(n_gauss);

  Estimate est;
  est.eta_direct = weighted_residual(enr, U_inj, W);
  est.galerkin = weighted_residual(enr, U_inj, iaZ);
  est.eta_i.assign(pu.n_dofs(), 0.0);

  const int vf = enriched.spec().field_index("v");
  const int uf = enriched.spec().field_index("u");
  const int pf = enriched.spec().field_index("p");
  ShapeTable tv(enriched.spec().fields[vf].degree, quad.points);
  ShapeTable tu(enriched.spec().fields[uf].degree, quad.points);
  ShapeTable tp(enriched.spec().fields[pf].degree, quad.points);
  TensorShapes q1{1};

  std::vector<ResidualCoeffs> coeffs;
  const int nq = quad.size();
  for (int ac = 0; ac < mesh.n_active_cells(); ++ac) {
    enr.cell_residual_coeffs(ac, U_inj, quad, coeffs);
    const CellGeometry geo = enriched.cell_geometry(ac);
    const bool fluid =
        mesh.cell(mesh.active_cells()[ac]).material == Material::Fluid;

    const auto& vd = enriched.cell_field_dofs(ac, vf);
    const auto& ud = enriched.cell_field_dofs(ac, uf);
    const auto& pd = enriched.cell_field_dofs(ac, pf);
    const int nnv = tv.n_nodes(), nnu = tu.n_nodes(), nnp = tp.n_nodes();

    std::vector<Mat2> jinvT_q(nq);
    for (int q = 0; q < nq; ++q)
      jinvT_q[q] = geo.jacobian(quad.points[q]).inverse().transpose();

    for (int q = 0; q < nq; ++q) {
      const Mat2& jinvT = jinvT_q[q];
      // Weight function (Z - i_a Z) values and gradients at this point.
      Vec2 wv = Vec2::Zero(), wu = Vec2::Zero();
      Mat2 gwv = Mat2::Zero(), gwu = Mat2::Zero();
      double wp = 0.0;
      for (int n = 0; n < nnv; ++n) {
        const Vec2 g = jinvT * tv.grads[q][n];
        for (int c = 0; c < 2; ++c) {
          const double a = W[vd[c * nnv + n]];
          wv[c] += a * tv.values[q][n];
          gwv.row(c) += a * g.transpose();
        }
      }
      for (int n = 0; n < nnu; ++n) {
        const Vec2 g = jinvT * tu.grads[q][n];
        for (int c = 0; c < 2; ++c) {
          const double a = W[ud[c * nnu + n]];
          wu[c] += a * tu.values[q][n];
          gwu.row(c) += a * g.transpose();
        }
      }
      for (int n = 0; n < nnp; ++n) wp += W[pd[n]] * tp.values[q][n];

      const ResidualCoeffs& r = coeffs[q];
      for (int l = 0; l < 4; ++l) {
        const double psi = q1.value(l, quad.points[q]);
        const Vec2 gpsi = jinvT * q1.grad(l, quad.points[q]);
        double contrib = 0.0;
        contrib += r.rv.dot(wv) * psi;
        contrib += (r.Rv.cwiseProduct(gwv)).sum() * psi + wv.dot(r.Rv * gpsi);
        contrib += r.ru.dot(wu) * psi;
        contrib += (r.Ru.cwiseProduct(gwu)).sum() * psi + wu.dot(r.Ru * gpsi);
        contrib += r.rp * wp * psi;
        if (contrib == 0.0) continue;
        for (const auto& [i, c] : pu.corner_expansion(ac, l))
          est.eta_i[i] -= c * contrib;
      }
    }

    // The mesh-motion term is not tested with interface displacement DoFs
    // in the solved operator; take its weighted contribution back out,
    // attributed through the PU values at the DoF support points.
    if (fluid && !params.global_mesh_coupling) {
      const auto& iface_u = enr.interface_displacement_dofs();
      TensorShapes shu{enriched.spec().fields[uf].degree};
      TensorShapes q1s{1};
      for (int comp = 0; comp < 2; ++comp) {
        for (int n = 0; n < nnu; ++n) {
          const int dof = ud[comp * nnu + n];
          if (!iface_u.count(dof) || W[dof] == 0.0) continue;
          double m = 0.0;
          for (int q = 0; q < nq; ++q)
            m += coeffs[q].Ru.row(comp).dot(jinvT_q[q] * tu.grads[q][n]);
          const Vec2 xi = shu.node_xi(n);
          for (int l = 0; l < 4; ++l) {
            const double psi = q1s.value(l, xi);
            if (psi == 0.0) continue;
            for (const auto& [i, c] : pu.corner_expansion(ac, l))
              est.eta_i[i] += c * psi * W[dof] * m;
          }
        }
      }
    }
  }

  // Neumann boundary terms: A includes -t . psi^v.
  for (const auto& nf : enr.neumann_faces()) {
    std::vector<Vec2> tr;
    std::vector<Vec2> xi;
    enr.face_traction(nf, U_inj, n_gauss + 1, tr, xi);
    const auto& vd = enriched.cell_field_dofs(nf.ac, vf);
    TensorShapes shv{enriched.spec().fields[vf].degree};
    const int nnv = shv.n_nodes();
    for (std::size_t q = 0; q < tr.size(); ++q) {
      Vec2 wv = Vec2::Zero();
      for (int n = 0; n < nnv; ++n) {
        const double s = shv.value(n, xi[q]);
        for (int c = 0; c < 2; ++c) wv[c] += W[vd[c * nnv + n]] * s;
      }
      for (int l = 0; l < 4; ++l) {
        // Boundary part of the A-contribution against (w psi_l).
        const double psi = TensorShapes{1}.value(l, xi[q]);
        const double contrib = -tr[q].dot(wv) * psi;
        if (contrib == 0.0) continue;
        for (const auto& [i, c] : pu.corner_expansion(nf.ac, l))
          est.eta_i[i] -= c * contrib;
      }
    }
  }

  const double factor = opt.half_factor ? 0.5 : 1.0;
  for (double& e : est.eta_i) e *= factor;
  est.eta_direct *= factor;
  est.galerkin *= factor;
  est.eta_h = 0.0;
  est.sum_abs = 0.0;
  for (double e : est.eta_i) {
    est.eta_h += e;
    est.sum_abs += std::abs(e);
  }
  return est;
}

double estimate_full(const FsiAssembler& low_assembler, const FESpace& enriched,
                     const Vector& U_low, const Vector& U_enriched,
                     const Vector& Z, const CombinedGoal& cg,
                     const PartitionOfUnity& pu, FullWeight weight,
                     const EstimatorOptions& opt) {
  const FESpace& low = low_assembler.space();
  const MaterialParams& params = low_assembler.params();

  const Estimate primal = estimate_primal(low_assembler, enriched, U_low, Z, pu, opt);

  const Vector U_inj = interpolate(low, enriched, U_low);
  const Vector U_enr_low = interpolate(enriched, low, U_enriched);
  const Vector ipU = interpolate(low, enriched, U_enr_low);
  const Vector wp = U_enriched - ipU;

  Vector Ztilde;
  if (weight == FullWeight::Interpolated) {
    const Vector Z_low = interpolate(enriched, low, Z);
    Ztilde = interpolate(low, enriched, Z_low);
  } else {
    Ztilde = Z;
  }

  // rho*(U_h, Ztilde)(wp) = J'(U_h)(wp) - A'(U_h)(wp, Ztilde).
  FsiAssembler enr(enriched, params, low_assembler.bcs());
  const Vector jp = cg.derivative(enriched, params, U_inj);
  const SparseMatrix K = enr.jacobian(U_inj, /*with_gauge=*/false);
  const double rho_star = jp.dot(wp) - Ztilde.dot(K.multiply(wp));

  // The two-sided error identity carries 1/2 on both halves; undo a
  // possible display-convention factor applied inside the primal part.
  const double prim_no_half = opt.half_factor ? 2.0 * primal.eta_h : primal.eta_h;
  return 0.5 * prim_no_half + 0.5 * rho_star;
}

QualityIndices indices(double eta_h, double sum_abs, double true_error) {
  QualityIndices out;
  if (true_error == 0.0) {
    out.defined = false;
    return out;
  }
  out.defined = true;
  out.i_eff = std::abs(eta_h) / std::abs(true_error);
  out.i_ind = sum_abs / std::abs(true_error);
  return out;
}

}  // namespace mgfsi
