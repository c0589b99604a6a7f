#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "mgfsi/cases.hpp"
#include "test_util.hpp"

#include <random>

using namespace mgfsi;

TEST_CASE("kinematics") {
  const Kinematics k0 = kinematics_at(Mat2::Zero());
  CHECK((k0.F - Mat2::Identity()).norm() == 0.0);
  CHECK(k0.J == 1.0);
  CHECK(k0.E.norm() == 0.0);

  Mat2 g = Mat2::Zero();
  g(0, 0) = 0.1;
  const Kinematics k1 = kinematics_at(g);
  CHECK(k1.J == doctest::Approx(1.1).epsilon(1e-15));
  CHECK(k1.E(0, 0) == doctest::Approx(0.105).epsilon(1e-14));
  CHECK(k1.E(0, 1) == 0.0);
  CHECK(k1.E(1, 1) == 0.0);

  Mat2 bad = Mat2::Zero();
  bad(0, 0) = -1.5;
  CHECK_THROWS(kinematics_at(bad));
}

TEST_CASE("fluid stress") {
  MaterialParams p;
  p.rho_f = 1.3;
  p.nu_f = 0.7;
  const Kinematics kid = kinematics_at(Mat2::Zero());
  // v = 0, p = 1 -> sigma = -I
  CHECK((stress_fluid(p, kid, Mat2::Zero(), 1.0) + Mat2::Identity()).norm() < 1e-15);
  // F = I reduces to the Newtonian stress
  Mat2 G;
  G << 0.2, -0.1, 0.4, 0.3;
  const Mat2 s = stress_fluid(p, kid, G, 2.0);
  const Mat2 expect = -2.0 * Mat2::Identity() + p.rho_f * p.nu_f * (G + G.transpose());
  CHECK((s - expect).norm() < 1e-14);
  // random inputs vs an independent component-wise formula
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> d(-0.2, 0.2);
  for (int trial = 0; trial < 20; ++trial) {
    Mat2 gu, gv;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        gu(i, j) = d(rng);
        gv(i, j) = d(rng);
      }
    const double pres = d(rng);
    const Kinematics kin = kinematics_at(gu);
    const Mat2 got = stress_fluid(p, kin, gv, pres);
    Mat2 want;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        double a = i == j ? -pres : 0.0;
        for (int m = 0; m < 2; ++m)
          a += p.rho_f * p.nu_f * (gv(i, m) * kin.Finv(m, j) +
                                   kin.Finv(m, i) * gv(j, m));
        want(i, j) = a;
      }
    CHECK((got - want).norm() < 1e-14);
  }
}

TEST_CASE("solid stress") {
  MaterialParams p;
  p.mu_s = 2.0;
  p.nu_s = 0.4;
  CHECK(p.lambda_s() == doctest::Approx(8.0).epsilon(1e-15));
  CHECK(stress_solid_stvk(p, kinematics_at(Mat2::Zero())).norm() == 0.0);
  // Small uniaxial stretch: leading order (lambda + 2 mu) eps in (0,0).
  std::vector<double> eps_values = {1e-3, 1e-4, 1e-5};
  for (double eps : eps_values) {
    Mat2 g = Mat2::Zero();
    g(0, 0) = eps;
    const Mat2 s = stress_solid_stvk(p, kinematics_at(g));
    const double lead = (p.lambda_s() + 2.0 * p.mu_s) * eps;
    CHECK(std::abs(s(0, 0) - lead) < 10.0 * lead * eps);
  }
}

TEST_CASE("zero state gives zero residual") {
  CaseConfig cfg = builtin_case("ex1");
  QuadMesh mesh = build_case_geometry(cfg);
  FESpace space(mesh, ElementSpec::taylor_hood());
  CaseBcs bcs;  // no boundary data at all
  FsiAssembler assembler(space, make_materials(cfg), bcs);
  const Vector R = assembler.residual(Vector::Zero(space.n_dofs()));
  CHECK(R.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("manufactured solid state annihilates the residual") {
  CaseConfig cfg = builtin_case("verify_elasticity");
  QuadMesh mesh = build_case_geometry(cfg);
  FESpace space(mesh, ElementSpec::taylor_hood());
  const MaterialParams mat = make_materials(cfg);
  const CaseBcs bcs = make_bcs(cfg);
  FsiAssembler assembler(space, mat, bcs);
  const ManufacturedSolution ms = manufactured_solution("elasticity_mms");

  Vector U = Vector::Zero(space.n_dofs());
  const int uf = space.spec().field_index("u");
  for (int dof = 0; dof < space.n_dofs(); ++dof)
    if (space.dof_field(dof) == uf)
      U[dof] = ms.displacement(space.dof_point(dof))[space.dof_component(dof)];

  Vector R = assembler.residual(U);
  ConstraintSet full = dirichlet_constraints(space, bcs);
  full.merge(space.hanging_constraints());
  full.close();
  condense_rhs(R, full.homogeneous());
  // Quadrature is exact for the quadratic manufactured displacement.
  CHECK(R.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("jacobian matches finite differences") {
  CaseConfig cfg = builtin_case("ex1");
  QuadMesh mesh = build_case_geometry(cfg);
  FESpace space(mesh, ElementSpec::taylor_hood());
  const CaseBcs bcs = make_bcs(cfg);
  FsiAssembler assembler(space, make_materials(cfg), bcs);
  for (unsigned seed : {1u, 2u, 3u}) {
    const Vector U =
        testing::random_admissible_state(space, bcs, 0.1, 0.02, seed);
    CHECK(testing::jacobian_fd_error(assembler, U, 20, seed + 100) < 1e-5);
  }
}

TEST_CASE("jacobian matches finite differences with pressure Neumann faces") {
  CaseConfig cfg = builtin_case("ex2");
  QuadMesh mesh = build_case_geometry(cfg);
  FESpace space(mesh, ElementSpec::taylor_hood());
  const CaseBcs bcs = make_bcs(cfg);
  FsiAssembler assembler(space, make_materials(cfg), bcs);
  const Vector U = testing::random_admissible_state(space, bcs, 0.05, 0.01, 9);
  CHECK(testing::jacobian_fd_error(assembler, U, 10, 77) < 1e-5);
}

TEST_CASE("mesh-motion block is the scaled vector Laplacian at zero displacement") {
  CaseConfig cfg = builtin_case("verify_stokes");
  cfg.alpha_u = 2.5;
  QuadMesh mesh = build_case_geometry(cfg);
  FESpace space(mesh, ElementSpec::taylor_hood());
  FsiAssembler assembler(space, make_materials(cfg), CaseBcs{});
  const SparseMatrix K = assembler.jacobian(Vector::Zero(space.n_dofs()));

  // Independent globally assembled Q2 Laplacian.
  const int uf = space.spec().field_index("u");
  TensorShapes sh{2};
  const QuadratureCell quad = QuadratureCell::gauss(3);
  const int nn = sh.n_nodes();
  std::map<std::pair<int, int>, double> L;
  for (int ac = 0; ac < mesh.n_active_cells(); ++ac) {
    const CellGeometry geo = space.cell_geometry(ac);
    const auto& dofs = space.cell_field_dofs(ac, uf);
    for (int q = 0; q < quad.size(); ++q) {
      const Mat2 Jg = geo.jacobian(quad.points[q]);
      const double jxw = Jg.determinant() * quad.weights[q];
      const Mat2 jinvT = Jg.inverse().transpose();
      for (int i = 0; i < nn; ++i)
        for (int j = 0; j < nn; ++j)
          for (int c = 0; c < 2; ++c)
            L[{dofs[c * nn + i], dofs[c * nn + j]}] +=
                jxw * (jinvT * sh.grad(i, quad.points[q]))
                          .dot(jinvT * sh.grad(j, quad.points[q]));
    }
  }
  for (const auto& [ij, val] : L)
    CHECK(K.get(ij.first, ij.second) ==
          doctest::Approx(2.5 * val).epsilon(1e-12));
}

TEST_CASE("Stokes limit: symmetric viscous block, skew saddle coupling") {
  CaseConfig cfg = builtin_case("verify_stokes");
  QuadMesh mesh = build_case_geometry(cfg);
  FESpace space(mesh, ElementSpec::taylor_hood());
  FsiAssembler assembler(space, make_materials(cfg), CaseBcs{});
  // u frozen at zero, convection off: the (v,p) system is the Stokes form.
  const SparseMatrix K = assembler.jacobian(Vector::Zero(space.n_dofs()));
  const int vf = space.spec().field_index("v");
  const int pf = space.spec().field_index("p");
  for (int i = 0; i < space.n_dofs(); ++i) {
    for (int j = 0; j <= i; ++j) {
      const int fi = space.dof_field(i), fj = space.dof_field(j);
      if (fi == vf && fj == vf)
        CHECK(K.get(i, j) == doctest::Approx(K.get(j, i)).epsilon(1e-12));
      // continuity row vs pressure-gradient column (sign convention:
      // continuity enters with + divergence)
      if (fi == pf && fj == vf)
        CHECK(K.get(i, j) == doctest::Approx(-K.get(j, i)).epsilon(1e-12));
    }
  }
}

TEST_CASE("frame consistency: zero displacement reduces to plain Navier-Stokes") {
  CaseConfig cfg = builtin_case("verify_ns");
  QuadMesh mesh = build_case_geometry(cfg);
  FESpace space(mesh, ElementSpec::taylor_hood());
  const MaterialParams mat = make_materials(cfg);
  FsiAssembler assembler(space, mat, CaseBcs{});

  std::mt19937 rng(13);
  std::uniform_real_distribution<double> d(-0.3, 0.3);
  Vector U = Vector::Zero(space.n_dofs());
  const int uf = space.spec().field_index("u");
  for (int dof = 0; dof < space.n_dofs(); ++dof)
    if (space.dof_field(dof) != uf) U[dof] = d(rng);

  const Vector R = assembler.residual(U, /*with_gauge=*/false);

  // Independent plain Navier-Stokes residual (reference mesh, F = I).
  Vector R2 = Vector::Zero(space.n_dofs());
  const int vf = space.spec().field_index("v");
  const int pf = space.spec().field_index("p");
  TensorShapes shv{2}, shp{1};
  const QuadratureCell quad = QuadratureCell::gauss(3);
  const int nnv = shv.n_nodes(), nnp = shp.n_nodes();
  for (int ac = 0; ac < mesh.n_active_cells(); ++ac) {
    const CellGeometry geo = space.cell_geometry(ac);
    const auto& vd = space.cell_field_dofs(ac, vf);
    const auto& pd = space.cell_field_dofs(ac, pf);
    for (int q = 0; q < quad.size(); ++q) {
      const Mat2 Jg = geo.jacobian(quad.points[q]);
      const double jxw = Jg.determinant() * quad.weights[q];
      const Mat2 jinvT = Jg.inverse().transpose();
      const Vec2 x = geo.map(quad.points[q]);
      Vec2 v = Vec2::Zero();
      Mat2 gv = Mat2::Zero();
      double p = 0.0;
      for (int n = 0; n < nnv; ++n) {
        const double s = shv.value(n, quad.points[q]);
        const Vec2 g = jinvT * shv.grad(n, quad.points[q]);
        for (int c = 0; c < 2; ++c) {
          v[c] += U[vd[c * nnv + n]] * s;
          gv.row(c) += U[vd[c * nnv + n]] * g.transpose();
        }
      }
      for (int n = 0; n < nnp; ++n) p += U[pd[n]] * shp.value(n, quad.points[q]);
      const Mat2 sigma = -p * Mat2::Identity() +
                         mat.rho_f * mat.nu_f * (gv + gv.transpose());
      const Vec2 conv = mat.rho_f * gv * v;
      const Vec2 force = mat.f_fluid ? Vec2(mat.f_fluid(x)) : Vec2::Zero();
      for (int n = 0; n < nnv; ++n) {
        const double s = shv.value(n, quad.points[q]);
        const Vec2 g = jinvT * shv.grad(n, quad.points[q]);
        for (int c = 0; c < 2; ++c)
          R2[vd[c * nnv + n]] -=
              jxw * (conv[c] * s + sigma.row(c).dot(g) - mat.rho_f * force[c] * s);
      }
      for (int n = 0; n < nnp; ++n)
        R2[pd[n]] -= jxw * gv.trace() * shp.value(n, quad.points[q]);
    }
  }
  const double scale = R2.cwiseAbs().maxCoeff();
  for (int i = 0; i < space.n_dofs(); ++i) {
    if (space.dof_field(i) == uf) continue;  // mesh-motion rows differ by alpha_u term only at u dofs
    CHECK(std::abs(R[i] - R2[i]) < 1e-13 * std::max(1.0, scale));
  }
}

TEST_CASE("solid residual scales linearly with the Lame coefficients") {
  CaseConfig cfg = builtin_case("verify_elasticity");
  QuadMesh mesh = build_case_geometry(cfg);
  FESpace space(mesh, ElementSpec::taylor_hood());
  MaterialParams m1 = make_materials(cfg);
  m1.f_solid = nullptr;
  MaterialParams m2 = m1;
  m2.mu_s *= 3.0;  // lambda_s = 2 mu nu/(1-2nu) scales with mu as well
  FsiAssembler a1(space, m1, CaseBcs{});
  FsiAssembler a2(space, m2, CaseBcs{});

  Vector U = Vector::Zero(space.n_dofs());
  const ManufacturedSolution ms = manufactured_solution("elasticity_mms");
  const int uf = space.spec().field_index("u");
  for (int dof = 0; dof < space.n_dofs(); ++dof)
    if (space.dof_field(dof) == uf)
      U[dof] = ms.displacement(space.dof_point(dof))[space.dof_component(dof)];

  const Vector r1 = a1.residual(U);
  const Vector r2 = a2.residual(U);
  const int vf = space.spec().field_index("v");
  for (int i = 0; i < space.n_dofs(); ++i)
    if (space.dof_field(i) == vf)
      CHECK(r2[i] == doctest::Approx(3.0 * r1[i]).epsilon(1e-12));
}

TEST_CASE("boundary profiles") {
  // Lid profile of the cavity case.
  CaseConfig ex1 = builtin_case("ex1");
  const CaseBcs bcs1 = make_bcs(ex1);
  const DirichletBc* lid = nullptr;
  for (const auto& b : bcs1.dirichlet)
    if (b.marker == 2 && b.field == 0) lid = &b;
  REQUIRE(lid != nullptr);
  CHECK(lid->value(Vec2(0.3, 2.0), 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(lid->value(Vec2(1.0, 2.0), 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(lid->value(Vec2(0.15, 2.0), 0) ==
        doctest::Approx(0.5 * std::pow(std::sin(M_PI * 0.25), 2)).epsilon(1e-12));
  CHECK(lid->value(Vec2(0.0, 2.0), 0) == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(lid->value(Vec2(0.3, 2.0), 1) == 0.0);

  // Displacement is clamped on the whole cavity boundary.
  QuadMesh mesh1 = build_case_geometry(ex1);
  FESpace space1(mesh1, ElementSpec::taylor_hood());
  const ConstraintSet dc = dirichlet_constraints(space1, bcs1);
  const int uf = space1.spec().field_index("u");
  for (int dof = 0; dof < space1.n_dofs(); ++dof) {
    if (space1.dof_field(dof) != uf) continue;
    const Vec2 x = space1.dof_point(dof);
    const bool on_bnd = x.x() < 1e-12 || x.x() > 2 - 1e-12 || x.y() < 1e-12 ||
                        x.y() > 2 - 1e-12;
    if (on_bnd) {
      REQUIRE(dc.is_constrained(dof));
      CHECK(dc.line(dof)->inhom == 0.0);
    }
  }

  // Parabolic inflow of the channel case peaks at 1.5 Ubar.
  CaseConfig ex3 = builtin_case("ex3");
  const CaseBcs bcs3 = make_bcs(ex3);
  const DirichletBc* inflow = nullptr;
  for (const auto& b : bcs3.dirichlet)
    if (b.marker == 1 && b.field == 0) inflow = &b;
  REQUIRE(inflow != nullptr);
  CHECK(inflow->value(Vec2(0.0, 0.205), 0) == doctest::Approx(0.3).epsilon(1e-14));
}
