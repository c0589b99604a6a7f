#include "mgfsi/cases.hpp"

#include <cmath>

namespace mgfsi {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Grid over given lines with per-cell keep/material predicates and a
// boundary-marker function of the face midpoint.
QuadMesh grid_case(const std::vector<double>& x_lines,
                   const std::vector<double>& y_lines,
                   const std::function<bool(const Vec2&)>& keep,
                   const std::function<Material(const Vec2&)>& material,
                   const std::function<int(const Vec2&)>& marker) {
  const int nx = static_cast<int>(x_lines.size());
  const int ny = static_cast<int>(y_lines.size());
  std::vector<Vec2> verts;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) verts.emplace_back(x_lines[i], y_lines[j]);
  auto vid = [nx](int i, int j) { return j * nx + i; };
  std::vector<std::array<int, 4>> cells;
  std::vector<Material> mats;
  for (int j = 0; j + 1 < ny; ++j) {
    for (int i = 0; i + 1 < nx; ++i) {
      const Vec2 center(0.5 * (x_lines[i] + x_lines[i + 1]),
                        0.5 * (y_lines[j] + y_lines[j + 1]));
      if (!keep(center)) continue;
      cells.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)});
      mats.push_back(material(center));
    }
  }
  // Boundary faces: used by exactly one cell.
  std::map<std::pair<int, int>, int> use_count;
  for (const auto& c : cells)
    for (int f = 0; f < 4; ++f) ++use_count[sorted_pair(c[f], c[(f + 1) % 4])];
  std::map<std::pair<int, int>, int> markers;
  for (const auto& [key, cnt] : use_count) {
    if (cnt != 1) continue;
    const Vec2 mid = 0.5 * (verts[key.first] + verts[key.second]);
    const int m = marker(mid);
    if (m >= 0) markers[key] = m;
  }
  return QuadMesh(std::move(verts), std::move(cells), std::move(mats),
                  std::move(markers));
}

std::vector<double> linspace(double a, double b, int n_cells) {
  std::vector<double> out;
  for (int i = 0; i <= n_cells; ++i)
    out.push_back(a + (b - a) * i / n_cells);
  return out;
}

// Lid-driven cavity with elastic bottom: the two-rectangle decomposition
// (solid [0,2]x[0,0.5], fluid [0,2]x[0.5,2]) refined once, i.e. 2 x 4
// cells with y lines {0, 0.25, 0.5, 1.25, 2}. This resolves the material
// interface and makes the displacement evaluation point (1.5, 0.25) a
// mesh node.
QuadMesh build_ex1() {
  return grid_case(
      {0.0, 1.0, 2.0}, {0.0, 0.25, 0.5, 1.25, 2.0},
      [](const Vec2&) { return true; },
      [](const Vec2& c) { return c.y() < 0.5 ? Material::Solid : Material::Fluid; },
      [](const Vec2& m) { return std::abs(m.y() - 2.0) < 1e-12 ? 2 : 1; });
}

// Reconstructed chamber with elastic bar (geometry cited externally in the
// source configuration; labeled non-authoritative). Chamber (0,3)x(0,1),
// exit channel (3,4)x(0.8,1), bar [2.6,2.8]x[0,0.8].
QuadMesh build_ex2() {
  auto keep = [](const Vec2& c) { return c.x() < 3.0 || c.y() > 0.8; };
  auto material = [](const Vec2& c) {
    return (c.x() > 2.6 && c.x() < 2.8 && c.y() < 0.8) ? Material::Solid
                                                       : Material::Fluid;
  };
  auto marker = [](const Vec2& m) {
    if (std::abs(m.x()) < 1e-12) return 10;        // pressure inlet
    if (std::abs(m.x() - 4.0) < 1e-12) return 11;  // channel outlet
    return 1;                                      // no-slip walls
  };
  return grid_case(linspace(0.0, 4.0, 20), linspace(0.0, 1.0, 5), keep,
                   material, marker);
}

// Channel with cylinder and trailing elastic beam. A one-layer ring of
// cells couples the polygonal circle to the box [0.1,0.3]x[0.1,0.31];
// the beam is resolved two cells high so that (0.6,0.2) is a vertex.
QuadMesh build_fsi1() {
  const double cx = 0.2, cy = 0.2, r = 0.05;
  const double xb = cx + std::sqrt(r * r - 0.01 * 0.01);  // beam corner x

  std::vector<double> X = {0.0, 0.05, 0.1, 0.3, 0.45, 0.6};
  for (int i = 1; i <= 19; ++i) X.push_back(0.6 + 0.1 * i);
  const std::vector<double> Y = {0.0, 0.05, 0.1, 0.19, 0.2, 0.21, 0.31, 0.36, 0.41};

  const int nx = static_cast<int>(X.size());
  const int ny = static_cast<int>(Y.size());
  std::vector<Vec2> verts;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) verts.emplace_back(X[i], Y[j]);
  auto vid = [nx](int i, int j) { return j * nx + i; };

  auto in_box = [&](double x0, double x1, double y0, double y1) {
    // background column x in [0.1,0.3] x rows [0.1,0.31] is replaced by the ring
    return x0 > 0.1 - 1e-12 && x1 < 0.3 + 1e-12 && y0 > 0.1 - 1e-12 &&
           y1 < 0.31 + 1e-12;
  };

  std::vector<std::array<int, 4>> cells;
  std::vector<Material> mats;
  for (int j = 0; j + 1 < ny; ++j) {
    for (int i = 0; i + 1 < nx; ++i) {
      if (in_box(X[i], X[i + 1], Y[j], Y[j + 1])) continue;
      cells.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)});
      const Vec2 c(0.5 * (X[i] + X[i + 1]), 0.5 * (Y[j] + Y[j + 1]));
      const bool beam = c.x() > 0.3 && c.x() < 0.6 && c.y() > 0.19 && c.y() < 0.21;
      mats.push_back(beam ? Material::Solid : Material::Fluid);
    }
  }

  // Box perimeter, counterclockwise, starting at (0.3, 0.19).
  const std::vector<Vec2> P = {{0.3, 0.19}, {0.3, 0.2},  {0.3, 0.21},
                               {0.3, 0.31}, {0.1, 0.31}, {0.1, 0.21},
                               {0.1, 0.2},  {0.1, 0.19}, {0.1, 0.1},
                               {0.3, 0.1}};
  auto grid_vertex = [&](const Vec2& p) {
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i)
        if (std::abs(X[i] - p.x()) < 1e-12 && std::abs(Y[j] - p.y()) < 1e-12)
          return vid(i, j);
    MGFSI_CHECK(false, "perimeter point not on the grid");
    return -1;
  };
  std::vector<int> pid;
  for (const auto& p : P) pid.push_back(grid_vertex(p));

  // Circle polygon: beam corners pinned, the rest projected radially.
  std::vector<Vec2> Q(10);
  Q[0] = {xb, 0.19};
  Q[1] = {cx + r, cy};
  Q[2] = {xb, 0.21};
  for (int k = 3; k < 10; ++k) {
    const Vec2 d = P[k] - Vec2(cx, cy);
    Q[k] = Vec2(cx, cy) + r * d.normalized();
  }
  std::vector<int> qid;
  for (const auto& q : Q) {
    qid.push_back(static_cast<int>(verts.size()));
    verts.push_back(q);
  }

  std::map<std::pair<int, int>, int> markers;
  for (int k = 0; k < 10; ++k) {
    const int k1 = (k + 1) % 10;
    cells.push_back({qid[k], pid[k], pid[k1], qid[k1]});
    // Sectors 0 and 1 clamp the beam to the cylinder.
    mats.push_back(k < 2 ? Material::Solid : Material::Fluid);
    markers[sorted_pair(qid[k], qid[k1])] = 4;
  }

  // Outer boundary markers on the background grid.
  std::map<std::pair<int, int>, int> use_count;
  for (const auto& c : cells)
    for (int f = 0; f < 4; ++f) ++use_count[sorted_pair(c[f], c[(f + 1) % 4])];
  for (const auto& [key, cnt] : use_count) {
    if (cnt != 1 || markers.count(key)) continue;
    const Vec2 mid = 0.5 * (verts[key.first] + verts[key.second]);
    int m = -1;
    if (std::abs(mid.x()) < 1e-12) m = 1;
    else if (std::abs(mid.x() - 2.5) < 1e-12) m = 2;
    else if (std::abs(mid.y()) < 1e-12 || std::abs(mid.y() - 0.41) < 1e-12) m = 3;
    MGFSI_CHECK(m >= 0, "unmarked exterior face at (" << mid.x() << "," << mid.y() << ")");
    markers[key] = m;
  }

  QuadMesh mesh(std::move(verts), std::move(cells), std::move(mats),
                std::move(markers));
  CircleSnap snap;
  snap.center = Vec2(cx, cy);
  snap.radius = r;
  snap.markers = {4};
  mesh.set_snap(snap);
  return mesh;
}

QuadMesh build_unit_square(int n, Material mat) {
  return grid_case(linspace(0.0, 1.0, n), linspace(0.0, 1.0, n),
                   [](const Vec2&) { return true; },
                   [mat](const Vec2&) { return mat; },
                   [](const Vec2&) { return 1; });
}

double ex1_lid_profile(double x) {
  if (x <= 0.3) {
    const double s = std::sin(kPi * x / 0.6);
    return 0.5 * s * s;
  }
  if (x < 1.7) return 0.5;
  const double s = std::sin(kPi * (x - 2.0) / 0.6);
  return 0.5 * s * s;
}

// Manufactured fields ------------------------------------------------------

Vec2 mms_velocity(const Vec2& x) {
  return {kPi * std::sin(kPi * x.x()) * std::cos(kPi * x.y()),
          -kPi * std::cos(kPi * x.x()) * std::sin(kPi * x.y())};
}

Mat2 mms_velocity_gradient(const Vec2& x) {
  const double sx = std::sin(kPi * x.x()), cx_ = std::cos(kPi * x.x());
  const double sy = std::sin(kPi * x.y()), cy_ = std::cos(kPi * x.y());
  Mat2 g;
  g(0, 0) = kPi * kPi * cx_ * cy_;
  g(0, 1) = -kPi * kPi * sx * sy;
  g(1, 0) = kPi * kPi * sx * sy;
  g(1, 1) = -kPi * kPi * cx_ * cy_;
  return g;
}

double mms_pressure(const Vec2& x) {
  return std::cos(kPi * x.x()) * std::cos(kPi * x.y());
}

Vec2 mms_stokes_force(const Vec2& x, double nu) {
  const double sx = std::sin(kPi * x.x()), cx_ = std::cos(kPi * x.x());
  const double sy = std::sin(kPi * x.y()), cy_ = std::cos(kPi * x.y());
  const double p3 = kPi * kPi * kPi;
  return {2.0 * nu * p3 * sx * cy_ - kPi * sx * cy_,
          -2.0 * nu * p3 * cx_ * sy - kPi * cx_ * sy};
}

const double kElC = 0.05;

Vec2 mms_displacement(const Vec2& x) {
  return {kElC * (x.x() * x.x() + 0.5 * x.x() * x.y()),
          kElC * (x.y() * x.y() - 0.3 * x.x() * x.y())};
}

Mat2 mms_displacement_gradient(const Vec2& x) {
  Mat2 g;
  g(0, 0) = kElC * (2.0 * x.x() + 0.5 * x.y());
  g(0, 1) = kElC * 0.5 * x.x();
  g(1, 0) = -kElC * 0.3 * x.y();
  g(1, 1) = kElC * (2.0 * x.y() - 0.3 * x.x());
  return g;
}

// Exact body force of the geometrically nonlinear solid with the quadratic
// manufactured displacement: f = -div(F Sigma) / rho_s (constant Hessian).
Vec2 mms_elasticity_force(const Vec2& x, double mu, double lambda, double rho_s) {
  Mat2 Hx, Hy;
  Hx << 2.0 * kElC, 0.5 * kElC, 0.0, -0.3 * kElC;
  Hy << 0.5 * kElC, 0.0, -0.3 * kElC, 2.0 * kElC;
  const Mat2 G = mms_displacement_gradient(x);
  const Mat2 F = Mat2::Identity() + G;
  const Mat2 E = 0.5 * (F.transpose() * F - Mat2::Identity());
  const Mat2 S = lambda * E.trace() * Mat2::Identity() + 2.0 * mu * E;
  auto dPK = [&](const Mat2& H) {
    const Mat2 dE = 0.5 * (H.transpose() * F + F.transpose() * H);
    const Mat2 dS = lambda * dE.trace() * Mat2::Identity() + 2.0 * mu * dE;
    return Mat2(H * S + F * dS);
  };
  const Mat2 Px = dPK(Hx);
  const Mat2 Py = dPK(Hy);
  return {-(Px(0, 0) + Py(0, 1)) / rho_s, -(Px(1, 0) + Py(1, 1)) / rho_s};
}

}  // namespace

CaseConfig builtin_case(const std::string& id) {
  CaseConfig c;
  c.id = id;
  if (id == "ex1") {
    c.description = "lid-driven cavity with elastic bottom";
    c.geometry = "ex1_cavity";
    c.rho_f = 1.0;
    c.nu_f = 0.2;
    c.rho_s = 1.0;
    c.nu_s = 0.4;
    c.mu_s = 2.0;
    c.alpha_u = 1e-8;
    // The all-Dirichlet cavity leaves the fluid pressure level free (it
    // trades off against compression of the elastic bottom); the pin value
    // reproduces the reference normalization and is reported in run
    // metadata.
    c.bcs = {{1, "noslip_v", {}},
             {2, "lid_profile", {}},
             {1, "fixed_u", {}},
             {2, "fixed_u", {}},
             {-1, "volume", {0.0}}};
    c.goals = {{"drag", "Drag", 0.5, {}},
               {"point_disp", "DisX", 0.5, {1.5, 0.25, 0.0}}};
    c.refs.goal_refs = {-9.3543731705807223e-02, -4.6898353874198270e-03};
    c.refs.provenance = "fine-mesh reference values of the source configuration";
    c.adapt.max_levels = 6;
  } else if (id == "ex2") {
    c.description =
        "elastic bar in a chamber (reconstructed geometry, not authoritative)";
    c.geometry = "ex2_chamber";
    c.rho_f = 1000.0;
    c.nu_f = 0.001;
    c.rho_s = 1000.0;
    c.nu_s = 0.4;
    c.mu_s = 500.0;
    c.alpha_u = 1e-8;
    c.bcs = {{1, "noslip_v", {}},
             {1, "fixed_u", {}},
             {10, "fixed_u", {}},
             {11, "fixed_u", {}},
             {10, "pressure", {0.2}},
             {11, "pressure", {0.0}}};
    c.goals = {{"drag", "Drag", 1.0, {}},
               {"point_pressure", "Pressure", 1.0, {2.0, 0.5}}};
    c.refs.jc_ref = 2.7072783350606711e-01;
    c.refs.provenance = "fine-mesh combined reference of the source configuration";
    c.adapt.max_levels = 6;
  } else if (id == "ex3") {
    c.description = "channel flow around a cylinder with elastic beam";
    c.geometry = "fsi1";
    c.initial_refinements = 1;
    c.rho_f = 1000.0;
    c.nu_f = 0.001;
    c.rho_s = 100.0;
    c.nu_s = 0.4;
    c.mu_s = 0.5e6;
    c.alpha_u = 1e-8;
    c.bcs = {{1, "parabolic_inflow", {0.2, 0.41}},
             {1, "fixed_u", {}},
             {2, "fixed_u", {}},
             {2, "pressure", {0.0}},
             {3, "noslip_v", {}},
             {3, "fixed_u", {}},
             {4, "noslip_v", {}},
             {4, "fixed_u", {}}};
    c.goals = {{"drag", "Drag", 1.0, {4}},
               {"point_pressure", "Pressure", 1.0, {1.5, 0.3}},
               {"flux", "Flux", 1.0, {2}}};
    c.tracked = {{"point_disp", "DisX", 1.0, {0.6, 0.2, 0.0}},
                 {"point_disp", "DisY", 1.0, {0.6, 0.2, 1.0}},
                 {"lift", "Lift", 1.0, {4}}};
    c.refs.goal_refs = {1.5351737833128903e+01, 1.5766176006021523e+01,
                        8.1999999975009522e-02};
    c.refs.jc_ref = 3.1205264275814216e+01;
    c.refs.provenance = "fine-mesh combined reference of the source configuration";
    c.adapt.max_levels = 4;
  } else if (id == "verify_stokes" || id == "verify_ns") {
    c.description = "manufactured incompressible flow on the unit square";
    c.geometry = "unit_square_fluid";
    c.rho_f = 1.0;
    c.nu_f = 1.0;
    c.convection = id == "verify_ns" ? 1.0 : 0.0;
    c.forcing = id == "verify_ns" ? "ns_mms" : "stokes_mms";
    c.bcs = {{1, "stokes_mms_v", {}},
             {1, "fixed_u", {}},
             {-1, "pin_p", {0.0, 0.0, 1.0}}};
    c.goals = {{"point_pressure", "Pressure", 1.0, {0.403, 0.5}}};
    c.adapt.max_levels = 4;
  } else if (id == "verify_elasticity") {
    c.description = "manufactured nonlinear elasticity on the unit square";
    c.geometry = "unit_square_solid";
    c.rho_s = 1.0;
    c.mu_s = 2.0;
    c.nu_s = 0.3;
    c.forcing = "elasticity_mms";
    c.bcs = {{1, "elasticity_mms_u", {}}, {1, "noslip_v", {}}};
    c.goals = {{"point_disp", "DisX", 1.0, {0.5, 0.5, 0.0}}};
    c.adapt.max_levels = 1;
  } else {
    MGFSI_CHECK(false, "unknown case id '" << id << "'");
  }
  return c;
}

QuadMesh build_case_geometry(const CaseConfig& config) {
  const std::string& g = config.geometry;
  if (g == "ex1_cavity") return build_ex1();
  if (g == "ex2_chamber") return build_ex2();
  if (g == "fsi1") return build_fsi1();
  if (g == "unit_square_fluid") return build_unit_square(4, Material::Fluid);
  if (g == "unit_square_solid") return build_unit_square(4, Material::Solid);
  if (g.rfind("file:", 0) == 0) return QuadMesh::read_file(g.substr(5));
  MGFSI_CHECK(false, "unknown geometry '" << g << "'");
  return build_unit_square(1, Material::Fluid);
}

QuadMesh build_case_geometry(const std::string& builtin_id) {
  return build_case_geometry(builtin_case(builtin_id));
}

MaterialParams make_materials(const CaseConfig& config) {
  MaterialParams m;
  m.rho_f = config.rho_f;
  m.nu_f = config.nu_f;
  m.rho_s = config.rho_s;
  m.mu_s = config.mu_s;
  m.nu_s = config.nu_s;
  m.alpha_u = config.alpha_u;
  m.convection = config.convection;
  if (config.forcing == "stokes_mms") {
    const double nu = config.nu_f;
    m.f_fluid = [nu](const Vec2& x) { return mms_stokes_force(x, nu); };
  } else if (config.forcing == "ns_mms") {
    const double nu = config.nu_f;
    m.f_fluid = [nu](const Vec2& x) {
      return Vec2(mms_stokes_force(x, nu) +
                  mms_velocity_gradient(x) * mms_velocity(x));
    };
  } else if (config.forcing == "elasticity_mms") {
    const double mu = config.mu_s;
    const double lambda = 2.0 * config.mu_s * config.nu_s / (1.0 - 2.0 * config.nu_s);
    const double rho = config.rho_s;
    m.f_solid = [mu, lambda, rho](const Vec2& x) {
      return mms_elasticity_force(x, mu, lambda, rho);
    };
  } else {
    MGFSI_CHECK(config.forcing.empty(), "unknown forcing '" << config.forcing << "'");
  }
  return m;
}

CaseBcs make_bcs(const CaseConfig& config) {
  CaseBcs out;
  // Field order of the mixed element: v = 0, u = 1, p = 2.
  for (const auto& bc : config.bcs) {
    if (bc.kind == "noslip_v") {
      out.dirichlet.push_back({bc.marker, 0, [](const Vec2&, int) { return 0.0; }});
    } else if (bc.kind == "fixed_u") {
      out.dirichlet.push_back({bc.marker, 1, [](const Vec2&, int) { return 0.0; }});
    } else if (bc.kind == "lid_profile") {
      out.dirichlet.push_back({bc.marker, 0, [](const Vec2& x, int comp) {
                                 return comp == 0 ? ex1_lid_profile(x.x()) : 0.0;
                               }});
    } else if (bc.kind == "parabolic_inflow") {
      MGFSI_CHECK(bc.params.size() == 2, "parabolic_inflow needs (Ubar, H)");
      const double ubar = bc.params[0], H = bc.params[1];
      out.dirichlet.push_back({bc.marker, 0, [ubar, H](const Vec2& x, int comp) {
                                 if (comp != 0) return 0.0;
                                 return 1.5 * ubar * 4.0 * x.y() * (H - x.y()) / (H * H);
                               }});
    } else if (bc.kind == "pressure") {
      MGFSI_CHECK(bc.params.size() == 1, "pressure needs (P)");
      out.neumann.push_back({bc.marker, bc.params[0]});
    } else if (bc.kind == "pin_p") {
      MGFSI_CHECK(bc.params.size() == 3, "pin_p needs (x, y, value)");
      out.pin = PressurePin{{bc.params[0], bc.params[1]}, bc.params[2]};
    } else if (bc.kind == "mean_p") {
      MGFSI_CHECK(bc.params.size() == 1, "mean_p needs (target)");
      out.mean_gauge.enabled = true;
      out.mean_gauge.target = bc.params[0];
    } else if (bc.kind == "volume") {
      MGFSI_CHECK(bc.params.size() == 1, "volume needs (target)");
      out.volume_gauge.enabled = true;
      out.volume_gauge.target = bc.params[0];
    } else if (bc.kind == "stokes_mms_v") {
      out.dirichlet.push_back(
          {bc.marker, 0, [](const Vec2& x, int comp) { return mms_velocity(x)[comp]; }});
    } else if (bc.kind == "elasticity_mms_u") {
      out.dirichlet.push_back({bc.marker, 1, [](const Vec2& x, int comp) {
                                 return mms_displacement(x)[comp];
                               }});
    } else {
      MGFSI_CHECK(false, "unknown bc kind '" << bc.kind << "'");
    }
  }
  return out;
}

namespace {

GoalSpec resolve_goal(const GoalEntry& e) {
  if (e.kind == "drag" || e.kind == "lift") {
    std::set<int> markers;
    for (double p : e.params) markers.insert(static_cast<int>(p));
    // Fluid-solid interface faces always belong to the force path.
    return e.kind == "drag" ? GoalSpec::drag(markers, true, e.name)
                            : GoalSpec::lift(markers, true, e.name);
  }
  if (e.kind == "point_disp") {
    MGFSI_CHECK(e.params.size() == 3, "point_disp needs (x, y, comp)");
    return GoalSpec::point_displacement({e.params[0], e.params[1]},
                                        static_cast<int>(e.params[2]), e.name);
  }
  if (e.kind == "point_pressure") {
    MGFSI_CHECK(e.params.size() == 2, "point_pressure needs (x, y)");
    return GoalSpec::point_pressure({e.params[0], e.params[1]}, e.name);
  }
  if (e.kind == "flux") {
    MGFSI_CHECK(e.params.size() == 1, "flux needs (marker)");
    return GoalSpec::flux(static_cast<int>(e.params[0]), e.name);
  }
  MGFSI_CHECK(false, "unknown goal kind '" << e.kind << "'");
  return {};
}

}  // namespace

CombinedGoal make_goals(const CaseConfig& config) {
  CombinedGoal cg;
  for (const auto& e : config.goals)
    cg.entries.push_back({resolve_goal(e), e.omega, +1});
  return cg;
}

std::vector<GoalSpec> make_tracked(const CaseConfig& config) {
  std::vector<GoalSpec> out;
  for (const auto& e : config.tracked) out.push_back(resolve_goal(e));
  return out;
}

double effective_jc_reference(const CaseConfig& config) {
  if (!std::isnan(config.refs.jc_ref)) return config.refs.jc_ref;
  if (config.refs.goal_refs.empty()) return std::nan("");
  MGFSI_CHECK(config.refs.goal_refs.size() == config.goals.size(),
              "reference/goal count mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < config.goals.size(); ++i)
    s += config.goals[i].omega * config.refs.goal_refs[i];
  return s;
}

ManufacturedSolution manufactured_solution(const std::string& forcing) {
  ManufacturedSolution ms;
  if (forcing == "stokes_mms" || forcing == "ns_mms") {
    ms.velocity = mms_velocity;
    ms.velocity_gradient = mms_velocity_gradient;
    ms.pressure = mms_pressure;
    ms.displacement = [](const Vec2&) { return Vec2::Zero(); };
  } else if (forcing == "elasticity_mms") {
    ms.velocity = [](const Vec2&) { return Vec2::Zero(); };
    ms.velocity_gradient = [](const Vec2&) { return Mat2::Zero(); };
    ms.pressure = [](const Vec2&) { return 0.0; };
    ms.displacement = mms_displacement;
  } else {
    MGFSI_CHECK(false, "no manufactured solution for '" << forcing << "'");
  }
  return ms;
}

std::pair<double, double> velocity_error(const FESpace& space, const Vector& U,
                                         const ManufacturedSolution& exact) {
  const int vf = space.spec().field_index("v");
  const int deg = space.spec().fields[vf].degree;
  TensorShapes sh{deg};
  const int nn = sh.n_nodes();
  const QuadratureCell quad = QuadratureCell::gauss(8);
  double l2 = 0.0, h1 = 0.0;
  for (int ac = 0; ac < space.mesh().n_active_cells(); ++ac) {
    const CellGeometry geo = space.cell_geometry(ac);
    const auto& dofs = space.cell_field_dofs(ac, vf);
    for (int q = 0; q < quad.size(); ++q) {
      const Mat2 Jg = geo.jacobian(quad.points[q]);
      const double jxw = Jg.determinant() * quad.weights[q];
      const Mat2 jinvT = Jg.inverse().transpose();
      const Vec2 x = geo.map(quad.points[q]);
      Vec2 v = Vec2::Zero();
      Mat2 gv = Mat2::Zero();
      for (int n = 0; n < nn; ++n) {
        const double s = sh.value(n, quad.points[q]);
        const Vec2 g = jinvT * sh.grad(n, quad.points[q]);
        for (int c = 0; c < 2; ++c) {
          v[c] += U[dofs[c * nn + n]] * s;
          gv.row(c) += U[dofs[c * nn + n]] * g.transpose();
        }
      }
      const Vec2 dv = v - exact.velocity(x);
      const Mat2 dg = gv - exact.velocity_gradient(x);
      l2 += jxw * dv.squaredNorm();
      h1 += jxw * dg.squaredNorm();
    }
  }
  return {std::sqrt(l2), std::sqrt(h1)};
}

}  // namespace mgfsi
