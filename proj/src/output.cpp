#include "mgfsi/output.hpp"

#include "mgfsi/cases.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>

namespace mgfsi {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.8e", v);
  return buf;
}

// CSV field for possibly-undefined quantities.
std::string fmt_or(double v, const char* undefined = "undefined") {
  if (std::isnan(v)) return undefined;
  return fmt(v);
}

}  // namespace

void write_vtk(const FESpace& space, const Vector& U, const Vector* Z_low,
               const std::vector<double>* cell_eta, const std::string& path) {
  const QuadMesh& mesh = space.mesh();
  std::ofstream out(path);
  MGFSI_CHECK(out.good(), "cannot open " << path << " for writing");
  out.precision(12);

  const int nv = mesh.n_vertices();
  const int nc = mesh.n_active_cells();
  out << "# vtk DataFile Version 3.0\n"
      << "mgfsi solution\n"
      << "ASCII\n"
      << "DATASET UNSTRUCTURED_GRID\n"
      << "POINTS " << nv << " double\n";
  for (int v = 0; v < nv; ++v)
    out << mesh.vertex(v).x() << " " << mesh.vertex(v).y() << " 0\n";
  out << "CELLS " << nc << " " << 5 * nc << "\n";
  for (int c : mesh.active_cells()) {
    const auto& verts = mesh.cell(c).verts;
    out << "4 " << verts[0] << " " << verts[1] << " " << verts[2] << " "
        << verts[3] << "\n";
  }
  out << "CELL_TYPES " << nc << "\n";
  for (int i = 0; i < nc; ++i) out << "9\n";

  // Vertex values gathered from the corner nodes of each field.
  const int vf = space.spec().field_index("v");
  const int uf = space.spec().field_index("u");
  const int pf = space.spec().field_index("p");
  auto vertex_values = [&](const Vector& coeffs, int field, int comp) {
    std::vector<double> vals(nv, 0.0);
    const int k = space.spec().fields[field].degree;
    const int nn = (k + 1) * (k + 1);
    // corner tensor nodes in cell corner order
    const int corner_node[4] = {0, k, nn - 1, nn - 1 - k};
    for (int ac = 0; ac < nc; ++ac) {
      const int c = mesh.active_cells()[ac];
      const auto& dofs = space.cell_field_dofs(ac, field);
      for (int l = 0; l < 4; ++l)
        vals[mesh.cell(c).verts[l]] = coeffs[dofs[comp * nn + corner_node[l]]];
    }
    return vals;
  };

  out << "POINT_DATA " << nv << "\n";
  auto write_vector_field = [&](const std::string& name, const Vector& coeffs,
                                int field) {
    const auto x = vertex_values(coeffs, field, 0);
    const auto y = vertex_values(coeffs, field, 1);
    out << "VECTORS " << name << " double\n";
    for (int v = 0; v < nv; ++v) out << x[v] << " " << y[v] << " 0\n";
  };
  auto write_scalar_field = [&](const std::string& name, const Vector& coeffs,
                                int field) {
    const auto s = vertex_values(coeffs, field, 0);
    out << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (int v = 0; v < nv; ++v) out << s[v] << "\n";
  };
  write_vector_field("velocity", U, vf);
  write_vector_field("displacement", U, uf);
  write_scalar_field("pressure", U, pf);
  if (Z_low) {
    write_vector_field("adjoint_velocity", *Z_low, vf);
    write_vector_field("adjoint_displacement", *Z_low, uf);
    write_scalar_field("adjoint_pressure", *Z_low, pf);
  }

  out << "CELL_DATA " << nc << "\n";
  out << "SCALARS material int 1\nLOOKUP_TABLE default\n";
  for (int c : mesh.active_cells())
    out << static_cast<int>(mesh.cell(c).material) << "\n";
  out << "SCALARS level int 1\nLOOKUP_TABLE default\n";
  for (int c : mesh.active_cells()) out << mesh.cell(c).level << "\n";
  if (cell_eta) {
    MGFSI_CHECK(static_cast<int>(cell_eta->size()) == nc,
                "indicator size mismatch");
    out << "SCALARS indicator double 1\nLOOKUP_TABLE default\n";
    for (int i = 0; i < nc; ++i) out << (*cell_eta)[i] << "\n";
  }
}

std::string levels_csv(const std::vector<LevelReport>& levels, int n_goals) {
  std::string s = "level,dofs";
  for (int i = 1; i <= n_goals; ++i) s += ",J_" + std::to_string(i);
  s += ",J_c,true_error,eta_h,sum_abs_eta,i_eff,i_ind";
  for (int i = 1; i <= n_goals; ++i) s += ",sigma_" + std::to_string(i);
  for (int i = 1; i <= n_goals; ++i) s += ",w_" + std::to_string(i);
  s += "\n";
  for (const auto& r : levels) {
    s += std::to_string(r.level) + "," + std::to_string(r.n_dofs);
    for (int i = 0; i < n_goals; ++i)
      s += "," + (i < static_cast<int>(r.J.size()) ? fmt(r.J[i]) : std::string());
    s += "," + fmt(r.J_c);
    s += "," + fmt_or(r.true_error, "");
    s += "," + fmt_or(r.eta_h, "");
    s += "," + fmt_or(r.sum_abs, "");
    if (!std::isnan(r.eta_h) && !std::isnan(r.true_error) && !r.indices_defined) {
      // estimator ran but the true error vanished
      s += ",undefined,undefined";
    } else {
      s += "," + fmt_or(r.i_eff, "");
      s += "," + fmt_or(r.i_ind, "");
    }
    for (int i = 0; i < n_goals; ++i)
      s += "," + (i < static_cast<int>(r.sigma.size())
                      ? std::to_string(r.sigma[i])
                      : std::string());
    for (int i = 0; i < n_goals; ++i)
      s += "," + (i < static_cast<int>(r.w.size()) ? fmt(r.w[i]) : std::string());
    s += "\n";
  }
  return s;
}

std::string run_json(const CaseConfig& config, const AdaptParams& params,
                     const RunResult& result) {
  nlohmann::json j;
  j["case"] = config.id;
  j["description"] = config.description;
  j["geometry"] = config.geometry;
  j["software"] = "mgfsi 1.0.0";
  j["parameters"] = {
      {"rho_f", config.rho_f},   {"nu_f", config.nu_f},
      {"rho_s", config.rho_s},   {"mu_s", config.mu_s},
      {"nu_s", config.nu_s},     {"alpha_u", config.alpha_u},
      {"convection", config.convection},
      {"lambda_s", 2.0 * config.mu_s * config.nu_s / (1.0 - 2.0 * config.nu_s)}};
  j["adapt"] = {{"alpha", params.alpha},
                {"tol", params.tol},
                {"max_levels", params.max_levels},
                {"mode", params.mode == RefineMode::Adaptive ? "adaptive" : "uniform"},
                {"estimator", params.estimator == EstimatorKind::Primal ? "primal" : "full"},
                {"sign_budget", params.sign_budget},
                {"half_factor", params.half_factor}};
  j["goals"] = nlohmann::json::array();
  for (const auto& g : config.goals)
    j["goals"].push_back({{"name", g.name}, {"kind", g.kind}, {"omega", g.omega}});
  if (!config.refs.goal_refs.empty() || !std::isnan(config.refs.jc_ref)) {
    j["references"] = {{"provenance", config.refs.provenance}};
    if (!config.refs.goal_refs.empty()) j["references"]["goals"] = config.refs.goal_refs;
    if (!std::isnan(config.refs.jc_ref)) j["references"]["jc"] = config.refs.jc_ref;
  }
  j["levels"] = nlohmann::json::array();
  for (const auto& r : result.levels) {
    nlohmann::json l;
    l["level"] = r.level;
    l["dofs"] = r.n_dofs;
    l["sigma"] = r.sigma;
    l["w"] = r.w;
    l["marked"] = r.marked;
    l["newton_iterations"] = r.newton_iterations;
    l["pu_gap"] = r.pu_gap;
    l["galerkin"] = r.galerkin;
    l["degenerate_adjoint"] = r.degenerate_adjoint;
    l["wall_seconds"] = r.wall_seconds;
    if (!r.tracked.empty()) l["tracked"] = r.tracked;
    if (!std::isnan(r.eta_full)) l["eta_full"] = r.eta_full;
    j["levels"].push_back(l);
  }
  j["warnings"] = result.warnings;
  return j.dump(2) + "\n";
}

}  // namespace mgfsi
