#pragma once

#include "mgfsi/adapt.hpp"

#include <string>

namespace mgfsi {

struct CaseConfig;

/// Legacy ASCII unstructured-grid file with point data (v, u, p and the
/// adjoint fields when given) and cell data (material, level, indicator).
void write_vtk(const FESpace& space, const Vector& U, const Vector* Z_low,
               const std::vector<double>* cell_eta, const std::string& path);

/// Per-level CSV table; columns
/// level,dofs,J_1..J_N,J_c,true_error,eta_h,sum_abs_eta,i_eff,i_ind,
/// sigma_1..N,w_1..N. Fixed %.8e formatting; byte-deterministic.
std::string levels_csv(const std::vector<LevelReport>& levels, int n_goals);

/// Run metadata (parameters, signs per level, warnings, conventions).
std::string run_json(const CaseConfig& config, const AdaptParams& params,
                     const RunResult& result);

}  // namespace mgfsi
