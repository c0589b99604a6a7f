#include "mgfsi/config_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace mgfsi {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string join_params(const std::vector<double>& p) {
  std::string s;
  for (double v : p) s += " " + num(v);
  return s;
}

std::vector<std::string> tokens(const std::string& s) {
  std::istringstream iss(s);
  std::vector<std::string> out;
  std::string t;
  while (iss >> t) out.push_back(t);
  return out;
}

}  // namespace

void write_config(const CaseConfig& c, std::ostream& out) {
  out << "[case]\n";
  out << "id = " << c.id << "\n";
  out << "description = " << c.description << "\n";
  out << "[geometry]\n";
  out << "source = " << c.geometry << "\n";
  out << "initial_refinements = " << c.initial_refinements << "\n";
  out << "[materials]\n";
  out << "rho_f = " << num(c.rho_f) << "\n";
  out << "nu_f = " << num(c.nu_f) << "\n";
  out << "rho_s = " << num(c.rho_s) << "\n";
  out << "mu_s = " << num(c.mu_s) << "\n";
  out << "nu_s = " << num(c.nu_s) << "\n";
  out << "alpha_u = " << num(c.alpha_u) << "\n";
  out << "convection = " << num(c.convection) << "\n";
  if (!c.forcing.empty()) out << "forcing = " << c.forcing << "\n";
  out << "[bcs]\n";
  for (const auto& b : c.bcs)
    out << "bc = " << b.marker << " " << b.kind << join_params(b.params) << "\n";
  out << "[goals]\n";
  for (const auto& g : c.goals)
    out << "goal = " << g.kind << " " << g.name << " " << num(g.omega)
        << join_params(g.params) << "\n";
  for (const auto& g : c.tracked)
    out << "tracked = " << g.kind << " " << g.name << " " << num(g.omega)
        << join_params(g.params) << "\n";
  out << "[references]\n";
  if (!c.refs.goal_refs.empty()) {
    out << "goal_refs =" << join_params(c.refs.goal_refs) << "\n";
  }
  if (!std::isnan(c.refs.jc_ref)) out << "jc_ref = " << num(c.refs.jc_ref) << "\n";
  if (!c.refs.provenance.empty())
    out << "provenance = " << c.refs.provenance << "\n";
  out << "[adapt]\n";
  out << "alpha = " << num(c.adapt.alpha) << "\n";
  out << "tol = " << num(c.adapt.tol) << "\n";
  out << "max_levels = " << c.adapt.max_levels << "\n";
  out << "mode = " << (c.adapt.mode == RefineMode::Adaptive ? "adaptive" : "uniform")
      << "\n";
  out << "estimator = "
      << (c.adapt.estimator == EstimatorKind::Primal ? "primal" : "full") << "\n";
  out << "sign_budget = " << c.adapt.sign_budget << "\n";
  out << "half_factor = " << (c.adapt.half_factor ? 1 : 0) << "\n";
}

CaseConfig read_config(std::istream& in) {
  CaseConfig c;
  c.refs.jc_ref = std::nan("");
  std::string line, section;
  while (std::getline(in, line)) {
    // strip comments and whitespace
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    line = line.substr(b, e - b + 1);
    if (line.front() == '[') {
      MGFSI_CHECK(line.back() == ']', "bad section line: " << line);
      section = line.substr(1, line.size() - 2);
      continue;
    }
    const auto eq = line.find('=');
    MGFSI_CHECK(eq != std::string::npos, "bad config line: " << line);
    std::string key = line.substr(0, eq);
    std::string value = line.substr(eq + 1);
    auto trim = [](std::string& s) {
      const auto b2 = s.find_first_not_of(" \t");
      const auto e2 = s.find_last_not_of(" \t");
      s = b2 == std::string::npos ? "" : s.substr(b2, e2 - b2 + 1);
    };
    trim(key);
    trim(value);

    auto as_doubles = [&](int from) {
      std::vector<double> out;
      const auto t = tokens(value);
      for (std::size_t i = from; i < t.size(); ++i) out.push_back(std::stod(t[i]));
      return out;
    };

    if (section == "case") {
      if (key == "id") c.id = value;
      else if (key == "description") c.description = value;
      else MGFSI_CHECK(false, "unknown key " << key << " in [case]");
    } else if (section == "geometry") {
      if (key == "source") c.geometry = value;
      else if (key == "initial_refinements") c.initial_refinements = std::stoi(value);
      else MGFSI_CHECK(false, "unknown key " << key << " in [geometry]");
    } else if (section == "materials") {
      if (key == "rho_f") c.rho_f = std::stod(value);
      else if (key == "nu_f") c.nu_f = std::stod(value);
      else if (key == "rho_s") c.rho_s = std::stod(value);
      else if (key == "mu_s") c.mu_s = std::stod(value);
      else if (key == "nu_s") c.nu_s = std::stod(value);
      else if (key == "alpha_u") c.alpha_u = std::stod(value);
      else if (key == "convection") c.convection = std::stod(value);
      else if (key == "forcing") c.forcing = value;
      else MGFSI_CHECK(false, "unknown key " << key << " in [materials]");
    } else if (section == "bcs") {
      MGFSI_CHECK(key == "bc", "unknown key " << key << " in [bcs]");
      const auto t = tokens(value);
      MGFSI_CHECK(t.size() >= 2, "bad bc line: " << value);
      BcEntry b;
      b.marker = std::stoi(t[0]);
      b.kind = t[1];
      for (std::size_t i = 2; i < t.size(); ++i) b.params.push_back(std::stod(t[i]));
      c.bcs.push_back(b);
    } else if (section == "goals") {
      MGFSI_CHECK(key == "goal" || key == "tracked",
                  "unknown key " << key << " in [goals]");
      const auto t = tokens(value);
      MGFSI_CHECK(t.size() >= 3, "bad goal line: " << value);
      GoalEntry g;
      g.kind = t[0];
      g.name = t[1];
      g.omega = std::stod(t[2]);
      for (std::size_t i = 3; i < t.size(); ++i) g.params.push_back(std::stod(t[i]));
      (key == "goal" ? c.goals : c.tracked).push_back(g);
    } else if (section == "references") {
      if (key == "goal_refs") c.refs.goal_refs = as_doubles(0);
      else if (key == "jc_ref") c.refs.jc_ref = std::stod(value);
      else if (key == "provenance") c.refs.provenance = value;
      else MGFSI_CHECK(false, "unknown key " << key << " in [references]");
    } else if (section == "adapt") {
      if (key == "alpha") c.adapt.alpha = std::stod(value);
      else if (key == "tol") c.adapt.tol = std::stod(value);
      else if (key == "max_levels") c.adapt.max_levels = std::stoi(value);
      else if (key == "mode")
        c.adapt.mode = value == "uniform" ? RefineMode::Uniform : RefineMode::Adaptive;
      else if (key == "estimator")
        c.adapt.estimator = value == "full" ? EstimatorKind::Full : EstimatorKind::Primal;
      else if (key == "sign_budget") c.adapt.sign_budget = std::stoi(value);
      else if (key == "half_factor") c.adapt.half_factor = value == "1" || value == "true";
      else MGFSI_CHECK(false, "unknown key " << key << " in [adapt]");
    } else {
      MGFSI_CHECK(false, "unknown section [" << section << "]");
    }
  }
  return c;
}

void write_config_file(const CaseConfig& config, const std::string& path) {
  std::ofstream out(path);
  MGFSI_CHECK(out.good(), "cannot open " << path << " for writing");
  write_config(config, out);
}

CaseConfig read_config_file(const std::string& path) {
  std::ifstream in(path);
  MGFSI_CHECK(in.good(), "cannot open config file " << path);
  return read_config(in);
}

}  // namespace mgfsi
