#pragma once

#include "mgfsi/cases.hpp"

#include <iosfwd>

namespace mgfsi {

/// Flat key-value case config format with one [section] per module; see
/// README for the grammar. Lossless round-trip for CaseConfig.
void write_config(const CaseConfig& config, std::ostream& out);
CaseConfig read_config(std::istream& in);

void write_config_file(const CaseConfig& config, const std::string& path);
CaseConfig read_config_file(const std::string& path);

}  // namespace mgfsi
