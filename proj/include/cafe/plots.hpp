#pragma once

// Tables and figure data derived from a report: gap-by-architecture rows,
// per-dimension designed-vs-observed marginals, fit diagnostics, std
// expansion and quality drops. Everything is rendered from the report JSON
// plus reconstruction rows so it can be regenerated from files alone.

#include <json.hpp>

#include <map>
#include <string>
#include <vector>

#include "cafe/io.hpp"

namespace cafe::plots {

using RowsByArchitecture = std::map<std::string, std::vector<io::ReconstructionRow>>;

std::string gap_table_csv(const nlohmann::json& report);
std::string fit_diagnostics_csv(const nlohmann::json& report);
std::string std_expansion_csv(const nlohmann::json& report);
std::string quality_drop_csv(const nlohmann::json& report);

/// One row per (record, stress dimension) on the raw [0, 1] scale, with the
/// fitted deformation map's value at the designed point when available.
std::string marginals_csv(const nlohmann::json& report, const RowsByArchitecture& rows);

/// Bar chart of gaps with CI whiskers and dashed resilience band.
std::string gap_svg(const nlohmann::json& report);

/// 2x2 grid of designed-vs-observed scatters with the no-deformation diagonal.
std::string marginal_svg(const std::string& architecture_id,
                         const std::vector<io::ReconstructionRow>& rows);

/// File name -> contents for every plot-data file (and SVGs when `svg`).
std::map<std::string, std::string> render_all(const nlohmann::json& report,
                                              const RowsByArchitecture& rows, bool svg);

}  // namespace cafe::plots
