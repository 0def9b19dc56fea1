#pragma once

// File formats: distribution spec JSON, dataset JSONL, model JSON,
// reconstruction JSONL, harness config JSON, and RFC-4180 CSV.

#include <json.hpp>

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cafe/harness.hpp"
#include "cafe/inverse.hpp"
#include "cafe/response.hpp"
#include "cafe/stress.hpp"

namespace cafe::io {

using nlohmann::json;
namespace fs = std::filesystem;

std::string read_text(const fs::path& path);   // IoError on failure
void write_text(const fs::path& path, const std::string& text);  // IoError on failure
json parse_json_file(const fs::path& path);    // IoError / ConfigError

// ---- distribution spec ------------------------------------------------------

json spec_to_json(const StressDistributionSpec& spec);
StressDistributionSpec spec_from_json(const json& j);  // ConfigError
StressDistributionSpec read_spec(const fs::path& path);

// ---- dataset ----------------------------------------------------------------

json record_to_json(const SampleRecord& r);
/// `row` is the 1-based line number used in error messages.
SampleRecord record_from_json(const json& j, std::size_t row);

std::string dataset_to_jsonl(std::span<const SampleRecord> records);
/// Parses and validates a whole dataset: ParseError on malformed lines,
/// ValidationError on range/schema violations, DuplicateKeyError on repeated
/// (prompt_id, variant_id, architecture_id).
std::vector<SampleRecord> dataset_from_jsonl(const std::string& text);

void write_dataset(const fs::path& path, std::span<const SampleRecord> records);
std::vector<SampleRecord> ingest_records(const fs::path& path);

// ---- response model / deformation map --------------------------------------

json surface_to_json(const ResponseSurface& s);
ResponseSurface surface_from_json(const json& j);  // ConfigError
void write_model(const fs::path& path, const ResponseSurface& s);
ResponseSurface read_model(const fs::path& path);

json coefficients_to_json(const CoefficientMatrix& c);
CoefficientMatrix coefficients_from_json(const json& j, const std::string& what);

// ---- reconstructions ---------------------------------------------------------

struct ReconstructionRow {
    SampleRecord record;
    ReconstructionResult result;
};

std::string reconstructions_to_jsonl(std::span<const SampleRecord> records,
                                     std::span<const ReconstructionResult> results);
std::vector<ReconstructionRow> reconstructions_from_jsonl(const std::string& text);
std::vector<ReconstructionRow> read_reconstructions(const fs::path& path);

// ---- harness config -----------------------------------------------------------

json architecture_to_json(const SyntheticArchitecture& a);
SyntheticArchitecture architecture_from_json(const json& j);  // ConfigError
/// Accepts a single architecture object or {"architectures": [...]}.
std::vector<SyntheticArchitecture> harness_from_json(const json& j);
std::vector<SyntheticArchitecture> read_harness(const fs::path& path);

// ---- CSV ---------------------------------------------------------------------

std::string csv_field(const std::string& value);
std::string csv_number(double value);
std::string to_csv(const std::vector<std::string>& header,
                   const std::vector<std::vector<std::string>>& rows);
/// Minimal RFC-4180 reader (quoted fields, doubled quotes, embedded newlines).
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

// ---- helpers -----------------------------------------------------------------

Vec4 vec4_from_named(const json& j, std::span<const std::string_view> names, const std::string& what);
json vec4_to_named(const Vec4& v, std::span<const std::string_view> names);
Vec4 vec4_from_array(const json& j, const std::string& what);
Eigen::Matrix4d matrix4_from_json(const json& j, const std::string& what);
json matrix4_to_json(const Eigen::Matrix4d& m);

/// 64-bit FNV-1a digest, hex encoded; used to fingerprint run inputs.
std::string content_digest(const std::string& bytes);

}  // namespace cafe::io
