#pragma once

// End-to-end analysis of an evaluated dataset: per-architecture surface fit,
// reconstruction, deformation map, Jensen report and summary tables.

#include <json.hpp>

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cafe/inverse.hpp"
#include "cafe/jensen.hpp"
#include "cafe/response.hpp"
#include "cafe/stress.hpp"

namespace cafe {

inline constexpr int kReportFormatVersion = 1;
inline constexpr const char* kToolVersion = "1.0.0";
inline constexpr std::uint64_t kDefaultDatasetSeed = 20260428;

enum class PriorMode { anchored, distributional };

std::string_view prior_mode_name(PriorMode m);
PriorMode parse_prior_mode(std::string_view name);  // ConfigError

struct AnalysisConfig {
    double rho = kDefaultRidge;
    double lambda = kDefaultInverseLambda;
    double tolerance = kDefaultResilienceTolerance;
    int resamples = kDefaultBootstrapResamples;
    std::uint64_t bootstrap_seed = kDefaultBootstrapSeed;
    PriorMode prior = PriorMode::anchored;
    Eigen::Matrix4d weight = Eigen::Matrix4d::Identity();
    int max_iterations = kDefaultInverseIterations;
    double convergence_tol = kDefaultInverseTolerance;
    bool multi_start = false;
    ConvexPotential potential = ConvexPotential::squared_norm();
    /// When set, every architecture is reconstructed through the surface
    /// fitted on this architecture's records instead of its own surface.
    std::optional<std::string> reference_architecture;
    unsigned threads = 1;

    void validate() const;  // ConfigError
    nlohmann::json to_json() const;
    /// Keys absent from `j` keep their current values.
    void merge_json(const nlohmann::json& j);
};

struct ArchitectureAnalysis {
    std::string architecture_id;
    std::vector<SampleRecord> records;
    ResponseSurface surface;               // fitted on this architecture's rows
    std::string inversion_surface_id;      // surface used for reconstruction
    FitDiagnostics diagnostics;
    std::vector<ReconstructionResult> reconstructions;
    std::optional<DeformationMap> deformation;  // empty when fewer than 17 rows
    /// Dispersion of the fitted map applied to the designed cloud.
    std::optional<double> pushforward_dispersion;
    JensenReport jensen;
    Vec4 std_expansion{};
    Vec4 designed_std{};
    Vec4 observed_std{};
    std::optional<QualityDrop> quality;
    std::size_t n_converged = 0;
    std::size_t n_boundary = 0;  // reconstructions touching a box face
    double mean_iterations = 0.0;
};

/// Analyzes every architecture in first-appearance order. All validation
/// happens before any solve. `external_reference` overrides
/// cfg.reference_architecture when given.
std::vector<ArchitectureAnalysis> analyze_dataset(std::span<const SampleRecord> records,
                                                  const AnalysisConfig& cfg,
                                                  const ResponseSurface* external_reference = nullptr);

InverseConfig make_inverse_config(const AnalysisConfig& cfg, std::span<const Vec4> designed);

/// Report document. `files` maps architecture id to the model and
/// reconstruction file names written next to the report.
nlohmann::json report_to_json(std::span<const ArchitectureAnalysis> analyses,
                              const AnalysisConfig& cfg, const std::string& generated_at);

/// Copy of `report` without volatile fields (the timestamp).
nlohmann::json strip_volatile(const nlohmann::json& report);

/// Filesystem-safe rendering of an architecture id.
std::string file_stem(const std::string& architecture_id);

}  // namespace cafe
