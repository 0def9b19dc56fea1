#pragma once

// Deformation maps, convex-potential dispersions, the distributional Jensen
// gap with paired bootstrap intervals, regime classification, and the
// quality / standard-deviation summaries reported next to it.

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cafe/response.hpp"
#include "cafe/stress.hpp"

namespace cafe {

inline constexpr double kDefaultResilienceTolerance = 0.01;
inline constexpr int kDefaultBootstrapResamples = 500;
inline constexpr std::uint64_t kDefaultBootstrapSeed = 7;

// ============================================================================
// Deformation map
// ============================================================================

/// Polynomial map from designed to observed centered stress, same basis as
/// the response surface (row k = observed coordinate k).
struct DeformationMap {
    std::string architecture_id;
    CoefficientMatrix coefficients = CoefficientMatrix::Zero();

    Vec4 apply(const Vec4& x) const;
};

/// Requires at least 17 pairs (UnderDeterminedError otherwise).
DeformationMap fit_deformation(std::span<const Vec4> designed, std::span<const Vec4> observed,
                               double rho = kDefaultRidge, std::string architecture_id = {});

// ============================================================================
// Potentials and dispersion
// ============================================================================

struct ConvexPotential {
    enum class Kind { squared_norm, weighted_quadratic };

    Kind kind = Kind::squared_norm;
    Vec4 weights{1.0, 1.0, 1.0, 1.0};  // used by weighted_quadratic only

    static ConvexPotential squared_norm() { return {}; }
    /// Throws std::invalid_argument on negative or non-finite weights.
    static ConvexPotential weighted_quadratic(const Vec4& weights);

    double operator()(const Vec4& x) const;
    const Vec4& effective_weights() const;
    std::string_view name() const;
};

/// E[phi(X)] - phi(E[X]) over the sample. Both supported potentials are
/// quadratic, so this is evaluated as the weighted sum of per-dimension
/// population variances (two-pass), which is the same quantity without the
/// cancellation of the direct form. Throws std::invalid_argument when empty.
double dispersion(std::span<const Vec4> samples, const ConvexPotential& phi = {});

/// dispersion(observed) - dispersion(designed). Lists must be paired.
double jensen_gap(std::span<const Vec4> designed, std::span<const Vec4> observed,
                  const ConvexPotential& phi = {});

enum class Regime { antifragility_compatible, resilient, fragile };

std::string_view regime_name(Regime r);
Regime parse_regime(std::string_view name);

/// gap > tol -> antifragility_compatible, gap < -tol -> fragile, else resilient.
Regime classify(double gap, double tolerance = kDefaultResilienceTolerance);

// ============================================================================
// Bootstrap
// ============================================================================

struct BootstrapOptions {
    int resamples = kDefaultBootstrapResamples;
    std::uint64_t seed = kDefaultBootstrapSeed;
    double quantile_low = 0.025;
    double quantile_high = 0.975;
    unsigned threads = 1;
};

struct ConfidenceInterval {
    double low = 0.0;
    double high = 0.0;
};

/// Gap recomputed on each resample of row indices (pairs kept together).
/// Resample r draws its indices from Rng(derive_seed(seed, r)), so the result
/// does not depend on `threads`.
std::vector<double> bootstrap_gaps(std::span<const Vec4> designed, std::span<const Vec4> observed,
                                   const ConvexPotential& phi, const BootstrapOptions& opts);

/// Nearest-rank quantiles of the bootstrap gaps: element ceil(q * R) - 1 of
/// the sorted resample gaps, index clamped into [0, R - 1].
ConfidenceInterval bootstrap_gap_ci(std::span<const Vec4> designed,
                                    std::span<const Vec4> observed, const ConvexPotential& phi,
                                    const BootstrapOptions& opts = {});

double nearest_rank_quantile(std::span<const double> sorted, double q);

// ============================================================================
// Summaries
// ============================================================================

struct JensenReport {
    std::string architecture_id;
    double expected_dispersion = 0.0;
    double observed_dispersion = 0.0;
    double gap = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    Regime classification = Regime::resilient;
    double tolerance = kDefaultResilienceTolerance;
    std::size_t n_samples = 0;
    int bootstrap_resamples = 0;
    std::uint64_t bootstrap_seed = 0;
    std::string potential = "squared_norm";
};

JensenReport evaluate_jensen(std::span<const Vec4> designed, std::span<const Vec4> observed,
                             const ConvexPotential& phi, double tolerance,
                             const BootstrapOptions& opts, std::string architecture_id = {});

/// Per-dimension population std(observed) - std(designed).
Vec4 std_expansion(std::span<const Vec4> designed, std::span<const Vec4> observed);

/// Population standard deviation per dimension.
Vec4 population_std(std::span<const Vec4> samples);

struct QualityDrop {
    double clean_mean = 0.0;
    double perturbed_mean = 0.0;
    double drop = 0.0;           // perturbed - clean
    double relative_drop = 0.0;  // -drop / clean, as a fraction
    std::size_t n_clean = 0;
    std::size_t n_perturbed = 0;
};

/// Record quality is the mean of its four signals. Throws std::invalid_argument
/// when either group is empty and UnevaluatedError on unevaluated rows.
QualityDrop quality_drop(std::span<const SampleRecord> records);

QualityDrop quality_drop_from_means(double clean_mean, double perturbed_mean);

}  // namespace cafe
