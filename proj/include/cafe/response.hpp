#pragma once

// Polynomial response surfaces: the 17-term basis, ridge estimation with an
// unpenalized intercept, prediction and fit diagnostics.

#include <Eigen/Core>

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cafe/stress.hpp"

namespace cafe {

inline constexpr std::size_t kBasisSize = 17;
inline constexpr double kDefaultRidge = 1e-3;

/// Basis order: intercept, linear, squares, pairwise products, then the two
/// selected cubic terms. Serialized coefficient rows follow this order.
inline constexpr std::array<std::string_view, kBasisSize> kBasisNames{
    "1",     "x1",    "x2",    "x3",    "x4",    "x1^2",  "x2^2",     "x3^2",    "x4^2",
    "x1*x2", "x1*x3", "x1*x4", "x2*x3", "x2*x4", "x3*x4", "x1*x2^2", "x3*x4^2"};

using FeatureVector = std::array<double, kBasisSize>;
using CoefficientMatrix = Eigen::Matrix<double, 4, static_cast<int>(kBasisSize)>;
using FeatureJacobian = Eigen::Matrix<double, static_cast<int>(kBasisSize), 4>;

FeatureVector build_features(const Vec4& x);
inline FeatureVector build_features(const CenteredStress& x) { return build_features(x.values()); }

/// d(feature_j)/d(x_i), row j column i.
FeatureJacobian feature_jacobian(const Vec4& x);

struct ResponseSurface {
    std::string architecture_id;
    CoefficientMatrix coefficients = CoefficientMatrix::Zero();  // row k = judge signal k
    double ridge_strength = kDefaultRidge;

    /// Throws std::domain_error if any coefficient is non-finite.
    void validate() const;
};

/// Raw model output, not clamped to [0, 1].
Vec4 predict(const ResponseSurface& surface, const Vec4& x);
inline Vec4 predict(const ResponseSurface& surface, const CenteredStress& x) {
    return predict(surface, x.values());
}

/// Row-wise ridge regression of `targets` on build_features(inputs):
/// minimizes |y - F b|^2 + rho * |b without intercept|^2 per output column.
/// Throws UnderDeterminedError (rows < 17 with rho == 0, or no rows) and
/// SingularError (rank-deficient penalized system).
CoefficientMatrix fit_ridge_rows(std::span<const Vec4> inputs, std::span<const Vec4> targets,
                                 double rho);

/// Fits the surface on centered designed stress vs judge signals. Every
/// record must be evaluated (UnevaluatedError otherwise).
ResponseSurface fit_ridge(std::span<const SampleRecord> records, double rho = kDefaultRidge);

struct SignalFit {
    std::optional<double> r_squared;  // empty when the target has zero variance
    double rmse = 0.0;
    double mae = 0.0;
    double sse = 0.0;
    std::size_t n = 0;
};

struct FitDiagnostics {
    std::array<SignalFit, kSignalDims> per_signal{};

    /// Averages across signals; R^2 over the signals where it is defined.
    std::optional<double> mean_r_squared() const;
    double mean_rmse() const;
    double mean_mae() const;
};

/// R^2 = 1 - SSE/SST (SST about the sample mean), RMSE = sqrt(SSE/N), MAE.
SignalFit fit_statistics(std::span<const double> predicted, std::span<const double> observed);

FitDiagnostics diagnostics(const ResponseSurface& surface, std::span<const SampleRecord> records);

/// Signals of evaluated records, throwing UnevaluatedError on the first gap.
std::vector<Vec4> evaluated_signals(std::span<const SampleRecord> records);

}  // namespace cafe
