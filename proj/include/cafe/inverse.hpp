#pragma once

// Observed-effective-stress reconstruction: for each judge-signal vector,
// minimize the weighted mismatch to the response surface plus a prior
// penalty over the centered box [-1/2, 1/2]^4.

#include <Eigen/Core>

#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cafe/response.hpp"
#include "cafe/stress.hpp"

namespace cafe {

inline constexpr double kDefaultInverseLambda = 0.05;
inline constexpr int kDefaultInverseIterations = 100;
inline constexpr double kDefaultInverseTolerance = 1e-8;
inline constexpr double kPriorCovarianceRidge = 1e-6;

/// R(x) = |x - anchor|^2, anchor supplied per sample.
struct AnchoredPrior {};

/// R(x) = (x - mean)' precision (x - mean).
class DistributionalPrior {
public:
    /// Throws std::invalid_argument unless `covariance` is symmetric positive definite.
    DistributionalPrior(const Vec4& mean, const Eigen::Matrix4d& covariance);

    const Vec4& mean() const noexcept { return mean_; }
    const Eigen::Matrix4d& covariance() const noexcept { return covariance_; }
    const Eigen::Matrix4d& precision() const noexcept { return precision_; }

    /// Empirical mean and population covariance of `designed`, plus `ridge` on the diagonal.
    static DistributionalPrior estimate(std::span<const Vec4> designed,
                                        double ridge = kPriorCovarianceRidge);

private:
    Vec4 mean_;
    Eigen::Matrix4d covariance_;
    Eigen::Matrix4d precision_;
};

using StressPrior = std::variant<AnchoredPrior, DistributionalPrior>;

struct InverseConfig {
    Eigen::Matrix4d weight = Eigen::Matrix4d::Identity();
    double lambda = kDefaultInverseLambda;
    StressPrior prior = AnchoredPrior{};
    int max_iterations = kDefaultInverseIterations;
    double convergence_tol = kDefaultInverseTolerance;
    /// Also start from the 16 corners of [-1/4, 1/4]^4 and keep the best solve.
    bool multi_start = false;
    /// Worker threads for dataset reconstruction; results do not depend on it.
    unsigned threads = 1;

    /// Throws ConfigError on an asymmetric / indefinite weight, negative
    /// lambda, or non-positive iteration cap or tolerance.
    void validate() const;
};

struct ReconstructionResult {
    CenteredStress x_obs;
    StressVector psi_obs;
    double objective_value = 0.0;
    int iterations = 0;
    bool converged = false;
};

double inverse_objective(const Vec4& x, const Vec4& signals, const ResponseSurface& surface,
                         const InverseConfig& cfg, const Vec4& anchor);

Vec4 inverse_gradient(const Vec4& x, const Vec4& signals, const ResponseSurface& surface,
                      const InverseConfig& cfg, const Vec4& anchor);

/// Single solve starting from the anchor (clipped to the box). Throws
/// SolverError naming `sample_id` on a non-finite objective.
ReconstructionResult reconstruct_sample(const Vec4& signals, const ResponseSurface& surface,
                                        const InverseConfig& cfg, const CenteredStress& anchor,
                                        const std::string& sample_id = {});

/// One result per record, anchored at each record's centered designed
/// stress. Per-sample failures are collected and rethrown as one SolverError.
std::vector<ReconstructionResult> reconstruct_dataset(std::span<const SampleRecord> records,
                                                      const ResponseSurface& surface,
                                                      const InverseConfig& cfg);

std::vector<Vec4> observed_points(std::span<const ReconstructionResult> results);

}  // namespace cafe
