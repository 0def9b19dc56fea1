#pragma once

// Synthetic ground truth. A synthetic architecture deforms designed stress by
// a known map and emits judge signals from a known response surface at the
// deformed point, so pipeline estimates can be checked against exact answers.

#include <Eigen/Core>

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cafe/jensen.hpp"
#include "cafe/response.hpp"
#include "cafe/stress.hpp"

namespace cafe {

struct IdentityDeformation {};

/// x'_i = factor_i * x_i in centered coordinates.
struct AxisScaleDeformation {
    Vec4 factors{1.0, 1.0, 1.0, 1.0};
};

/// x' = matrix * x + offset.
struct AffineDeformation {
    Eigen::Matrix4d matrix = Eigen::Matrix4d::Identity();
    Vec4 offset{};
};

/// x'_k = coefficients.row(k) . build_features(x).
struct PolynomialDeformation {
    CoefficientMatrix coefficients = CoefficientMatrix::Zero();
};

using Deformation =
    std::variant<IdentityDeformation, AxisScaleDeformation, AffineDeformation, PolynomialDeformation>;

/// Linear-dominant surface: intercept 0.6, own-dimension slope -0.5, weak
/// cross terms and mild curvature. Its Jacobian is diagonally dominant on the
/// whole box, so the inverse problem is identifiable everywhere.
ResponseSurface default_harness_surface();

struct SyntheticArchitecture {
    std::string id = "SYN";
    Deformation true_deformation = IdentityDeformation{};
    ResponseSurface true_surface = default_harness_surface();
    double noise_std = 0.0;
    bool clamp_signals = true;

    /// Throws ConfigError on non-finite parameters or negative noise.
    void validate() const;
};

/// True deformation followed by projection onto the box.
Vec4 deform(const Deformation& deformation, const Vec4& x);

std::string_view deformation_kind(const Deformation& deformation);

/// Per sample, in order: s = true_surface(deform(x)) + N(0, noise_std^2) per
/// signal, clamped to [0, 1] iff clamp_signals. Noise for sample n comes from
/// Rng(derive_seed(seed, n)).
std::vector<Vec4> simulate_signals(std::span<const Vec4> designed, const SyntheticArchitecture& arch,
                                   std::uint64_t seed);

/// Copies `records` relabelled with arch.id and fills their signals. Throws
/// ValidationError if a signal leaves [0, 1] (possible only without clamping).
std::vector<SampleRecord> simulate_dataset(std::span<const SampleRecord> records,
                                           const SyntheticArchitecture& arch, std::uint64_t seed);

/// Jensen gap between the designed cloud and its exact deformation.
double oracle_gap(std::span<const Vec4> designed, const SyntheticArchitecture& arch,
                  const ConvexPotential& phi = {});

}  // namespace cafe
