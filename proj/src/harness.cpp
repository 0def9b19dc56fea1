#include "cafe/harness.hpp"

#include <algorithm>
#include <cmath>

#include "cafe/error.hpp"
#include "cafe/rng.hpp"

namespace cafe {

void SyntheticArchitecture::validate() const {
    if (!std::isfinite(noise_std) || noise_std < 0.0) {
        throw ConfigError("architecture '" + id + "': noise_std must be finite and non-negative");
    }
    if (!true_surface.coefficients.allFinite()) {
        throw ConfigError("architecture '" + id + "': surface coefficients must be finite");
    }
    const bool finite = std::visit(
        [](const auto& d) {
            using D = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<D, AxisScaleDeformation>) {
                return std::all_of(d.factors.begin(), d.factors.end(),
                                   [](double f) { return std::isfinite(f); });
            } else if constexpr (std::is_same_v<D, AffineDeformation>) {
                return d.matrix.allFinite() &&
                       std::all_of(d.offset.begin(), d.offset.end(),
                                   [](double f) { return std::isfinite(f); });
            } else if constexpr (std::is_same_v<D, PolynomialDeformation>) {
                return static_cast<bool>(d.coefficients.allFinite());
            } else {
                return true;
            }
        },
        true_deformation);
    if (!finite) throw ConfigError("architecture '" + id + "': deformation parameters must be finite");
}

ResponseSurface default_harness_surface() {
    ResponseSurface s;
    s.architecture_id = "harness";
    s.ridge_strength = 0.0;
    auto& c = s.coefficients;
    c.setZero();
    for (int k = 0; k < 4; ++k) {
        c(k, 0) = 0.6;
        for (int i = 0; i < 4; ++i) c(k, 1 + i) = (i == k) ? -0.5 : 0.04 * (1 + ((k + i) % 3));
        c(k, 5 + k) = -0.08;
    }
    // A little interaction so every basis block is exercised.
    c(0, 9) = 0.05;   // x1*x2 on coherence
    c(1, 12) = -0.05; // x2*x3 on novel inference
    c(2, 15) = 0.06;  // x1*x2^2 on contradiction resolution
    c(3, 16) = -0.06; // x3*x4^2 on structural preservation
    return s;
}

Vec4 deform(const Deformation& deformation, const Vec4& x) {
    const Vec4 raw = std::visit(
        [&](const auto& d) -> Vec4 {
            using D = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<D, IdentityDeformation>) {
                return x;
            } else if constexpr (std::is_same_v<D, AxisScaleDeformation>) {
                return {d.factors[0] * x[0], d.factors[1] * x[1], d.factors[2] * x[2],
                        d.factors[3] * x[3]};
            } else if constexpr (std::is_same_v<D, AffineDeformation>) {
                const Eigen::Vector4d y =
                    d.matrix * Eigen::Vector4d(x[0], x[1], x[2], x[3]) +
                    Eigen::Vector4d(d.offset[0], d.offset[1], d.offset[2], d.offset[3]);
                return {y[0], y[1], y[2], y[3]};
            } else {
                ResponseSurface s;
                s.coefficients = d.coefficients;
                return predict(s, x);
            }
        },
        deformation);
    return clip_to_box(raw);
}

std::string_view deformation_kind(const Deformation& deformation) {
    switch (deformation.index()) {
        case 0: return "identity";
        case 1: return "axis_scale";
        case 2: return "affine";
        default: return "polynomial";
    }
}

std::vector<Vec4> simulate_signals(std::span<const Vec4> designed, const SyntheticArchitecture& arch,
                                   std::uint64_t seed) {
    arch.validate();
    std::vector<Vec4> out;
    out.reserve(designed.size());
    for (std::size_t n = 0; n < designed.size(); ++n) {
        Vec4 s = predict(arch.true_surface, deform(arch.true_deformation, designed[n]));
        if (arch.noise_std > 0.0) {
            Rng rng(Rng::derive_seed(seed, n));
            for (auto& v : s) v += arch.noise_std * rng.normal();
        }
        if (arch.clamp_signals) {
            for (auto& v : s) v = std::clamp(v, 0.0, 1.0);
        }
        out.push_back(s);
    }
    return out;
}

std::vector<SampleRecord> simulate_dataset(std::span<const SampleRecord> records,
                                           const SyntheticArchitecture& arch, std::uint64_t seed) {
    const auto designed = centered_designed(records);
    const auto signals = simulate_signals(designed, arch, seed);
    std::vector<SampleRecord> out(records.begin(), records.end());
    for (std::size_t n = 0; n < out.size(); ++n) {
        out[n].architecture_id = arch.id;
        try {
            out[n].signals = JudgeSignals(signals[n]);
        } catch (const std::domain_error& e) {
            throw ValidationError(n + 1, std::string("simulated ") + e.what() +
                                             " (enable clamp_signals)");
        }
    }
    return out;
}

double oracle_gap(std::span<const Vec4> designed, const SyntheticArchitecture& arch,
                  const ConvexPotential& phi) {
    std::vector<Vec4> deformed;
    deformed.reserve(designed.size());
    for (const auto& x : designed) deformed.push_back(deform(arch.true_deformation, x));
    return jensen_gap(designed, deformed, phi);
}

}  // namespace cafe
