#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/SVD>

#include <cmath>

#include "cafe/error.hpp"
#include "cafe/harness.hpp"
#include "test_helpers.hpp"

using namespace cafe;
using cafe::testing::random_box_point;

namespace {

// Mixture oracle (quadrature over the clipped-normal laws, eleven percent
// of rows at the zero-stress corner): expected gap on the benchmark design.
constexpr double kOracleGapScale13 = 0.0597997;
constexpr double kOracleGapScale07 = -0.0929658;
constexpr double kOracleBand = 0.005;

std::vector<Vec4> benchmark_cloud(std::uint64_t seed) {
    return centered_designed(build_designed_dataset(StressDistributionSpec::benchmark(), 50, 10, seed, "A0"));
}

SyntheticArchitecture axis(double f, double noise = 0.0) {
    SyntheticArchitecture a;
    a.true_deformation = AxisScaleDeformation{{f, f, f, f}};
    a.noise_std = noise;
    return a;
}

}  // namespace

TEST_CASE("identity, zero noise reproduces the surface") {
    const auto x = benchmark_cloud(1);
    SyntheticArchitecture arch;
    const auto s = simulate_signals(x, arch, 3);
    REQUIRE(s.size() == x.size());
    for (std::size_t n = 0; n < x.size(); ++n) CHECK(s[n] == predict(arch.true_surface, x[n]));
}

TEST_CASE("constant surface ignores the deformation") {
    SyntheticArchitecture arch = axis(1.7);
    arch.true_surface = ResponseSurface{};
    arch.true_surface.coefficients.col(0) << 0.1, 0.2, 0.3, 0.4;
    for (const auto& s : simulate_signals(benchmark_cloud(2), arch, 4)) CHECK(s == Vec4{0.1, 0.2, 0.3, 0.4});
}

TEST_CASE("noise level") {
    std::vector<Vec4> x;
    Rng rng(9);
    for (int i = 0; i < 10000; ++i) x.push_back(random_box_point(rng));
    SyntheticArchitecture arch;
    arch.noise_std = 0.05;
    arch.clamp_signals = false;
    const auto s = simulate_signals(x, arch, 10);
    for (std::size_t k = 0; k < 4; ++k) {
        double sum = 0.0, sq = 0.0;
        for (std::size_t n = 0; n < x.size(); ++n) {
            const double r = s[n][k] - predict(arch.true_surface, x[n])[k];
            sum += r;
            sq += r * r;
        }
        const double mean = sum / 1e4;
        const double sd = std::sqrt(sq / 1e4 - mean * mean);
        CHECK(std::abs(sd - 0.05) / 0.05 < 0.10);
        CHECK(std::abs(mean) < 0.003);
    }

    arch.clamp_signals = true;
    arch.noise_std = 0.5;
    for (const auto& v : simulate_signals(x, arch, 11))
        for (double c : v) CHECK((c >= 0.0 && c <= 1.0));
}

TEST_CASE("reproducible per seed") {
    const auto x = benchmark_cloud(5);
    const auto arch = axis(1.3, 0.05);
    CHECK(simulate_signals(x, arch, 42) == simulate_signals(x, arch, 42));
    CHECK(simulate_signals(x, arch, 42) != simulate_signals(x, arch, 43));

    // Noise for a sample depends only on its index, not on the list length.
    const std::vector<Vec4> prefix(x.begin(), x.begin() + 10);
    const auto full = simulate_signals(x, arch, 42);
    const auto part = simulate_signals(prefix, arch, 42);
    for (std::size_t i = 0; i < 10; ++i) CHECK(full[i] == part[i]);
}

TEST_CASE("deformations") {
    const Vec4 p{0.2, -0.1, 0.3, -0.4};
    CHECK(deform(IdentityDeformation{}, p) == p);
    const Vec4 a = deform(AxisScaleDeformation{{2, 1, 0.5, 1}}, p);
    CHECK(a == Vec4{0.4, -0.1, 0.15, -0.4});
    const Vec4 clipped = deform(AxisScaleDeformation{{3, 3, 3, 3}}, p);
    CHECK(clipped[0] == 0.5);
    CHECK(clipped[1] == doctest::Approx(-0.3));
    CHECK(clipped[2] == 0.5);
    CHECK(clipped[3] == -0.5);

    AffineDeformation aff;
    aff.matrix = 0.5 * Eigen::Matrix4d::Identity();
    aff.offset = {0.1, 0, 0, 0};
    const Vec4 b = deform(aff, p);
    CHECK(b[0] == doctest::Approx(0.2));
    CHECK(b[3] == doctest::Approx(-0.2));

    PolynomialDeformation poly;
    for (int k = 0; k < 4; ++k) poly.coefficients(k, k + 1) = 1.0;
    poly.coefficients(0, 5) = 1.0;  // x1 + x1^2
    const Vec4 c = deform(poly, p);
    CHECK(c[0] == doctest::Approx(0.24));
    CHECK(c[1] == doctest::Approx(-0.1));

    CHECK(deformation_kind(IdentityDeformation{}) == "identity");
    CHECK(deformation_kind(aff) == "affine");
}

TEST_CASE("oracle gap") {
    const auto x = benchmark_cloud(6);
    CHECK(oracle_gap(x, SyntheticArchitecture{}) == 0.0);

    // Zero-mean cloud inside [-1/4, 1/4] on axis 1: doubling keeps it in the box.
    std::vector<Vec4> cloud;
    Rng rng(7);
    for (int i = 0; i < 500; ++i) {
        const double u = 0.25 * (2 * rng.uniform() - 1);
        cloud.push_back({u, 0.1 * rng.uniform(), 0.0, -0.1});
        cloud.push_back({-u, 0.1 * rng.uniform(), 0.0, -0.1});
    }
    double v1 = 0.0;
    for (const auto& p : cloud) v1 += p[0] * p[0];
    v1 /= static_cast<double>(cloud.size());
    SyntheticArchitecture two;
    two.true_deformation = AxisScaleDeformation{{2, 1, 1, 1}};
    CHECK(oracle_gap(cloud, two) == doctest::Approx(3.0 * v1).epsilon(1e-10));

    double mean13 = 0.0, mean07 = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto d = benchmark_cloud(100 + seed);
        const double g13 = oracle_gap(d, axis(1.3));
        const double g07 = oracle_gap(d, axis(0.7));
        CHECK(g13 > 0.0);
        CHECK(g07 < 0.0);
        CHECK(std::abs(g13 - kOracleGapScale13) < 0.02);
        CHECK(std::abs(g07 - kOracleGapScale07) < 0.02);
        mean13 += g13 / 10.0;
        mean07 += g07 / 10.0;

        // Direct evaluation by hand.
        std::vector<Vec4> e = d;
        for (auto& p : e)
            for (auto& c : p) c = std::clamp(1.3 * c, -0.5, 0.5);
        CHECK(g13 == doctest::Approx(dispersion(e) - dispersion(d)).epsilon(1e-12));
    }
    CHECK(std::abs(mean13 - kOracleGapScale13) < kOracleBand);
    CHECK(std::abs(mean07 - kOracleGapScale07) < kOracleBand);
}

TEST_CASE("dataset simulation and validation") {
    const auto design = build_designed_dataset(StressDistributionSpec::benchmark(), 5, 3, 1, "ignored");
    auto arch = axis(1.2, 0.02);
    arch.id = "EXP";
    const auto out = simulate_dataset(design, arch, 3);
    REQUIRE(out.size() == design.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        CHECK(out[i].architecture_id == "EXP");
        CHECK(out[i].evaluated());
        CHECK(out[i].prompt_id == design[i].prompt_id);
        CHECK(out[i].designed_stress == design[i].designed_stress);
    }

    auto loud = arch;
    loud.noise_std = 5.0;
    loud.clamp_signals = false;
    CHECK_THROWS_AS(simulate_dataset(design, loud, 3), ValidationError);

    auto bad = arch;
    bad.noise_std = -1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = arch;
    bad.true_deformation = AxisScaleDeformation{{1, std::nan(""), 1, 1}};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("default surface is well conditioned on the box") {
    const auto s = default_harness_surface();
    Rng rng(8);
    for (int t = 0; t < 200; ++t) {
        const Vec4 x = random_box_point(rng);
        const Eigen::Matrix<double, 4, 4> j = s.coefficients * feature_jacobian(x);
        const Eigen::JacobiSVD<Eigen::Matrix4d> svd(j);
        CHECK(svd.singularValues()(3) > 0.2);
        const Vec4 p = predict(s, x);
        for (double v : p) CHECK((v > 0.0 && v < 1.0));
    }
}
