#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cafe/error.hpp"
#include "cafe/response.hpp"
#include "test_helpers.hpp"

using namespace cafe;
using cafe::testing::bounded_random_surface;
using cafe::testing::records_from_surface;

namespace {

double penalized_objective(const std::vector<Vec4>& x, const std::vector<Vec4>& y,
                           const CoefficientMatrix& c, double rho) {
    ResponseSurface s;
    s.coefficients = c;
    double total = 0.0;
    for (std::size_t n = 0; n < x.size(); ++n) {
        const Vec4 p = predict(s, x[n]);
        for (std::size_t k = 0; k < 4; ++k) total += (y[n][k] - p[k]) * (y[n][k] - p[k]);
    }
    for (int k = 0; k < 4; ++k)
        for (int j = 1; j < 17; ++j) total += rho * c(k, j) * c(k, j);
    return total;
}

}  // namespace

TEST_CASE("feature basis") {
    const auto origin = build_features(Vec4{0, 0, 0, 0});
    CHECK(origin[0] == 1.0);
    for (std::size_t j = 1; j < kBasisSize; ++j) CHECK(origin[j] == 0.0);

    const auto half = build_features(Vec4{0.5, 0.5, 0.5, 0.5});
    CHECK(half[0] == 1.0);
    for (std::size_t j = 1; j <= 4; ++j) CHECK(half[j] == 0.5);
    for (std::size_t j = 5; j <= 14; ++j) CHECK(half[j] == 0.25);
    CHECK(half[15] == 0.125);
    CHECK(half[16] == 0.125);

    const auto mixed = build_features(Vec4{-0.5, 0.5, 0, 0});
    CHECK(mixed[9] == -0.25);
    CHECK(mixed[15] == -0.125);
    for (std::size_t j : {3, 4, 7, 8, 10, 11, 12, 13, 14, 16}) CHECK(mixed[j] == 0.0);
}

TEST_CASE("feature jacobian matches central differences") {
    Rng rng(4);
    for (int t = 0; t < 50; ++t) {
        const Vec4 x = testing::random_box_point(rng);
        const auto jac = feature_jacobian(x);
        for (int i = 0; i < 4; ++i) {
            Vec4 hi = x, lo = x;
            hi[static_cast<std::size_t>(i)] += 1e-6;
            lo[static_cast<std::size_t>(i)] -= 1e-6;
            const auto fh = build_features(hi), fl = build_features(lo);
            for (int j = 0; j < 17; ++j) {
                CHECK(jac(j, i) == doctest::Approx((fh[static_cast<std::size_t>(j)] - fl[static_cast<std::size_t>(j)]) / 2e-6).epsilon(1e-6));
            }
        }
    }
}

TEST_CASE("noiseless generate-then-fit recovers the surface") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto truth = bounded_random_surface(seed);
        const auto records = records_from_surface(truth, 0.0, 100 + seed);
        const auto fit = fit_ridge(records, 1e-12);
        CHECK((fit.coefficients - truth.coefficients).cwiseAbs().maxCoeff() < 1e-6);
        for (const auto& r : records) {
            const Vec4 p = predict(fit, center(r.designed_stress));
            for (std::size_t k = 0; k < 4; ++k) CHECK(std::abs(p[k] - (*r.signals)[k]) < 1e-6);
        }
    }
}

TEST_CASE("constant signals give intercept only") {
    ResponseSurface flat;
    flat.coefficients(0, 0) = 0.3;
    flat.coefficients(1, 0) = 0.55;
    flat.coefficients(2, 0) = 0.9;
    flat.coefficients(3, 0) = 0.1;
    const auto records = records_from_surface(flat, 0.0, 9);
    for (double rho : {0.0, 1e-3, 1.0, 100.0}) {
        const auto fit = fit_ridge(records, rho);
        for (int k = 0; k < 4; ++k) {
            CHECK(std::abs(fit.coefficients(k, 0) - flat.coefficients(k, 0)) < 1e-8);
            for (int j = 1; j < 17; ++j) CHECK(std::abs(fit.coefficients(k, j)) < 1e-8);
        }
    }
}

TEST_CASE("ridge error paths") {
    const auto truth = bounded_random_surface(8);
    const auto records = records_from_surface(truth, 0.0, 5, 2, 4);  // 10 rows
    CHECK_THROWS_AS(fit_ridge(records, 0.0), UnderDeterminedError);
    CHECK_NOTHROW(fit_ridge(records, 1e-3));
    CHECK_THROWS_AS(fit_ridge(std::vector<SampleRecord>{}, 1e-3), UnderDeterminedError);
    CHECK_THROWS_AS(fit_ridge(records, -1.0), std::invalid_argument);

    // 30 copies of the same point: the unpenalized system is rank one.
    std::vector<Vec4> x(30, Vec4{0.1, -0.2, 0.3, 0.0}), y(30, Vec4{0.5, 0.5, 0.5, 0.5});
    CHECK_THROWS_AS(fit_ridge_rows(x, y, 0.0), SingularError);
    CHECK_NOTHROW(fit_ridge_rows(x, y, 1e-3));

    auto unevaluated = records;
    unevaluated[3].signals.reset();
    CHECK_THROWS_AS(fit_ridge(unevaluated, 1e-3), UnevaluatedError);
}

TEST_CASE("ridge shrinkage is monotone in rho") {
    const auto records = records_from_surface(bounded_random_surface(21), 0.05, 31);
    double previous = std::numeric_limits<double>::infinity();
    for (double rho : {0.0, 1e-4, 1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0}) {
        const auto fit = fit_ridge(records, rho);
        const double norm = fit.coefficients.rightCols(16).norm();
        CHECK(norm <= previous * (1.0 + 1e-12));
        previous = norm;
    }
}

TEST_CASE("fitted coefficients are a local optimum of the penalized objective") {
    const auto records = records_from_surface(bounded_random_surface(12), 0.05, 13);
    const double rho = 1e-3;
    const auto fit = fit_ridge(records, rho);
    const auto x = centered_designed(records);
    const auto y = evaluated_signals(records);
    const double best = penalized_objective(x, y, fit.coefficients, rho);
    for (int k = 0; k < 4; ++k) {
        for (int j = 0; j < 17; ++j) {
            for (double step : {1e-3, -1e-3}) {
                CoefficientMatrix c = fit.coefficients;
                c(k, j) += step;
                CHECK(penalized_objective(x, y, c, rho) >= best);
            }
        }
    }
}

TEST_CASE("prediction") {
    ResponseSurface s;
    s.coefficients(0, 0) = 0.8;
    CHECK(predict(s, Vec4{0.3, -0.2, 0.1, 0.4})[0] == 0.8);

    const auto t = bounded_random_surface(3);
    const Vec4 at_origin = predict(t, Vec4{0, 0, 0, 0});
    for (int k = 0; k < 4; ++k) CHECK(at_origin[static_cast<std::size_t>(k)] == t.coefficients(k, 0));

    // Linear in the coefficients.
    const auto a = bounded_random_surface(4), b = bounded_random_surface(5);
    ResponseSurface mix;
    mix.coefficients = 2.5 * a.coefficients - 0.75 * b.coefficients;
    Rng rng(6);
    for (int i = 0; i < 100; ++i) {
        const Vec4 x = testing::random_box_point(rng);
        const Vec4 pa = predict(a, x), pb = predict(b, x), pm = predict(mix, x);
        for (std::size_t k = 0; k < 4; ++k) CHECK(pm[k] == doctest::Approx(2.5 * pa[k] - 0.75 * pb[k]).epsilon(1e-12));
    }

    ResponseSurface broken;
    broken.coefficients(2, 5) = std::nan("");
    CHECK_THROWS_AS(broken.validate(), std::domain_error);
}

TEST_CASE("fit diagnostics") {
    const auto truth = bounded_random_surface(40);
    const auto exact = records_from_surface(truth, 0.0, 41);
    const auto perfect = diagnostics(truth, exact);
    for (const auto& s : perfect.per_signal) {
        REQUIRE(s.r_squared.has_value());
        CHECK(*s.r_squared == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(s.rmse < 1e-12);
        CHECK(s.mae < 1e-12);
    }

    // A surface predicting each signal's sample mean has R^2 = 0.
    const auto y = evaluated_signals(exact);
    ResponseSurface mean_surface;
    for (std::size_t k = 0; k < 4; ++k) {
        double m = 0.0;
        for (const auto& v : y) m += v[k];
        mean_surface.coefficients(static_cast<int>(k), 0) = m / static_cast<double>(y.size());
    }
    for (const auto& s : diagnostics(mean_surface, exact).per_signal) {
        CHECK(*s.r_squared == doctest::Approx(0.0).epsilon(1e-12));
    }

    // Constant target: R^2 undefined, not NaN.
    ResponseSurface flat;
    flat.coefficients.col(0).setConstant(0.4);
    const auto constant = records_from_surface(flat, 0.0, 42);
    const auto undefined = diagnostics(flat, constant);
    for (const auto& s : undefined.per_signal) CHECK_FALSE(s.r_squared.has_value());
    CHECK_FALSE(undefined.mean_r_squared().has_value());

    // Noisy fit: RMSE tracks the noise level; internal identities hold.
    SyntheticArchitecture arch;
    arch.true_surface = truth;
    arch.noise_std = 0.03;
    arch.clamp_signals = false;
    const auto design = build_designed_dataset(StressDistributionSpec::benchmark(), 1000, 10, 43, "A0");
    const auto noisy = simulate_dataset(design, arch, 44);
    const auto d = diagnostics(fit_ridge(noisy, 1e-3), noisy);
    for (const auto& s : d.per_signal) {
        CHECK(std::abs(s.rmse - 0.03) / 0.03 < 0.10);
        CHECK(s.rmse >= s.mae);
        CHECK(s.rmse * s.rmse * static_cast<double>(s.n) == doctest::Approx(s.sse).epsilon(1e-12));
        CHECK(*s.r_squared <= 1.0);
    }
}
