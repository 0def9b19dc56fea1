#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cafe/box_minimizer.hpp"
#include "cafe/error.hpp"
#include "cafe/inverse.hpp"
#include "test_helpers.hpp"

using namespace cafe;
using cafe::testing::bounded_random_surface;
using cafe::testing::random_box_point;

namespace {

double inf_dist(const Vec4& a, const Vec4& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < 4; ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

double inf_norm(const Vec4& a) { return inf_dist(a, Vec4{}); }

Vec4 random_signals(Rng& rng) { return {rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()}; }

InverseConfig random_config(Rng& rng, bool distributional) {
    InverseConfig cfg;
    cfg.lambda = rng.uniform();
    Eigen::Matrix4d a = Eigen::Matrix4d::Random();
    cfg.weight = a * a.transpose() + 0.1 * Eigen::Matrix4d::Identity();
    if (distributional) {
        Eigen::Matrix4d b = Eigen::Matrix4d::Random();
        cfg.prior = DistributionalPrior(random_box_point(rng, 0.2), 0.01 * (b * b.transpose()) +
                                                                        0.01 * Eigen::Matrix4d::Identity());
    }
    return cfg;
}

}  // namespace

TEST_CASE("analytic gradient matches central differences") {
    Rng rng(2024);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const auto surface = bounded_random_surface(1000 + static_cast<std::uint64_t>(t));
        const Vec4 s = random_signals(rng);
        const Vec4 x = random_box_point(rng, 0.45);
        const Vec4 anchor = random_box_point(rng);
        const InverseConfig cfg = random_config(rng, t % 2 == 1);
        const Vec4 g = inverse_gradient(x, s, surface, cfg, anchor);
        Vec4 fd{};
        for (std::size_t i = 0; i < 4; ++i) {
            Vec4 hi = x, lo = x;
            hi[i] += 1e-6;
            lo[i] -= 1e-6;
            fd[i] = (inverse_objective(hi, s, surface, cfg, anchor) -
                     inverse_objective(lo, s, surface, cfg, anchor)) / 2e-6;
        }
        const double rel = inf_dist(g, fd) / std::max(inf_norm(g), 1e-12);
        worst = std::max(worst, rel);
        CHECK(rel <= 1e-5);
    }
    MESSAGE("worst relative gradient error " << worst);
}

TEST_CASE("objective examples") {
    const auto surface = default_harness_surface();
    const Vec4 x{0.1, -0.2, 0.3, -0.05};
    const Vec4 s = predict(surface, x);
    InverseConfig cfg;
    CHECK(inverse_objective(x, s, surface, cfg, x) == doctest::Approx(0.0));

    // lambda = 0 and W = I: plain squared residual norm.
    cfg.lambda = 0.0;
    const Vec4 other{0.5, 0.5, 0.5, 0.5};
    const Vec4 p = predict(surface, x);
    double sq = 0.0;
    for (std::size_t k = 0; k < 4; ++k) sq += (other[k] - p[k]) * (other[k] - p[k]);
    CHECK(inverse_objective(x, other, surface, cfg, Vec4{}) == doctest::Approx(sq).epsilon(1e-14));

    // Anchored prior contributes nothing to the gradient at its anchor.
    InverseConfig heavy;
    heavy.lambda = 1e6;
    InverseConfig none;
    none.lambda = 0.0;
    const Vec4 ga = inverse_gradient(x, other, surface, heavy, x);
    const Vec4 gb = inverse_gradient(x, other, surface, none, x);
    for (std::size_t i = 0; i < 4; ++i) CHECK(ga[i] == doctest::Approx(gb[i]).epsilon(1e-12));
}

TEST_CASE("noiseless forward-inverse roundtrip") {
    const auto surface = default_harness_surface();
    InverseConfig cfg;  // lambda 0.05, identity weight, anchored
    Rng rng(77);
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
        const Vec4 truth = random_box_point(rng, 0.45);
        const Vec4 s = predict(surface, truth);
        const auto r = reconstruct_sample(s, surface, cfg, CenteredStress(truth));
        worst = std::max(worst, inf_dist(r.x_obs.values(), truth));
        CHECK(inf_dist(r.x_obs.values(), truth) <= 1e-2);
    }
    MESSAGE("worst roundtrip error " << worst);
}

TEST_CASE("roundtrip from a displaced anchor converges to the interior optimum") {
    const auto surface = default_harness_surface();
    InverseConfig cfg;
    cfg.lambda = 0.0;
    Rng rng(78);
    for (int t = 0; t < 50; ++t) {
        const Vec4 truth = random_box_point(rng, 0.4);
        const Vec4 start = random_box_point(rng, 0.4);
        const auto r = reconstruct_sample(predict(surface, truth), surface, cfg, CenteredStress(start));
        CHECK(r.converged);
        CHECK(inf_dist(r.x_obs.values(), truth) <= 1e-6);
        const Vec4 g = inverse_gradient(r.x_obs.values(), predict(surface, truth), surface, cfg, start);
        CHECK(inf_norm(g) < 1e-6);
    }
}

TEST_CASE("large lambda pins the anchor") {
    const auto surface = default_harness_surface();
    InverseConfig cfg;
    cfg.lambda = 1e6;
    Rng rng(5);
    for (int t = 0; t < 30; ++t) {
        const Vec4 anchor = random_box_point(rng);
        const auto r = reconstruct_sample(random_signals(rng), surface, cfg, CenteredStress(anchor));
        CHECK(inf_dist(r.x_obs.values(), anchor) <= 1e-3);
    }
}

TEST_CASE("feasibility, descent, and result invariants") {
    Rng rng(99);
    for (int t = 0; t < 200; ++t) {
        const auto surface = bounded_random_surface(500 + static_cast<std::uint64_t>(t));
        const Vec4 s = random_signals(rng);
        const Vec4 anchor = random_box_point(rng);
        InverseConfig cfg;
        cfg.lambda = t % 3 == 0 ? 0.0 : rng.uniform();
        const auto r = reconstruct_sample(s, surface, cfg, CenteredStress(anchor));
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(r.x_obs[i] >= -0.5);
            CHECK(r.x_obs[i] <= 0.5);
            CHECK(r.psi_obs[i] >= 0.0);
            CHECK(r.psi_obs[i] <= 1.0);
        }
        CHECK(r.psi_obs == uncenter(r.x_obs));
        CHECK(r.objective_value >= 0.0);
        CHECK(r.objective_value <= inverse_objective(anchor, s, surface, cfg, anchor));
        CHECK(r.iterations <= cfg.max_iterations);
        if (r.converged) {
            const Vec4 g = inverse_gradient(r.x_obs.values(), s, surface, cfg, anchor);
            Eigen::Vector4d xv, gv;
            for (int i = 0; i < 4; ++i) {
                xv[i] = r.x_obs[static_cast<std::size_t>(i)];
                gv[i] = g[static_cast<std::size_t>(i)];
            }
            CHECK(projected_gradient_norm(xv, gv, Eigen::Vector4d::Constant(-0.5),
                                          Eigen::Vector4d::Constant(0.5)) <= cfg.convergence_tol);
        }
    }
}

TEST_CASE("monotone anchoring in lambda") {
    Rng rng(3);
    for (int t = 0; t < 40; ++t) {
        const auto surface = default_harness_surface();
        const Vec4 anchor = random_box_point(rng, 0.3);
        const Vec4 truth = random_box_point(rng, 0.45);
        const Vec4 s = predict(surface, truth);
        double previous = std::numeric_limits<double>::infinity();
        for (double lambda : {0.0, 0.01, 0.05, 0.2, 1.0, 5.0, 100.0}) {
            InverseConfig cfg;
            cfg.lambda = lambda;
            const auto r = reconstruct_sample(s, surface, cfg, CenteredStress(anchor));
            const double d = std::sqrt(std::pow(r.x_obs[0] - anchor[0], 2) + std::pow(r.x_obs[1] - anchor[1], 2) +
                                       std::pow(r.x_obs[2] - anchor[2], 2) + std::pow(r.x_obs[3] - anchor[3], 2));
            CHECK(d <= previous + 1e-6);
            previous = d;
        }
    }
}

TEST_CASE("dataset reconstruction: determinism, threads, order") {
    const auto records = testing::records_from_surface(default_harness_surface(), 0.05, 17);
    const auto surface = fit_ridge(records, kDefaultRidge);
    InverseConfig cfg;
    const auto a = reconstruct_dataset(records, surface, cfg);
    const auto b = reconstruct_dataset(records, surface, cfg);
    cfg.threads = 4;
    const auto c = reconstruct_dataset(records, surface, cfg);
    REQUIRE(a.size() == records.size());
    REQUIRE(c.size() == records.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].x_obs == b[i].x_obs);
        CHECK(a[i].x_obs == c[i].x_obs);
        CHECK(a[i].objective_value == c[i].objective_value);
        CHECK(a[i].iterations == c[i].iterations);
    }

    std::vector<std::size_t> perm(records.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    Rng rng(8);
    for (std::size_t i = perm.size() - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
    std::vector<SampleRecord> shuffled;
    for (std::size_t i : perm) shuffled.push_back(records[i]);
    cfg.threads = 1;
    const auto d = reconstruct_dataset(shuffled, surface, cfg);
    for (std::size_t i = 0; i < perm.size(); ++i) CHECK(d[i].x_obs == a[perm[i]].x_obs);

    CHECK(reconstruct_dataset(std::vector<SampleRecord>{}, surface, cfg).empty());

    auto unevaluated = records;
    unevaluated[0].signals.reset();
    CHECK_THROWS_AS(reconstruct_dataset(unevaluated, surface, cfg), UnevaluatedError);
}

TEST_CASE("multi-start never does worse than the anchor start") {
    Rng rng(31);
    for (int t = 0; t < 30; ++t) {
        const auto surface = bounded_random_surface(700 + static_cast<std::uint64_t>(t));
        const Vec4 s = random_signals(rng);
        const Vec4 anchor = random_box_point(rng);
        InverseConfig single;
        InverseConfig multi;
        multi.multi_start = true;
        const auto a = reconstruct_sample(s, surface, single, CenteredStress(anchor));
        const auto b = reconstruct_sample(s, surface, multi, CenteredStress(anchor));
        CHECK(b.objective_value <= a.objective_value);
    }
}

TEST_CASE("distributional prior") {
    std::vector<Vec4> designed;
    Rng rng(12);
    for (int i = 0; i < 400; ++i) designed.push_back(random_box_point(rng, 0.3));
    const auto prior = DistributionalPrior::estimate(designed);
    for (int i = 0; i < 4; ++i) CHECK(prior.covariance()(i, i) > kPriorCovarianceRidge);
    CHECK((prior.covariance() * prior.precision() - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff() < 1e-9);

    InverseConfig cfg;
    cfg.prior = prior;
    cfg.lambda = 1e6;
    const auto r = reconstruct_sample(Vec4{0.2, 0.9, 0.4, 0.6}, default_harness_surface(), cfg, CenteredStress{});
    CHECK(inf_dist(r.x_obs.values(), prior.mean()) <= 1e-3);

    Eigen::Matrix4d singular = Eigen::Matrix4d::Zero();
    singular(0, 0) = 1.0;
    CHECK_THROWS_AS(DistributionalPrior(Vec4{}, singular), std::invalid_argument);
}

TEST_CASE("config validation and solver failures") {
    InverseConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.lambda = -1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.weight(0, 1) = 0.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.weight = -Eigen::Matrix4d::Identity();
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.max_iterations = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.convergence_tol = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    ResponseSurface huge = default_harness_surface();
    huge.coefficients(0, 1) = 1e300;
    try {
        reconstruct_sample(Vec4{0.5, 0.5, 0.5, 0.5}, huge, InverseConfig{}, CenteredStress(Vec4{0.3, 0, 0, 0}),
                           "P7/V3");
        FAIL("expected SolverError");
    } catch (const SolverError& e) {
        CHECK(std::string(e.what()).find("P7/V3") != std::string::npos);
    }
}
