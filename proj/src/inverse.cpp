#include "cafe/inverse.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <thread>

#include "cafe/box_minimizer.hpp"
#include "cafe/error.hpp"

namespace cafe {

namespace {

Eigen::Vector4d to_eigen(const Vec4& v) { return Eigen::Vector4d(v[0], v[1], v[2], v[3]); }

Vec4 to_array(const Eigen::Vector4d& v) { return {v[0], v[1], v[2], v[3]}; }

bool symmetric(const Eigen::Matrix4d& m) {
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * scale;
}

}  // namespace

DistributionalPrior::DistributionalPrior(const Vec4& mean, const Eigen::Matrix4d& covariance)
    : mean_(mean), covariance_(covariance) {
    if (!covariance.allFinite() || !symmetric(covariance)) {
        throw std::invalid_argument("prior covariance must be finite and symmetric");
    }
    Eigen::LLT<Eigen::Matrix4d> llt(covariance);
    if (llt.info() != Eigen::Success) {
        throw std::invalid_argument("prior covariance must be positive definite");
    }
    precision_ = llt.solve(Eigen::Matrix4d::Identity());
    precision_ = 0.5 * (precision_ + precision_.transpose()).eval();
}

DistributionalPrior DistributionalPrior::estimate(std::span<const Vec4> designed, double ridge) {
    if (designed.empty()) {
        throw std::invalid_argument("distributional prior needs at least one designed point");
    }
    Eigen::Vector4d mean = Eigen::Vector4d::Zero();
    for (const auto& p : designed) mean += to_eigen(p);
    mean /= static_cast<double>(designed.size());
    Eigen::Matrix4d cov = Eigen::Matrix4d::Zero();
    for (const auto& p : designed) {
        const Eigen::Vector4d d = to_eigen(p) - mean;
        cov += d * d.transpose();
    }
    cov /= static_cast<double>(designed.size());
    cov.diagonal().array() += ridge;
    return DistributionalPrior(to_array(mean), cov);
}

void InverseConfig::validate() const {
    if (!weight.allFinite() || !symmetric(weight)) {
        throw ConfigError("inverse weight matrix must be finite and symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(weight, Eigen::EigenvaluesOnly);
    if (eig.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, weight.cwiseAbs().maxCoeff())) {
        throw ConfigError("inverse weight matrix must be positive semidefinite");
    }
    if (!std::isfinite(lambda) || lambda < 0.0) {
        throw ConfigError("inverse lambda must be finite and non-negative");
    }
    if (max_iterations <= 0) throw ConfigError("inverse iteration cap must be positive");
    if (!(convergence_tol > 0.0)) throw ConfigError("inverse convergence tolerance must be positive");
}

double inverse_objective(const Vec4& x, const Vec4& signals, const ResponseSurface& surface,
                         const InverseConfig& cfg, const Vec4& anchor) {
    const Eigen::Vector4d r = to_eigen(signals) - to_eigen(predict(surface, x));
    const double mismatch = r.dot(cfg.weight * r);
    if (cfg.lambda == 0.0) return mismatch;
    const Eigen::Vector4d xe = to_eigen(x);
    const double penalty = std::visit(
        [&](const auto& prior) -> double {
            using P = std::decay_t<decltype(prior)>;
            if constexpr (std::is_same_v<P, AnchoredPrior>) {
                return (xe - to_eigen(anchor)).squaredNorm();
            } else {
                const Eigen::Vector4d d = xe - to_eigen(prior.mean());
                return d.dot(prior.precision() * d);
            }
        },
        cfg.prior);
    return mismatch + cfg.lambda * penalty;
}

Vec4 inverse_gradient(const Vec4& x, const Vec4& signals, const ResponseSurface& surface,
                      const InverseConfig& cfg, const Vec4& anchor) {
    const Eigen::Vector4d r = to_eigen(signals) - to_eigen(predict(surface, x));
    const Eigen::Matrix4d jac = surface.coefficients * feature_jacobian(x);  // dS/dx
    Eigen::Vector4d g = -2.0 * jac.transpose() * (cfg.weight * r);
    if (cfg.lambda != 0.0) {
        const Eigen::Vector4d xe = to_eigen(x);
        std::visit(
            [&](const auto& prior) {
                using P = std::decay_t<decltype(prior)>;
                if constexpr (std::is_same_v<P, AnchoredPrior>) {
                    g += 2.0 * cfg.lambda * (xe - to_eigen(anchor));
                } else {
                    g += 2.0 * cfg.lambda * (prior.precision() * (xe - to_eigen(prior.mean())));
                }
            },
            cfg.prior);
    }
    return to_array(g);
}

ReconstructionResult reconstruct_sample(const Vec4& signals, const ResponseSurface& surface,
                                        const InverseConfig& cfg, const CenteredStress& anchor,
                                        const std::string& sample_id) {
    const Vec4& a = anchor.values();
    const BoxObjective objective = [&](const Eigen::Vector4d& xe, Eigen::Vector4d& grad) {
        const Vec4 x = to_array(xe);
        grad = to_eigen(inverse_gradient(x, signals, surface, cfg, a));
        return inverse_objective(x, signals, surface, cfg, a);
    };
    const Eigen::Vector4d lower = Eigen::Vector4d::Constant(-0.5);
    const Eigen::Vector4d upper = Eigen::Vector4d::Constant(0.5);
    BoxMinimizerOptions opts;
    opts.max_iterations = cfg.max_iterations;
    opts.projected_gradient_tol = cfg.convergence_tol;

    BoxMinimizerResult best;
    try {
        best = minimize_box(objective, to_eigen(a), lower, upper, opts);
        if (cfg.multi_start) {
            for (int corner = 0; corner < 16; ++corner) {
                Eigen::Vector4d start;
                for (int i = 0; i < 4; ++i) start[i] = (corner >> i) & 1 ? 0.25 : -0.25;
                const auto trial = minimize_box(objective, start, lower, upper, opts);
                if (trial.value < best.value) best = trial;
            }
        }
    } catch (const SolverError& e) {
        throw SolverError("sample " + (sample_id.empty() ? std::string("<unnamed>") : sample_id) +
                          ": " + e.what());
    }

    ReconstructionResult out;
    out.x_obs = CenteredStress(clip_to_box(to_array(best.x)));
    out.psi_obs = uncenter(out.x_obs);
    out.objective_value = std::max(0.0, best.value);
    out.iterations = best.iterations;
    out.converged = best.converged;
    return out;
}

std::vector<ReconstructionResult> reconstruct_dataset(std::span<const SampleRecord> records,
                                                      const ResponseSurface& surface,
                                                      const InverseConfig& cfg) {
    cfg.validate();
    const auto signals = evaluated_signals(records);
    std::vector<ReconstructionResult> results(records.size());
    std::vector<std::optional<std::string>> failures(records.size());

    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t i = next++; i < records.size(); i = next++) {
            const auto& r = records[i];
            try {
                results[i] = reconstruct_sample(signals[i], surface, cfg, center(r.designed_stress),
                                                r.architecture_id + "/" + r.prompt_id + "/" +
                                                    r.variant_id);
            } catch (const SolverError& e) {
                failures[i] = e.what();
            }
        }
    };
    const unsigned threads =
        std::max(1u, std::min<unsigned>(cfg.threads, static_cast<unsigned>(records.size())));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    std::string message;
    std::size_t failed = 0;
    for (const auto& f : failures) {
        if (!f) continue;
        if (failed < 10) message += (failed ? "; " : "") + *f;
        ++failed;
    }
    if (failed > 0) {
        throw SolverError(std::to_string(failed) + " reconstruction(s) failed: " + message);
    }
    return results;
}

std::vector<Vec4> observed_points(std::span<const ReconstructionResult> results) {
    std::vector<Vec4> out;
    out.reserve(results.size());
    for (const auto& r : results) out.push_back(r.x_obs.values());
    return out;
}

}  // namespace cafe
