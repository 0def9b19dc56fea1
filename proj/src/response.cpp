#include "cafe/response.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cafe/error.hpp"

namespace cafe {

FeatureVector build_features(const Vec4& x) {
    const double x1 = x[0], x2 = x[1], x3 = x[2], x4 = x[3];
    return {1.0,     x1,      x2,      x3,      x4,      x1 * x1,      x2 * x2,     x3 * x3, x4 * x4,
            x1 * x2, x1 * x3, x1 * x4, x2 * x3, x2 * x4, x3 * x4, x1 * x2 * x2, x3 * x4 * x4};
}

FeatureJacobian feature_jacobian(const Vec4& x) {
    const double x1 = x[0], x2 = x[1], x3 = x[2], x4 = x[3];
    FeatureJacobian j = FeatureJacobian::Zero();
    for (int i = 0; i < 4; ++i) {
        j(1 + i, i) = 1.0;
        j(5 + i, i) = 2.0 * x[static_cast<std::size_t>(i)];
    }
    j(9, 0) = x2;   j(9, 1) = x1;
    j(10, 0) = x3;  j(10, 2) = x1;
    j(11, 0) = x4;  j(11, 3) = x1;
    j(12, 1) = x3;  j(12, 2) = x2;
    j(13, 1) = x4;  j(13, 3) = x2;
    j(14, 2) = x4;  j(14, 3) = x3;
    j(15, 0) = x2 * x2;  j(15, 1) = 2.0 * x1 * x2;
    j(16, 2) = x4 * x4;  j(16, 3) = 2.0 * x3 * x4;
    return j;
}

void ResponseSurface::validate() const {
    if (!coefficients.allFinite()) {
        throw std::domain_error("response surface '" + architecture_id +
                                "' has non-finite coefficients");
    }
}

Vec4 predict(const ResponseSurface& surface, const Vec4& x) {
    const FeatureVector f = build_features(x);
    Vec4 out{};
    for (int k = 0; k < 4; ++k) {
        double acc = 0.0;
        for (int j = 0; j < static_cast<int>(kBasisSize); ++j) {
            acc += surface.coefficients(k, j) * f[static_cast<std::size_t>(j)];
        }
        out[static_cast<std::size_t>(k)] = acc;
    }
    return out;
}

// The ridge normal equations (F'F + rho D) b = F'y, D = diag(0, 1, ..., 1),
// are solved as the equivalent stacked least-squares problem
// [F; sqrt(rho) D] b ~ [y; 0] with column-pivoted QR, which avoids squaring
// the condition number of F.
CoefficientMatrix fit_ridge_rows(std::span<const Vec4> inputs, std::span<const Vec4> targets,
                                 double rho) {
    if (inputs.size() != targets.size()) {
        throw std::invalid_argument("fit_ridge_rows: inputs and targets differ in length");
    }
    if (!(rho >= 0.0) || !std::isfinite(rho)) {
        throw std::invalid_argument("ridge strength must be finite and non-negative");
    }
    const auto n = static_cast<Eigen::Index>(inputs.size());
    constexpr auto p = static_cast<Eigen::Index>(kBasisSize);
    if (n == 0) {
        throw UnderDeterminedError("ridge fit needs at least one row");
    }
    if (rho == 0.0 && n < p) {
        throw UnderDeterminedError("ridge fit with rho = 0 needs at least 17 rows, got " +
                                   std::to_string(n));
    }

    const Eigen::Index penalty_rows = rho > 0.0 ? p - 1 : 0;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + penalty_rows, p);
    Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n + penalty_rows, 4);
    for (Eigen::Index r = 0; r < n; ++r) {
        const FeatureVector f = build_features(inputs[static_cast<std::size_t>(r)]);
        for (Eigen::Index j = 0; j < p; ++j) a(r, j) = f[static_cast<std::size_t>(j)];
        for (Eigen::Index k = 0; k < 4; ++k) {
            y(r, k) = targets[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)];
        }
    }
    const double root = std::sqrt(rho);
    for (Eigen::Index j = 1; j <= penalty_rows; ++j) a(n + j - 1, j) = root;

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    qr.setThreshold(1e-13);
    if (qr.rank() < p) {
        throw SingularError("penalized design matrix is rank deficient (rank " +
                            std::to_string(qr.rank()) + " of 17)");
    }
    const Eigen::MatrixXd beta = qr.solve(y);  // 17 x 4
    if (!beta.allFinite()) {
        throw SingularError("ridge solve produced non-finite coefficients");
    }
    return beta.transpose();
}

std::vector<Vec4> evaluated_signals(std::span<const SampleRecord> records) {
    std::vector<Vec4> out;
    out.reserve(records.size());
    for (std::size_t n = 0; n < records.size(); ++n) {
        if (!records[n].signals) {
            throw UnevaluatedError(n + 1, "record " + records[n].prompt_id + "/" +
                                              records[n].variant_id +
                                              " has unevaluated signals");
        }
        out.push_back(records[n].signals->values());
    }
    return out;
}

ResponseSurface fit_ridge(std::span<const SampleRecord> records, double rho) {
    const auto targets = evaluated_signals(records);
    const auto inputs = centered_designed(records);
    ResponseSurface s;
    s.architecture_id = records.empty() ? std::string() : records.front().architecture_id;
    s.ridge_strength = rho;
    s.coefficients = fit_ridge_rows(inputs, targets, rho);
    return s;
}

SignalFit fit_statistics(std::span<const double> predicted, std::span<const double> observed) {
    if (predicted.size() != observed.size() || observed.empty()) {
        throw std::invalid_argument("fit_statistics: need equal, non-empty inputs");
    }
    const double n = static_cast<double>(observed.size());
    double mean = 0.0;
    for (double v : observed) mean += v;
    mean /= n;

    SignalFit out;
    out.n = observed.size();
    double sst = 0.0, abs_sum = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double r = observed[i] - predicted[i];
        out.sse += r * r;
        abs_sum += std::abs(r);
        sst += (observed[i] - mean) * (observed[i] - mean);
    }
    out.rmse = std::sqrt(out.sse / n);
    out.mae = abs_sum / n;
    // Test for a constant target directly; a rounded mean leaves sst a few ulps above zero.
    const bool constant = std::all_of(observed.begin(), observed.end(),
                                      [&](double v) { return v == observed.front(); });
    if (!constant && sst > 0.0) out.r_squared = 1.0 - out.sse / sst;
    return out;
}

FitDiagnostics diagnostics(const ResponseSurface& surface, std::span<const SampleRecord> records) {
    const auto targets = evaluated_signals(records);
    const auto inputs = centered_designed(records);
    FitDiagnostics d;
    std::vector<double> pred(records.size()), obs(records.size());
    std::vector<Vec4> predictions;
    predictions.reserve(records.size());
    for (const auto& x : inputs) predictions.push_back(predict(surface, x));
    for (std::size_t k = 0; k < kSignalDims; ++k) {
        for (std::size_t n = 0; n < records.size(); ++n) {
            pred[n] = predictions[n][k];
            obs[n] = targets[n][k];
        }
        d.per_signal[k] = fit_statistics(pred, obs);
    }
    return d;
}

std::optional<double> FitDiagnostics::mean_r_squared() const {
    double sum = 0.0;
    int count = 0;
    for (const auto& s : per_signal) {
        if (s.r_squared) {
            sum += *s.r_squared;
            ++count;
        }
    }
    if (count == 0) return std::nullopt;
    return sum / count;
}

double FitDiagnostics::mean_rmse() const {
    double sum = 0.0;
    for (const auto& s : per_signal) sum += s.rmse;
    return sum / static_cast<double>(per_signal.size());
}

double FitDiagnostics::mean_mae() const {
    double sum = 0.0;
    for (const auto& s : per_signal) sum += s.mae;
    return sum / static_cast<double>(per_signal.size());
}

}  // namespace cafe
