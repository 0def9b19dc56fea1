#include "cafe/jensen.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "cafe/error.hpp"
#include "cafe/rng.hpp"

namespace cafe {

namespace {

void require_paired(std::span<const Vec4> a, std::span<const Vec4> b, const char* what) {
    if (a.empty() || b.empty()) {
        throw std::invalid_argument(std::string(what) + ": empty sample list");
    }
    if (a.size() != b.size()) {
        throw std::invalid_argument(std::string(what) + ": designed and observed lists differ in length (" +
                                    std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
    }
}

// Two-pass variance of the data shifted by its first point. The shift makes
// a constant sample exactly zero and costs nothing in accuracy.
Vec4 population_variance(std::span<const Vec4> samples) {
    const double n = static_cast<double>(samples.size());
    const Vec4 origin = samples.front();
    Vec4 mean{};
    for (const auto& s : samples) {
        for (std::size_t i = 0; i < 4; ++i) mean[i] += s[i] - origin[i];
    }
    for (auto& m : mean) m /= n;
    Vec4 var{};
    for (const auto& s : samples) {
        for (std::size_t i = 0; i < 4; ++i) {
            const double d = (s[i] - origin[i]) - mean[i];
            var[i] += d * d;
        }
    }
    for (auto& v : var) v /= n;
    return var;
}

// Dispersion of the resample given by `idx`, without materializing it.
double resample_dispersion(std::span<const Vec4> samples, std::span<const std::size_t> idx,
                           const Vec4& w) {
    const double n = static_cast<double>(idx.size());
    const Vec4 origin = samples[idx.front()];
    Vec4 mean{};
    for (std::size_t j : idx) {
        for (std::size_t i = 0; i < 4; ++i) mean[i] += samples[j][i] - origin[i];
    }
    for (auto& m : mean) m /= n;
    double total = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        double acc = 0.0;
        for (std::size_t j : idx) {
            const double d = (samples[j][i] - origin[i]) - mean[i];
            acc += d * d;
        }
        total += w[i] * (acc / n);
    }
    return total;
}

}  // namespace

Vec4 DeformationMap::apply(const Vec4& x) const {
    ResponseSurface s;
    s.coefficients = coefficients;
    return predict(s, x);
}

DeformationMap fit_deformation(std::span<const Vec4> designed, std::span<const Vec4> observed,
                               double rho, std::string architecture_id) {
    if (designed.size() != observed.size()) {
        throw std::invalid_argument("fit_deformation: designed and observed lists differ in length");
    }
    if (designed.size() < kBasisSize) {
        throw UnderDeterminedError("deformation fit needs at least 17 pairs, got " +
                                   std::to_string(designed.size()));
    }
    DeformationMap m;
    m.architecture_id = std::move(architecture_id);
    m.coefficients = fit_ridge_rows(designed, observed, rho);
    return m;
}

ConvexPotential ConvexPotential::weighted_quadratic(const Vec4& weights) {
    for (double w : weights) {
        if (!std::isfinite(w) || w < 0.0) {
            throw std::invalid_argument("weighted_quadratic weights must be finite and non-negative");
        }
    }
    return ConvexPotential{Kind::weighted_quadratic, weights};
}

const Vec4& ConvexPotential::effective_weights() const {
    static constexpr Vec4 ones{1.0, 1.0, 1.0, 1.0};
    return kind == Kind::squared_norm ? ones : weights;
}

double ConvexPotential::operator()(const Vec4& x) const {
    const Vec4& w = effective_weights();
    double acc = 0.0;
    for (std::size_t i = 0; i < 4; ++i) acc += w[i] * x[i] * x[i];
    return acc;
}

std::string_view ConvexPotential::name() const {
    return kind == Kind::squared_norm ? "squared_norm" : "weighted_quadratic";
}

double dispersion(std::span<const Vec4> samples, const ConvexPotential& phi) {
    if (samples.empty()) throw std::invalid_argument("dispersion: empty sample list");
    const Vec4 var = population_variance(samples);
    const Vec4& w = phi.effective_weights();
    double total = 0.0;
    for (std::size_t i = 0; i < 4; ++i) total += w[i] * var[i];
    return total;
}

double jensen_gap(std::span<const Vec4> designed, std::span<const Vec4> observed,
                  const ConvexPotential& phi) {
    require_paired(designed, observed, "jensen_gap");
    return dispersion(observed, phi) - dispersion(designed, phi);
}

std::string_view regime_name(Regime r) {
    switch (r) {
        case Regime::antifragility_compatible: return "antifragility_compatible";
        case Regime::resilient: return "resilient";
        case Regime::fragile: return "fragile";
    }
    return "resilient";
}

Regime parse_regime(std::string_view name) {
    if (name == "antifragility_compatible") return Regime::antifragility_compatible;
    if (name == "resilient") return Regime::resilient;
    if (name == "fragile") return Regime::fragile;
    throw std::invalid_argument("unknown regime '" + std::string(name) + "'");
}

Regime classify(double gap, double tolerance) {
    if (!(tolerance > 0.0)) throw std::invalid_argument("resilience tolerance must be positive");
    if (gap > tolerance) return Regime::antifragility_compatible;
    if (gap < -tolerance) return Regime::fragile;
    return Regime::resilient;
}

std::vector<double> bootstrap_gaps(std::span<const Vec4> designed, std::span<const Vec4> observed,
                                   const ConvexPotential& phi, const BootstrapOptions& opts) {
    require_paired(designed, observed, "bootstrap");
    if (opts.resamples < 1) throw std::invalid_argument("bootstrap needs at least one resample");
    const auto n = designed.size();
    const auto resamples = static_cast<std::size_t>(opts.resamples);
    const Vec4& w = phi.effective_weights();
    std::vector<double> gaps(resamples);

    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        std::vector<std::size_t> idx(n);
        for (std::size_t r = next++; r < resamples; r = next++) {
            Rng rng(Rng::derive_seed(opts.seed, r));
            for (auto& i : idx) i = static_cast<std::size_t>(rng.below(n));
            gaps[r] = resample_dispersion(observed, idx, w) - resample_dispersion(designed, idx, w);
        }
    };
    const unsigned threads = std::max(1u, std::min<unsigned>(opts.threads, opts.resamples));
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return gaps;
}

double nearest_rank_quantile(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw std::invalid_argument("quantile of empty list");
    if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile level outside [0, 1]");
    const double rank = std::ceil(q * static_cast<double>(sorted.size()));
    const auto idx = static_cast<std::size_t>(std::clamp(rank - 1.0, 0.0,
                                                         static_cast<double>(sorted.size() - 1)));
    return sorted[idx];
}

ConfidenceInterval bootstrap_gap_ci(std::span<const Vec4> designed,
                                    std::span<const Vec4> observed, const ConvexPotential& phi,
                                    const BootstrapOptions& opts) {
    if (opts.quantile_low > opts.quantile_high) {
        throw std::invalid_argument("bootstrap quantiles must satisfy low <= high");
    }
    auto gaps = bootstrap_gaps(designed, observed, phi, opts);
    std::sort(gaps.begin(), gaps.end());
    return {nearest_rank_quantile(gaps, opts.quantile_low),
            nearest_rank_quantile(gaps, opts.quantile_high)};
}

JensenReport evaluate_jensen(std::span<const Vec4> designed, std::span<const Vec4> observed,
                             const ConvexPotential& phi, double tolerance,
                             const BootstrapOptions& opts, std::string architecture_id) {
    require_paired(designed, observed, "evaluate_jensen");
    JensenReport r;
    r.architecture_id = std::move(architecture_id);
    r.expected_dispersion = dispersion(designed, phi);
    r.observed_dispersion = dispersion(observed, phi);
    r.gap = r.observed_dispersion - r.expected_dispersion;
    const auto ci = bootstrap_gap_ci(designed, observed, phi, opts);
    r.ci_low = ci.low;
    r.ci_high = ci.high;
    r.classification = classify(r.gap, tolerance);
    r.tolerance = tolerance;
    r.n_samples = designed.size();
    r.bootstrap_resamples = opts.resamples;
    r.bootstrap_seed = opts.seed;
    r.potential = std::string(phi.name());
    return r;
}

Vec4 population_std(std::span<const Vec4> samples) {
    if (samples.empty()) throw std::invalid_argument("population_std: empty sample list");
    Vec4 v = population_variance(samples);
    for (auto& x : v) x = std::sqrt(x);
    return v;
}

Vec4 std_expansion(std::span<const Vec4> designed, std::span<const Vec4> observed) {
    require_paired(designed, observed, "std_expansion");
    const Vec4 a = population_std(designed);
    const Vec4 b = population_std(observed);
    return {b[0] - a[0], b[1] - a[1], b[2] - a[2], b[3] - a[3]};
}

QualityDrop quality_drop_from_means(double clean_mean, double perturbed_mean) {
    QualityDrop q;
    q.clean_mean = clean_mean;
    q.perturbed_mean = perturbed_mean;
    q.drop = perturbed_mean - clean_mean;
    q.relative_drop = clean_mean != 0.0 ? -q.drop / clean_mean : 0.0;
    return q;
}

QualityDrop quality_drop(std::span<const SampleRecord> records) {
    const auto signals = evaluated_signals(records);
    double clean = 0.0, perturbed = 0.0;
    std::size_t nc = 0, np = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const double q = (signals[i][0] + signals[i][1] + signals[i][2] + signals[i][3]) / 4.0;
        if (records[i].is_clean) {
            clean += q;
            ++nc;
        } else {
            perturbed += q;
            ++np;
        }
    }
    if (nc == 0 || np == 0) {
        throw std::invalid_argument("quality_drop needs at least one clean and one perturbed record");
    }
    QualityDrop out = quality_drop_from_means(clean / static_cast<double>(nc),
                                              perturbed / static_cast<double>(np));
    out.n_clean = nc;
    out.n_perturbed = np;
    return out;
}

}  // namespace cafe
