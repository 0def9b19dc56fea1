#include "cafe/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cafe/error.hpp"
#include "cafe/io.hpp"

namespace cafe {

using nlohmann::json;

std::string_view prior_mode_name(PriorMode m) {
    return m == PriorMode::anchored ? "anchored" : "distributional";
}

PriorMode parse_prior_mode(std::string_view name) {
    if (name == "anchored") return PriorMode::anchored;
    if (name == "distributional") return PriorMode::distributional;
    throw ConfigError("unknown prior '" + std::string(name) + "' (expected anchored or distributional)");
}

void AnalysisConfig::validate() const {
    if (!std::isfinite(rho) || rho < 0.0) throw ConfigError("rho must be finite and non-negative");
    if (!(tolerance > 0.0) || !std::isfinite(tolerance)) throw ConfigError("tolerance must be positive");
    if (resamples < 1) throw ConfigError("resamples must be at least 1");
    if (threads < 1) throw ConfigError("threads must be at least 1");
    InverseConfig probe;
    probe.weight = weight;
    probe.lambda = lambda;
    probe.max_iterations = max_iterations;
    probe.convergence_tol = convergence_tol;
    probe.validate();
}

json AnalysisConfig::to_json() const {
    json j;
    j["rho"] = rho;
    j["lambda"] = lambda;
    j["tolerance"] = tolerance;
    j["resamples"] = resamples;
    j["bootstrap_seed"] = bootstrap_seed;
    j["prior"] = prior_mode_name(prior);
    j["weight"] = io::matrix4_to_json(weight);
    j["max_iterations"] = max_iterations;
    j["convergence_tol"] = convergence_tol;
    j["multi_start"] = multi_start;
    j["potential"] = {{"kind", potential.name()}, {"weights", potential.effective_weights()}};
    j["reference_architecture"] = reference_architecture ? json(*reference_architecture) : json(nullptr);
    return j;
}

void AnalysisConfig::merge_json(const json& j) {
    if (!j.is_object()) throw ConfigError("analysis config must be a JSON object");
    const auto num = [&](const char* key, double& out) {
        if (!j.contains(key)) return;
        if (!j.at(key).is_number()) throw ConfigError(std::string("config '") + key + "' must be a number");
        out = j.at(key).get<double>();
    };
    const auto integer = [&](const char* key, auto& out) {
        if (!j.contains(key)) return;
        if (!j.at(key).is_number_integer()) throw ConfigError(std::string("config '") + key + "' must be an integer");
        const auto v = j.at(key).get<long long>();
        if (v < 0) throw ConfigError(std::string("config '") + key + "' must be non-negative");
        out = static_cast<std::decay_t<decltype(out)>>(v);
    };
    static const std::array<std::string_view, 13> known{
        "rho", "lambda", "tolerance", "resamples", "bootstrap_seed", "prior", "weight",
        "max_iterations", "convergence_tol", "multi_start", "potential", "reference_architecture",
        "threads"};
    for (const auto& [key, value] : j.items()) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }
    num("rho", rho);
    num("lambda", lambda);
    num("tolerance", tolerance);
    num("convergence_tol", convergence_tol);
    integer("resamples", resamples);
    integer("bootstrap_seed", bootstrap_seed);
    integer("max_iterations", max_iterations);
    integer("threads", threads);
    if (j.contains("prior")) {
        if (!j.at("prior").is_string()) throw ConfigError("config 'prior' must be a string");
        prior = parse_prior_mode(j.at("prior").get<std::string>());
    }
    if (j.contains("weight")) weight = io::matrix4_from_json(j.at("weight"), "config.weight");
    if (j.contains("multi_start")) {
        if (!j.at("multi_start").is_boolean()) throw ConfigError("config 'multi_start' must be a boolean");
        multi_start = j.at("multi_start").get<bool>();
    }
    if (j.contains("potential")) {
        const json& p = j.at("potential");
        const std::string kind = p.is_object() && p.contains("kind") && p.at("kind").is_string()
                                     ? p.at("kind").get<std::string>()
                                     : std::string();
        if (kind == "squared_norm") {
            potential = ConvexPotential::squared_norm();
        } else if (kind == "weighted_quadratic") {
            try {
                potential = ConvexPotential::weighted_quadratic(
                    io::vec4_from_array(p.contains("weights") ? p.at("weights") : json(), "config.potential.weights"));
            } catch (const std::invalid_argument& e) {
                throw ConfigError(e.what());
            }
        } else {
            throw ConfigError("config 'potential.kind' must be squared_norm or weighted_quadratic");
        }
    }
    if (j.contains("reference_architecture")) {
        const json& r = j.at("reference_architecture");
        if (r.is_null()) {
            reference_architecture.reset();
        } else if (r.is_string()) {
            reference_architecture = r.get<std::string>();
        } else {
            throw ConfigError("config 'reference_architecture' must be a string or null");
        }
    }
}

InverseConfig make_inverse_config(const AnalysisConfig& cfg, std::span<const Vec4> designed) {
    InverseConfig inv;
    inv.weight = cfg.weight;
    inv.lambda = cfg.lambda;
    inv.max_iterations = cfg.max_iterations;
    inv.convergence_tol = cfg.convergence_tol;
    inv.multi_start = cfg.multi_start;
    inv.threads = cfg.threads;
    if (cfg.prior == PriorMode::distributional) {
        inv.prior = DistributionalPrior::estimate(designed);
    }
    return inv;
}

std::vector<ArchitectureAnalysis> analyze_dataset(std::span<const SampleRecord> records,
                                                  const AnalysisConfig& cfg,
                                                  const ResponseSurface* external_reference) {
    cfg.validate();
    validate_records(records);
    evaluated_signals(records);

    const auto ids = architecture_ids(records);
    std::optional<ResponseSurface> reference;
    if (external_reference) {
        reference = *external_reference;
        reference->validate();
    } else if (cfg.reference_architecture) {
        const auto rows = select_architecture(records, *cfg.reference_architecture);
        if (rows.empty()) {
            throw ConfigError("reference architecture '" + *cfg.reference_architecture +
                              "' has no rows in the dataset");
        }
        reference = fit_ridge(rows, cfg.rho);
    }

    BootstrapOptions boot;
    boot.resamples = cfg.resamples;
    boot.seed = cfg.bootstrap_seed;
    boot.threads = cfg.threads;

    std::vector<ArchitectureAnalysis> out;
    out.reserve(ids.size());
    for (const auto& id : ids) {
        ArchitectureAnalysis a;
        a.architecture_id = id;
        a.records = select_architecture(records, id);
        a.surface = fit_ridge(a.records, cfg.rho);
        a.surface.architecture_id = id;
        a.diagnostics = diagnostics(a.surface, a.records);

        const auto designed = centered_designed(a.records);
        const ResponseSurface& inversion = reference ? *reference : a.surface;
        a.inversion_surface_id = inversion.architecture_id;
        a.reconstructions = reconstruct_dataset(a.records, inversion, make_inverse_config(cfg, designed));
        const auto observed = observed_points(a.reconstructions);

        a.jensen = evaluate_jensen(designed, observed, cfg.potential, cfg.tolerance, boot, id);
        a.std_expansion = std_expansion(designed, observed);
        a.designed_std = population_std(designed);
        a.observed_std = population_std(observed);

        if (a.records.size() >= kBasisSize) {
            a.deformation = fit_deformation(designed, observed, cfg.rho, id);
            std::vector<Vec4> pushed;
            pushed.reserve(designed.size());
            for (const auto& x : designed) pushed.push_back(a.deformation->apply(x));
            a.pushforward_dispersion = dispersion(pushed, cfg.potential);
        }

        const bool has_clean = std::any_of(a.records.begin(), a.records.end(), [](const auto& r) { return r.is_clean; });
        const bool has_perturbed = std::any_of(a.records.begin(), a.records.end(), [](const auto& r) { return !r.is_clean; });
        if (has_clean && has_perturbed) a.quality = quality_drop(a.records);

        double iter_sum = 0.0;
        for (const auto& r : a.reconstructions) {
            a.n_converged += r.converged ? 1 : 0;
            iter_sum += r.iterations;
            const auto& x = r.x_obs.values();
            if (std::any_of(x.begin(), x.end(), [](double v) { return std::abs(v) == 0.5; })) ++a.n_boundary;
        }
        a.mean_iterations = a.reconstructions.empty() ? 0.0 : iter_sum / static_cast<double>(a.reconstructions.size());
        out.push_back(std::move(a));
    }
    return out;
}

std::string file_stem(const std::string& architecture_id) {
    std::string s;
    for (char c : architecture_id) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                        c == '-' || c == '_' || c == '.';
        s += ok ? c : '_';
    }
    return s.empty() ? "_" : s;
}

namespace {

json fit_to_json(const FitDiagnostics& d) {
    json per = json::array();
    for (std::size_t k = 0; k < kSignalDims; ++k) {
        const auto& s = d.per_signal[k];
        per.push_back({{"signal", kSignalNames[k]},
                       {"r_squared", s.r_squared ? json(*s.r_squared) : json(nullptr)},
                       {"rmse", s.rmse},
                       {"mae", s.mae},
                       {"n", s.n}});
    }
    const auto mr = d.mean_r_squared();
    return {{"per_signal", per},
            {"mean_r_squared", mr ? json(*mr) : json(nullptr)},
            {"mean_rmse", d.mean_rmse()},
            {"mean_mae", d.mean_mae()}};
}

}  // namespace

json report_to_json(std::span<const ArchitectureAnalysis> analyses, const AnalysisConfig& cfg,
                    const std::string& generated_at) {
    json archs = json::array();
    for (const auto& a : analyses) {
        const auto& r = a.jensen;
        const auto clean = static_cast<std::size_t>(
            std::count_if(a.records.begin(), a.records.end(), [](const auto& x) { return x.is_clean; }));
        json j;
        j["architecture_id"] = a.architecture_id;
        j["n_samples"] = r.n_samples;
        j["clean_rows"] = clean;
        j["perturbed_rows"] = a.records.size() - clean;
        j["expected_dispersion"] = r.expected_dispersion;
        j["observed_dispersion"] = r.observed_dispersion;
        j["gap"] = r.gap;
        j["ci_low"] = r.ci_low;
        j["ci_high"] = r.ci_high;
        j["classification"] = regime_name(r.classification);
        j["tolerance"] = r.tolerance;
        j["potential"] = r.potential;
        j["bootstrap_resamples"] = r.bootstrap_resamples;
        j["bootstrap_seed"] = r.bootstrap_seed;
        j["variance_convention"] = "population";
        j["std_expansion"] = io::vec4_to_named(a.std_expansion, kStressNames);
        j["designed_std"] = io::vec4_to_named(a.designed_std, kStressNames);
        j["observed_std"] = io::vec4_to_named(a.observed_std, kStressNames);
        if (a.quality) {
            j["quality_drop"] = {{"clean_mean", a.quality->clean_mean},
                                 {"perturbed_mean", a.quality->perturbed_mean},
                                 {"drop", a.quality->drop},
                                 {"relative_drop", a.quality->relative_drop},
                                 {"n_clean", a.quality->n_clean},
                                 {"n_perturbed", a.quality->n_perturbed}};
        } else {
            j["quality_drop"] = nullptr;
        }
        j["fit_diagnostics"] = fit_to_json(a.diagnostics);
        j["inversion_surface"] = a.inversion_surface_id;
        j["reconstruction"] = {{"converged", a.n_converged},
                               {"boundary", a.n_boundary},
                               {"mean_iterations", a.mean_iterations}};
        j["pushforward_dispersion"] = a.pushforward_dispersion ? json(*a.pushforward_dispersion) : json(nullptr);
        j["deformation_map"] = a.deformation ? json{{"basis_order", kBasisNames},
                                                    {"coefficients", io::coefficients_to_json(a.deformation->coefficients)}}
                                             : json(nullptr);
        const std::string stem = file_stem(a.architecture_id);
        j["files"] = {{"model", "model_" + stem + ".json"},
                      {"reconstruction", "reconstruction_" + stem + ".jsonl"}};
        archs.push_back(std::move(j));
    }
    json report;
    report["format_version"] = kReportFormatVersion;
    report["tool_version"] = kToolVersion;
    report["generated_at"] = generated_at;
    report["config"] = cfg.to_json();
    report["architectures"] = archs;
    return report;
}

json strip_volatile(const json& report) {
    json copy = report;
    copy.erase("generated_at");
    return copy;
}

}  // namespace cafe
