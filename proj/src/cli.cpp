#include "cafe/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>

#include "cafe/error.hpp"
#include "cafe/harness.hpp"
#include "cafe/io.hpp"
#include "cafe/pipeline.hpp"
#include "cafe/plots.hpp"
#include "cafe/rng.hpp"

namespace cafe::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

json input_entry(const fs::path& path, const std::string& bytes) {
    return {{"path", path.string()}, {"bytes", bytes.size()}, {"digest_fnv1a64", io::content_digest(bytes)}};
}

struct Manifest {
    std::string command;
    std::vector<std::string> args;
    std::string started_at = utc_now();
    json inputs = json::array();
    json settings = json::object();
    json outputs = json::array();

    json finish() const {
        return {{"tool_version", kToolVersion}, {"command", command},    {"args", args},
                {"inputs", inputs},             {"settings", settings},  {"outputs", outputs},
                {"started_at", started_at},     {"finished_at", utc_now()}};
    }
};

void ensure_directory(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw IoError("cannot create output directory '" + dir.string() + "'");
    }
}

std::vector<SampleRecord> designed_records(const std::optional<std::string>& spec_path, std::uint64_t seed,
                                           std::size_t n_clean, std::size_t variants,
                                           const std::vector<std::string>& architectures, Manifest& m) {
    StressDistributionSpec spec = StressDistributionSpec::benchmark();
    if (spec_path) {
        const std::string text = io::read_text(*spec_path);
        m.inputs.push_back(input_entry(*spec_path, text));
        try {
            spec = io::spec_from_json(json::parse(text));
        } catch (const json::parse_error& e) {
            throw ConfigError("'" + *spec_path + "' is not valid JSON: " + e.what());
        }
    }
    m.settings["spec"] = io::spec_to_json(spec);
    std::vector<SampleRecord> out;
    const auto base = build_designed_dataset(spec, n_clean, variants, seed, "");
    for (const auto& arch : architectures) {
        for (auto r : base) {
            r.architecture_id = arch;
            out.push_back(std::move(r));
        }
    }
    return out;
}

// ---- generate -------------------------------------------------------------

struct GenerateArgs {
    std::optional<std::string> spec;
    std::uint64_t seed = kDefaultDatasetSeed;
    std::size_t clean = 50;
    std::size_t variants = 10;
    std::vector<std::string> architectures{"A0"};
    std::string out;
    bool json_summary = false;
};

int cmd_generate(const GenerateArgs& a, Manifest& m, std::ostream& out) {
    m.settings["seed"] = a.seed;
    m.settings["clean"] = a.clean;
    m.settings["variants"] = a.variants;
    m.settings["architectures"] = a.architectures;
    const auto records = designed_records(a.spec, a.seed, a.clean, a.variants, a.architectures, m);
    io::write_dataset(a.out, records);
    m.outputs.push_back(a.out);
    io::write_text(a.out + ".manifest.json", m.finish().dump(2) + "\n");
    if (a.json_summary) out << json{{"records", records.size()}, {"out", a.out}}.dump() << "\n";
    return kOk;
}

// ---- simulate -------------------------------------------------------------

struct SimulateArgs {
    std::string harness;
    std::optional<std::string> spec;
    std::optional<std::string> dataset;
    std::uint64_t seed = kDefaultDatasetSeed;
    std::optional<std::uint64_t> noise_seed;
    std::size_t clean = 50;
    std::size_t variants = 10;
    std::string out;
    bool json_summary = false;
};

int cmd_simulate(const SimulateArgs& a, Manifest& m, std::ostream& out) {
    const std::string harness_text = io::read_text(a.harness);
    m.inputs.push_back(input_entry(a.harness, harness_text));
    std::vector<SyntheticArchitecture> archs;
    try {
        archs = io::harness_from_json(json::parse(harness_text));
    } catch (const json::parse_error& e) {
        throw ConfigError("'" + a.harness + "' is not valid JSON: " + e.what());
    }

    std::vector<SampleRecord> design;
    if (a.dataset) {
        const std::string text = io::read_text(*a.dataset);
        m.inputs.push_back(input_entry(*a.dataset, text));
        const auto all = io::dataset_from_jsonl(text);
        const auto ids = architecture_ids(all);
        if (!ids.empty()) design = select_architecture(all, ids.front());
    } else {
        design = designed_records(a.spec, a.seed, a.clean, a.variants, {""}, m);
    }
    const std::uint64_t noise_seed = a.noise_seed.value_or(a.seed);
    m.settings["seed"] = a.seed;
    m.settings["noise_seed"] = noise_seed;
    m.settings["clean"] = a.clean;
    m.settings["variants"] = a.variants;
    json harness_snapshot = json::array();
    for (const auto& arch : archs) harness_snapshot.push_back(io::architecture_to_json(arch));
    m.settings["harness"] = harness_snapshot;

    std::vector<SampleRecord> records;
    for (std::size_t i = 0; i < archs.size(); ++i) {
        auto rows = simulate_dataset(design, archs[i], Rng::derive_seed(noise_seed, i));
        records.insert(records.end(), rows.begin(), rows.end());
    }
    io::write_dataset(a.out, records);
    m.outputs.push_back(a.out);
    io::write_text(a.out + ".manifest.json", m.finish().dump(2) + "\n");
    if (a.json_summary) out << json{{"records", records.size()}, {"architectures", archs.size()}, {"out", a.out}}.dump() << "\n";
    return kOk;
}

// ---- analyze --------------------------------------------------------------

struct AnalyzeArgs {
    std::string dataset;
    std::optional<std::string> config;
    std::string out;
    std::optional<double> rho, lambda, tolerance;
    std::optional<int> resamples;
    std::optional<std::uint64_t> bootstrap_seed;
    std::optional<std::string> prior;
    std::optional<std::string> reference_architecture;
    std::optional<std::string> reference_model;
    std::optional<unsigned> threads;
    bool svg = false;
    bool json_summary = false;
};

json summary_of(const json& report) {
    json s = json::array();
    for (const auto& a : report.at("architectures")) {
        s.push_back({{"architecture_id", a.at("architecture_id")}, {"gap", a.at("gap")},
                     {"ci_low", a.at("ci_low")}, {"ci_high", a.at("ci_high")},
                     {"classification", a.at("classification")}});
    }
    return s;
}

int cmd_analyze(const AnalyzeArgs& a, Manifest& m, std::ostream& out) {
    AnalysisConfig cfg;
    if (a.config) {
        const std::string text = io::read_text(*a.config);
        m.inputs.push_back(input_entry(*a.config, text));
        try {
            cfg.merge_json(json::parse(text));
        } catch (const json::parse_error& e) {
            throw ConfigError("'" + *a.config + "' is not valid JSON: " + e.what());
        }
    }
    if (a.rho) cfg.rho = *a.rho;
    if (a.lambda) cfg.lambda = *a.lambda;
    if (a.tolerance) cfg.tolerance = *a.tolerance;
    if (a.resamples) cfg.resamples = *a.resamples;
    if (a.bootstrap_seed) cfg.bootstrap_seed = *a.bootstrap_seed;
    if (a.prior) cfg.prior = parse_prior_mode(*a.prior);
    if (a.reference_architecture) cfg.reference_architecture = *a.reference_architecture;
    if (a.threads) cfg.threads = *a.threads;
    cfg.validate();

    std::optional<ResponseSurface> external;
    if (a.reference_model) {
        const std::string text = io::read_text(*a.reference_model);
        m.inputs.push_back(input_entry(*a.reference_model, text));
        try {
            external = io::surface_from_json(json::parse(text));
        } catch (const json::parse_error& e) {
            throw ConfigError("'" + *a.reference_model + "' is not valid JSON: " + e.what());
        }
    }

    const std::string data_text = io::read_text(a.dataset);
    m.inputs.push_back(input_entry(a.dataset, data_text));
    const auto records = io::dataset_from_jsonl(data_text);
    if (records.empty()) throw ValidationError(0, "dataset '" + a.dataset + "' has no records");

    const auto analyses = analyze_dataset(records, cfg, external ? &*external : nullptr);
    const json report = report_to_json(analyses, cfg, utc_now());

    // Everything is rendered in memory first so a failure leaves no partial outputs.
    std::map<std::string, std::string> files;
    plots::RowsByArchitecture rows;
    for (const auto& an : analyses) {
        const std::string stem = file_stem(an.architecture_id);
        files["model_" + stem + ".json"] = io::surface_to_json(an.surface).dump(2) + "\n";
        files["reconstruction_" + stem + ".jsonl"] = io::reconstructions_to_jsonl(an.records, an.reconstructions);
        auto& r = rows[an.architecture_id];
        for (std::size_t i = 0; i < an.records.size(); ++i) r.push_back({an.records[i], an.reconstructions[i]});
    }
    files["report.json"] = report.dump(2) + "\n";
    for (auto& [name, text] : plots::render_all(report, rows, a.svg)) files[name] = std::move(text);

    ensure_directory(a.out);
    for (const auto& [name, text] : files) {
        io::write_text(fs::path(a.out) / name, text);
        m.outputs.push_back(name);
    }
    json snapshot = cfg.to_json();
    snapshot["threads"] = cfg.threads;
    m.settings["config"] = snapshot;
    m.settings["svg"] = a.svg;
    io::write_text(fs::path(a.out) / "manifest.json", m.finish().dump(2) + "\n");
    if (a.json_summary) out << summary_of(report).dump() << "\n";
    return kOk;
}

// ---- report ---------------------------------------------------------------

struct ReportArgs {
    std::string report;
    std::optional<std::string> out;
    bool svg = false;
    bool json_summary = false;
};

int cmd_report(const ReportArgs& a, Manifest& m, std::ostream& out) {
    fs::path report_path(a.report);
    if (fs::is_directory(report_path)) report_path /= "report.json";
    const std::string text = io::read_text(report_path);
    m.inputs.push_back(input_entry(report_path, text));
    json report;
    try {
        report = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("'" + report_path.string() + "' is not valid JSON: " + e.what());
    }
    if (!report.contains("format_version") || report.at("format_version") != kReportFormatVersion ||
        !report.contains("architectures")) {
        throw ConfigError("'" + report_path.string() + "' is not a version " +
                          std::to_string(kReportFormatVersion) + " report");
    }
    const fs::path base = report_path.parent_path();
    plots::RowsByArchitecture rows;
    for (const auto& arch : report.at("architectures")) {
        const fs::path rec = base / arch.at("files").at("reconstruction").get<std::string>();
        const std::string rec_text = io::read_text(rec);
        m.inputs.push_back(input_entry(rec, rec_text));
        rows[arch.at("architecture_id").get<std::string>()] = io::reconstructions_from_jsonl(rec_text);
    }
    const auto files = plots::render_all(report, rows, a.svg);
    const fs::path dir = a.out ? fs::path(*a.out) : base;
    ensure_directory(dir);
    for (const auto& [name, body] : files) {
        io::write_text(dir / name, body);
        m.outputs.push_back(name);
    }
    io::write_text(dir / "report_manifest.json", m.finish().dump(2) + "\n");
    if (a.json_summary) out << summary_of(report).dump() << "\n";
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Antifragility-compatible regime detection from stressed judge signals"};
    app.name("cafe");
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "Write a designed-stress dataset with unevaluated signals");
    g->add_option("--spec", gen.spec, "Stress distribution spec JSON (default: benchmark law)");
    g->add_option("--seed", gen.seed, "Dataset seed")->capture_default_str();
    g->add_option("--clean", gen.clean, "Clean prompts")->capture_default_str();
    g->add_option("--variants", gen.variants, "Perturbed variants per clean prompt")->capture_default_str();
    g->add_option("--architecture", gen.architectures, "Architecture id (repeatable)")->capture_default_str();
    g->add_option("--out", gen.out, "Output JSONL path")->required();
    g->add_flag("--json", gen.json_summary, "Print a JSON summary on stdout");

    SimulateArgs sim;
    auto* s = app.add_subcommand("simulate", "Write an evaluated dataset from synthetic architectures");
    s->add_option("--harness", sim.harness, "Harness config JSON")->required();
    s->add_option("--spec", sim.spec, "Stress distribution spec JSON (default: benchmark law)");
    s->add_option("--dataset", sim.dataset, "Reuse designed stress from this dataset instead of sampling");
    s->add_option("--seed", sim.seed, "Dataset seed")->capture_default_str();
    s->add_option("--noise-seed", sim.noise_seed, "Signal-noise seed (default: --seed)");
    s->add_option("--clean", sim.clean, "Clean prompts")->capture_default_str();
    s->add_option("--variants", sim.variants, "Perturbed variants per clean prompt")->capture_default_str();
    s->add_option("--out", sim.out, "Output JSONL path")->required();
    s->add_flag("--json", sim.json_summary, "Print a JSON summary on stdout");

    AnalyzeArgs ana;
    auto* an = app.add_subcommand("analyze", "Fit, reconstruct and report Jensen gaps");
    an->add_option("--dataset", ana.dataset, "Evaluated dataset JSONL")->required();
    an->add_option("--config", ana.config, "Analysis config JSON");
    an->add_option("--out", ana.out, "Output directory")->required();
    an->add_option("--rho", ana.rho, "Ridge strength (default 1e-3)");
    an->add_option("--lambda", ana.lambda, "Inverse prior weight (default 0.05)");
    an->add_option("--tolerance", ana.tolerance, "Resilience tolerance (default 0.01)");
    an->add_option("--resamples", ana.resamples, "Bootstrap resamples (default 500)");
    an->add_option("--bootstrap-seed", ana.bootstrap_seed, "Bootstrap seed (default 7)");
    an->add_option("--prior", ana.prior, "Inverse prior: anchored or distributional")
        ->check(CLI::IsMember({"anchored", "distributional"}));
    an->add_option("--reference-architecture", ana.reference_architecture,
                   "Reconstruct every architecture through this architecture's fitted surface");
    an->add_option("--reference-model", ana.reference_model,
                   "Reconstruct every architecture through this model file");
    an->add_option("--threads", ana.threads, "Worker threads (outputs do not depend on it)");
    an->add_flag("--svg", ana.svg, "Also render SVG figures");
    an->add_flag("--json", ana.json_summary, "Print a JSON summary on stdout");

    ReportArgs rep;
    auto* r = app.add_subcommand("report", "Re-render tables and figures from an existing report");
    r->add_option("--report", rep.report, "report.json or the directory holding it")->required();
    r->add_option("--out", rep.out, "Output directory (default: next to the report)");
    r->add_flag("--svg", rep.svg, "Also render SVG figures");
    r->add_flag("--json", rep.json_summary, "Print a JSON summary on stdout");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "cafe: " << e.what() << "\n";
        return kUsage;
    }

    Manifest manifest;
    manifest.args = args;
    try {
        if (*g) {
            manifest.command = "generate";
            return cmd_generate(gen, manifest, out);
        }
        if (*s) {
            manifest.command = "simulate";
            return cmd_simulate(sim, manifest, out);
        }
        if (*an) {
            manifest.command = "analyze";
            return cmd_analyze(ana, manifest, out);
        }
        manifest.command = "report";
        return cmd_report(rep, manifest, out);
    } catch (const ConfigError& e) {
        err << "cafe: config error: " << e.what() << "\n";
        return kConfig;
    } catch (const IoError& e) {
        err << "cafe: I/O error: " << e.what() << "\n";
        return kIo;
    } catch (const ValidationError& e) {
        err << "cafe: validation error: " << e.what() << "\n";
        return kValidation;
    } catch (const FitError& e) {
        err << "cafe: fit error: " << e.what() << "\n";
        return kSolver;
    } catch (const SolverError& e) {
        err << "cafe: solver error: " << e.what() << "\n";
        return kSolver;
    } catch (const std::exception& e) {
        err << "cafe: error: " << e.what() << "\n";
        return kUsage;
    }
}

}  // namespace cafe::cli
