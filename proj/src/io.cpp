#include "cafe/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cafe/error.hpp"

namespace cafe::io {

namespace {

constexpr std::array<std::string_view, kBasisSize> kBasis = kBasisNames;

const json& require(const json& j, const char* key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) {
        throw ConfigError(where + ": missing field '" + key + "'");
    }
    return j.at(key);
}

double number(const json& j, const std::string& what) {
    if (!j.is_number()) throw ConfigError(what + ": expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ConfigError(what + ": expected a finite number");
    return v;
}

// Row-level accessors raise ValidationError instead of ConfigError.
const json& field(const json& j, const char* key, std::size_t row) {
    if (!j.contains(key)) throw ValidationError(row, std::string("missing field '") + key + "'");
    return j.at(key);
}

std::string string_field(const json& j, const char* key, std::size_t row) {
    const json& v = field(j, key, row);
    if (!v.is_string()) throw ValidationError(row, std::string("field '") + key + "' must be a string");
    std::string s = v.get<std::string>();
    if (s.empty()) throw ValidationError(row, std::string("field '") + key + "' must be non-empty");
    return s;
}

Vec4 unit_block(const json& j, const char* key, std::span<const std::string_view> names,
                std::size_t row) {
    const json& block = field(j, key, row);
    if (!block.is_object()) throw ValidationError(row, std::string("field '") + key + "' must be an object");
    Vec4 v{};
    for (std::size_t i = 0; i < 4; ++i) {
        const std::string name(names[i]);
        if (!block.contains(name)) {
            throw ValidationError(row, "missing field '" + std::string(key) + "." + name + "'");
        }
        const json& x = block.at(name);
        if (!x.is_number()) {
            throw ValidationError(row, "field '" + std::string(key) + "." + name + "' must be a number");
        }
        v[i] = x.get<double>();
        if (!(v[i] >= 0.0 && v[i] <= 1.0)) {
            std::ostringstream os;
            os << "field '" << key << "." << name << "' = " << v[i] << " outside [0, 1]";
            throw ValidationError(row, os.str());
        }
    }
    return v;
}

template <class F>
void for_each_line(const std::string& text, F&& f) {
    std::size_t row = 0, pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        std::string line = text.substr(pos, end - pos);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        ++row;
        if (line.find_first_not_of(" \t") != std::string::npos) f(line, row);
        pos = end + 1;
    }
}

json parse_line(const std::string& line, std::size_t row) {
    try {
        json j = json::parse(line);
        if (!j.is_object()) throw ParseError(row, "line is not a JSON object");
        return j;
    } catch (const json::parse_error& e) {
        throw ParseError(row, std::string("malformed JSON: ") + e.what());
    }
}

}  // namespace

// ---- files --------------------------------------------------------------------

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("failed reading '" + path.string() + "'");
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

json parse_json_file(const fs::path& path) {
    const std::string text = read_text(path);
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

// ---- helpers ------------------------------------------------------------------

Vec4 vec4_from_named(const json& j, std::span<const std::string_view> names, const std::string& what) {
    Vec4 v{};
    for (std::size_t i = 0; i < 4; ++i) {
        v[i] = number(require(j, std::string(names[i]).c_str(), what), what + "." + std::string(names[i]));
    }
    return v;
}

json vec4_to_named(const Vec4& v, std::span<const std::string_view> names) {
    json j = json::object();
    for (std::size_t i = 0; i < 4; ++i) j[std::string(names[i])] = v[i];
    return j;
}

Vec4 vec4_from_array(const json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 4) throw ConfigError(what + ": expected an array of 4 numbers");
    Vec4 v{};
    for (std::size_t i = 0; i < 4; ++i) v[i] = number(j[i], what);
    return v;
}

Eigen::Matrix4d matrix4_from_json(const json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 4) throw ConfigError(what + ": expected a 4x4 array");
    Eigen::Matrix4d m;
    for (int r = 0; r < 4; ++r) {
        const Vec4 row = vec4_from_array(j[static_cast<std::size_t>(r)], what);
        for (int c = 0; c < 4; ++c) m(r, c) = row[static_cast<std::size_t>(c)];
    }
    return m;
}

json matrix4_to_json(const Eigen::Matrix4d& m) {
    json j = json::array();
    for (int r = 0; r < 4; ++r) j.push_back({m(r, 0), m(r, 1), m(r, 2), m(r, 3)});
    return j;
}

json coefficients_to_json(const CoefficientMatrix& c) {
    json rows = json::array();
    for (int k = 0; k < 4; ++k) {
        json row = json::array();
        for (int p = 0; p < static_cast<int>(kBasisSize); ++p) row.push_back(c(k, p));
        rows.push_back(std::move(row));
    }
    return rows;
}

CoefficientMatrix coefficients_from_json(const json& j, const std::string& what) {
    if (!j.is_array() || j.size() != 4) throw ConfigError(what + ": expected 4 coefficient rows");
    CoefficientMatrix c;
    for (std::size_t k = 0; k < 4; ++k) {
        const json& row = j[k];
        if (!row.is_array() || row.size() != kBasisSize) {
            throw ConfigError(what + ": each coefficient row must hold 17 numbers");
        }
        for (std::size_t p = 0; p < kBasisSize; ++p) {
            c(static_cast<int>(k), static_cast<int>(p)) = number(row[p], what);
        }
    }
    return c;
}

std::string content_digest(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// ---- distribution spec ----------------------------------------------------------

json spec_to_json(const StressDistributionSpec& spec) {
    json dims = json::array();
    for (std::size_t i = 0; i < 4; ++i) {
        dims.push_back({{"name", kStressNames[i]}, {"mean", spec.dims[i].mean}, {"std", spec.dims[i].std}});
    }
    return {{"dims", dims}};
}

StressDistributionSpec spec_from_json(const json& j) {
    const json& dims = require(j, "dims", "spec");
    if (!dims.is_array() || dims.size() != 4) throw ConfigError("spec: 'dims' must list 4 dimensions");
    StressDistributionSpec spec;
    for (std::size_t i = 0; i < 4; ++i) {
        const std::string where = "spec.dims[" + std::to_string(i) + "]";
        const json& name = require(dims[i], "name", where);
        if (!name.is_string() || name.get<std::string>() != kStressNames[i]) {
            throw ConfigError(where + ": expected name '" + std::string(kStressNames[i]) + "'");
        }
        spec.dims[i].mean = number(require(dims[i], "mean", where), where + ".mean");
        spec.dims[i].std = number(require(dims[i], "std", where), where + ".std");
    }
    spec.validate();
    return spec;
}

StressDistributionSpec read_spec(const fs::path& path) { return spec_from_json(parse_json_file(path)); }

// ---- dataset -------------------------------------------------------------------

json record_to_json(const SampleRecord& r) {
    json j;
    j["prompt_id"] = r.prompt_id;
    j["variant_id"] = r.variant_id;
    j["architecture_id"] = r.architecture_id;
    j["stress"] = vec4_to_named(r.designed_stress.values(), kStressNames);
    j["signals"] = r.signals ? vec4_to_named(r.signals->values(), kSignalNames) : json(nullptr);
    j["is_clean"] = r.is_clean;
    return j;
}

SampleRecord record_from_json(const json& j, std::size_t row) {
    SampleRecord r;
    r.prompt_id = string_field(j, "prompt_id", row);
    r.variant_id = string_field(j, "variant_id", row);
    r.architecture_id = string_field(j, "architecture_id", row);
    r.designed_stress = StressVector(unit_block(j, "stress", kStressNames, row));
    const json& sig = field(j, "signals", row);
    if (!sig.is_null()) r.signals = JudgeSignals(unit_block(j, "signals", kSignalNames, row));
    const json& clean = field(j, "is_clean", row);
    if (!clean.is_boolean()) throw ValidationError(row, "field 'is_clean' must be a boolean");
    r.is_clean = clean.get<bool>();
    return r;
}

std::string dataset_to_jsonl(std::span<const SampleRecord> records) {
    std::string out;
    for (const auto& r : records) {
        out += record_to_json(r).dump();
        out += '\n';
    }
    return out;
}

std::vector<SampleRecord> dataset_from_jsonl(const std::string& text) {
    std::vector<SampleRecord> records;
    std::vector<std::size_t> rows;
    for_each_line(text, [&](const std::string& line, std::size_t row) {
        records.push_back(record_from_json(parse_line(line, row), row));
        rows.push_back(row);
    });
    validate_records(records, rows);
    return records;
}

void write_dataset(const fs::path& path, std::span<const SampleRecord> records) {
    write_text(path, dataset_to_jsonl(records));
}

std::vector<SampleRecord> ingest_records(const fs::path& path) { return dataset_from_jsonl(read_text(path)); }

// ---- model --------------------------------------------------------------------

json surface_to_json(const ResponseSurface& s) {
    json j;
    j["architecture_id"] = s.architecture_id;
    j["rho"] = s.ridge_strength;
    j["basis_order"] = kBasis;
    j["signal_order"] = kSignalNames;
    j["coefficients"] = coefficients_to_json(s.coefficients);
    return j;
}

ResponseSurface surface_from_json(const json& j) {
    ResponseSurface s;
    const json& id = require(j, "architecture_id", "model");
    if (!id.is_string()) throw ConfigError("model: 'architecture_id' must be a string");
    s.architecture_id = id.get<std::string>();
    s.ridge_strength = number(require(j, "rho", "model"), "model.rho");
    if (j.contains("basis_order")) {
        const json& order = j.at("basis_order");
        if (!order.is_array() || order.size() != kBasisSize) {
            throw ConfigError("model: 'basis_order' must list the 17 basis terms");
        }
        for (std::size_t p = 0; p < kBasisSize; ++p) {
            if (!order[p].is_string() || order[p].get<std::string>() != kBasis[p]) {
                throw ConfigError("model: basis term " + std::to_string(p) + " must be '" +
                                  std::string(kBasis[p]) + "'");
            }
        }
    }
    s.coefficients = coefficients_from_json(require(j, "coefficients", "model"), "model.coefficients");
    return s;
}

void write_model(const fs::path& path, const ResponseSurface& s) {
    write_text(path, surface_to_json(s).dump(2) + "\n");
}

ResponseSurface read_model(const fs::path& path) { return surface_from_json(parse_json_file(path)); }

// ---- reconstructions ----------------------------------------------------------

std::string reconstructions_to_jsonl(std::span<const SampleRecord> records,
                                     std::span<const ReconstructionResult> results) {
    if (records.size() != results.size()) {
        throw std::invalid_argument("reconstructions_to_jsonl: length mismatch");
    }
    std::string out;
    for (std::size_t i = 0; i < records.size(); ++i) {
        json j = record_to_json(records[i]);
        j["psi_obs"] = vec4_to_named(results[i].psi_obs.values(), kStressNames);
        // Centered solution as solved; uncentering is not exactly invertible.
        j["x_obs"] = vec4_to_named(results[i].x_obs.values(), kStressNames);
        j["objective"] = results[i].objective_value;
        j["iterations"] = results[i].iterations;
        j["converged"] = results[i].converged;
        out += j.dump();
        out += '\n';
    }
    return out;
}

std::vector<ReconstructionRow> reconstructions_from_jsonl(const std::string& text) {
    std::vector<ReconstructionRow> out;
    for_each_line(text, [&](const std::string& line, std::size_t row) {
        const json j = parse_line(line, row);
        ReconstructionRow r;
        r.record = record_from_json(j, row);
        const Vec4 psi = unit_block(j, "psi_obs", kStressNames, row);
        r.result.psi_obs = StressVector(psi);
        r.result.x_obs = center(r.result.psi_obs);
        if (j.contains("x_obs")) {
            try {
                r.result.x_obs = CenteredStress(vec4_from_named(j["x_obs"], kStressNames, "x_obs"));
            } catch (const std::exception& e) {
                throw ValidationError(row, std::string("x_obs: ") + e.what());
            }
            if (uncenter(r.result.x_obs) != r.result.psi_obs) {
                throw ValidationError(row, "x_obs disagrees with psi_obs");
            }
        }
        const json& obj = field(j, "objective", row);
        const json& it = field(j, "iterations", row);
        const json& conv = field(j, "converged", row);
        if (!obj.is_number() || !it.is_number_integer() || !conv.is_boolean()) {
            throw ValidationError(row, "solver fields have wrong types");
        }
        r.result.objective_value = obj.get<double>();
        r.result.iterations = it.get<int>();
        r.result.converged = conv.get<bool>();
        out.push_back(std::move(r));
    });
    return out;
}

std::vector<ReconstructionRow> read_reconstructions(const fs::path& path) {
    return reconstructions_from_jsonl(read_text(path));
}

// ---- harness ---------------------------------------------------------------------

json architecture_to_json(const SyntheticArchitecture& a) {
    json d;
    d["kind"] = deformation_kind(a.true_deformation);
    std::visit(
        [&](const auto& def) {
            using D = std::decay_t<decltype(def)>;
            if constexpr (std::is_same_v<D, AxisScaleDeformation>) {
                d["factors"] = def.factors;
            } else if constexpr (std::is_same_v<D, AffineDeformation>) {
                d["matrix"] = matrix4_to_json(def.matrix);
                d["offset"] = def.offset;
            } else if constexpr (std::is_same_v<D, PolynomialDeformation>) {
                d["coefficients"] = coefficients_to_json(def.coefficients);
            }
        },
        a.true_deformation);
    json j;
    j["id"] = a.id;
    j["deformation"] = d;
    j["surface"] = {{"coefficients", coefficients_to_json(a.true_surface.coefficients)}};
    j["noise_std"] = a.noise_std;
    j["clamp_signals"] = a.clamp_signals;
    return j;
}

SyntheticArchitecture architecture_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("harness: architecture must be an object");
    SyntheticArchitecture a;
    const json& id = require(j, "id", "harness");
    if (!id.is_string() || id.get<std::string>().empty()) throw ConfigError("harness: 'id' must be a non-empty string");
    a.id = id.get<std::string>();
    const std::string where = "harness[" + a.id + "]";

    if (j.contains("deformation")) {
        const json& d = j.at("deformation");
        const json& kind = require(d, "kind", where + ".deformation");
        const std::string k = kind.is_string() ? kind.get<std::string>() : std::string();
        if (k == "identity") {
            a.true_deformation = IdentityDeformation{};
        } else if (k == "axis_scale") {
            a.true_deformation = AxisScaleDeformation{
                vec4_from_array(require(d, "factors", where), where + ".factors")};
        } else if (k == "affine") {
            AffineDeformation af;
            af.matrix = matrix4_from_json(require(d, "matrix", where), where + ".matrix");
            if (d.contains("offset")) af.offset = vec4_from_array(d.at("offset"), where + ".offset");
            a.true_deformation = af;
        } else if (k == "polynomial") {
            a.true_deformation = PolynomialDeformation{
                coefficients_from_json(require(d, "coefficients", where), where + ".coefficients")};
        } else {
            throw ConfigError(where + ": unknown deformation kind '" + k + "'");
        }
    }
    if (j.contains("surface")) {
        const json& s = j.at("surface");
        if (s.is_string()) {
            if (s.get<std::string>() != "default") throw ConfigError(where + ": unknown surface '" + s.get<std::string>() + "'");
        } else {
            a.true_surface.coefficients =
                coefficients_from_json(require(s, "coefficients", where + ".surface"), where + ".surface");
        }
    }
    a.true_surface.architecture_id = a.id;
    if (j.contains("noise_std")) a.noise_std = number(j.at("noise_std"), where + ".noise_std");
    if (j.contains("clamp_signals")) {
        if (!j.at("clamp_signals").is_boolean()) throw ConfigError(where + ".clamp_signals must be a boolean");
        a.clamp_signals = j.at("clamp_signals").get<bool>();
    }
    a.validate();
    return a;
}

std::vector<SyntheticArchitecture> harness_from_json(const json& j) {
    std::vector<SyntheticArchitecture> out;
    if (j.is_object() && j.contains("architectures")) {
        const json& list = j.at("architectures");
        if (!list.is_array() || list.empty()) throw ConfigError("harness: 'architectures' must be a non-empty array");
        for (const auto& a : list) out.push_back(architecture_from_json(a));
    } else {
        out.push_back(architecture_from_json(j));
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
        for (std::size_t k = 0; k < i; ++k) {
            if (out[i].id == out[k].id) throw ConfigError("harness: duplicate architecture id '" + out[i].id + "'");
        }
    }
    return out;
}

std::vector<SyntheticArchitecture> read_harness(const fs::path& path) {
    return harness_from_json(parse_json_file(path));
}

// ---- CSV ---------------------------------------------------------------------

std::string csv_field(const std::string& value) {
    if (value.find_first_of(",\"\r\n") == std::string::npos) return value;
    std::string out = "\"";
    for (char c : value) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string csv_number(double value) {
    if (!std::isfinite(value)) return "";
    return json(value).dump();
}

std::string to_csv(const std::vector<std::string>& header,
                   const std::vector<std::vector<std::string>>& rows) {
    std::string out;
    const auto emit = [&](const std::vector<std::string>& row) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += csv_field(row[i]);
        }
        out += "\r\n";
    };
    emit(header);
    for (const auto& r : rows) {
        if (r.size() != header.size()) throw std::invalid_argument("CSV row width differs from header");
        emit(r);
    }
    return out;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string cell;
    bool quoted = false, any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    cell += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cell += c;
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
            any = true;
        } else if (c == ',') {
            row.push_back(std::move(cell));
            cell.clear();
            any = true;
        } else if (c == '\r' || c == '\n') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            row.push_back(std::move(cell));
            cell.clear();
            rows.push_back(std::move(row));
            row.clear();
            any = false;
        } else {
            cell += c;
            any = true;
        }
    }
    if (quoted) throw ParseError(0, "CSV: unterminated quoted field");
    if (any || !cell.empty() || !row.empty()) {
        row.push_back(std::move(cell));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace cafe::io
