#include "cafe/stress.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "cafe/error.hpp"
#include "cafe/rng.hpp"

namespace cafe {

namespace {

void require_range(const Vec4& v, double lo, double hi, const char* type) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!(v[i] >= lo && v[i] <= hi)) {
            throw std::domain_error(std::string(type) + " coordinate " + std::to_string(i) +
                                    " = " + std::to_string(v[i]) + " outside [" +
                                    std::to_string(lo) + ", " + std::to_string(hi) + "]");
        }
    }
}

}  // namespace

StressVector::StressVector(const Vec4& values) : values_(values) {
    require_range(values_, 0.0, 1.0, "stress");
}

bool StressVector::is_zero() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
}

CenteredStress::CenteredStress(const Vec4& values) : values_(values) {
    require_range(values_, -0.5, 0.5, "centered stress");
}

JudgeSignals::JudgeSignals(const Vec4& values) : values_(values) {
    require_range(values_, 0.0, 1.0, "judge signal");
}

double JudgeSignals::mean() const noexcept {
    return (values_[0] + values_[1] + values_[2] + values_[3]) / 4.0;
}

void StressDistributionSpec::validate() const {
    for (std::size_t i = 0; i < dims.size(); ++i) {
        const auto& d = dims[i];
        if (!std::isfinite(d.mean)) {
            throw ConfigError("stress dimension '" + std::string(kStressNames[i]) +
                              "': mean must be finite");
        }
        if (!std::isfinite(d.std) || d.std <= 0.0) {
            throw ConfigError("stress dimension '" + std::string(kStressNames[i]) +
                              "': std must be strictly positive");
        }
    }
}

StressDistributionSpec StressDistributionSpec::benchmark() {
    StressDistributionSpec s;
    s.dims = {DimensionLaw{0.40, 0.18}, DimensionLaw{0.58, 0.20}, DimensionLaw{0.32, 0.16},
              DimensionLaw{0.46, 0.18}};
    return s;
}

// Exact for psi in [1/4, 1] and x in [-1/2, -1/4] (Sterbenz). Elsewhere the
// shift may round by at most 2^-54; after one round trip the maps are exact
// inverses of each other.
CenteredStress center(const StressVector& psi) {
    Vec4 x{};
    for (std::size_t i = 0; i < kStressDims; ++i) x[i] = psi[i] - 0.5;
    return CenteredStress(x);
}

StressVector uncenter(const CenteredStress& x) {
    Vec4 psi{};
    for (std::size_t i = 0; i < kStressDims; ++i) psi[i] = x[i] + 0.5;
    return StressVector(psi);
}

Vec4 clip_to_box(const Vec4& x) {
    Vec4 out{};
    for (std::size_t i = 0; i < kStressDims; ++i) out[i] = std::clamp(x[i], -0.5, 0.5);
    return out;
}

std::vector<StressVector> sample_designed_stress(const StressDistributionSpec& spec,
                                                 std::uint64_t seed, std::size_t count) {
    spec.validate();
    Rng rng(seed);
    std::vector<StressVector> out;
    out.reserve(count);
    for (std::size_t n = 0; n < count; ++n) {
        Vec4 psi{};
        for (std::size_t i = 0; i < kStressDims; ++i) {
            psi[i] = std::clamp(rng.normal(spec.dims[i].mean, spec.dims[i].std), 0.0, 1.0);
        }
        out.emplace_back(psi);
    }
    return out;
}

std::vector<SampleRecord> build_designed_dataset(const StressDistributionSpec& spec,
                                                 std::size_t n_clean,
                                                 std::size_t variants_per_clean,
                                                 std::uint64_t seed,
                                                 const std::string& architecture_id) {
    const auto stress = sample_designed_stress(spec, seed, n_clean * variants_per_clean);
    std::vector<SampleRecord> out;
    out.reserve(n_clean * (variants_per_clean + 1));
    std::size_t next = 0;
    for (std::size_t p = 0; p < n_clean; ++p) {
        const std::string prompt = "P" + std::to_string(p);
        out.push_back(SampleRecord{prompt, "V0", architecture_id, StressVector{}, std::nullopt, true});
        for (std::size_t v = 1; v <= variants_per_clean; ++v) {
            out.push_back(SampleRecord{prompt, "V" + std::to_string(v), architecture_id,
                                       stress[next++], std::nullopt, false});
        }
    }
    return out;
}

std::string record_key(const SampleRecord& r) {
    return r.prompt_id + '\x1f' + r.variant_id + '\x1f' + r.architecture_id;
}

void validate_records(std::span<const SampleRecord> records, std::span<const std::size_t> rows) {
    std::unordered_map<std::string, std::size_t> seen;
    seen.reserve(records.size());
    for (std::size_t n = 0; n < records.size(); ++n) {
        const auto& r = records[n];
        const std::size_t row = n < rows.size() ? rows[n] : n + 1;
        if (r.is_clean && !r.designed_stress.is_zero()) {
            throw ValidationError(row, "clean record must carry zero designed stress");
        }
        auto [it, inserted] = seen.emplace(record_key(r), row);
        if (!inserted) {
            throw DuplicateKeyError(row, "duplicate (prompt_id, variant_id, architecture_id) = (" +
                                             r.prompt_id + ", " + r.variant_id + ", " +
                                             r.architecture_id + "), first seen at row " +
                                             std::to_string(it->second));
        }
    }
}

std::vector<Vec4> centered_designed(std::span<const SampleRecord> records) {
    std::vector<Vec4> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(center(r.designed_stress).values());
    return out;
}

std::vector<SampleRecord> select_architecture(std::span<const SampleRecord> records,
                                              std::string_view architecture_id) {
    std::vector<SampleRecord> out;
    for (const auto& r : records) {
        if (r.architecture_id == architecture_id) out.push_back(r);
    }
    return out;
}

std::vector<std::string> architecture_ids(std::span<const SampleRecord> records) {
    std::vector<std::string> ids;
    for (const auto& r : records) {
        if (std::find(ids.begin(), ids.end(), r.architecture_id) == ids.end()) {
            ids.push_back(r.architecture_id);
        }
    }
    return ids;
}

}  // namespace cafe
