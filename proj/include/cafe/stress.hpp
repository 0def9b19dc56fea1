#pragma once

// Stress space, designed-stress sampling and the evaluation-record schema.

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cafe {

inline constexpr std::size_t kStressDims = 4;
inline constexpr std::size_t kSignalDims = 4;

using Vec4 = std::array<double, 4>;

/// Stress dimension names in storage order.
inline constexpr std::array<std::string_view, kStressDims> kStressNames{
    "conflict", "load", "ambiguity", "drift"};

/// Judge-signal names in storage order.
inline constexpr std::array<std::string_view, kSignalDims> kSignalNames{
    "coherence", "novel_inference", "contradiction_resolution", "structural_preservation"};

// ============================================================================
// Value types
// ============================================================================

/// Raw stress intensities, each in [0, 1].
class StressVector {
public:
    StressVector() = default;  // all-zero, the clean-prompt stress
    explicit StressVector(const Vec4& values);

    const Vec4& values() const noexcept { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }

    double conflict() const noexcept { return values_[0]; }
    double load() const noexcept { return values_[1]; }
    double ambiguity() const noexcept { return values_[2]; }
    double drift() const noexcept { return values_[3]; }

    bool is_zero() const noexcept;

    friend bool operator==(const StressVector&, const StressVector&) = default;

private:
    Vec4 values_{};
};

/// Centered stress, each coordinate in [-1/2, 1/2].
class CenteredStress {
public:
    CenteredStress() = default;  // the origin
    explicit CenteredStress(const Vec4& values);

    const Vec4& values() const noexcept { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }

    friend bool operator==(const CenteredStress&, const CenteredStress&) = default;

private:
    Vec4 values_{};
};

/// Judge scores, each in [0, 1].
class JudgeSignals {
public:
    JudgeSignals() = default;
    explicit JudgeSignals(const Vec4& values);

    const Vec4& values() const noexcept { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }

    /// Quality as used for clean/perturbed comparisons: mean of the four scores.
    double mean() const noexcept;

    friend bool operator==(const JudgeSignals&, const JudgeSignals&) = default;

private:
    Vec4 values_{};
};

/// One evaluation row. `signals` is empty for generated rows not yet judged.
struct SampleRecord {
    std::string prompt_id;
    std::string variant_id;
    std::string architecture_id;
    StressVector designed_stress;
    std::optional<JudgeSignals> signals;
    bool is_clean = false;

    bool evaluated() const noexcept { return signals.has_value(); }
};

struct DimensionLaw {
    double mean = 0.0;
    double std = 1.0;
};

/// Independent per-dimension normal laws, clipped into [0, 1].
struct StressDistributionSpec {
    std::array<DimensionLaw, kStressDims> dims{};

    /// Throws ConfigError on a non-positive or non-finite std, or non-finite mean.
    void validate() const;

    /// Designed distribution of the banking-risk benchmark.
    static StressDistributionSpec benchmark();
};

// ============================================================================
// Operations
// ============================================================================

CenteredStress center(const StressVector& psi);
StressVector uncenter(const CenteredStress& x);

/// Project an arbitrary point onto the centered box [-1/2, 1/2]^4.
Vec4 clip_to_box(const Vec4& x);

/// `count` draws; coordinates drawn in dimension order, sample by sample.
std::vector<StressVector> sample_designed_stress(const StressDistributionSpec& spec,
                                                 std::uint64_t seed, std::size_t count);

/// Clean rows P{i}/V0 at zero stress, each followed by perturbed rows
/// P{i}/V1..V{variants_per_clean}. Signals are left unevaluated.
std::vector<SampleRecord> build_designed_dataset(const StressDistributionSpec& spec,
                                                 std::size_t n_clean,
                                                 std::size_t variants_per_clean,
                                                 std::uint64_t seed,
                                                 const std::string& architecture_id);

/// Checks the record-level and dataset-level invariants (clean rows at zero
/// stress, unique id triples). Throws ValidationError / DuplicateKeyError with
/// 1-based row numbers, taken from `rows` when given (e.g. file line numbers).
void validate_records(std::span<const SampleRecord> records,
                      std::span<const std::size_t> rows = {});

/// Centered designed stress for each record, in order.
std::vector<Vec4> centered_designed(std::span<const SampleRecord> records);

/// Records belonging to one architecture, order preserved.
std::vector<SampleRecord> select_architecture(std::span<const SampleRecord> records,
                                              std::string_view architecture_id);

/// Distinct architecture ids in first-appearance order.
std::vector<std::string> architecture_ids(std::span<const SampleRecord> records);

std::string record_key(const SampleRecord& r);

}  // namespace cafe
