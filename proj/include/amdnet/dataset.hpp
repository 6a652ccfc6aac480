#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "amdnet/augment.hpp"
#include "amdnet/enhance.hpp"
#include "amdnet/model.hpp"
#include "amdnet/quality.hpp"

namespace amdnet {

/// Class order is fixed alphabetically so one-hot indices are stable.
enum class ClassLabel { Amd = 0, Cataract = 1, Diabetes = 2, Normal = 3 };
inline constexpr int kNumClasses = 4;
inline constexpr std::array<const char*, kNumClasses> kClassNames = {"AMD", "Cataract",
                                                                     "Diabetes", "Normal"};

std::optional<ClassLabel> class_from_name(const std::string& name);

struct ManifestEntry {
    std::string path;
    ClassLabel label = ClassLabel::Amd;
    bool accepted = true;
    std::string reject_reason;  // semicolon-joined reason codes
    std::string source;
};

struct Manifest {
    std::vector<ManifestEntry> entries;
    std::array<std::size_t, kNumClasses> class_counts() const;
};

struct ScanOptions {
    bool apply_quality_gate = true;
    bool include_rejected = false;
    QualityThresholds thresholds;
};

struct ScanReport {
    std::size_t scanned = 0;
    std::size_t rejected = 0;
    std::vector<std::string> unreadable;  // listed and skipped
    std::vector<std::string> warnings;    // e.g. empty class directories
};

/// Walks root/<ClassName>/*.{png,jpg,jpeg} in sorted order. Unknown
/// subdirectories raise a ValidationError naming the offenders. With the
/// quality gate on, rejected images are dropped unless include_rejected.
Manifest scan_dataset(const std::string& root, const ScanOptions& opts = {},
                      ScanReport* report = nullptr);

struct SplitResult {
    Manifest train;
    Manifest test;
};

/// Per-class test size is round(fraction * class_count); deterministic
/// under the seed; outputs sorted by path.
SplitResult stratified_split(const Manifest& manifest, double test_fraction, std::uint64_t seed);

void write_manifest_csv(const Manifest& manifest, const std::string& path);

/// Split audit file: the seed, the fraction and the exact test path list.
void write_split_audit(const SplitResult& split, double fraction, std::uint64_t seed,
                       const std::string& path);
std::vector<std::string> read_split_audit_test_paths(const std::string& path);

/// Decode -> optional augmentation on the raw RGB -> enhancement chain ->
/// the single enhanced channel replicated to 3 -> scaled to [0,1].
/// Result shape 1 x S x S x 3 where S = opts.target_size.
Tensor load_sample_tensor(const std::string& path, const EnhanceOptions& opts,
                          const AugmentConfig* augment_cfg = nullptr, Rng* augment_rng = nullptr);

Tensor one_hot_label(ClassLabel label);

/// Batch stream over manifest entries. Shuffles per epoch from
/// (seed, epoch); per-sample augmentation streams are derived from
/// (seed, epoch, original index) so results are loader-order independent.
/// Decode failures are skipped and counted; a fully skipped batch throws.
class DirectoryBatchSource final : public BatchSource {
public:
    DirectoryBatchSource(std::vector<ManifestEntry> entries, int batch_size, std::uint64_t seed,
                         EnhanceOptions enhance, std::optional<AugmentConfig> augment_cfg);

    std::size_t sample_count() const override;
    void begin_epoch(int epoch) override;
    bool next_batch(Tensor& x, Tensor& y) override;

    std::size_t skipped_count() const { return skipped_; }

private:
    std::vector<ManifestEntry> entries_;
    int batch_size_;
    std::uint64_t seed_;
    EnhanceOptions enhance_;
    std::optional<AugmentConfig> augment_;
    std::vector<std::size_t> order_;
    std::size_t cursor_ = 0;
    int epoch_ = 0;
    std::size_t skipped_ = 0;
};

}  // namespace amdnet
