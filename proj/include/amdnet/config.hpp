#pragma once

#include <map>
#include <string>

#include "amdnet/augment.hpp"
#include "amdnet/enhance.hpp"
#include "amdnet/model.hpp"
#include "amdnet/quality.hpp"

namespace amdnet {

struct DatasetConfig {
    std::string root;
    double split_fraction = 0.2;
    std::uint64_t seed = 42;
    bool quality_gate = true;
    bool include_rejected = false;
};

struct OutputConfig {
    std::string dir = "out";
    double min_accuracy = 0.0;  // eval exits nonzero below this floor
};

/// Full run configuration. Every default matches the published setup where
/// one exists (CLAHE 2.0/(8,8), batch 32, 100 epochs, lr 0.001, decay 0.95,
/// split 0.2, dropout 0.2).
struct RunConfig {
    DatasetConfig dataset;
    QualityThresholds quality;
    EnhanceOptions enhance;
    bool augment_enabled = true;
    AugmentConfig augment;
    ModelSpec model;
    TrainConfig train;
    OutputConfig output;

    /// "default" or "config" per section.key.
    std::map<std::string, std::string> provenance;
};

RunConfig default_config();

/// Parses the INI-style file; unknown sections/keys and out-of-range values
/// raise ConfigError with the offending name.
RunConfig parse_config(const std::string& path);
RunConfig parse_config_text(const std::string& text);

/// One line per key: section.key, default value, description.
std::string config_keys_help();

/// Effective configuration with per-key provenance, suitable for run logs.
std::string describe_config(const RunConfig& cfg);

}  // namespace amdnet
