#include "amdnet/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "amdnet/errors.hpp"

namespace amdnet {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    }
}

long long parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const long long n = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return n;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected an integer, got '" + v + "'");
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const unsigned long long n = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return n;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected an unsigned integer, got '" + v + "'");
    }
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : v) {
        if (c == ',') {
            parts.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(trim(cur));
    return parts;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
    std::vector<int> out;
    for (const auto& p : split_list(v)) out.push_back(static_cast<int>(parse_int(key, p)));
    return out;
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::string fmt_int_list(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(v[i]);
    }
    return s;
}

struct KeySpec {
    std::string key;  // "section.key"
    std::string description;
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
};

const std::vector<KeySpec>& key_registry() {
    static const std::vector<KeySpec> keys = {
        {"dataset.root", "directory-per-class image tree",
         [](const RunConfig& c) { return c.dataset.root; },
         [](RunConfig& c, const std::string& v) { c.dataset.root = v; }},
        {"dataset.split_fraction", "held-out test fraction",
         [](const RunConfig& c) { return fmt_double(c.dataset.split_fraction); },
         [](RunConfig& c, const std::string& v) {
             c.dataset.split_fraction = parse_double("dataset.split_fraction", v);
         }},
        {"dataset.seed", "split shuffling seed",
         [](const RunConfig& c) { return std::to_string(c.dataset.seed); },
         [](RunConfig& c, const std::string& v) { c.dataset.seed = parse_u64("dataset.seed", v); }},
        {"dataset.quality_gate", "run the contour quality gate during scans",
         [](const RunConfig& c) { return c.dataset.quality_gate ? "true" : "false"; },
         [](RunConfig& c, const std::string& v) {
             c.dataset.quality_gate = parse_bool("dataset.quality_gate", v);
         }},
        {"dataset.include_rejected", "keep gate-rejected images in the manifest",
         [](const RunConfig& c) { return c.dataset.include_rejected ? "true" : "false"; },
         [](RunConfig& c, const std::string& v) {
             c.dataset.include_rejected = parse_bool("dataset.include_rejected", v);
         }},

        {"quality.min_illumination", "reject below this mean luminance",
         [](const RunConfig& c) { return fmt_double(c.quality.min_illumination); },
         [](RunConfig& c, const std::string& v) {
             c.quality.min_illumination = parse_double("quality.min_illumination", v);
         }},
        {"quality.max_illumination", "reject above this mean luminance",
         [](const RunConfig& c) { return fmt_double(c.quality.max_illumination); },
         [](RunConfig& c, const std::string& v) {
             c.quality.max_illumination = parse_double("quality.max_illumination", v);
         }},
        {"quality.min_contrast", "reject below this luminance std-dev",
         [](const RunConfig& c) { return fmt_double(c.quality.min_contrast); },
         [](RunConfig& c, const std::string& v) {
             c.quality.min_contrast = parse_double("quality.min_contrast", v);
         }},
        {"quality.min_sharpness", "reject below this contour sharpness",
         [](const RunConfig& c) { return fmt_double(c.quality.min_sharpness); },
         [](RunConfig& c, const std::string& v) {
             c.quality.min_sharpness = parse_double("quality.min_sharpness", v);
         }},

        {"enhance.clahe_clip", "CLAHE clip limit",
         [](const RunConfig& c) { return fmt_double(c.enhance.clahe.clip_limit); },
         [](RunConfig& c, const std::string& v) {
             c.enhance.clahe.clip_limit = parse_double("enhance.clahe_clip", v);
         }},
        {"enhance.clahe_grid", "CLAHE tile grid rows,cols",
         [](const RunConfig& c) {
             return std::to_string(c.enhance.clahe.grid_rows) + "," +
                    std::to_string(c.enhance.clahe.grid_cols);
         },
         [](RunConfig& c, const std::string& v) {
             const auto parts = parse_int_list("enhance.clahe_grid", v);
             if (parts.size() != 2) throw ConfigError("enhance.clahe_grid: expected rows,cols");
             c.enhance.clahe.grid_rows = parts[0];
             c.enhance.clahe.grid_cols = parts[1];
         }},
        {"enhance.gamma_enabled", "apply gamma correction after CLAHE",
         [](const RunConfig& c) { return c.enhance.gamma_enabled ? "true" : "false"; },
         [](RunConfig& c, const std::string& v) {
             c.enhance.gamma_enabled = parse_bool("enhance.gamma_enabled", v);
         }},
        {"enhance.gamma", "gamma value when enabled",
         [](const RunConfig& c) { return fmt_double(c.enhance.gamma); },
         [](RunConfig& c, const std::string& v) {
             c.enhance.gamma = parse_double("enhance.gamma", v);
         }},

        {"augment.enabled", "apply training-time augmentation",
         [](const RunConfig& c) { return c.augment_enabled ? "true" : "false"; },
         [](RunConfig& c, const std::string& v) {
             c.augment_enabled = parse_bool("augment.enabled", v);
         }},
        {"augment.p_hflip", "horizontal flip probability",
         [](const RunConfig& c) { return fmt_double(c.augment.p_hflip); },
         [](RunConfig& c, const std::string& v) {
             c.augment.p_hflip = parse_double("augment.p_hflip", v);
         }},
        {"augment.p_vflip", "vertical flip probability",
         [](const RunConfig& c) { return fmt_double(c.augment.p_vflip); },
         [](RunConfig& c, const std::string& v) {
             c.augment.p_vflip = parse_double("augment.p_vflip", v);
         }},
        {"augment.brightness_delta", "brightness shift range (fraction of 255)",
         [](const RunConfig& c) { return fmt_double(c.augment.brightness_delta); },
         [](RunConfig& c, const std::string& v) {
             c.augment.brightness_delta = parse_double("augment.brightness_delta", v);
         }},
        {"augment.contrast_range", "contrast factor low,high",
         [](const RunConfig& c) {
             return fmt_double(c.augment.contrast_low) + "," + fmt_double(c.augment.contrast_high);
         },
         [](RunConfig& c, const std::string& v) {
             const auto parts = split_list(v);
             if (parts.size() != 2) throw ConfigError("augment.contrast_range: expected low,high");
             c.augment.contrast_low = parse_double("augment.contrast_range", parts[0]);
             c.augment.contrast_high = parse_double("augment.contrast_range", parts[1]);
         }},
        {"augment.saturation_range", "saturation factor low,high",
         [](const RunConfig& c) {
             return fmt_double(c.augment.saturation_low) + "," +
                    fmt_double(c.augment.saturation_high);
         },
         [](RunConfig& c, const std::string& v) {
             const auto parts = split_list(v);
             if (parts.size() != 2) throw ConfigError("augment.saturation_range: expected low,high");
             c.augment.saturation_low = parse_double("augment.saturation_range", parts[0]);
             c.augment.saturation_high = parse_double("augment.saturation_range", parts[1]);
         }},
        {"augment.hue_delta", "hue rotation range (fraction of the circle)",
         [](const RunConfig& c) { return fmt_double(c.augment.hue_delta); },
         [](RunConfig& c, const std::string& v) {
             c.augment.hue_delta = parse_double("augment.hue_delta", v);
         }},
        {"augment.shift_fraction", "translation range per axis",
         [](const RunConfig& c) { return fmt_double(c.augment.shift_fraction); },
         [](RunConfig& c, const std::string& v) {
             c.augment.shift_fraction = parse_double("augment.shift_fraction", v);
         }},

        {"model.input_size", "square input side; must divide by 64",
         [](const RunConfig& c) { return std::to_string(c.model.input_size); },
         [](RunConfig& c, const std::string& v) {
             c.model.input_size = static_cast<int>(parse_int("model.input_size", v));
         }},
        {"model.block_filters", "filters per conv block",
         [](const RunConfig& c) { return fmt_int_list(c.model.block_filters); },
         [](RunConfig& c, const std::string& v) {
             c.model.block_filters = parse_int_list("model.block_filters", v);
         }},
        {"model.convs_per_block", "conv layers per block",
         [](const RunConfig& c) { return fmt_int_list(c.model.convs_per_block); },
         [](RunConfig& c, const std::string& v) {
             c.model.convs_per_block = parse_int_list("model.convs_per_block", v);
         }},
        {"model.lstm_hidden", "LSTM hidden width",
         [](const RunConfig& c) { return std::to_string(c.model.lstm_hidden); },
         [](RunConfig& c, const std::string& v) {
             c.model.lstm_hidden = static_cast<int>(parse_int("model.lstm_hidden", v));
         }},
        {"model.fc_units", "fully-connected layer width",
         [](const RunConfig& c) { return std::to_string(c.model.fc_units); },
         [](RunConfig& c, const std::string& v) {
             c.model.fc_units = static_cast<int>(parse_int("model.fc_units", v));
         }},
        {"model.dropout", "dropout rate after each block",
         [](const RunConfig& c) { return fmt_double(c.model.dropout_rate); },
         [](RunConfig& c, const std::string& v) {
             c.model.dropout_rate = parse_double("model.dropout", v);
         }},

        {"train.batch_size", "samples per optimizer step",
         [](const RunConfig& c) { return std::to_string(c.train.batch_size); },
         [](RunConfig& c, const std::string& v) {
             c.train.batch_size = static_cast<int>(parse_int("train.batch_size", v));
         }},
        {"train.epochs", "training epoch budget",
         [](const RunConfig& c) { return std::to_string(c.train.epochs); },
         [](RunConfig& c, const std::string& v) {
             c.train.epochs = static_cast<int>(parse_int("train.epochs", v));
         }},
        {"train.learning_rate", "initial Adam learning rate",
         [](const RunConfig& c) { return fmt_double(c.train.lr0); },
         [](RunConfig& c, const std::string& v) {
             c.train.lr0 = parse_double("train.learning_rate", v);
         }},
        {"train.decay_rate", "exponential learning-rate decay factor",
         [](const RunConfig& c) { return fmt_double(c.train.decay_rate); },
         [](RunConfig& c, const std::string& v) {
             c.train.decay_rate = parse_double("train.decay_rate", v);
         }},
        {"train.decay_step", "epochs per decay application",
         [](const RunConfig& c) { return std::to_string(c.train.decay_step); },
         [](RunConfig& c, const std::string& v) {
             c.train.decay_step = static_cast<int>(parse_int("train.decay_step", v));
         }},
        {"train.seed", "training master seed",
         [](const RunConfig& c) { return std::to_string(c.train.seed); },
         [](RunConfig& c, const std::string& v) { c.train.seed = parse_u64("train.seed", v); }},

        {"output.dir", "artifact output directory",
         [](const RunConfig& c) { return c.output.dir; },
         [](RunConfig& c, const std::string& v) { c.output.dir = v; }},
        {"output.min_accuracy", "eval exits nonzero below this accuracy",
         [](const RunConfig& c) { return fmt_double(c.output.min_accuracy); },
         [](RunConfig& c, const std::string& v) {
             c.output.min_accuracy = parse_double("output.min_accuracy", v);
         }},
    };
    return keys;
}

void validate_config(const RunConfig& c) {
    if (!(c.dataset.split_fraction > 0.0 && c.dataset.split_fraction < 1.0)) {
        throw ConfigError("dataset.split_fraction must be in (0,1)");
    }
    if (c.quality.min_illumination < 0 || c.quality.max_illumination > 255 ||
        c.quality.min_illumination >= c.quality.max_illumination) {
        throw ConfigError("quality illumination bounds must satisfy 0 <= min < max <= 255");
    }
    if (c.quality.min_contrast < 0) throw ConfigError("quality.min_contrast must be >= 0");
    if (c.quality.min_sharpness < 0) throw ConfigError("quality.min_sharpness must be >= 0");
    if (!(c.enhance.clahe.clip_limit > 0)) throw ConfigError("enhance.clahe_clip must be > 0");
    if (c.enhance.clahe.grid_rows < 1 || c.enhance.clahe.grid_cols < 1) {
        throw ConfigError("enhance.clahe_grid entries must be >= 1");
    }
    if (!(c.enhance.gamma > 0)) throw ConfigError("enhance.gamma must be > 0");
    validate_augment_config(c.augment);
    validate_spec(c.model);
    validate_train_config(c.train);
    if (c.output.min_accuracy < 0.0 || c.output.min_accuracy > 1.0) {
        throw ConfigError("output.min_accuracy must be in [0,1]");
    }
    if (c.model.input_size != c.enhance.target_size) {
        throw ConfigError("internal: enhance target must equal model input size");
    }
}

}  // namespace

RunConfig default_config() {
    RunConfig c;
    c.enhance.target_size = c.model.input_size;
    for (const auto& k : key_registry()) c.provenance[k.key] = "default";
    return c;
}

RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg = default_config();
    std::istringstream in(text);
    std::string line, section;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError("line " + std::to_string(line_no) + ": malformed section header");
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (section.empty()) {
            throw ConfigError("line " + std::to_string(line_no) + ": key '" + key +
                              "' outside any [section]");
        }
        const std::string full = section + "." + key;
        const auto& registry = key_registry();
        const auto it = std::find_if(registry.begin(), registry.end(),
                                     [&](const KeySpec& k) { return k.key == full; });
        if (it == registry.end()) throw ConfigError("unknown key '" + full + "'");
        it->set(cfg, value);
        cfg.provenance[full] = "config";
    }
    // enhancement output feeds the network directly
    cfg.enhance.target_size = cfg.model.input_size;
    validate_config(cfg);
    return cfg;
}

RunConfig parse_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str());
}

std::string config_keys_help() {
    std::string out;
    const auto defaults = default_config();
    for (const auto& k : key_registry()) {
        std::string value = k.get(defaults);
        if (value.empty()) value = "(unset)";
        out += "  " + k.key;
        if (k.key.size() < 26) out += std::string(26 - k.key.size(), ' ');
        out += " default=" + value + "  " + k.description + "\n";
    }
    return out;
}

std::string describe_config(const RunConfig& cfg) {
    std::string out;
    for (const auto& k : key_registry()) {
        const auto it = cfg.provenance.find(k.key);
        const std::string prov = it == cfg.provenance.end() ? "default" : it->second;
        out += k.key + " = " + k.get(cfg) + " (" + prov + ")\n";
    }
    return out;
}

}  // namespace amdnet
