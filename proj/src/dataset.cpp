#include "amdnet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "amdnet/errors.hpp"
#include "amdnet/image_io.hpp"

namespace fs = std::filesystem;

namespace amdnet {

std::optional<ClassLabel> class_from_name(const std::string& name) {
    for (int i = 0; i < kNumClasses; ++i) {
        if (name == kClassNames[static_cast<std::size_t>(i)]) return static_cast<ClassLabel>(i);
    }
    return std::nullopt;
}

std::array<std::size_t, kNumClasses> Manifest::class_counts() const {
    std::array<std::size_t, kNumClasses> counts{};
    for (const auto& e : entries) ++counts[static_cast<std::size_t>(e.label)];
    return counts;
}

Manifest scan_dataset(const std::string& root, const ScanOptions& opts, ScanReport* report) {
    if (!fs::is_directory(root)) throw IoError("dataset root is not a directory: " + root);

    std::vector<std::string> offenders;
    std::vector<std::pair<ClassLabel, std::string>> class_dirs;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (!entry.is_directory()) continue;
        const std::string name = entry.path().filename().string();
        if (auto label = class_from_name(name)) {
            class_dirs.emplace_back(*label, entry.path().string());
        } else {
            offenders.push_back(name);
        }
    }
    if (!offenders.empty()) {
        std::sort(offenders.begin(), offenders.end());
        std::string joined;
        for (const auto& o : offenders) joined += (joined.empty() ? "" : ", ") + o;
        throw ValidationError("unknown class subdirectories: " + joined);
    }
    std::sort(class_dirs.begin(), class_dirs.end());

    const std::string source = fs::path(root).filename().string();
    Manifest manifest;
    for (const auto& [label, dir] : class_dirs) {
        std::vector<std::string> files;
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (entry.is_regular_file() && is_supported_image(entry.path().filename().string())) {
                files.push_back(entry.path().string());
            }
        }
        std::sort(files.begin(), files.end());
        if (files.empty() && report) {
            report->warnings.push_back("class directory has no images: " + dir);
        }
        for (const auto& file : files) {
            if (report) ++report->scanned;
            ManifestEntry me;
            me.path = file;
            me.label = label;
            me.source = source;
            if (opts.apply_quality_gate) {
                ImageU8 img;
                try {
                    img = read_image(file);
                } catch (const IoError&) {
                    if (report) report->unreadable.push_back(file);
                    continue;
                }
                QualityReport q = assess_quality(img, opts.thresholds);
                me.accepted = q.accept;
                if (!q.accept) {
                    if (report) ++report->rejected;
                    std::string joined;
                    for (const auto& r : q.reasons) joined += (joined.empty() ? "" : ";") + r;
                    me.reject_reason = joined;
                    if (!opts.include_rejected) continue;
                }
            }
            manifest.entries.push_back(std::move(me));
        }
    }
    return manifest;
}

SplitResult stratified_split(const Manifest& manifest, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw ConfigError("split fraction must be in (0,1), got " + std::to_string(test_fraction));
    }
    std::array<std::vector<std::size_t>, kNumClasses> by_class;
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
        by_class[static_cast<std::size_t>(manifest.entries[i].label)].push_back(i);
    }

    SplitResult split;
    for (int c = 0; c < kNumClasses; ++c) {
        auto& idx = by_class[static_cast<std::size_t>(c)];
        Rng rng(Rng::derive(seed, static_cast<std::uint64_t>(c), 0xA511ULL));
        for (std::size_t i = idx.size(); i > 1; --i) {
            std::swap(idx[i - 1], idx[static_cast<std::size_t>(rng.uniform_int(i))]);
        }
        const std::size_t n_test = static_cast<std::size_t>(
            std::lround(test_fraction * static_cast<double>(idx.size())));
        for (std::size_t i = 0; i < idx.size(); ++i) {
            (i < n_test ? split.test : split.train).entries.push_back(manifest.entries[idx[i]]);
        }
    }
    auto by_path = [](const ManifestEntry& a, const ManifestEntry& b) { return a.path < b.path; };
    std::sort(split.train.entries.begin(), split.train.entries.end(), by_path);
    std::sort(split.test.entries.begin(), split.test.entries.end(), by_path);
    return split;
}

void write_manifest_csv(const Manifest& manifest, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot open " + path);
    f << "path,label,decision,source\n";
    for (const auto& e : manifest.entries) {
        f << e.path << ',' << kClassNames[static_cast<std::size_t>(e.label)] << ','
          << (e.accepted ? "accept" : "reject") << ',' << e.source << '\n';
    }
    if (!f) throw IoError("failed writing " + path);
}

void write_split_audit(const SplitResult& split, double fraction, std::uint64_t seed,
                       const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot open " + path);
    f << "seed=" << seed << '\n';
    f << "fraction=" << fraction << '\n';
    f << "test_count=" << split.test.entries.size() << '\n';
    for (const auto& e : split.test.entries) f << e.path << '\n';
    if (!f) throw IoError("failed writing " + path);
}

std::vector<std::string> read_split_audit_test_paths(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot read split file: " + path);
    std::vector<std::string> paths;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty() || line.find('=') != std::string::npos) continue;
        paths.push_back(line);
    }
    return paths;
}

Tensor one_hot_label(ClassLabel label) {
    Tensor y({1, kNumClasses});
    y.at(0, static_cast<int>(label)) = 1.0;
    return y;
}

Tensor load_sample_tensor(const std::string& path, const EnhanceOptions& opts,
                          const AugmentConfig* augment_cfg, Rng* augment_rng) {
    ImageU8 rgb = read_image(path);
    if (augment_cfg) {
        if (!augment_rng) throw ValidationError("augmentation requested without an rng");
        rgb = augment(rgb, *augment_rng, *augment_cfg);
    }
    ImageU8 enhanced = enhance_pipeline(rgb, opts);
    const int s = opts.target_size;
    Tensor x({1, s, s, 3});
    for (int y = 0; y < s; ++y) {
        for (int xx = 0; xx < s; ++xx) {
            const double v = enhanced.at(xx, y) / 255.0;
            x.at(0, y, xx, 0) = v;
            x.at(0, y, xx, 1) = v;
            x.at(0, y, xx, 2) = v;
        }
    }
    return x;
}

DirectoryBatchSource::DirectoryBatchSource(std::vector<ManifestEntry> entries, int batch_size,
                                           std::uint64_t seed, EnhanceOptions enhance,
                                           std::optional<AugmentConfig> augment_cfg)
    : entries_(std::move(entries)),
      batch_size_(batch_size),
      seed_(seed),
      enhance_(std::move(enhance)),
      augment_(std::move(augment_cfg)) {
    if (batch_size_ < 1) throw ConfigError("batch_size must be >= 1");
    order_.resize(entries_.size());
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
}

std::size_t DirectoryBatchSource::sample_count() const { return entries_.size(); }

void DirectoryBatchSource::begin_epoch(int epoch) {
    epoch_ = epoch;
    cursor_ = 0;
    for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
    Rng rng(Rng::derive(seed_, static_cast<std::uint64_t>(epoch), 0x5481FF1EULL));
    for (std::size_t i = order_.size(); i > 1; --i) {
        std::swap(order_[i - 1], order_[static_cast<std::size_t>(rng.uniform_int(i))]);
    }
}

bool DirectoryBatchSource::next_batch(Tensor& x, Tensor& y) {
    while (cursor_ < order_.size()) {
        const std::size_t want = std::min<std::size_t>(batch_size_, order_.size() - cursor_);
        std::vector<Tensor> xs;
        std::vector<ClassLabel> labels;
        std::size_t attempted = 0;
        while (xs.size() < want && cursor_ < order_.size()) {
            const std::size_t idx = order_[cursor_++];
            const ManifestEntry& e = entries_[idx];
            ++attempted;
            try {
                Rng sample_rng(Rng::derive(seed_, static_cast<std::uint64_t>(epoch_),
                                           static_cast<std::uint64_t>(idx)));
                xs.push_back(load_sample_tensor(e.path, enhance_,
                                                augment_ ? &*augment_ : nullptr,
                                                augment_ ? &sample_rng : nullptr));
                labels.push_back(e.label);
            } catch (const IoError&) {
                ++skipped_;
            }
        }
        if (xs.empty()) {
            if (attempted > 0 && cursor_ >= order_.size()) {
                throw IoError("all images in the final batch failed to decode");
            }
            if (attempted >= static_cast<std::size_t>(batch_size_)) {
                throw IoError("an entire batch failed to decode");
            }
            continue;
        }
        const int n = static_cast<int>(xs.size());
        const int s = enhance_.target_size;
        x = Tensor({n, s, s, 3});
        y = Tensor({n, kNumClasses});
        const std::size_t row = xs[0].size();
        for (int i = 0; i < n; ++i) {
            std::memcpy(x.data() + static_cast<std::size_t>(i) * row, xs[static_cast<std::size_t>(i)].data(),
                        sizeof(double) * row);
            y.at(i, static_cast<int>(labels[static_cast<std::size_t>(i)])) = 1.0;
        }
        return true;
    }
    return false;
}

}  // namespace amdnet
