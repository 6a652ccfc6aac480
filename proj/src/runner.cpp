#include "amdnet/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>

#include "amdnet/dataset.hpp"
#include "amdnet/errors.hpp"
#include "amdnet/image_io.hpp"
#include "amdnet/metrics.hpp"

namespace fs = std::filesystem;

namespace amdnet::cli {

namespace {

std::vector<std::string> walk_images(const std::string& dir) {
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
    std::vector<std::string> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (entry.is_regular_file() && is_supported_image(entry.path().filename().string())) {
            files.push_back(entry.path().string());
        }
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw IoError("no images found under " + dir);
    return files;
}

std::string relative_to(const std::string& path, const std::string& base) {
    return fs::relative(path, base).string();
}

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string fidelity_value(double v) {
    if (std::isinf(v)) return "inf";
    return fmt("%.4f", v);
}

std::ofstream open_out(const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot open " + path);
    return f;
}

std::string checkpoint_path(const RunConfig& cfg) { return cfg.output.dir + "/model.ckpt"; }

}  // namespace

int run_assess(const RunConfig& cfg, const std::string& dir, std::ostream& log) {
    fs::create_directories(cfg.output.dir);
    const auto files = walk_images(dir);
    auto csv = open_out(cfg.output.dir + "/quality.csv");
    csv << "filename,sharpness,illumination,contrast,decision,reason\n";
    std::size_t accepted = 0, unreadable = 0;
    for (const auto& file : files) {
        ImageU8 img;
        try {
            img = read_image(file);
        } catch (const IoError& e) {
            log << "skipping unreadable " << file << ": " << e.what() << "\n";
            ++unreadable;
            continue;
        }
        const QualityReport q = assess_quality(img, cfg.quality);
        std::string reasons;
        for (const auto& r : q.reasons) reasons += (reasons.empty() ? "" : ";") + r;
        csv << relative_to(file, dir) << ',' << fmt("%.4f", q.sharpness) << ','
            << fmt("%.4f", q.illumination) << ',' << fmt("%.4f", q.contrast) << ','
            << (q.accept ? "accept" : "reject") << ',' << reasons << '\n';
        accepted += q.accept ? 1 : 0;
    }
    log << "assessed " << files.size() - unreadable << " images, accepted " << accepted
        << ", unreadable " << unreadable << "\n";
    log << "wrote " << cfg.output.dir << "/quality.csv\n";
    return 0;
}

int run_enhance(const RunConfig& cfg, const std::string& dir, std::ostream& log) {
    fs::create_directories(cfg.output.dir);
    const auto files = walk_images(dir);
    auto csv = open_out(cfg.output.dir + "/fidelity.csv");
    csv << "filename,mse,psnr,ssim\n";
    bool stages_written = false;
    std::size_t written = 0;
    for (const auto& file : files) {
        ImageU8 rgb;
        try {
            rgb = read_image(file);
        } catch (const IoError& e) {
            log << "skipping unreadable " << file << ": " << e.what() << "\n";
            continue;
        }
        std::vector<std::string> stages;
        const ImageU8 enhanced = enhance_pipeline(rgb, cfg.enhance, &stages);
        if (!stages_written) {
            auto sf = open_out(cfg.output.dir + "/enhance_stages.txt");
            for (const auto& s : stages) sf << s << '\n';
            stages_written = true;
        }
        const std::string rel = relative_to(file, dir);
        fs::path out_path = fs::path(cfg.output.dir) / "enhanced" / rel;
        out_path.replace_extension(".png");
        fs::create_directories(out_path.parent_path());
        write_png(enhanced, out_path.string());

        // fidelity against the original's lightness channel at the same size
        const ImageU8 reference = resize_bilinear(channel_extract(rgb_to_lab(rgb), 0),
                                                  cfg.enhance.target_size, cfg.enhance.target_size);
        csv << rel << ',' << fidelity_value(mse(enhanced, reference)) << ','
            << fidelity_value(psnr(enhanced, reference)) << ','
            << fidelity_value(ssim(enhanced, reference)) << '\n';
        ++written;
    }
    log << "enhanced " << written << " images into " << cfg.output.dir << "/enhanced\n";
    return 0;
}

namespace {

void write_trace(const std::vector<LayerTraceRow>& trace, std::ostream& out) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-5s %-15s %-11s %-8s %-16s %s\n", "Layer", "Type",
                  "Kernel Size", "Kernel", "Input Size", "Params");
    out << buf;
    for (const auto& row : trace) {
        std::snprintf(buf, sizeof buf, "%-5d %-15s %-11s %-8s %-16s %lld\n", row.index,
                      row.type.c_str(), row.kernel.c_str(), row.filters.c_str(),
                      row.input_size.c_str(), row.params);
        out << buf;
    }
}

std::string history_value(const std::optional<double>& v) {
    return v ? fmt("%.12g", *v) : "nan";
}

}  // namespace

int run_train(const RunConfig& cfg, std::ostream& log) {
    fs::create_directories(cfg.output.dir);
    if (cfg.dataset.root.empty()) throw ConfigError("dataset.root is not set");

    ScanOptions scan_opts;
    scan_opts.apply_quality_gate = cfg.dataset.quality_gate;
    scan_opts.include_rejected = cfg.dataset.include_rejected;
    scan_opts.thresholds = cfg.quality;
    ScanReport scan_report;
    const Manifest manifest = scan_dataset(cfg.dataset.root, scan_opts, &scan_report);
    if (manifest.entries.empty()) {
        throw ConfigError("dataset is empty after scanning " + cfg.dataset.root);
    }
    write_manifest_csv(manifest, cfg.output.dir + "/manifest.csv");
    const auto counts = manifest.class_counts();
    for (int c = 0; c < kNumClasses; ++c) {
        log << kClassNames[static_cast<std::size_t>(c)] << ": " << counts[static_cast<std::size_t>(c)]
            << " images\n";
    }
    for (const auto& w : scan_report.warnings) log << "warning: " << w << "\n";
    if (!scan_report.unreadable.empty()) {
        log << "skipped " << scan_report.unreadable.size() << " unreadable files\n";
    }

    const SplitResult split =
        stratified_split(manifest, cfg.dataset.split_fraction, cfg.dataset.seed);
    write_split_audit(split, cfg.dataset.split_fraction, cfg.dataset.seed,
                      cfg.output.dir + "/split.txt");
    const auto train_counts = split.train.class_counts();
    for (int c = 0; c < kNumClasses; ++c) {
        if (train_counts[static_cast<std::size_t>(c)] == 0) {
            throw ConfigError(std::string("no training samples for class ") +
                              kClassNames[static_cast<std::size_t>(c)]);
        }
    }
    log << "split: " << split.train.entries.size() << " train / " << split.test.entries.size()
        << " test\n";

    BuildResult build = build_model(cfg.model, cfg.train.seed);
    {
        auto tf = open_out(cfg.output.dir + "/model_trace.txt");
        write_trace(build.trace, tf);
    }
    write_trace(build.trace, log);

    {
        auto cf = open_out(cfg.output.dir + "/run_config.txt");
        cf << describe_config(cfg);
    }

    DirectoryBatchSource train_source(split.train.entries, cfg.train.batch_size, cfg.train.seed,
                                      cfg.enhance,
                                      cfg.augment_enabled ? std::optional<AugmentConfig>(cfg.augment)
                                                          : std::nullopt);
    DirectoryBatchSource val_source(split.test.entries, cfg.train.batch_size, cfg.train.seed,
                                    cfg.enhance, std::nullopt);

    auto hist = open_out(cfg.output.dir + "/history.csv");
    hist << "epoch,lr,train_loss,train_acc,val_loss,val_acc\n";
    const auto on_epoch = [&](const EpochStats& s) {
        hist << s.epoch << ',' << fmt("%.12g", s.lr) << ',' << fmt("%.12g", s.train_loss) << ','
             << fmt("%.12g", s.train_acc) << ',' << history_value(s.val_loss) << ','
             << history_value(s.val_acc) << '\n';
        hist.flush();
        log << "epoch " << s.epoch << " lr " << fmt("%.6g", s.lr) << " loss "
            << fmt("%.6g", s.train_loss) << " acc " << fmt("%.4f", s.train_acc);
        if (s.val_acc) log << " val_acc " << fmt("%.4f", *s.val_acc);
        log << "\n";
        return true;
    };
    fit(build.state, train_source,  cfg.train,
        split.test.entries.empty() ? nullptr : &val_source, on_epoch);
    if (train_source.skipped_count() > 0) {
        log << "skipped " << train_source.skipped_count() << " undecodable training samples\n";
    }

    save_checkpoint(build.state, checkpoint_path(cfg));
    log << "wrote " << checkpoint_path(cfg) << "\n";
    return 0;
}

int run_eval(const RunConfig& cfg, std::ostream& log) {
    fs::create_directories(cfg.output.dir);
    const std::string ckpt = checkpoint_path(cfg);
    if (!fs::exists(ckpt)) throw StateError("no checkpoint at " + ckpt + "; run train first");
    ModelState state = load_checkpoint(ckpt, cfg.model);

    // Prefer the audited split written at training time.
    std::vector<ManifestEntry> test_entries;
    const std::string split_file = cfg.output.dir + "/split.txt";
    if (fs::exists(split_file)) {
        for (const auto& path : read_split_audit_test_paths(split_file)) {
            const std::string cls = fs::path(path).parent_path().filename().string();
            const auto label = class_from_name(cls);
            if (!label) throw ValidationError("split entry has unknown class directory: " + path);
            ManifestEntry e;
            e.path = path;
            e.label = *label;
            test_entries.push_back(std::move(e));
        }
    } else {
        ScanOptions scan_opts;
        scan_opts.apply_quality_gate = cfg.dataset.quality_gate;
        scan_opts.include_rejected = cfg.dataset.include_rejected;
        scan_opts.thresholds = cfg.quality;
        const Manifest manifest = scan_dataset(cfg.dataset.root, scan_opts);
        test_entries =
            stratified_split(manifest, cfg.dataset.split_fraction, cfg.dataset.seed).test.entries;
    }
    if (test_entries.empty()) throw ConfigError("test split is empty");

    DirectoryBatchSource source(test_entries, cfg.train.batch_size, cfg.dataset.seed, cfg.enhance,
                                std::nullopt);
    ConfusionMatrix cm;
    source.begin_epoch(0);
    Tensor x, y;
    while (source.next_batch(x, y)) {
        const Prediction p = predict(state, x);
        for (int i = 0; i < x.dim(0); ++i) {
            int actual = 0;
            for (int j = 0; j < kNumClasses; ++j) {
                if (y.at(i, j) == 1.0) actual = j;
            }
            cm.add(actual, p.labels[static_cast<std::size_t>(i)]);
        }
    }

    const MetricsReport report = compute_metrics(cm);
    open_out(cfg.output.dir + "/confusion.csv") << format_confusion_csv(cm);
    open_out(cfg.output.dir + "/metrics.csv") << format_report_csv(report);
    open_out(cfg.output.dir + "/metrics.txt") << format_report_text(report);
    log << format_report_text(report);
    if (report.accuracy < cfg.output.min_accuracy) {
        log << "accuracy " << fmt("%.4f", report.accuracy) << " below floor "
            << fmt("%.4f", cfg.output.min_accuracy) << "\n";
        return 2;
    }
    return 0;
}

int run_predict(const RunConfig& cfg, const std::string& image_path, std::ostream& out) {
    const std::string ckpt = checkpoint_path(cfg);
    if (!fs::exists(ckpt)) throw StateError("no checkpoint at " + ckpt + "; run train first");
    ModelState state = load_checkpoint(ckpt, cfg.model);
    if (!fs::exists(image_path)) throw IoError("image not found: " + image_path);

    const Tensor x = load_sample_tensor(image_path, cfg.enhance);
    const Prediction p = predict(state, x);
    for (int j = 0; j < kNumClasses; ++j) {
        out << kClassNames[static_cast<std::size_t>(j)] << ' ' << fmt("%.6f", p.probabilities.at(0, j))
            << '\n';
    }
    out << "label " << kClassNames[static_cast<std::size_t>(p.labels[0])] << '\n';
    return 0;
}

}  // namespace amdnet::cli
