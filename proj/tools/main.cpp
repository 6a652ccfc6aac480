#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "amdnet/config.hpp"
#include "amdnet/parallel.hpp"
#include "amdnet/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Fundus image quality gating, enhancement and CNN-LSTM classification"};
    app.require_subcommand(1);
    app.footer("Config keys (overridable via --config FILE):\n" + amdnet::config_keys_help());

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    int threads = 1;
    app.add_option("--config", config_path, "run configuration file")
        ->envname("AMDNET_CONFIG");
    auto* seed_opt = app.add_option("--seed", seed, "override dataset and training seeds");
    app.add_option("--out-dir", out_dir, "override output.dir");
    app.add_option("--threads", threads, "worker threads for the conv kernels");

    std::string assess_dir, enhance_dir, predict_image;
    auto* assess = app.add_subcommand("assess", "quality-gate a directory of images");
    assess->add_option("dir", assess_dir, "image directory")->required();
    auto* enhance = app.add_subcommand("enhance", "write enhanced PNGs and a fidelity report");
    enhance->add_option("dir", enhance_dir, "image directory")->required();
    auto* train = app.add_subcommand("train", "fit the model and write history + checkpoint");
    auto* eval = app.add_subcommand("eval", "evaluate the checkpoint on the test split");
    auto* predict = app.add_subcommand("predict", "classify one image");
    predict->add_option("image", predict_image, "image file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        amdnet::RunConfig cfg =
            config_path.empty() ? amdnet::default_config() : amdnet::parse_config(config_path);
        if (seed_opt->count() > 0) {
            cfg.dataset.seed = seed;
            cfg.train.seed = seed;
        }
        if (!out_dir.empty()) cfg.output.dir = out_dir;
        amdnet::set_worker_threads(threads);

        if (assess->parsed()) return amdnet::cli::run_assess(cfg, assess_dir, std::cout);
        if (enhance->parsed()) return amdnet::cli::run_enhance(cfg, enhance_dir, std::cout);
        if (train->parsed()) return amdnet::cli::run_train(cfg, std::cout);
        if (eval->parsed()) return amdnet::cli::run_eval(cfg, std::cout);
        if (predict->parsed()) return amdnet::cli::run_predict(cfg, predict_image, std::cout);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
