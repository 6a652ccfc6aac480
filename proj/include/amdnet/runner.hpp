#pragma once

#include <ostream>
#include <string>

#include "amdnet/config.hpp"

namespace amdnet::cli {

/// Quality CSV (filename,sharpness,illumination,contrast,decision,reason)
/// for every image under dir.
int run_assess(const RunConfig& cfg, const std::string& dir, std::ostream& log);

/// Enhanced PNGs plus a fidelity CSV (filename,mse,psnr,ssim) against the
/// originals' L channel, and the pipeline stage log.
int run_enhance(const RunConfig& cfg, const std::string& dir, std::ostream& log);

/// Scan, split, train; writes manifest.csv, split.txt, model_trace.txt,
/// history.csv, run_config.txt and model.ckpt under output.dir.
int run_train(const RunConfig& cfg, std::ostream& log);

/// Loads the checkpoint, evaluates the test split and writes metrics.csv,
/// metrics.txt and confusion.csv. Exits nonzero when accuracy falls below
/// output.min_accuracy.
int run_eval(const RunConfig& cfg, std::ostream& log);

/// Class probabilities and the predicted label for one image.
int run_predict(const RunConfig& cfg, const std::string& image_path, std::ostream& out);

}  // namespace amdnet::cli
