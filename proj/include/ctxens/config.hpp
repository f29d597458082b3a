#pragma once

#include <filesystem>
#include <string_view>

#include "ctxens/pipeline.hpp"

namespace ctxens::config {

/// Sectioned key = value text:
///
///   [data]      source = synthetic|csv, mix, length, seed, noise_sigma, path
///   [split]     t1, t_end, t2
///   [base NAME] kind, lags, exog, plus model hyperparameters
///   [meta]      kind, constraint, extras, onehot, plus meta hyperparameters
///   [run]       seed, output_dir
///
/// `#` and `;` start comments. Errors name the offending line.
pipeline::ExperimentConfig parse(std::string_view text);

/// Like parse; a relative csv path is resolved against the file's directory.
pipeline::ExperimentConfig parse_file(const std::filesystem::path& path);

}  // namespace ctxens::config
