#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

namespace ctxens::cli {

inline constexpr const char* kVersion = "0.1.0";

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kRuntimeFailure = 1;
inline constexpr int kUsageError = 2;

struct SynthOptions {
    std::optional<std::string> mix;  ///< a, b or c; all three when absent
    std::size_t length = 730;
    std::uint64_t seed = 0;
    double noise_sigma = 1.0;
    std::filesystem::path out = "data";
};

/// Writes y{a,b,c}.csv and manifest.json into `out`.
int cmd_synth(const SynthOptions& options, std::ostream& log, std::ostream& diag);

struct RunOptions {
    std::filesystem::path config;  ///< config file, or a directory of *.cfg files
    std::optional<std::filesystem::path> out;  ///< overrides [run] output_dir (single config only)
};

/// Writes predictions.csv, cumerr.csv, summary.txt and manifest.json.
int cmd_run(const RunOptions& options, std::ostream& log, std::ostream& diag);

/// Runs one of the grad / oracle / order suites.
int cmd_verify(const std::string& suite, std::uint64_t seed, std::ostream& log, std::ostream& diag);

/// Applies the CTXENS_OUTPUT_ROOT override to relative paths.
std::filesystem::path resolve_output(const std::filesystem::path& p);

}  // namespace ctxens::cli
