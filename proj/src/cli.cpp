#include "ctxens/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ctxens/config.hpp"
#include "ctxens/datagen.hpp"
#include "ctxens/io.hpp"
#include "ctxens/pipeline.hpp"
#include "ctxens/verify.hpp"

namespace ctxens::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

fs::path resolve_output(const fs::path& p) {
    const char* root = std::getenv("CTXENS_OUTPUT_ROOT");
    if (root == nullptr || *root == '\0' || p.is_absolute()) return p;
    return fs::path(root) / p;
}

namespace {

struct Emitted {
    std::string name;
    std::size_t bytes;
    std::string checksum;
};

class Writer {
public:
    explicit Writer(fs::path dir) : dir_(std::move(dir)) {}

    void put(const std::string& name, const std::string& contents) {
        io::write_file_atomic(dir_ / name, contents);
        files_.push_back({name, contents.size(), io::hex64(io::fnv1a(contents))});
    }

    json inventory() const {
        json out = json::array();
        for (const auto& f : files_) out.push_back({{"file", f.name}, {"bytes", f.bytes}, {"fnv1a64", f.checksum}});
        return out;
    }

    const fs::path& dir() const { return dir_; }

private:
    fs::path dir_;
    std::vector<Emitted> files_;
};

double elapsed_ms(std::chrono::steady_clock::time_point since) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

int report_error(const Error& e, std::ostream& diag) {
    diag << "error: " << e.what() << '\n';
    return (e.code() == ErrorCode::ParseError || e.code() == ErrorCode::ConfigInvalid) ? kUsageError
                                                                                       : kRuntimeFailure;
}

std::string predictions_csv(const pipeline::ExperimentResult& r) {
    std::string out = "t,y";
    for (const auto& n : r.model_names) out += ",pred_" + n;
    for (const auto& n : r.model_names) out += ",w_" + n;
    out += ",ensemble\n";
    for (const auto& rec : r.records) {
        out += std::to_string(rec.t) + ',' + io::format_real(rec.y);
        for (double p : rec.base_preds) out += ',' + io::format_real(p);
        for (Eigen::Index i = 0; i < rec.base_preds.size(); ++i) {
            out += ',';
            if (rec.weights) out += io::format_real((*rec.weights)[i]);
        }
        out += ',' + io::format_real(rec.ensemble) + '\n';
    }
    return out;
}

std::string cumerr_csv(const metrics::ErrorCurve& curve) {
    std::string out = "t,value\n";
    for (const auto& p : curve.points) out += std::to_string(p.t) + ',' + io::format_real(p.value) + '\n';
    return out;
}

std::string summary_txt(const pipeline::ExperimentConfig& cfg, const pipeline::ExperimentResult& r) {
    std::ostringstream s;
    s << "meta = " << pipeline::to_string(r.meta) << '\n';
    s << "constraint = " << (r.constraint ? std::string(to_string(*r.constraint)) : "none") << '\n';
    s << "extension = " << (pipeline::is_extension(r.meta) ? "yes (reference baseline)" : "no") << '\n';
    s << "test_rows = " << r.records.size() << '\n';
    s << "final_cumulative_error = " << io::format_real(r.final_cumulative_error) << '\n';
    s << "total_squared_error = " << io::format_real(r.curve.final_total) << '\n';
    s << "curve_normalization = running mean over test steps\n";
    for (std::size_t i = 0; i < r.model_names.size(); ++i) {
        s << "base_mse." << r.model_names[i] << " = " << io::format_real(r.base_final_errors[i]) << '\n';
    }
    s << "config_hash = " << r.config_hash << '\n';
    s << "seed = " << r.seed << '\n';
    s << "split = " << cfg.split.t1 << ',' << cfg.split.t_end << ',' << cfg.split.t2 << '\n';
    return s.str();
}

int run_one(const pipeline::ExperimentConfig& cfg, const fs::path& out_dir, std::ostream& log) {
    const auto start = std::chrono::steady_clock::now();
    const auto result = pipeline::run_experiment(cfg);
    const double run_ms = elapsed_ms(start);

    Writer w(out_dir);
    w.put("predictions.csv", predictions_csv(result));
    w.put("cumerr.csv", cumerr_csv(result.curve));
    w.put("summary.txt", summary_txt(cfg, result));

    json manifest;
    manifest["command"] = "run";
    manifest["version"] = kVersion;
    manifest["config"] = cfg.canonical_text();
    manifest["config_hash"] = result.config_hash;
    manifest["seeds"] = {{"run", cfg.seed},
                         {"data", cfg.data.type == pipeline::DataSource::Type::Synthetic ? cfg.data.synthetic.seed : 0}};
    manifest["components"] = {{"ctxens", kVersion}, {"model_format", 1}};
    manifest["extension_meta"] = pipeline::is_extension(cfg.meta);
    manifest["curve_normalization"] = "running mean over test steps";
    manifest["files"] = w.inventory();
    manifest["timings_ms"] = {{"run", run_ms}, {"total", elapsed_ms(start)}};
    io::write_file_atomic(out_dir / "manifest.json", manifest.dump(2) + '\n');

    log << out_dir.string() << ": final cumulative error " << io::format_real(result.final_cumulative_error)
        << " (" << pipeline::to_string(cfg.meta);
    if (cfg.constraint) log << ", " << to_string(*cfg.constraint);
    log << ")\n";
    return kOk;
}

}  // namespace

int cmd_synth(const SynthOptions& options, std::ostream& log, std::ostream& diag) {
    const auto start = std::chrono::steady_clock::now();
    try {
        std::vector<datagen::MixKind> mixes;
        if (options.mix) {
            mixes.push_back(datagen::parse_mix(*options.mix));
        } else {
            mixes = {datagen::MixKind::A, datagen::MixKind::B, datagen::MixKind::C};
        }
        for (auto m : mixes) {
            datagen::SyntheticSpec spec{options.length, m, options.seed, options.noise_sigma};
            try {
                spec.validate();
            } catch (const Error& e) {
                fail(ErrorCode::ConfigInvalid, e.detail());
            }
        }
        Writer w(resolve_output(options.out));
        json specs = json::array();
        for (auto m : mixes) {
            const datagen::SyntheticSpec spec{options.length, m, options.seed, options.noise_sigma};
            const auto name = "y" + std::string(datagen::to_string(m)) + ".csv";
            w.put(name, io::format_frame_csv(datagen::generate(spec).frame));
            specs.push_back({{"file", name},
                             {"mix", datagen::to_string(m)},
                             {"length", spec.length},
                             {"seed", spec.seed},
                             {"noise_sigma", spec.noise_sigma}});
            log << (w.dir() / name).string() << '\n';
        }
        json manifest;
        manifest["command"] = "synth";
        manifest["version"] = kVersion;
        manifest["datasets"] = specs;
        manifest["files"] = w.inventory();
        manifest["timings_ms"] = {{"total", elapsed_ms(start)}};
        io::write_file_atomic(w.dir() / "manifest.json", manifest.dump(2) + '\n');
        return kOk;
    } catch (const Error& e) {
        return report_error(e, diag);
    } catch (const std::exception& e) {
        diag << "error: " << e.what() << '\n';
        return kRuntimeFailure;
    }
}

int cmd_run(const RunOptions& options, std::ostream& log, std::ostream& diag) {
    std::vector<fs::path> files;
    std::error_code ec;
    if (fs::is_directory(options.config, ec)) {
        for (const auto& entry : fs::directory_iterator(options.config)) {
            if (entry.is_regular_file() && entry.path().extension() == ".cfg") files.push_back(entry.path());
        }
        std::sort(files.begin(), files.end());
        if (files.empty()) {
            diag << "error: no .cfg files in " << options.config.string() << '\n';
            return kUsageError;
        }
        if (options.out) {
            diag << "error: --out applies to a single config, not a directory\n";
            return kUsageError;
        }
    } else {
        files.push_back(options.config);
    }

    // Parse everything first so a bad config fails before any work starts.
    std::vector<std::pair<pipeline::ExperimentConfig, fs::path>> jobs;
    std::set<fs::path> dirs;
    for (const auto& f : files) {
        try {
            auto cfg = config::parse_file(f);
            const fs::path dir = resolve_output(options.out ? *options.out : fs::path(cfg.output_dir));
            if (!dirs.insert(dir.lexically_normal()).second) {
                diag << "error: " << f.string() << ": output_dir " << dir.string() << " is shared with another config\n";
                return kUsageError;
            }
            jobs.emplace_back(std::move(cfg), dir);
        } catch (const Error& e) {
            diag << "error: " << e.what() << '\n';
            return kUsageError;
        }
    }

    int status = kOk;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        try {
            run_one(jobs[i].first, jobs[i].second, log);
        } catch (const Error& e) {
            diag << files[i].string() << ": ";
            status = std::max(status, report_error(e, diag) == kUsageError ? kUsageError : kRuntimeFailure);
        } catch (const std::exception& e) {
            diag << files[i].string() << ": error: " << e.what() << '\n';
            status = std::max(status, kRuntimeFailure);
        }
    }
    return status;
}

int cmd_verify(const std::string& suite, std::uint64_t seed, std::ostream& log, std::ostream& diag) {
    verify::SuiteReport report;
    try {
        report = verify::run_suite(suite, seed);
    } catch (const Error& e) {
        return report_error(e, diag);
    }
    for (const auto& c : report.checks) {
        log << (c.passed() ? "PASS " : "FAIL ") << c.name << ": max error " << std::scientific
            << std::setprecision(3) << c.max_error << " (tol " << c.tolerance << "), " << std::defaultfloat
            << (c.trials - c.failures) << "/" << c.trials << " trials held\n";
    }
    return report.passed() ? kOk : kRuntimeFailure;
}

}  // namespace ctxens::cli
