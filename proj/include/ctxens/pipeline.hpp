#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ctxens/baselearners.hpp"
#include "ctxens/core.hpp"
#include "ctxens/datagen.hpp"
#include "ctxens/gbdt.hpp"
#include "ctxens/metrics.hpp"
#include "ctxens/mlp.hpp"
#include "ctxens/params.hpp"

namespace ctxens::pipeline {

enum class MetaKind { GBDT, MLP, ConventionalLinear, ConventionalMLP, BestBase, UniformAverage };

std::string_view to_string(MetaKind kind) noexcept;
MetaKind parse_meta_kind(std::string_view text);
/// GBDT and MLP learn side-information-dependent weights under a constraint.
bool uses_constraint(MetaKind kind) noexcept;
/// BestBase and UniformAverage are reference baselines outside the method.
bool is_extension(MetaKind kind) noexcept;

struct DataSource {
    enum class Type { Synthetic, Csv };
    Type type = Type::Synthetic;
    datagen::SyntheticSpec synthetic;
    std::string csv_path;
};

struct ExperimentConfig {
    DataSource data;
    SplitSpec split;
    std::vector<base::BasePredictorSpec> bases;
    MetaKind meta = MetaKind::MLP;
    std::optional<ConstraintKind> constraint;
    ParamMap meta_hyperparams;
    /// Frame columns appended to the superset side information.
    std::vector<std::string> extras;
    /// Superset columns expanded into indicator columns before the meta learner.
    std::vector<std::string> onehot;
    std::uint64_t seed = 0;
    std::string output_dir = "out";

    void validate() const;
    /// Stable textual form; hashed for provenance.
    std::string canonical_text() const;
    std::string hash() const;
};

/// Replaces listed columns with one indicator per level seen in training.
struct OneHotEncoder {
    std::vector<std::string> columns;
    std::map<std::string, std::vector<double>> levels;

    static OneHotEncoder fit(const FeatureTable& table, const std::vector<std::string>& columns);
    FeatureTable apply(const FeatureTable& table) const;
};

struct LinearStackModel {
    Vector coefficients;
};
struct ConventionalMLPModel {
    mlp::MLPModel net;
};
struct BestBaseModel {
    Eigen::Index index = 0;
    std::vector<double> partition_mse;
};
struct UniformModel {
    Eigen::Index num_models = 0;
};

using MetaModel = std::variant<gbdt::BoostedMetaModel, mlp::MLPModel, LinearStackModel, ConventionalMLPModel,
                               BestBaseModel, UniformModel>;

struct OfflineResult {
    MetaModel meta;
    PredictionBundle harvested;      ///< base predictions on the meta-training rows
    FeatureTable superset;           ///< superset side information on the same rows
    std::vector<double> meta_targets;
    OneHotEncoder encoder;
};

struct StepRecord {
    std::size_t t = 0;  ///< 1-based series index
    double y = 0.0;
    Vector base_preds;
    std::optional<Vector> weights;  ///< absent for the conventional MLP
    double ensemble = 0.0;
};

struct ExperimentResult {
    std::vector<std::string> model_names;
    std::vector<StepRecord> records;
    metrics::ErrorCurve curve;
    double final_cumulative_error = 0.0;  ///< last point of the curve
    std::vector<double> base_final_errors;
    std::string config_hash;
    std::uint64_t seed = 0;
    MetaKind meta = MetaKind::MLP;
    std::optional<ConstraintKind> constraint;
};

/// Loads the configured data source; synthetic data carries its two
/// generating components as side-info columns `y1` and `y2`.
TimeSeriesFrame load_frame(const ExperimentConfig& config);

/// Bases fit on rows 1..t1, harvested on t1+1..t_end; the meta learner is
/// fit on those rows only. Rows after t_end are never read.
OfflineResult run_offline_phase(const ExperimentConfig& config, const TimeSeriesFrame& frame);

/// Bases refit on 1..t_end; the frozen meta learner weighs their test-row
/// forecasts.
ExperimentResult run_online_phase(const ExperimentConfig& config, const TimeSeriesFrame& frame,
                                  const OfflineResult& offline);

ExperimentResult run_experiment(const ExperimentConfig& config);

/// Least squares from base predictions to targets (ridge floor 1e-8).
Vector fit_conventional_linear(const Matrix& base_preds_train, std::span<const double> targets_train);
Vector run_conventional_linear(const Matrix& base_preds_train, std::span<const double> targets_train,
                               const Matrix& base_preds_test);

gbdt::GBDTConfig gbdt_config(const ParamMap& params, std::uint64_t seed);
mlp::MLPConfig mlp_config(const ParamMap& params, std::uint64_t seed);

/// Serialized meta model, used for leakage audits and artifacts.
std::string serialize_meta(const MetaModel& model);

}  // namespace ctxens::pipeline
