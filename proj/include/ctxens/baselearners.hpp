#pragma once

#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ctxens/core.hpp"
#include "ctxens/gbdt.hpp"
#include "ctxens/params.hpp"

namespace ctxens::base {

enum class BaseKind {
    LinearAR,      ///< ridge regression on lags and exogenous columns
    BoostedTrees,  ///< squared-loss GBDT on the same features
    Passthrough,   ///< reads its forecast from a named column (hyperparam "source")
};

std::string_view to_string(BaseKind kind) noexcept;
BaseKind parse_base_kind(std::string_view text);

struct BasePredictorSpec {
    std::string name;
    BaseKind kind = BaseKind::LinearAR;
    std::vector<int> lags;
    std::vector<std::string> exog_columns;
    ParamMap hyperparams;

    /// Lags positive and strictly increasing (nonempty unless Passthrough);
    /// Passthrough needs a "source" column.
    void validate() const;
    int max_lag() const noexcept { return lags.empty() ? 0 : lags.back(); }
    /// Names of the feature columns this base sees: lagN..., then exog.
    std::vector<std::string> feature_names() const;
};

struct LaggedFeatures {
    Matrix features;
    std::vector<double> targets;
    std::size_t first_row = 0;  ///< series index of the first feature row
};

/// Row t holds y[t - lag] for each lag followed by the exogenous columns at
/// t; rows without full lag history are dropped.
LaggedFeatures make_features(const TimeSeriesFrame& series, const BasePredictorSpec& spec);

/// Feature rows [begin, end) of `series`; begin must be >= max lag.
Matrix feature_rows(const TimeSeriesFrame& series, const BasePredictorSpec& spec, std::size_t begin,
                    std::size_t end);

/// Side information s^(i) of this base for rows [begin, end).
FeatureTable side_info_rows(const TimeSeriesFrame& series, const BasePredictorSpec& spec, std::size_t begin,
                            std::size_t end);

/// beta = (X^T X + ridge I)^{-1} X^T y.
Vector fit_linear_ar(const Matrix& features, std::span<const double> targets, double ridge);

struct PassthroughSource {
    std::string column;
};

class BaseModel {
public:
    using State = std::variant<Vector, gbdt::BoostedRegressor, PassthroughSource>;

    BaseModel(BasePredictorSpec spec, State state) : spec_(std::move(spec)), state_(std::move(state)) {}

    const BasePredictorSpec& spec() const noexcept { return spec_; }
    const State& state() const noexcept { return state_; }

    /// One-step-ahead predictions for rows [begin, end) of `series`.
    Vector predict(const TimeSeriesFrame& series, std::size_t begin, std::size_t end) const;

private:
    BasePredictorSpec spec_;
    State state_;
};

/// Fits on rows [0, train_end) of `series`.
BaseModel fit_base_model(const BasePredictorSpec& spec, const TimeSeriesFrame& series, std::size_t train_end);

/// Row-wise predictions from an already-built feature matrix.
Vector predict_base(const BaseModel& model, const Matrix& features);

}  // namespace ctxens::base
