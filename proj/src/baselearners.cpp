#include "ctxens/baselearners.hpp"

#include <algorithm>

namespace ctxens::base {

std::string_view to_string(BaseKind kind) noexcept {
    switch (kind) {
        case BaseKind::LinearAR: return "linear_ar";
        case BaseKind::BoostedTrees: return "boosted_trees";
        case BaseKind::Passthrough: return "passthrough";
    }
    return "unknown";
}

BaseKind parse_base_kind(std::string_view text) {
    if (text == "linear_ar") return BaseKind::LinearAR;
    if (text == "boosted_trees") return BaseKind::BoostedTrees;
    if (text == "passthrough") return BaseKind::Passthrough;
    fail(ErrorCode::ConfigInvalid, "unknown base kind '" + std::string(text) + "'");
}

void BasePredictorSpec::validate() const {
    if (name.empty()) fail(ErrorCode::ConfigInvalid, "base model needs a name");
    if (kind != BaseKind::Passthrough && lags.empty()) {
        fail(ErrorCode::ConfigInvalid, "base '" + name + "' needs at least one lag");
    }
    for (std::size_t i = 0; i < lags.size(); ++i) {
        if (lags[i] < 1 || (i > 0 && lags[i] <= lags[i - 1])) {
            fail(ErrorCode::ConfigInvalid, "base '" + name + "': lags must be positive and strictly increasing");
        }
    }
    if (kind == BaseKind::Passthrough && !hyperparams.contains("source")) {
        fail(ErrorCode::ConfigInvalid, "passthrough base '" + name + "' needs a 'source' column");
    }
}

std::vector<std::string> BasePredictorSpec::feature_names() const {
    std::vector<std::string> out;
    for (int lag : lags) out.push_back("lag" + std::to_string(lag));
    out.insert(out.end(), exog_columns.begin(), exog_columns.end());
    return out;
}

Matrix feature_rows(const TimeSeriesFrame& series, const BasePredictorSpec& spec, std::size_t begin,
                    std::size_t end) {
    if (begin < static_cast<std::size_t>(spec.max_lag()) || end > series.length() || begin > end) {
        fail(ErrorCode::SeriesTooShort, "rows [" + std::to_string(begin) + ", " + std::to_string(end) +
                                            ") lack lag history for base '" + spec.name + "'");
    }
    const auto& y = series.values();
    const auto rows = static_cast<Eigen::Index>(end - begin);
    const auto nlags = static_cast<Eigen::Index>(spec.lags.size());
    Matrix out(rows, nlags + static_cast<Eigen::Index>(spec.exog_columns.size()));
    for (Eigen::Index r = 0; r < rows; ++r) {
        const std::size_t t = begin + static_cast<std::size_t>(r);
        for (Eigen::Index j = 0; j < nlags; ++j) out(r, j) = y[t - static_cast<std::size_t>(spec.lags[j])];
    }
    const auto& side = series.side_info();
    for (std::size_t j = 0; j < spec.exog_columns.size(); ++j) {
        const auto idx = side.find(spec.exog_columns[j]);
        if (!idx) fail(ErrorCode::DimensionMismatch, "unknown exogenous column '" + spec.exog_columns[j] + "'");
        out.col(nlags + static_cast<Eigen::Index>(j)) =
            side.values.col(*idx).segment(static_cast<Eigen::Index>(begin), rows);
    }
    return out;
}

LaggedFeatures make_features(const TimeSeriesFrame& series, const BasePredictorSpec& spec) {
    const auto first = static_cast<std::size_t>(spec.max_lag());
    if (series.length() <= first) {
        fail(ErrorCode::SeriesTooShort, "series of length " + std::to_string(series.length()) +
                                            " is not longer than max lag " + std::to_string(first));
    }
    LaggedFeatures out;
    out.first_row = first;
    out.features = feature_rows(series, spec, first, series.length());
    out.targets.assign(series.values().begin() + static_cast<std::ptrdiff_t>(first), series.values().end());
    return out;
}

FeatureTable side_info_rows(const TimeSeriesFrame& series, const BasePredictorSpec& spec, std::size_t begin,
                            std::size_t end) {
    return FeatureTable(spec.feature_names(), feature_rows(series, spec, begin, end));
}

Vector fit_linear_ar(const Matrix& features, std::span<const double> targets, double ridge) {
    if (features.rows() == 0) fail(ErrorCode::EmptyData, "no rows to fit");
    if (static_cast<std::size_t>(features.rows()) != targets.size()) {
        fail(ErrorCode::DimensionMismatch, "features and targets differ in rows");
    }
    if (!(ridge >= 0.0)) fail(ErrorCode::ConfigInvalid, "ridge must be nonnegative");
    const Eigen::Map<const Vector> y(targets.data(), static_cast<Eigen::Index>(targets.size()));
    Matrix gram = features.transpose() * features;
    gram.diagonal().array() += ridge;
    const Vector rhs = features.transpose() * y;
    Eigen::LDLT<Matrix> ldlt(gram);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().cwiseAbs().minCoeff() <= 1e-12 * std::max(1.0, ldlt.vectorD().cwiseAbs().maxCoeff())) {
        fail(ErrorCode::SingularDesign, "normal equations are singular; use a positive ridge");
    }
    return ldlt.solve(rhs);
}

// ---------------------------------------------------------------------------

namespace {

gbdt::GBDTConfig tree_config(const ParamMap& params) {
    gbdt::GBDTConfig c;
    c.num_rounds = param_int(params, "num_rounds", 200);
    c.learning_rate = param_double(params, "learning_rate", 0.1);
    c.max_leaves = param_int(params, "max_leaves", c.max_leaves);
    c.min_samples_leaf = param_int(params, "min_samples_leaf", c.min_samples_leaf);
    c.l2_lambda = param_double(params, "l2_lambda", c.l2_lambda);
    c.histogram_bins = param_int(params, "histogram_bins", c.histogram_bins);
    c.seed = param_u64(params, "seed", c.seed);
    return c;
}

}  // namespace

BaseModel fit_base_model(const BasePredictorSpec& spec, const TimeSeriesFrame& series, std::size_t train_end) {
    spec.validate();
    if (train_end > series.length()) fail(ErrorCode::IndexOutOfRange, "training end beyond series");
    if (spec.kind == BaseKind::Passthrough) {
        const std::string column = spec.hyperparams.at("source");
        if (!series.side_info().find(column)) {
            fail(ErrorCode::DimensionMismatch, "passthrough source column '" + column + "' not found");
        }
        return BaseModel(spec, PassthroughSource{column});
    }
    const LaggedFeatures train = make_features(series.slice(0, train_end), spec);
    if (spec.kind == BaseKind::LinearAR) {
        return BaseModel(spec, fit_linear_ar(train.features, train.targets,
                                             param_double(spec.hyperparams, "ridge", 1e-3)));
    }
    return BaseModel(spec, gbdt::fit_base(train.features, train.targets, tree_config(spec.hyperparams)));
}

Vector predict_base(const BaseModel& model, const Matrix& features) {
    const auto expected = static_cast<Eigen::Index>(model.spec().feature_names().size());
    if (features.cols() != expected) {
        fail(ErrorCode::DimensionMismatch, "base '" + model.spec().name + "' expects " + std::to_string(expected) +
                                               " features, got " + std::to_string(features.cols()));
    }
    return std::visit(
        [&](const auto& state) -> Vector {
            using T = std::decay_t<decltype(state)>;
            if constexpr (std::is_same_v<T, Vector>) {
                return features * state;
            } else if constexpr (std::is_same_v<T, gbdt::BoostedRegressor>) {
                return state.predict(features);
            } else {
                fail(ErrorCode::ConfigInvalid, "passthrough bases predict from the series, not features");
            }
        },
        model.state());
}

Vector BaseModel::predict(const TimeSeriesFrame& series, std::size_t begin, std::size_t end) const {
    if (const auto* source = std::get_if<PassthroughSource>(&state_)) {
        if (end > series.length() || begin > end) fail(ErrorCode::IndexOutOfRange, "prediction rows out of range");
        return series.side_info().column(source->column).segment(static_cast<Eigen::Index>(begin),
                                                                  static_cast<Eigen::Index>(end - begin));
    }
    return predict_base(*this, feature_rows(series, spec_, begin, end));
}

}  // namespace ctxens::base
