#include "ctxens/pipeline.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "ctxens/io.hpp"

namespace ctxens::pipeline {

std::string_view to_string(MetaKind kind) noexcept {
    switch (kind) {
        case MetaKind::GBDT: return "gbdt";
        case MetaKind::MLP: return "mlp";
        case MetaKind::ConventionalLinear: return "conventional_linear";
        case MetaKind::ConventionalMLP: return "conventional_mlp";
        case MetaKind::BestBase: return "best_base";
        case MetaKind::UniformAverage: return "uniform_average";
    }
    return "unknown";
}

MetaKind parse_meta_kind(std::string_view text) {
    for (auto k : {MetaKind::GBDT, MetaKind::MLP, MetaKind::ConventionalLinear, MetaKind::ConventionalMLP,
                   MetaKind::BestBase, MetaKind::UniformAverage}) {
        if (text == to_string(k)) return k;
    }
    fail(ErrorCode::ConfigInvalid, "unknown meta learner '" + std::string(text) + "'");
}

bool uses_constraint(MetaKind kind) noexcept { return kind == MetaKind::GBDT || kind == MetaKind::MLP; }

bool is_extension(MetaKind kind) noexcept {
    return kind == MetaKind::BestBase || kind == MetaKind::UniformAverage;
}

void ExperimentConfig::validate() const {
    if (bases.size() < 2) {
        fail(ErrorCode::ConfigInvalid, "need at least 2 base models, got " + std::to_string(bases.size()));
    }
    std::set<std::string> names;
    for (const auto& b : bases) {
        b.validate();
        if (!names.insert(b.name).second) fail(ErrorCode::ConfigInvalid, "duplicate base name '" + b.name + "'");
    }
    if (uses_constraint(meta) && !constraint) {
        fail(ErrorCode::ConfigInvalid, std::string(to_string(meta)) + " meta learner needs a constraint");
    }
    if (!uses_constraint(meta) && constraint) {
        fail(ErrorCode::ConfigInvalid, "constraint must be absent for the " + std::string(to_string(meta)) +
                                           " meta learner");
    }
    if (split.t1 < 1 || split.t1 >= split.t_end || split.t_end >= split.t2) {
        fail(ErrorCode::ConfigInvalid, "split must satisfy 1 <= t1 < t_end < t2");
    }
    if (data.type == DataSource::Type::Synthetic) data.synthetic.validate();
    if (data.type == DataSource::Type::Csv && data.csv_path.empty()) {
        fail(ErrorCode::ConfigInvalid, "csv data source needs a path");
    }
    if (meta == MetaKind::GBDT) (void)gbdt_config(meta_hyperparams, seed);
    if (meta == MetaKind::MLP || meta == MetaKind::ConventionalMLP) (void)mlp_config(meta_hyperparams, seed);
}

namespace {

template <class T>
std::string joined(const std::vector<T>& items) {
    std::ostringstream out;
    for (std::size_t i = 0; i < items.size(); ++i) out << (i ? "," : "") << items[i];
    return out.str();
}

}  // namespace

std::string ExperimentConfig::canonical_text() const {
    std::ostringstream out;
    out << "[data]\n";
    if (data.type == DataSource::Type::Synthetic) {
        out << "source = synthetic\nmix = " << datagen::to_string(data.synthetic.mix)
            << "\nlength = " << data.synthetic.length << "\nseed = " << data.synthetic.seed
            << "\nnoise_sigma = " << io::format_real(data.synthetic.noise_sigma) << '\n';
    } else {
        out << "source = csv\npath = " << data.csv_path << '\n';
    }
    out << "\n[split]\nt1 = " << split.t1 << "\nt_end = " << split.t_end << "\nt2 = " << split.t2 << '\n';
    for (const auto& b : bases) {
        out << "\n[base " << b.name << "]\nkind = " << base::to_string(b.kind) << '\n';
        if (!b.lags.empty()) out << "lags = " << joined(b.lags) << '\n';
        if (!b.exog_columns.empty()) out << "exog = " << joined(b.exog_columns) << '\n';
        for (const auto& [k, v] : b.hyperparams) out << k << " = " << v << '\n';
    }
    out << "\n[meta]\nkind = " << to_string(meta) << '\n';
    if (constraint) out << "constraint = " << ctxens::to_string(*constraint) << '\n';
    if (!extras.empty()) out << "extras = " << joined(extras) << '\n';
    if (!onehot.empty()) out << "onehot = " << joined(onehot) << '\n';
    for (const auto& [k, v] : meta_hyperparams) out << k << " = " << v << '\n';
    out << "\n[run]\nseed = " << seed << '\n';
    return out.str();
}

std::string ExperimentConfig::hash() const { return io::hex64(io::fnv1a(canonical_text())); }

// ---------------------------------------------------------------------------

OneHotEncoder OneHotEncoder::fit(const FeatureTable& table, const std::vector<std::string>& columns) {
    OneHotEncoder enc;
    enc.columns = columns;
    for (const auto& c : columns) {
        const auto idx = table.find(c);
        if (!idx) fail(ErrorCode::ConfigInvalid, "one-hot column '" + c + "' is not in the side information");
        const Vector col = table.values.col(*idx);
        std::vector<double> lv(col.begin(), col.end());
        std::sort(lv.begin(), lv.end());
        lv.erase(std::unique(lv.begin(), lv.end()), lv.end());
        enc.levels[c] = std::move(lv);
    }
    return enc;
}

FeatureTable OneHotEncoder::apply(const FeatureTable& table) const {
    if (columns.empty()) return table;
    std::vector<std::string> names;
    std::vector<Vector> cols;
    for (Eigen::Index j = 0; j < table.cols(); ++j) {
        const auto& name = table.names[static_cast<std::size_t>(j)];
        const auto it = levels.find(name);
        if (it == levels.end()) {
            names.push_back(name);
            cols.emplace_back(table.values.col(j));
            continue;
        }
        for (double level : it->second) {
            names.push_back(name + "=" + io::format_real(level));
            cols.emplace_back((table.values.col(j).array() == level).cast<double>().matrix());
        }
    }
    for (const auto& c : columns) {
        if (!table.find(c)) fail(ErrorCode::DimensionMismatch, "one-hot column '" + c + "' missing");
    }
    Matrix values(table.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) values.col(static_cast<Eigen::Index>(j)) = cols[j];
    return FeatureTable(std::move(names), std::move(values));
}

// ---------------------------------------------------------------------------

gbdt::GBDTConfig gbdt_config(const ParamMap& params, std::uint64_t seed) {
    gbdt::GBDTConfig c;
    c.num_rounds = param_int(params, "num_rounds", c.num_rounds);
    c.learning_rate = param_double(params, "learning_rate", c.learning_rate);
    c.max_leaves = param_int(params, "max_leaves", c.max_leaves);
    c.min_samples_leaf = param_int(params, "min_samples_leaf", c.min_samples_leaf);
    c.l2_lambda = param_double(params, "l2_lambda", c.l2_lambda);
    c.histogram_bins = param_int(params, "histogram_bins", c.histogram_bins);
    c.seed = param_u64(params, "seed", seed);
    c.validate();
    return c;
}

mlp::MLPConfig mlp_config(const ParamMap& params, std::uint64_t seed) {
    mlp::MLPConfig c;
    c.hidden_units = param_int(params, "hidden_units", c.hidden_units);
    c.learning_rate = param_double(params, "learning_rate", c.learning_rate);
    c.epochs = param_int(params, "epochs", c.epochs);
    c.shuffle = param_bool(params, "shuffle", c.shuffle);
    c.use_bias = param_bool(params, "use_bias", c.use_bias);
    c.zero_init = param_bool(params, "zero_init", c.zero_init);
    c.nonnegative_head = param_bool(params, "nonnegative_head", c.nonnegative_head);
    c.seed = param_u64(params, "seed", seed);
    c.validate();
    return c;
}

Vector fit_conventional_linear(const Matrix& base_preds_train, std::span<const double> targets_train) {
    if (base_preds_train.rows() == 0) fail(ErrorCode::EmptyData, "no rows to fit");
    const double scale = (base_preds_train.transpose() * base_preds_train).diagonal().mean();
    return base::fit_linear_ar(base_preds_train, targets_train, 1e-8 * std::max(1.0, scale));
}

Vector run_conventional_linear(const Matrix& base_preds_train, std::span<const double> targets_train,
                               const Matrix& base_preds_test) {
    const Vector beta = fit_conventional_linear(base_preds_train, targets_train);
    if (base_preds_test.cols() != beta.size()) {
        fail(ErrorCode::DimensionMismatch, "test bundle has a different number of base models");
    }
    return base_preds_test * beta;
}

// ---------------------------------------------------------------------------

TimeSeriesFrame load_frame(const ExperimentConfig& config) {
    if (config.data.type == DataSource::Type::Csv) return io::read_frame_csv(config.data.csv_path);
    return datagen::generate(config.data.synthetic, true).frame;
}

namespace {

std::vector<std::string> base_names(const ExperimentConfig& config) {
    std::vector<std::string> out;
    for (const auto& b : config.bases) out.push_back(b.name);
    return out;
}

/// Base predictions and superset side information for rows [begin, end),
/// with each base fit on rows [0, fit_end).
struct Harvest {
    PredictionBundle bundle;
    FeatureTable superset;
};

Harvest harvest(const ExperimentConfig& config, const TimeSeriesFrame& frame, std::size_t fit_end,
                std::size_t begin, std::size_t end) {
    Harvest h;
    h.bundle.model_names = base_names(config);
    h.bundle.base_preds.resize(static_cast<Eigen::Index>(end - begin), static_cast<Eigen::Index>(config.bases.size()));
    std::vector<FeatureTable> per_base;
    for (std::size_t i = 0; i < config.bases.size(); ++i) {
        const auto& spec = config.bases[i];
        const base::BaseModel model = base::fit_base_model(spec, frame, fit_end);
        h.bundle.base_preds.col(static_cast<Eigen::Index>(i)) = model.predict(frame, begin, end);
        per_base.push_back(base::side_info_rows(frame, spec, begin, end));
    }
    h.bundle.validate();
    FeatureTable extras;
    if (!config.extras.empty()) {
        extras = frame.side_info()
                     .select(config.extras)
                     .slice_rows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end));
    }
    h.superset = build_superset_side_info(per_base, config.extras.empty() ? nullptr : &extras);
    if (uses_constraint(config.meta) && h.superset.cols() == 0) {
        fail(ErrorCode::ConfigInvalid, "superset side information is empty; add lags, exog or extras");
    }
    return h;
}

std::vector<double> rows_of(const std::vector<double>& v, std::size_t begin, std::size_t end) {
    return {v.begin() + static_cast<std::ptrdiff_t>(begin), v.begin() + static_cast<std::ptrdiff_t>(end)};
}

std::vector<double> row_vec(const Matrix& m, Eigen::Index r) {
    std::vector<double> out(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) out[static_cast<std::size_t>(c)] = m(r, c);
    return out;
}

}  // namespace

OfflineResult run_offline_phase(const ExperimentConfig& config, const TimeSeriesFrame& full_frame) {
    config.validate();
    config.split.validate(full_frame.length());
    const std::size_t t1 = config.split.t1;
    const std::size_t t_end = config.split.t_end;
    // Nothing past the training window is visible from here on.
    const TimeSeriesFrame frame = full_frame.slice(0, t_end);

    Harvest h = harvest(config, frame, t1, t1, t_end);
    OfflineResult out;
    out.meta_targets = rows_of(frame.values(), t1, t_end);
    out.harvested = std::move(h.bundle);
    out.superset = std::move(h.superset);
    out.encoder = OneHotEncoder::fit(out.superset, config.onehot);
    const FeatureTable meta_inputs = out.encoder.apply(out.superset);
    const Matrix& preds = out.harvested.base_preds;

    switch (config.meta) {
        case MetaKind::GBDT:
            out.meta = gbdt::fit_meta(meta_inputs, preds, out.meta_targets, *config.constraint,
                                      gbdt_config(config.meta_hyperparams, config.seed));
            break;
        case MetaKind::MLP:
            out.meta = mlp::fit_meta(meta_inputs, preds, out.meta_targets, *config.constraint,
                                     mlp_config(config.meta_hyperparams, config.seed));
            break;
        case MetaKind::ConventionalLinear:
            out.meta = LinearStackModel{fit_conventional_linear(preds, out.meta_targets)};
            break;
        case MetaKind::ConventionalMLP: {
            mlp::MLPConfig c = mlp_config(config.meta_hyperparams, config.seed);
            if (!config.meta_hyperparams.contains("use_bias")) c.use_bias = true;
            out.meta = ConventionalMLPModel{mlp::fit_conventional(preds, out.meta_targets, c)};
            break;
        }
        case MetaKind::BestBase: {
            BestBaseModel best;
            const Eigen::Map<const Vector> y(out.meta_targets.data(), static_cast<Eigen::Index>(out.meta_targets.size()));
            for (Eigen::Index i = 0; i < preds.cols(); ++i) {
                best.partition_mse.push_back((preds.col(i) - y).squaredNorm() / static_cast<double>(y.size()));
            }
            best.index = std::min_element(best.partition_mse.begin(), best.partition_mse.end()) -
                         best.partition_mse.begin();
            out.meta = best;
            break;
        }
        case MetaKind::UniformAverage:
            out.meta = UniformModel{preds.cols()};
            break;
    }
    return out;
}

ExperimentResult run_online_phase(const ExperimentConfig& config, const TimeSeriesFrame& frame,
                                  const OfflineResult& offline) {
    config.split.validate(frame.length());
    const std::size_t t_end = config.split.t_end;
    const std::size_t t2 = config.split.t2;

    const Harvest h = harvest(config, frame.slice(0, t2), t_end, t_end, t2);
    const FeatureTable meta_inputs = offline.encoder.apply(h.superset);
    const Matrix& preds = h.bundle.base_preds;
    const Eigen::Index m = preds.cols();

    ExperimentResult result;
    result.model_names = h.bundle.model_names;
    result.config_hash = config.hash();
    result.seed = config.seed;
    result.meta = config.meta;
    result.constraint = config.constraint;

    std::vector<double> y_test = rows_of(frame.values(), t_end, t2);
    std::vector<double> yhat;
    for (Eigen::Index r = 0; r < preds.rows(); ++r) {
        StepRecord rec;
        rec.t = t_end + static_cast<std::size_t>(r) + 1;
        rec.y = y_test[static_cast<std::size_t>(r)];
        rec.base_preds = preds.row(r).transpose();
        const auto side_row = row_vec(meta_inputs.values, r);
        std::visit(
            [&](const auto& model) {
                using T = std::decay_t<decltype(model)>;
                if constexpr (std::is_same_v<T, gbdt::BoostedMetaModel>) {
                    rec.weights = gbdt::predict_weights(model, side_row).values();
                } else if constexpr (std::is_same_v<T, mlp::MLPModel>) {
                    rec.weights = mlp::predict_weights(model, side_row).values();
                } else if constexpr (std::is_same_v<T, LinearStackModel>) {
                    rec.weights = model.coefficients;
                } else if constexpr (std::is_same_v<T, ConventionalMLPModel>) {
                    rec.ensemble = mlp::predict_conventional(model.net, row_vec(preds, r));
                } else if constexpr (std::is_same_v<T, BestBaseModel>) {
                    rec.weights = Vector::Unit(m, model.index);
                } else {
                    rec.weights = Vector::Constant(m, 1.0 / static_cast<double>(m));
                }
            },
            offline.meta);
        if (rec.weights) rec.ensemble = rec.weights->dot(rec.base_preds);
        yhat.push_back(rec.ensemble);
        result.records.push_back(std::move(rec));
    }

    result.curve = metrics::cumulative_normalized_curve(y_test, yhat, t_end + 1);
    result.final_cumulative_error = result.curve.points.back().value;
    for (Eigen::Index i = 0; i < m; ++i) {
        const Vector col = preds.col(i);
        const std::vector<double> p(col.begin(), col.end());
        result.base_final_errors.push_back(metrics::total_squared_loss(y_test, p) / static_cast<double>(p.size()));
    }
    return result;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    config.validate();
    const TimeSeriesFrame frame = load_frame(config);
    const OfflineResult offline = run_offline_phase(config, frame);
    return run_online_phase(config, frame, offline);
}

std::string serialize_meta(const MetaModel& model) {
    std::ostringstream out;
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, gbdt::BoostedMetaModel>) {
                gbdt::save(out, m);
            } else if constexpr (std::is_same_v<T, mlp::MLPModel>) {
                mlp::save(out, m);
            } else if constexpr (std::is_same_v<T, ConventionalMLPModel>) {
                mlp::save(out, m.net);
            } else if constexpr (std::is_same_v<T, LinearStackModel>) {
                out << "linear";
                for (double c : m.coefficients) out << ' ' << io::format_real(c);
                out << '\n';
            } else if constexpr (std::is_same_v<T, BestBaseModel>) {
                out << "best_base " << m.index << '\n';
            } else {
                out << "uniform " << m.num_models << '\n';
            }
        },
        model);
    return out.str();
}

}  // namespace ctxens::pipeline
