#include "ctxens/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "ctxens/constraints.hpp"

namespace ctxens::mlp {

void MLPConfig::validate() const {
    if (hidden_units < 1) fail(ErrorCode::ConfigInvalid, "hidden_units must be >= 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        fail(ErrorCode::ConfigInvalid, "learning_rate must be positive");
    }
    if (epochs < 0) fail(ErrorCode::ConfigInvalid, "epochs must be nonnegative");
}

MLPModel::MLPModel(Matrix first, Matrix second, ConstraintKind constraint)
    : u1(std::move(first)), u2(std::move(second)), kind(constraint) {
    if (u2.cols() != u1.rows()) fail(ErrorCode::DimensionMismatch, "U2 columns must equal U1 rows");
    b1 = Vector::Zero(u1.rows());
    b2 = Vector::Zero(u2.rows());
}

Vector MLPModel::standardize(std::span<const double> x) const {
    if (static_cast<Eigen::Index>(x.size()) != inputs()) {
        fail(ErrorCode::DimensionMismatch,
             "expected " + std::to_string(inputs()) + " inputs, got " + std::to_string(x.size()));
    }
    Vector out = Eigen::Map<const Vector>(x.data(), inputs());
    if (!out.allFinite()) fail(ErrorCode::NonFiniteValue, "non-finite MLP input");
    if (input_mean.size() == inputs()) out = (out - input_mean).cwiseQuotient(input_scale);
    return out;
}

namespace {

// Forward pass up to the raw outputs p; the head is applied by the caller.
ForwardPass forward_raw(const MLPModel& model, std::span<const double> x) {
    ForwardPass pass;
    pass.x = model.standardize(x);
    pass.v = model.u1 * pass.x;
    if (model.use_bias) pass.v += model.b1;
    pass.z = pass.v.cwiseMax(0.0);
    pass.p = model.u2 * pass.z;
    if (model.use_bias) pass.p += model.b2;
    return pass;
}

}  // namespace

ForwardPass forward(const MLPModel& model, std::span<const double> x) {
    ForwardPass pass = forward_raw(model, x);
    pass.w = model.weight_head ? transform(pass.p, model.kind).values() : pass.p;
    return pass;
}

namespace {

// Chain rule from dL/dp back through both layers.
Gradients backprop(const MLPModel& model, const ForwardPass& pass, const Vector& d_p) {
    Gradients g;
    g.d_u2 = d_p * pass.z.transpose();
    const Vector d_z = model.u2.transpose() * d_p;
    // relu'(v) = 1 for v > 0, else 0.
    const Vector d_v = (pass.v.array() > 0.0).select(d_z, 0.0);
    g.d_u1 = d_v * pass.x.transpose();
    if (model.use_bias) {
        g.d_b1 = d_v;
        g.d_b2 = d_p;
    } else {
        g.d_b1 = Vector::Zero(model.hidden());
        g.d_b2 = Vector::Zero(model.outputs());
    }
    return g;
}

Vector weight_head_grad(const MLPModel& model, const ForwardPass& pass, double y, const Vector& base_preds) {
    if (base_preds.size() != model.outputs()) {
        fail(ErrorCode::DimensionMismatch, "base prediction count must equal MLP outputs");
    }
    const double ens = pass.w.dot(base_preds);
    const Vector d_w = 2.0 * (ens - y) * base_preds;
    return transform_jacobian(pass.p, model.kind).transpose() * d_w;
}

std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

void init_layer(Matrix& layer, std::mt19937_64& rng, bool zero, bool nonnegative = false) {
    if (zero) {
        layer.setZero();
        return;
    }
    const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<Eigen::Index>(layer.cols(), 1)));
    std::uniform_real_distribution<double> dist(nonnegative ? 0.0 : -bound, bound);
    for (Eigen::Index c = 0; c < layer.cols(); ++c) {
        for (Eigen::Index r = 0; r < layer.rows(); ++r) layer(r, c) = dist(rng);
    }
}

MLPModel init_model(Eigen::Index inputs, Eigen::Index outputs, const MLPConfig& config, ConstraintKind kind) {
    auto rng = make_rng(config.seed);
    Matrix u1(config.hidden_units, inputs);
    Matrix u2(outputs, config.hidden_units);
    init_layer(u1, rng, config.zero_init);
    init_layer(u2, rng, config.zero_init, config.nonnegative_head);
    MLPModel model(std::move(u1), std::move(u2), kind);
    model.use_bias = config.use_bias;
    return model;
}

void fit_standardization(MLPModel& model, const Matrix& x) {
    model.input_mean = x.colwise().mean().transpose();
    model.input_scale.resize(x.cols());
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        const double var = (x.col(c).array() - model.input_mean[c]).square().mean();
        model.input_scale[c] = var > 0.0 ? std::sqrt(var) : 1.0;
    }
}

std::vector<double> row_of(const Matrix& m, Eigen::Index r) {
    std::vector<double> out(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) out[static_cast<std::size_t>(c)] = m(r, c);
    return out;
}

std::vector<std::size_t> epoch_order(std::size_t n, bool shuffle, std::mt19937_64& rng) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (shuffle) std::shuffle(order.begin(), order.end(), rng);
    return order;
}

void check_rows(Eigen::Index a, Eigen::Index b, std::size_t n) {
    if (n == 0) fail(ErrorCode::EmptyData, "no training rows");
    if (static_cast<std::size_t>(a) != n || static_cast<std::size_t>(b) != n) {
        fail(ErrorCode::DimensionMismatch, "inputs and targets differ in rows");
    }
}

}  // namespace

Gradients backward(const MLPModel& model, std::span<const double> x, double y, const Vector& base_preds) {
    const ForwardPass pass = forward(model, x);
    if (!model.weight_head) {
        return backprop(model, pass, Vector::Constant(1, 2.0 * (pass.p[0] - y)));
    }
    return backprop(model, pass, weight_head_grad(model, pass, y, base_preds));
}

void sgd_step(MLPModel& model, const Gradients& grads, double alpha) {
    if (!grads.d_u1.allFinite() || !grads.d_u2.allFinite() || !grads.d_b1.allFinite() || !grads.d_b2.allFinite()) {
        fail(ErrorCode::NonFiniteGradient, "non-finite gradient");
    }
    model.u1 -= alpha * grads.d_u1;
    model.u2 -= alpha * grads.d_u2;
    if (model.use_bias) {
        model.b1 -= alpha * grads.d_b1;
        model.b2 -= alpha * grads.d_b2;
    }
}

MLPModel fit_meta(const FeatureTable& side_info, const Matrix& base_preds, std::span<const double> targets,
                  ConstraintKind kind, const MLPConfig& config) {
    config.validate();
    const std::size_t n = targets.size();
    check_rows(side_info.rows(), base_preds.rows(), n);
    if (base_preds.cols() < 2) fail(ErrorCode::ConfigInvalid, "meta learner needs at least two base models");

    MLPModel model = init_model(side_info.cols(), base_preds.cols(), config, kind);
    fit_standardization(model, side_info.values);

    auto rng = make_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    const auto skip_limit = static_cast<std::size_t>(0.01 * static_cast<double>(n));
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::size_t skipped = 0;
        for (std::size_t r : epoch_order(n, config.shuffle, rng)) {
            const auto row = static_cast<Eigen::Index>(r);
            const auto x = row_of(side_info.values, row);
            if (kind == ConstraintKind::Affine && std::abs(forward_raw(model, x).p.sum()) <= kAffineDegeneracy) {
                ++skipped;
                continue;
            }
            Gradients g;
            try {
                g = backward(model, x, targets[r], base_preds.row(row).transpose());
                sgd_step(model, g, config.learning_rate);
            } catch (const Error& e) {
                fail(e.code(), e.detail() + " (epoch " + std::to_string(epoch) + ", sample " +
                                   std::to_string(r) + ")");
            }
        }
        model.skipped_samples += skipped;
        if (skipped > skip_limit) {
            fail(ErrorCode::NormalizationDegenerate, std::to_string(skipped) + " degenerate samples in epoch " +
                                                         std::to_string(epoch));
        }

        double loss = 0.0;
        std::size_t counted = 0;
        for (std::size_t r = 0; r < n; ++r) {
            const auto row = static_cast<Eigen::Index>(r);
            const Vector p = forward_raw(model, row_of(side_info.values, row)).p;
            if (kind == ConstraintKind::Affine && std::abs(p.sum()) <= kAffineDegeneracy) continue;
            const double e = targets[r] - transform(p, kind).values().dot(base_preds.row(row).transpose());
            loss += e * e;
            ++counted;
        }
        loss /= static_cast<double>(std::max<std::size_t>(counted, 1));
        if (!std::isfinite(loss)) fail(ErrorCode::NonFiniteGradient, "training diverged at epoch " + std::to_string(epoch));
        model.train_loss.push_back(loss);
    }
    return model;
}

WeightVector predict_weights(const MLPModel& model, std::span<const double> side_info_row) {
    if (!model.weight_head) fail(ErrorCode::ConfigInvalid, "model has no weight head");
    return transform(forward(model, side_info_row).p, model.kind);
}

MLPModel fit_conventional(const Matrix& base_preds, std::span<const double> targets, const MLPConfig& config) {
    config.validate();
    const std::size_t n = targets.size();
    check_rows(base_preds.rows(), base_preds.rows(), n);

    MLPModel model = init_model(base_preds.cols(), 1, config, ConstraintKind::Unconstrained);
    model.weight_head = false;
    fit_standardization(model, base_preds);

    auto rng = make_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    const Vector unused;
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        for (std::size_t r : epoch_order(n, config.shuffle, rng)) {
            const auto x = row_of(base_preds, static_cast<Eigen::Index>(r));
            try {
                sgd_step(model, backward(model, x, targets[r], unused), config.learning_rate);
            } catch (const Error& e) {
                fail(e.code(), e.detail() + " (epoch " + std::to_string(epoch) + ", sample " +
                                   std::to_string(r) + ")");
            }
        }
        double loss = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            const double e = targets[r] - predict_conventional(model, row_of(base_preds, static_cast<Eigen::Index>(r)));
            loss += e * e;
        }
        model.train_loss.push_back(loss / static_cast<double>(n));
    }
    return model;
}

double predict_conventional(const MLPModel& model, std::span<const double> base_pred_row) {
    return forward(model, base_pred_row).p[0];
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr const char* kMagic = "ctxens-mlp";
constexpr int kFormatVersion = 1;

void write_vector(std::ostream& out, const char* tag, const Vector& v) {
    out << tag << ' ' << v.size();
    for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << v[i];
    out << '\n';
}

void write_matrix(std::ostream& out, const char* tag, const Matrix& m) {
    out << tag << ' ' << m.rows() << ' ' << m.cols();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) out << ' ' << m(r, c);
    }
    out << '\n';
}

double read_real(std::istream& in) {
    std::string tok;
    if (!(in >> tok)) fail(ErrorCode::ParseError, "unexpected end of model");
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size()) fail(ErrorCode::ParseError, "bad real '" + tok + "'");
    return v;
}

template <typename T>
T read_value(std::istream& in) {
    T v{};
    if (!(in >> v)) fail(ErrorCode::ParseError, "unexpected token in model");
    return v;
}

void expect(std::istream& in, const std::string& word) {
    std::string tok;
    if (!(in >> tok) || tok != word) fail(ErrorCode::ParseError, "expected '" + word + "', got '" + tok + "'");
}

Vector read_vector(std::istream& in, const char* tag) {
    expect(in, tag);
    Vector v(read_value<Eigen::Index>(in));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = read_real(in);
    return v;
}

Matrix read_matrix(std::istream& in, const char* tag) {
    expect(in, tag);
    const auto rows = read_value<Eigen::Index>(in);
    const auto cols = read_value<Eigen::Index>(in);
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = read_real(in);
    }
    return m;
}

}  // namespace

void save(std::ostream& out, const MLPModel& model) {
    std::ostringstream body;
    body << std::hexfloat;
    body << kMagic << ' ' << kFormatVersion << '\n';
    body << "kind " << to_string(model.kind) << '\n';
    body << "weight_head " << (model.weight_head ? 1 : 0) << '\n';
    body << "use_bias " << (model.use_bias ? 1 : 0) << '\n';
    write_matrix(body, "u1", model.u1);
    write_matrix(body, "u2", model.u2);
    write_vector(body, "b1", model.b1);
    write_vector(body, "b2", model.b2);
    write_vector(body, "input_mean", model.input_mean);
    write_vector(body, "input_scale", model.input_scale);
    write_vector(body, "loss", Eigen::Map<const Vector>(model.train_loss.data(),
                                                        static_cast<Eigen::Index>(model.train_loss.size())));
    body << "skipped " << model.skipped_samples << '\n';
    out << body.str();
}

MLPModel load(std::istream& in) {
    expect(in, kMagic);
    if (read_value<int>(in) != kFormatVersion) fail(ErrorCode::ParseError, "unsupported MLP model version");
    MLPModel model;
    expect(in, "kind");
    model.kind = parse_constraint(read_value<std::string>(in));
    expect(in, "weight_head");
    model.weight_head = read_value<int>(in) != 0;
    expect(in, "use_bias");
    model.use_bias = read_value<int>(in) != 0;
    model.u1 = read_matrix(in, "u1");
    model.u2 = read_matrix(in, "u2");
    model.b1 = read_vector(in, "b1");
    model.b2 = read_vector(in, "b2");
    model.input_mean = read_vector(in, "input_mean");
    model.input_scale = read_vector(in, "input_scale");
    const Vector loss = read_vector(in, "loss");
    model.train_loss.assign(loss.data(), loss.data() + loss.size());
    expect(in, "skipped");
    model.skipped_samples = read_value<std::size_t>(in);
    if (model.u2.cols() != model.u1.rows()) fail(ErrorCode::ParseError, "inconsistent layer shapes");
    return model;
}

}  // namespace ctxens::mlp
