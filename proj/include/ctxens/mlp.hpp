#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "ctxens/core.hpp"

namespace ctxens::mlp {

struct MLPConfig {
    int hidden_units = 16;
    double learning_rate = 1e-3;
    int epochs = 300;
    std::uint64_t seed = 0;
    bool shuffle = true;
    bool use_bias = false;
    bool zero_init = false;
    /// Draw U2 from [0, 1/sqrt(L)] instead of the symmetric range, so
    /// sum(p) starts positive (useful for the affine head).
    bool nonnegative_head = false;

    void validate() const;
};

/// Two-layer perceptron: v = U1 x, z = relu(v), p = U2 z, w = transform(p).
///
/// Inputs are standardized with `input_mean` / `input_scale` before the
/// first layer; empty vectors mean identity. Biases are only used when
/// `use_bias` is set.
struct MLPModel {
    Matrix u1;  ///< L x K
    Matrix u2;  ///< M x L
    Vector b1;  ///< L (zero unless use_bias)
    Vector b2;  ///< M (zero unless use_bias)
    bool use_bias = false;
    /// When false the head is the identity and no WeightVector is formed
    /// (conventional regression MLP).
    bool weight_head = true;
    ConstraintKind kind = ConstraintKind::Convex;
    Vector input_mean;
    Vector input_scale;
    std::vector<double> train_loss;  ///< mean loss per epoch
    std::size_t skipped_samples = 0;

    MLPModel() = default;
    MLPModel(Matrix first, Matrix second, ConstraintKind constraint);

    Eigen::Index inputs() const noexcept { return u1.cols(); }
    Eigen::Index hidden() const noexcept { return u1.rows(); }
    Eigen::Index outputs() const noexcept { return u2.rows(); }

    Vector standardize(std::span<const double> x) const;
};

struct ForwardPass {
    Vector x;  ///< standardized input
    Vector v;
    Vector z;
    Vector p;
    Vector w;
};

struct Gradients {
    Matrix d_u1;
    Matrix d_u2;
    Vector d_b1;
    Vector d_b2;
};

ForwardPass forward(const MLPModel& model, std::span<const double> x);

/// Gradient of (y - w^T yhat)^2 with respect to the layer weights.
Gradients backward(const MLPModel& model, std::span<const double> x, double y, const Vector& base_preds);

/// In-place U <- U - alpha * dU; throws NonFiniteGradient before touching
/// the model if any gradient entry is non-finite.
void sgd_step(MLPModel& model, const Gradients& grads, double alpha);

/// Weight-producing meta learner trained by per-sample SGD.
MLPModel fit_meta(const FeatureTable& side_info, const Matrix& base_preds, std::span<const double> targets,
                  ConstraintKind kind, const MLPConfig& config);

WeightVector predict_weights(const MLPModel& model, std::span<const double> side_info_row);

/// Regression MLP from base predictions straight to the target.
MLPModel fit_conventional(const Matrix& base_preds, std::span<const double> targets, const MLPConfig& config);
double predict_conventional(const MLPModel& model, std::span<const double> base_pred_row);

void save(std::ostream& out, const MLPModel& model);
MLPModel load(std::istream& in);

}  // namespace ctxens::mlp
