#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ctxens/core.hpp"

namespace ctxens::gbdt {

struct GBDTConfig {
    int num_rounds = 500;
    double learning_rate = 0.05;
    int max_leaves = 31;
    int min_samples_leaf = 5;
    double l2_lambda = 1.0;
    int histogram_bins = 255;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Hessians below this are raised to it before split finding and leaf fitting.
inline constexpr double kHessianFloor = 1e-6;

struct TreeNode {
    int feature = -1;  ///< -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;

    bool is_leaf() const noexcept { return feature < 0; }
    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// Binary regression tree; rows with x[feature] <= threshold go left.
struct RegressionTree {
    std::vector<TreeNode> nodes;

    double predict(std::span<const double> row) const;
    int num_leaves() const;
    friend bool operator==(const RegressionTree&, const RegressionTree&) = default;
};

/// Equal-frequency bin edges per feature, computed once from training data.
class HistogramBinner {
public:
    HistogramBinner() = default;
    HistogramBinner(const Matrix& features, int max_bins);

    int num_bins(Eigen::Index feature) const { return static_cast<int>(edges_[feature].size()) + 1; }
    /// Upper edge of `bin`: values <= edge fall into bins 0..bin.
    double upper_edge(Eigen::Index feature, int bin) const { return edges_[feature][bin]; }
    std::uint8_t bin(Eigen::Index feature, double x) const;

    /// Column-major bin codes.
    std::vector<std::vector<std::uint8_t>> transform(const Matrix& features) const;

private:
    std::vector<std::vector<double>> edges_;
};

/// Single-output squared-loss booster, used as a base forecaster.
struct BoostedRegressor {
    double init_score = 0.0;
    double learning_rate = 0.1;
    std::vector<RegressionTree> trees;
    std::vector<double> train_loss;  ///< mean squared error after each round

    double predict(std::span<const double> row) const;
    Vector predict(const Matrix& features) const;
};

/// One forest per base model; p_i = init_i + lr * sum of tree outputs.
struct BoostedMetaModel {
    std::vector<std::vector<RegressionTree>> forests;
    Vector init_scores;
    ConstraintKind kind = ConstraintKind::Convex;
    std::vector<std::string> feature_names;
    double learning_rate = 0.05;
    std::vector<double> train_loss;  ///< mean ensemble loss after each round

    Eigen::Index num_outputs() const noexcept { return init_scores.size(); }
    std::size_t num_rounds() const noexcept { return forests.empty() ? 0 : forests.front().size(); }
    Vector raw_outputs(std::span<const double> row) const;
};

struct GradHess {
    Vector grad;
    Vector hess;
};

/// Per-output gradient and diagonal hessian of (y - w^T yhat)^2 with respect
/// to the raw outputs p, where w = transform(p, kind).
GradHess meta_grad_hess(double y, const Vector& base_preds, const Vector& p, ConstraintKind kind);

/// Initial raw outputs: 1/M for unconstrained and affine, 0 for convex.
Vector initial_scores(Eigen::Index num_outputs, ConstraintKind kind);

BoostedRegressor fit_base(const Matrix& features, std::span<const double> targets, const GBDTConfig& config);

BoostedMetaModel fit_meta(const FeatureTable& side_info, const Matrix& base_preds,
                          std::span<const double> targets, ConstraintKind kind, const GBDTConfig& config);

WeightVector predict_weights(const BoostedMetaModel& model, std::span<const double> side_info_row);

void save(std::ostream& out, const BoostedMetaModel& model);
BoostedMetaModel load_meta(std::istream& in);
void save(std::ostream& out, const BoostedRegressor& model);
BoostedRegressor load_regressor(std::istream& in);

}  // namespace ctxens::gbdt
