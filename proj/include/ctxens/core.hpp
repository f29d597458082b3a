#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ctxens/error.hpp"

namespace ctxens {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Feasible set of the combination weights.
enum class ConstraintKind { Unconstrained, Affine, Convex };

std::string_view to_string(ConstraintKind kind) noexcept;
/// Accepts "unconstrained", "affine" or "convex" (case-insensitive).
ConstraintKind parse_constraint(std::string_view text);

/// Named real-valued feature columns, one row per time step.
struct FeatureTable {
    std::vector<std::string> names;
    Matrix values;

    FeatureTable() = default;
    FeatureTable(std::vector<std::string> column_names, Matrix column_values);

    Eigen::Index rows() const noexcept { return values.rows(); }
    Eigen::Index cols() const noexcept { return values.cols(); }

    std::optional<Eigen::Index> find(std::string_view name) const noexcept;
    Vector column(std::string_view name) const;

    /// Rows [begin, end).
    FeatureTable slice_rows(Eigen::Index begin, Eigen::Index end) const;
    /// Subset of columns by name, in the requested order.
    FeatureTable select(std::span<const std::string> column_names) const;

    /// Unique names, matching column count, finite entries.
    void validate() const;

    friend bool operator==(const FeatureTable& a, const FeatureTable& b) {
        return a.names == b.names && a.values.rows() == b.values.rows() &&
               a.values.cols() == b.values.cols() && a.values == b.values;
    }
};

/// Target sequence with aligned side information.
class TimeSeriesFrame {
public:
    TimeSeriesFrame() = default;
    TimeSeriesFrame(std::vector<double> values, FeatureTable side_info);

    const std::vector<double>& values() const noexcept { return values_; }
    const FeatureTable& side_info() const noexcept { return side_info_; }
    std::size_t length() const noexcept { return values_.size(); }

    /// Rows [begin, end).
    TimeSeriesFrame slice(std::size_t begin, std::size_t end) const;

    /// Same side information, new targets of equal length.
    TimeSeriesFrame with_values(std::vector<double> values) const;

    friend bool operator==(const TimeSeriesFrame& a, const TimeSeriesFrame& b) {
        return a.values_ == b.values_ && a.side_info_ == b.side_info_;
    }

private:
    std::vector<double> values_;
    FeatureTable side_info_;
};

/// Split points as 1-based inclusive segment ends: rows 1..t1 train the
/// bases, t1+1..t_end train the meta learner, t_end+1..t2 are the test rows.
struct SplitSpec {
    std::size_t t1 = 0;
    std::size_t t_end = 0;
    std::size_t t2 = 0;

    void validate(std::size_t length) const;
};

struct Segments {
    TimeSeriesFrame base_train;
    TimeSeriesFrame meta_train;
    TimeSeriesFrame test;
};

Segments split(const TimeSeriesFrame& frame, const SplitSpec& spec);

/// Duplicate-free union of the per-base side information (first occurrence
/// wins, equal names must carry identical values), with `extras` appended.
FeatureTable build_superset_side_info(std::span<const FeatureTable> frames,
                                      const FeatureTable* extras = nullptr);

/// Base predictions, one column per base model.
struct PredictionBundle {
    Matrix base_preds;
    std::vector<std::string> model_names;

    Eigen::Index num_models() const noexcept { return base_preds.cols(); }
    void validate() const;
};

/// Combination weights tagged with the constraint they satisfy.
class WeightVector {
public:
    static constexpr double kSumTolerance = 1e-9;
    static constexpr double kNegativeTolerance = 1e-12;

    WeightVector(Vector w, ConstraintKind kind);

    const Vector& values() const noexcept { return w_; }
    ConstraintKind kind() const noexcept { return kind_; }
    Eigen::Index size() const noexcept { return w_.size(); }
    double operator[](Eigen::Index i) const { return w_[i]; }

    /// True when `w` satisfies the invariants of `kind`.
    static bool satisfies(const Vector& w, ConstraintKind kind) noexcept;

private:
    Vector w_;
    ConstraintKind kind_;
};

}  // namespace ctxens
