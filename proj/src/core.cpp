#include "ctxens/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <unordered_set>

namespace ctxens {

std::string_view error_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::ConflictingFeature: return "ConflictingFeature";
        case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorCode::NormalizationDegenerate: return "NormalizationDegenerate";
        case ErrorCode::SingularStatistics: return "SingularStatistics";
        case ErrorCode::NoConvergence: return "NoConvergence";
        case ErrorCode::OrderingViolated: return "OrderingViolated";
        case ErrorCode::EmptyData: return "EmptyData";
        case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
        case ErrorCode::NonFiniteGradient: return "NonFiniteGradient";
        case ErrorCode::NonFiniteValue: return "NonFiniteValue";
        case ErrorCode::ConstraintViolated: return "ConstraintViolated";
        case ErrorCode::SeriesTooShort: return "SeriesTooShort";
        case ErrorCode::SingularDesign: return "SingularDesign";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::ConfigInvalid: return "ConfigInvalid";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

std::string_view to_string(ConstraintKind kind) noexcept {
    switch (kind) {
        case ConstraintKind::Unconstrained: return "unconstrained";
        case ConstraintKind::Affine: return "affine";
        case ConstraintKind::Convex: return "convex";
    }
    return "unknown";
}

ConstraintKind parse_constraint(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "unconstrained") return ConstraintKind::Unconstrained;
    if (lower == "affine") return ConstraintKind::Affine;
    if (lower == "convex") return ConstraintKind::Convex;
    fail(ErrorCode::ConfigInvalid, "unknown constraint '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// FeatureTable

FeatureTable::FeatureTable(std::vector<std::string> column_names, Matrix column_values)
    : names(std::move(column_names)), values(std::move(column_values)) {
    validate();
}

std::optional<Eigen::Index> FeatureTable::find(std::string_view name) const noexcept {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return static_cast<Eigen::Index>(i);
    }
    return std::nullopt;
}

Vector FeatureTable::column(std::string_view name) const {
    auto idx = find(name);
    if (!idx) fail(ErrorCode::DimensionMismatch, "no side-info column '" + std::string(name) + "'");
    return values.col(*idx);
}

FeatureTable FeatureTable::slice_rows(Eigen::Index begin, Eigen::Index end) const {
    if (begin < 0 || end < begin || end > rows()) {
        fail(ErrorCode::IndexOutOfRange, "row slice out of range");
    }
    FeatureTable out;
    out.names = names;
    out.values = values.middleRows(begin, end - begin);
    return out;
}

FeatureTable FeatureTable::select(std::span<const std::string> column_names) const {
    FeatureTable out;
    out.values.resize(rows(), static_cast<Eigen::Index>(column_names.size()));
    for (std::size_t j = 0; j < column_names.size(); ++j) {
        out.values.col(static_cast<Eigen::Index>(j)) = column(column_names[j]);
        out.names.push_back(column_names[j]);
    }
    out.validate();
    return out;
}

void FeatureTable::validate() const {
    if (static_cast<Eigen::Index>(names.size()) != values.cols()) {
        fail(ErrorCode::DimensionMismatch, "column names do not match column count");
    }
    std::unordered_set<std::string> seen;
    for (const auto& n : names) {
        if (!seen.insert(n).second) {
            fail(ErrorCode::ConflictingFeature, "duplicate column name '" + n + "'");
        }
    }
    if (!values.allFinite()) fail(ErrorCode::NonFiniteValue, "side information has non-finite entries");
}

// ---------------------------------------------------------------------------
// TimeSeriesFrame

TimeSeriesFrame::TimeSeriesFrame(std::vector<double> values, FeatureTable side_info)
    : values_(std::move(values)), side_info_(std::move(side_info)) {
    if (side_info_.cols() == 0 && side_info_.rows() == 0) {
        side_info_.values.resize(static_cast<Eigen::Index>(values_.size()), 0);
    }
    if (static_cast<Eigen::Index>(values_.size()) != side_info_.rows()) {
        fail(ErrorCode::DimensionMismatch, "target and side information row counts differ");
    }
    for (double v : values_) {
        if (!std::isfinite(v)) fail(ErrorCode::NonFiniteValue, "target has non-finite entries");
    }
    side_info_.validate();
}

TimeSeriesFrame TimeSeriesFrame::slice(std::size_t begin, std::size_t end) const {
    if (begin > end || end > values_.size()) fail(ErrorCode::IndexOutOfRange, "slice out of range");
    std::vector<double> v(values_.begin() + static_cast<std::ptrdiff_t>(begin),
                          values_.begin() + static_cast<std::ptrdiff_t>(end));
    return TimeSeriesFrame(std::move(v), side_info_.slice_rows(static_cast<Eigen::Index>(begin),
                                                               static_cast<Eigen::Index>(end)));
}

TimeSeriesFrame TimeSeriesFrame::with_values(std::vector<double> values) const {
    if (values.size() != values_.size()) fail(ErrorCode::LengthMismatch, "replacement targets differ in length");
    return TimeSeriesFrame(std::move(values), side_info_);
}

// ---------------------------------------------------------------------------
// Splitting

void SplitSpec::validate(std::size_t length) const {
    if (t1 < 1 || t1 >= t_end || t_end >= t2) {
        fail(ErrorCode::IndexOutOfRange, "split points must satisfy 1 <= t1 < t_end < t2 (got " +
                                             std::to_string(t1) + ", " + std::to_string(t_end) +
                                             ", " + std::to_string(t2) + ")");
    }
    if (t2 > length) {
        fail(ErrorCode::IndexOutOfRange,
             "t2=" + std::to_string(t2) + " exceeds series length " + std::to_string(length));
    }
}

Segments split(const TimeSeriesFrame& frame, const SplitSpec& spec) {
    spec.validate(frame.length());
    return Segments{frame.slice(0, spec.t1), frame.slice(spec.t1, spec.t_end),
                    frame.slice(spec.t_end, spec.t2)};
}

// ---------------------------------------------------------------------------
// Superset side information

namespace {

void merge_into(std::vector<std::string>& names, std::vector<Vector>& columns,
                const FeatureTable& table, Eigen::Index rows) {
    if (table.rows() != rows) {
        fail(ErrorCode::DimensionMismatch, "side-info tables have different row counts (" +
                                               std::to_string(table.rows()) + " vs " +
                                               std::to_string(rows) + ")");
    }
    table.validate();
    for (std::size_t j = 0; j < table.names.size(); ++j) {
        const auto col = table.values.col(static_cast<Eigen::Index>(j));
        auto it = std::find(names.begin(), names.end(), table.names[j]);
        if (it == names.end()) {
            names.push_back(table.names[j]);
            columns.emplace_back(col);
            continue;
        }
        const Vector& existing = columns[static_cast<std::size_t>(it - names.begin())];
        for (Eigen::Index r = 0; r < rows; ++r) {
            if (existing[r] != col[r]) {
                fail(ErrorCode::ConflictingFeature, "feature '" + table.names[j] +
                                                        "' has conflicting values at row " +
                                                        std::to_string(r));
            }
        }
    }
}

}  // namespace

FeatureTable build_superset_side_info(std::span<const FeatureTable> frames, const FeatureTable* extras) {
    if (frames.empty() && extras == nullptr) return {};
    const Eigen::Index rows = frames.empty() ? extras->rows() : frames.front().rows();

    std::vector<std::string> names;
    std::vector<Vector> columns;
    for (const auto& t : frames) merge_into(names, columns, t, rows);
    if (extras != nullptr) merge_into(names, columns, *extras, rows);

    FeatureTable out;
    out.names = std::move(names);
    out.values.resize(rows, static_cast<Eigen::Index>(columns.size()));
    for (std::size_t j = 0; j < columns.size(); ++j) out.values.col(static_cast<Eigen::Index>(j)) = columns[j];
    return out;
}

// ---------------------------------------------------------------------------
// PredictionBundle / WeightVector

void PredictionBundle::validate() const {
    if (base_preds.cols() < 2) fail(ErrorCode::ConfigInvalid, "at least two base models are required");
    if (static_cast<Eigen::Index>(model_names.size()) != base_preds.cols()) {
        fail(ErrorCode::DimensionMismatch, "model names do not match prediction columns");
    }
    if (!base_preds.allFinite()) fail(ErrorCode::NonFiniteValue, "base predictions have non-finite entries");
}

bool WeightVector::satisfies(const Vector& w, ConstraintKind kind) noexcept {
    if (!w.allFinite()) return false;
    // Rounding in the sum grows with the weight magnitudes, so the tolerance
    // is relative once the weights leave the unit box.
    const double tol = kSumTolerance * std::max(1.0, w.lpNorm<1>());
    switch (kind) {
        case ConstraintKind::Unconstrained: return true;
        case ConstraintKind::Affine: return std::abs(w.sum() - 1.0) <= tol;
        case ConstraintKind::Convex:
            return std::abs(w.sum() - 1.0) <= tol && w.minCoeff() >= -kNegativeTolerance;
    }
    return false;
}

WeightVector::WeightVector(Vector w, ConstraintKind kind) : w_(std::move(w)), kind_(kind) {
    if (!satisfies(w_, kind_)) {
        fail(ErrorCode::ConstraintViolated,
             "weights violate the " + std::string(to_string(kind_)) + " constraint");
    }
}

}  // namespace ctxens
