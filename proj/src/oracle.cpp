#include "ctxens/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ctxens {

ConditionalStats::ConditionalStats(Matrix c_mat, Vector a_vec, double sigma2)
    : c_(std::move(c_mat)), a_(std::move(a_vec)), sigma2_(sigma2) {
    if (c_.rows() != c_.cols() || c_.rows() != a_.size() || a_.size() == 0) {
        fail(ErrorCode::DimensionMismatch, "C must be square and match a");
    }
    if (!c_.allFinite() || !a_.allFinite() || !std::isfinite(sigma2_)) {
        fail(ErrorCode::NonFiniteValue, "statistics contain non-finite values");
    }
    if (sigma2_ < 0) fail(ErrorCode::SingularStatistics, "sigma2 must be nonnegative");
    if ((c_ - c_.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
        fail(ErrorCode::SingularStatistics, "C is not symmetric");
    }
    llt_.compute(c_);
    if (llt_.info() != Eigen::Success) fail(ErrorCode::SingularStatistics, "C is not positive definite");
}

Vector ConditionalStats::solve(const Vector& rhs) const { return llt_.solve(rhs); }

WeightVector optimal_unconstrained(const ConditionalStats& stats) {
    return WeightVector(stats.solve(stats.a_vec()), ConstraintKind::Unconstrained);
}

double loss_unconstrained(const ConditionalStats& stats) {
    return stats.sigma2() - stats.a_vec().dot(stats.solve(stats.a_vec()));
}

namespace {

struct AffineParts {
    Vector w_unc;
    Vector c_inv_one;
    double excess;  // 1^T C^{-1} a - 1
    double denom;   // 1^T C^{-1} 1
};

AffineParts affine_parts(const ConditionalStats& stats) {
    AffineParts parts;
    parts.w_unc = stats.solve(stats.a_vec());
    parts.c_inv_one = stats.solve(Vector::Ones(stats.dim()));
    parts.excess = parts.w_unc.sum() - 1.0;
    parts.denom = parts.c_inv_one.sum();
    return parts;
}

Vector affine_weights(const ConditionalStats& stats) {
    const auto parts = affine_parts(stats);
    return parts.w_unc - (parts.excess / parts.denom) * parts.c_inv_one;
}

double largest_eigenvalue(const Matrix& c) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(c, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().maxCoeff();
}

}  // namespace

WeightVector optimal_affine(const ConditionalStats& stats) {
    return WeightVector(affine_weights(stats), ConstraintKind::Affine);
}

double loss_affine(const ConditionalStats& stats) {
    const auto parts = affine_parts(stats);
    return loss_unconstrained(stats) + parts.excess * parts.excess / parts.denom;
}

double loss_at_weights(const ConditionalStats& stats, const Vector& w) {
    if (w.size() != stats.dim()) fail(ErrorCode::DimensionMismatch, "weight vector has wrong length");
    const Vector d = w - stats.solve(stats.a_vec());
    return loss_unconstrained(stats) + d.dot(stats.c_mat() * d);
}

Vector project_to_simplex(const Vector& v) {
    // Sort-and-threshold projection.
    std::vector<double> u(v.data(), v.data() + v.size());
    std::sort(u.begin(), u.end(), std::greater<>());
    double cumulative = 0.0;
    double theta = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        cumulative += u[j];
        const double candidate = (cumulative - 1.0) / static_cast<double>(j + 1);
        if (u[j] - candidate > 0) theta = candidate;
    }
    Vector out = (v.array() - theta).max(0.0);
    // Renormalize to absorb the rounding of the threshold.
    return out / out.sum();
}

Vector minimize_on_simplex(const ConditionalStats& stats, const ProjectedGradientOptions& options) {
    const Matrix& c = stats.c_mat();
    const Vector& a = stats.a_vec();
    const double step = 1.0 / largest_eigenvalue(c);

    Vector w = project_to_simplex(affine_weights(stats));
    double loss = loss_at_weights(stats, w);
    for (int it = 0; it < options.max_iterations; ++it) {
        // d/dw (sigma2 - 2 w^T a + w^T C w) = 2 (C w - a); the factor 2 is
        // folded into the 1/lambda_max step on the half-gradient.
        const Vector grad = c * w - a;
        Vector next = project_to_simplex(w - step * grad);
        const double next_loss = loss_at_weights(stats, next);
        const double change = std::abs(loss - next_loss);
        w = std::move(next);
        loss = next_loss;
        if (change < options.loss_tolerance) return w;
    }
    fail(ErrorCode::NoConvergence, "projected gradient exceeded " + std::to_string(options.max_iterations) +
                                       " iterations");
}

WeightVector optimal_convex(const ConditionalStats& stats) {
    if (stats.dim() != 2) {
        return WeightVector(minimize_on_simplex(stats), ConstraintKind::Convex);
    }
    const Vector w_aff = affine_weights(stats);
    if (w_aff[0] >= 0 && w_aff[1] >= 0) return WeightVector(w_aff, ConstraintKind::Convex);
    // Opposite signs: the nearest simplex point in the C-norm along the
    // affine line is the corner of the positive weight.
    Vector corner = Vector::Zero(2);
    corner[w_aff[0] < 0 ? 1 : 0] = 1.0;
    return WeightVector(corner, ConstraintKind::Convex);
}

double loss_convex(const ConditionalStats& stats) {
    if (stats.dim() != 2) return loss_at_weights(stats, optimal_convex(stats).values());
    const Vector w_aff = affine_weights(stats);
    const double l_aff = loss_affine(stats);
    if (w_aff[0] >= 0 && w_aff[1] >= 0) return l_aff;
    const double negative = std::min(w_aff[0], w_aff[1]);
    const Matrix& c = stats.c_mat();
    const double direction_norm = c(0, 0) - c(0, 1) - c(1, 0) + c(1, 1);
    return l_aff + direction_norm * negative * negative;
}

LossTriple check_loss_ordering(const ConditionalStats& stats) {
    LossTriple out{loss_unconstrained(stats), loss_affine(stats), loss_convex(stats)};
    constexpr double slack = 1e-9;
    if (out.unconstrained > out.affine + slack || out.affine > out.convex + slack) {
        fail(ErrorCode::OrderingViolated, "loss ordering violated: " + std::to_string(out.unconstrained) +
                                              ", " + std::to_string(out.affine) + ", " +
                                              std::to_string(out.convex));
    }
    return out;
}

ConditionalStats estimate_stats(std::span<const double> targets, const Matrix& base_preds) {
    const auto n = static_cast<Eigen::Index>(targets.size());
    if (n == 0) fail(ErrorCode::EmptyData, "no samples for statistics");
    if (base_preds.rows() != n) fail(ErrorCode::DimensionMismatch, "targets and predictions differ in rows");
    const Eigen::Map<const Vector> y(targets.data(), n);
    Matrix c = base_preds.transpose() * base_preds / static_cast<double>(n);
    c = 0.5 * (c + c.transpose());
    Vector a = base_preds.transpose() * y / static_cast<double>(n);
    return ConditionalStats(std::move(c), std::move(a), y.squaredNorm() / static_cast<double>(n));
}

}  // namespace ctxens
