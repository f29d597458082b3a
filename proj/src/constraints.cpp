#include "ctxens/constraints.hpp"

#include <cmath>

namespace ctxens {

namespace {

void require_finite(const Vector& p) {
    if (p.size() == 0) fail(ErrorCode::DimensionMismatch, "empty output vector");
    if (!p.allFinite()) fail(ErrorCode::NonFiniteValue, "meta outputs contain non-finite values");
}

double affine_sum(const Vector& p) {
    const double s = p.sum();
    if (std::abs(s) <= kAffineDegeneracy) {
        fail(ErrorCode::NormalizationDegenerate, "sum of outputs is " + std::to_string(s));
    }
    return s;
}

}  // namespace

Vector softmax(const Vector& p) {
    const double shift = p.maxCoeff();
    Vector e = (p.array() - shift).exp();
    return e / e.sum();
}

WeightVector transform(const Vector& p, ConstraintKind kind) {
    require_finite(p);
    switch (kind) {
        case ConstraintKind::Unconstrained: return WeightVector(p, kind);
        case ConstraintKind::Affine: return WeightVector(p / affine_sum(p), kind);
        case ConstraintKind::Convex: return WeightVector(softmax(p), kind);
    }
    fail(ErrorCode::ConfigInvalid, "unknown constraint kind");
}

Matrix transform_jacobian(const Vector& p, ConstraintKind kind) {
    require_finite(p);
    const Eigen::Index m = p.size();
    switch (kind) {
        case ConstraintKind::Unconstrained: return Matrix::Identity(m, m);
        case ConstraintKind::Affine: {
            const double s = affine_sum(p);
            const Vector w = p / s;
            // (delta_mi - w_m) / s
            Matrix j = Matrix::Identity(m, m);
            j.colwise() -= w;
            return j / s;
        }
        case ConstraintKind::Convex: {
            const Vector w = softmax(p);
            Matrix j = -w * w.transpose();
            j.diagonal() += w;
            return j;
        }
    }
    fail(ErrorCode::ConfigInvalid, "unknown constraint kind");
}

}  // namespace ctxens
