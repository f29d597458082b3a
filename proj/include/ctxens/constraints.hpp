#pragma once

#include "ctxens/core.hpp"

namespace ctxens {

/// Below this |sum(p)| the affine normalization is refused.
inline constexpr double kAffineDegeneracy = 1e-8;

/// Maps raw outputs p to weights: identity, p / sum(p), or softmax.
WeightVector transform(const Vector& p, ConstraintKind kind);

/// J(m, i) = d w_m / d p_i at p.
Matrix transform_jacobian(const Vector& p, ConstraintKind kind);

/// Numerically stable softmax (max-subtracted).
Vector softmax(const Vector& p);

}  // namespace ctxens
