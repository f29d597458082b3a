#pragma once

#include <span>
#include <tuple>

#include "ctxens/core.hpp"

namespace ctxens {

/// Second-order statistics of the base predictions given the side
/// information: C = E[yhat yhat^T], a = E[y yhat], and the target's
/// second moment sigma2.
class ConditionalStats {
public:
    ConditionalStats(Matrix c_mat, Vector a_vec, double sigma2);

    const Matrix& c_mat() const noexcept { return c_; }
    const Vector& a_vec() const noexcept { return a_; }
    double sigma2() const noexcept { return sigma2_; }
    Eigen::Index dim() const noexcept { return a_.size(); }

    /// C^{-1} rhs via the cached Cholesky factor.
    Vector solve(const Vector& rhs) const;

private:
    Matrix c_;
    Vector a_;
    double sigma2_;
    Eigen::LLT<Matrix> llt_;
};

WeightVector optimal_unconstrained(const ConditionalStats& stats);
double loss_unconstrained(const ConditionalStats& stats);

WeightVector optimal_affine(const ConditionalStats& stats);
double loss_affine(const ConditionalStats& stats);

/// Expected squared loss of an arbitrary weight vector, written as the
/// unconstrained optimum plus the C-weighted distance to it.
double loss_at_weights(const ConditionalStats& stats, const Vector& w);

/// Closed-form case analysis for two bases; projected gradient on the
/// simplex for more.
WeightVector optimal_convex(const ConditionalStats& stats);
double loss_convex(const ConditionalStats& stats);

struct LossTriple {
    double unconstrained;
    double affine;
    double convex;
};

/// Computes the three optimal losses and throws OrderingViolated unless
/// unconstrained <= affine <= convex (1e-9 slack).
LossTriple check_loss_ordering(const ConditionalStats& stats);

/// Euclidean projection onto the unit simplex.
Vector project_to_simplex(const Vector& v);

struct ProjectedGradientOptions {
    int max_iterations = 10'000;
    double loss_tolerance = 1e-12;
};

/// Minimizes loss_at_weights over the simplex for any M.
Vector minimize_on_simplex(const ConditionalStats& stats, const ProjectedGradientOptions& options = {});

/// Plain sample averages of yhat yhat^T, y yhat and y^2 over the given rows.
/// Used by tests and verification routines.
ConditionalStats estimate_stats(std::span<const double> targets, const Matrix& base_preds);

}  // namespace ctxens
