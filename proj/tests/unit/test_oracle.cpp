#include <doctest.h>

#include <random>

#include "ctxens/oracle.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace ctxens;

namespace {

ConditionalStats make(const oracle_ref::Stats& s) {
    const auto m = static_cast<Eigen::Index>(s.a.size());
    Matrix c(m, m);
    Vector a(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        a[i] = s.a[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < m; ++j) c(i, j) = s.c[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    return ConditionalStats(c, a, s.sigma2);
}

oracle_ref::Vec to_vec(const Vector& v) { return {v.data(), v.data() + v.size()}; }

const oracle_ref::Stats kIdentityA{{{1, 0}, {0, 1}}, {0.5, 0.3}, 1.0};
const oracle_ref::Stats kIdentityB{{{1, 0}, {0, 1}}, {1.5, -0.3}, 1.0};

}  // namespace

TEST_CASE("unconstrained examples") {
    const auto w = optimal_unconstrained(make(kIdentityA));
    CHECK(w[0] == doctest::Approx(0.5));
    CHECK(w[1] == doctest::Approx(0.3));
    const auto w2 = optimal_unconstrained(make({{{2, 0}, {0, 2}}, {1, 1}, 1.0}));
    CHECK(w2[0] == doctest::Approx(0.5));
    CHECK(w2[1] == doctest::Approx(0.5));

    const oracle_ref::Stats corr{{{1, 0.5}, {0.5, 1}}, {0.8, 0.6}, 1.0};
    const auto w3 = optimal_unconstrained(make(corr));
    // coarse-to-fine grid over [-2,2]^2 at 1e-3
    const double grid = oracle_ref::grid_min_box(corr, 2.0, 0.05, 1e-3);
    CHECK(oracle_ref::quad_loss(corr.c, corr.a, corr.sigma2, to_vec(w3.values())) <= grid + 1e-12);
    CHECK(grid - loss_unconstrained(make(corr)) < 1e-6);
}

TEST_CASE("unconstrained loss examples") {
    CHECK(loss_unconstrained(make(kIdentityA)) == doctest::Approx(0.66).epsilon(1e-12));
    CHECK(loss_unconstrained(make({{{1, 0}, {0, 1}}, {0, 0}, 0.7})) == 0.7);
    CHECK(loss_unconstrained(make({{{1, 0}, {0, 1}}, {0, 0}, 0.0})) == 0.0);
}

TEST_CASE("affine examples") {
    const auto w = optimal_affine(make(kIdentityA));
    CHECK(w[0] == doctest::Approx(0.6));
    CHECK(w[1] == doctest::Approx(0.4));
    const auto w2 = optimal_affine(make(kIdentityB));
    CHECK(w2[0] == doctest::Approx(1.4));
    CHECK(w2[1] == doctest::Approx(-0.4));
    double arg = 0.0;
    const double grid = oracle_ref::grid_min_line(kIdentityB, -10, 10, 1e-3, &arg);
    CHECK(arg == doctest::Approx(1.4).epsilon(1e-9));
    CHECK(std::abs(grid - loss_affine(make(kIdentityB))) < 1e-6);

    CHECK(loss_affine(make(kIdentityA)) == doctest::Approx(0.68).epsilon(1e-12));
    // unconstrained optimum already sums to one
    const oracle_ref::Stats on_plane{{{2, 0.3}, {0.3, 1}}, {2 * 0.7 + 0.3 * 0.3, 0.3 * 0.7 + 0.3}, 3.0};
    const auto cs = make(on_plane);
    CHECK((optimal_affine(cs).values() - optimal_unconstrained(cs).values()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(loss_affine(cs) == doctest::Approx(loss_unconstrained(cs)).epsilon(1e-12));
}

TEST_CASE("loss at weights") {
    const auto s = make(kIdentityA);
    CHECK(loss_at_weights(s, Vector::Zero(2)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(loss_at_weights(s, optimal_unconstrained(s).values()) == doctest::Approx(loss_unconstrained(s)));
    CHECK(std::abs(loss_at_weights(s, optimal_affine(s).values()) - loss_affine(s)) < 1e-9);
}

TEST_CASE("convex examples") {
    const auto inside = optimal_convex(make(kIdentityA));
    CHECK(inside.kind() == ConstraintKind::Convex);
    CHECK(inside[0] == doctest::Approx(0.6));
    CHECK(inside[1] == doctest::Approx(0.4));
    CHECK(loss_convex(make(kIdentityA)) == doctest::Approx(loss_affine(make(kIdentityA))));

    const auto corner = optimal_convex(make(kIdentityB));
    CHECK(corner[0] == 1.0);
    CHECK(corner[1] == 0.0);
    double arg = 0.0;
    const double grid = oracle_ref::grid_min_line(kIdentityB, 0, 1, 1e-4, &arg);
    CHECK(arg == doctest::Approx(1.0));
    CHECK(std::abs(loss_convex(make(kIdentityB)) - grid) < 1e-9);
    CHECK(loss_convex(make(kIdentityB)) == doctest::Approx(loss_at_weights(make(kIdentityB), corner.values())));

    const oracle_ref::Stats sym{{{1, 0}, {0, 1}}, {0.5, 0.5}, 0.5};
    const auto mid = optimal_convex(make(sym));
    CHECK(mid[0] == doctest::Approx(0.5));
    CHECK(mid[1] == doctest::Approx(0.5));
    CHECK(loss_convex(make(sym)) == doctest::Approx(loss_at_weights(make(sym), mid.values())));
}

TEST_CASE("loss ordering examples") {
    const auto t = check_loss_ordering(make(kIdentityA));
    CHECK(t.unconstrained == doctest::Approx(0.66));
    CHECK(t.affine == doctest::Approx(0.68));
    CHECK(t.convex == doctest::Approx(0.68));

    // unconstrained optimum inside the simplex: all three coincide
    const oracle_ref::Stats in{{{1, 0}, {0, 1}}, {0.3, 0.7}, 1.0};
    const auto e = check_loss_ordering(make(in));
    CHECK(e.unconstrained == doctest::Approx(e.affine).epsilon(1e-12));
    CHECK(e.affine == doctest::Approx(e.convex).epsilon(1e-12));
}

TEST_CASE("random statistics against independent solves") {
    std::mt19937_64 rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t m = 2 + static_cast<std::size_t>(trial % 4);
        const auto ref = oracle_ref::random_stats(rng, m);
        const auto s = make(ref);

        const auto wu = optimal_unconstrained(s).values();
        const auto dense = oracle_ref::dense_solve(ref.c, ref.a);
        for (std::size_t i = 0; i < m; ++i) CHECK(std::abs(wu[static_cast<Eigen::Index>(i)] - dense[i]) < 1e-9);

        const auto wa = optimal_affine(s).values();
        CHECK(std::abs(wa.sum() - 1.0) < 1e-9);
        const auto kkt = oracle_ref::affine_kkt(ref.c, ref.a);
        for (std::size_t i = 0; i < m; ++i) CHECK(std::abs(wa[static_cast<Eigen::Index>(i)] - kkt[i]) < 1e-8);

        const auto wc = optimal_convex(s);
        CHECK(WeightVector::satisfies(wc.values(), ConstraintKind::Convex));
        // no sampled simplex point may beat the solver
        const double sampled = oracle_ref::simplex_sample_min(ref, rng, 4000);
        CHECK(loss_convex(s) <= sampled + 1e-9);

        // direct expansion vs completed square
        for (int k = 0; k < 3; ++k) {
            Vector w = Vector::Random(static_cast<Eigen::Index>(m)) * 3;
            CHECK(std::abs(loss_at_weights(s, w) - oracle_ref::quad_loss(ref.c, ref.a, ref.sigma2, to_vec(w))) < 1e-9);
        }
        CHECK_NOTHROW(check_loss_ordering(s));
    }
}

TEST_CASE("two-model convex matches the simplex grid") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 100; ++trial) {
        const auto ref = oracle_ref::random_stats(rng, 2);
        const double grid = oracle_ref::grid_min_line(ref, 0, 1, 1e-4);
        CHECK(std::abs(loss_convex(make(ref)) - grid) < 2e-4);
        CHECK(loss_convex(make(ref)) <= grid + 1e-12);
    }
}

TEST_CASE("convex solver for many models satisfies first-order conditions") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        const auto ref = oracle_ref::random_stats(rng, 5);
        const auto s = make(ref);
        const Vector w = optimal_convex(s).values();
        const Vector g = 2.0 * (s.c_mat() * w - s.a_vec());
        // on the support the gradient is constant; off it, no smaller
        double lam = 0.0;
        int support = 0;
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            if (w[i] > 1e-6) {
                lam += g[i];
                ++support;
            }
        }
        lam /= support;
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            if (w[i] > 1e-6) CHECK(std::abs(g[i] - lam) < 1e-4);
            else CHECK(g[i] >= lam - 1e-4);
        }
    }
}

TEST_CASE("simplex projection") {
    const Vector p = project_to_simplex((Vector(3) << 0.2, 0.3, 0.5).finished());
    CHECK(p.isApprox((Vector(3) << 0.2, 0.3, 0.5).finished()));
    const Vector q = project_to_simplex((Vector(3) << 3.0, -1.0, 0.0).finished());
    CHECK(q.isApprox((Vector(3) << 1.0, 0.0, 0.0).finished()));
    const Vector r = project_to_simplex((Vector(2) << 1.0, 1.0).finished());
    CHECK(r[0] == doctest::Approx(0.5));
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g(0, 2);
    for (int k = 0; k < 50; ++k) {
        Vector v(6);
        for (auto& x : v) x = g(rng);
        const Vector w = project_to_simplex(v);
        CHECK(WeightVector::satisfies(w, ConstraintKind::Convex));
        CHECK((project_to_simplex(w) - w).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("invalid statistics") {
    Matrix c(2, 2);
    c << 1, 2, 2, 1;  // indefinite
    CHECK_ERROR(ConditionalStats(c, Vector::Zero(2), 1.0), ErrorCode::SingularStatistics);
    c << 1, 0.5, 0.4, 1;
    CHECK_ERROR(ConditionalStats(c, Vector::Zero(2), 1.0), ErrorCode::SingularStatistics);
    CHECK_ERROR(ConditionalStats(Matrix::Identity(2, 2), Vector::Zero(3), 1.0), ErrorCode::DimensionMismatch);
    CHECK_ERROR(ConditionalStats(Matrix::Identity(2, 2), Vector::Zero(2), -1.0), ErrorCode::SingularStatistics);
}

TEST_CASE("estimated statistics are plain averages") {
    Matrix preds(3, 2);
    preds << 1, 2, 3, 4, 5, 7;
    const std::vector<double> y{1, 2, 3};
    const auto s = estimate_stats(y, preds);
    CHECK(s.c_mat()(0, 1) == doctest::Approx((2.0 + 12 + 35) / 3));
    CHECK(s.a_vec()[1] == doctest::Approx((2.0 + 8 + 21) / 3));
    CHECK(s.sigma2() == doctest::Approx(14.0 / 3));
}
