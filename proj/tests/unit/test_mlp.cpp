#include <doctest.h>

#include <random>
#include <sstream>

#include "ctxens/constraints.hpp"
#include "ctxens/datagen.hpp"
#include "ctxens/mlp.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace ctxens;
using namespace ctxens::mlp;

namespace {

Matrix mat(Eigen::Index r, Eigen::Index c, std::initializer_list<double> v) {
    Matrix m(r, c);
    Eigen::Index i = 0;
    for (double x : v) m(i / c, i % c) = x, ++i;
    return m;
}

int kind_index(ConstraintKind k) {
    return k == ConstraintKind::Unconstrained ? 0 : (k == ConstraintKind::Affine ? 1 : 2);
}

/// Loss of a bias-free net, evaluated from scratch.
double ref_loss(const Matrix& u1, const Matrix& u2, const std::vector<double>& x, double y, const Vector& yhat,
                ConstraintKind kind) {
    oracle_ref::Vec z(static_cast<std::size_t>(u1.rows()));
    for (Eigen::Index l = 0; l < u1.rows(); ++l) {
        double v = 0;
        for (Eigen::Index k = 0; k < u1.cols(); ++k) v += u1(l, k) * x[static_cast<std::size_t>(k)];
        z[static_cast<std::size_t>(l)] = v > 0 ? v : 0;
    }
    oracle_ref::Vec p(static_cast<std::size_t>(u2.rows()));
    for (Eigen::Index m = 0; m < u2.rows(); ++m) {
        double s = 0;
        for (Eigen::Index l = 0; l < u2.cols(); ++l) s += u2(m, l) * z[static_cast<std::size_t>(l)];
        p[static_cast<std::size_t>(m)] = s;
    }
    const auto w = oracle_ref::tau(p, kind_index(kind));
    double e = y;
    for (std::size_t m = 0; m < w.size(); ++m) e -= w[m] * yhat[static_cast<Eigen::Index>(m)];
    return e * e;
}

struct Fixture {
    FeatureTable side;
    Matrix preds;
    std::vector<double> y;
};

/// Two modulo regimes with exact simplex weights, like the y^a mix.
Fixture two_regime_fixture(std::size_t n, std::uint64_t seed) {
    const auto y1 = datagen::gen_arma(n, seed);
    const auto y2 = datagen::gen_piecewise(n, seed + 1);
    Fixture f;
    Matrix side(static_cast<Eigen::Index>(n), 1);
    f.preds.resize(static_cast<Eigen::Index>(n), 2);
    for (std::size_t t = 0; t < n; ++t) {
        const auto r = static_cast<Eigen::Index>(t);
        side(r, 0) = static_cast<double>(t % 2);
        f.preds(r, 0) = y1[t];
        f.preds(r, 1) = y2[t];
        f.y.push_back(t % 2 == 0 ? 0.333 * y1[t] + 0.667 * y2[t] : 0.666 * y1[t] + 0.334 * y2[t]);
    }
    f.side = FeatureTable({"mod2"}, side);
    return f;
}

double train_mse(const MLPModel& model, const Fixture& f) {
    double s = 0;
    for (Eigen::Index r = 0; r < f.preds.rows(); ++r) {
        const std::vector<double> x{f.side.values(r, 0)};
        const double e = f.y[static_cast<std::size_t>(r)] - predict_weights(model, x).values().dot(f.preds.row(r).transpose());
        s += e * e;
    }
    return s / static_cast<double>(f.preds.rows());
}

}  // namespace

TEST_CASE("forward examples") {
    const MLPModel zero(Matrix::Zero(3, 2), Matrix::Zero(4, 3), ConstraintKind::Convex);
    const std::vector<double> x2{0.7, -1.2};
    const auto pass = forward(zero, x2);
    CHECK(pass.p.isZero());
    CHECK(pass.w.isApprox(Vector::Constant(4, 0.25)));

    const MLPModel tiny(mat(1, 1, {2}), mat(1, 1, {3}), ConstraintKind::Unconstrained);
    const std::vector<double> one{1.0};
    const auto t = forward(tiny, one);
    CHECK(t.v[0] == 2);
    CHECK(t.z[0] == 2);
    CHECK(t.p[0] == 6);
    CHECK(t.w[0] == 6);

    const MLPModel dead(mat(1, 1, {-1}), mat(1, 1, {3}), ConstraintKind::Unconstrained);
    const auto d = forward(dead, one);
    CHECK(d.z[0] == 0);
    CHECK(d.p[0] == 0);

    const MLPModel aff(Matrix::Zero(2, 1), Matrix::Zero(2, 2), ConstraintKind::Affine);
    CHECK_ERROR(forward(aff, one), ErrorCode::NormalizationDegenerate);
    const std::vector<double> wrong{1.0, 2.0};
    CHECK_ERROR(forward(tiny, wrong), ErrorCode::DimensionMismatch);
}

TEST_CASE("backward vanishes at a perfect ensemble") {
    const MLPModel net(mat(2, 2, {0.5, -0.3, 0.8, 0.1}), mat(2, 2, {0.2, 0.4, -0.1, 0.3}), ConstraintKind::Convex);
    const std::vector<double> x{1.0, 0.5};
    const Vector yhat = (Vector(2) << 2.0, 4.0).finished();
    const double y = forward(net, x).w.dot(yhat);
    const auto g = backward(net, x, y, yhat);
    CHECK(g.d_u1.cwiseAbs().maxCoeff() < 1e-14);
    CHECK(g.d_u2.cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("backward matches finite differences") {
    std::mt19937_64 rng(404);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto kind : {ConstraintKind::Unconstrained, ConstraintKind::Affine, ConstraintKind::Convex}) {
        double worst = 0.0;
        for (int trial = 0; trial < 20; ++trial) {
            Matrix u1(4, 3), u2(2, 4);
            std::vector<double> x(3);
            bool ok = false;
            while (!ok) {
                for (Eigen::Index i = 0; i < u1.size(); ++i) u1.data()[i] = u(rng);
                for (Eigen::Index i = 0; i < u2.size(); ++i) u2.data()[i] = u(rng);
                for (auto& v : x) v = 2 * u(rng);
                const Vector v = u1 * Eigen::Map<const Vector>(x.data(), 3);
                ok = v.cwiseAbs().minCoeff() > 0.05;
                if (kind == ConstraintKind::Affine) ok = ok && std::abs((u2 * v.cwiseMax(0.0)).sum()) > 0.5;
            }
            const Vector yhat = (Vector(2) << 2 * u(rng), 2 * u(rng)).finished();
            const double y = 2 * u(rng);
            const MLPModel net(u1, u2, kind);
            const auto g = backward(net, x, y, yhat);
            auto check = [&](Matrix& target, const Matrix& analytic) {
                for (Eigen::Index i = 0; i < target.size(); ++i) {
                    const double orig = target.data()[i];
                    auto f = [&](double val) {
                        target.data()[i] = val;
                        const double l = ref_loss(u1, u2, x, y, yhat, kind);
                        target.data()[i] = orig;
                        return l;
                    };
                    const double fd = oracle_ref::central_diff(f, orig, 1e-5);
                    worst = std::max(worst, std::abs(fd - analytic.data()[i]) / std::max(std::abs(fd), 1e-6));
                }
            };
            check(u1, g.d_u1);
            check(u2, g.d_u2);
        }
        INFO("kind " << to_string(kind) << " worst " << worst);
        CHECK(worst < 1e-4);
    }
}

TEST_CASE("dead hidden unit gets no first-layer gradient") {
    const MLPModel net(mat(2, 1, {-1.0, 1.0}), mat(2, 2, {0.3, 0.2, -0.4, 0.5}), ConstraintKind::Convex);
    const std::vector<double> x{1.0};
    const auto g = backward(net, x, 3.0, (Vector(2) << 1.0, 5.0).finished());
    CHECK(g.d_u1(0, 0) == 0.0);
    CHECK(g.d_u1(1, 0) != 0.0);
}

TEST_CASE("sgd step arithmetic") {
    MLPModel net(mat(1, 1, {1.0}), mat(1, 1, {1.0}), ConstraintKind::Unconstrained);
    Gradients g{mat(1, 1, {2.0}), mat(1, 1, {0.0}), Vector::Zero(1), Vector::Zero(1)};
    sgd_step(net, g, 0.1);
    CHECK(net.u1(0, 0) == doctest::Approx(0.8));
    CHECK(net.u2(0, 0) == 1.0);
    const MLPModel before = net;
    sgd_step(net, g, 0.0);
    CHECK(net.u1 == before.u1);
    Gradients bad{mat(1, 1, {std::nan("")}), mat(1, 1, {1.0}), Vector::Zero(1), Vector::Zero(1)};
    CHECK_ERROR(sgd_step(net, bad, 0.1), ErrorCode::NonFiniteGradient);
    CHECK(net.u2 == before.u2);
}

TEST_CASE("convex head ignores a common shift of p") {
    const Vector p = (Vector(3) << 0.1, -0.7, 1.3).finished();
    const Vector w1 = transform(p, ConstraintKind::Convex).values();
    const Vector w2 = transform((p.array() + 4.2).matrix(), ConstraintKind::Convex).values();
    CHECK((w1 - w2).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("two-regime fixture trains to small error") {
    const auto f = two_regime_fixture(400, 3);
    MLPConfig cfg;
    cfg.hidden_units = 16;
    cfg.learning_rate = 1e-3;
    cfg.epochs = 300;
    cfg.seed = 1;
    const auto model = fit_meta(f.side, f.preds, f.y, ConstraintKind::Convex, cfg);
    CHECK(model.train_loss.size() == 300);
    CHECK(train_mse(model, f) < 1e-2);
    // non-increasing after epoch 5, within a 5% band
    for (std::size_t e = 6; e < model.train_loss.size(); ++e) {
        CHECK(model.train_loss[e] <= 1.05 * model.train_loss[e - 1] + 1e-12);
    }
}

TEST_CASE("meta MLP picks the exact base") {
    const auto f = two_regime_fixture(200, 5);
    std::vector<double> y(f.y.size());
    for (std::size_t t = 0; t < y.size(); ++t) y[t] = f.preds(static_cast<Eigen::Index>(t), 0);
    MLPConfig cfg;
    cfg.epochs = 200;
    cfg.learning_rate = 1e-3;
    cfg.use_bias = true;
    const auto model = fit_meta(f.side, f.preds, y, ConstraintKind::Convex, cfg);
    for (double s : {0.0, 1.0}) {
        const std::vector<double> x{s};
        CHECK(predict_weights(model, x)[0] >= 0.9);
    }
}

TEST_CASE("zero epochs returns the initialized model") {
    const auto f = two_regime_fixture(50, 9);
    MLPConfig cfg;
    cfg.epochs = 0;
    cfg.seed = 12;
    const auto a = fit_meta(f.side, f.preds, f.y, ConstraintKind::Convex, cfg);
    cfg.epochs = 1;
    const auto b = fit_meta(f.side, f.preds, f.y, ConstraintKind::Convex, cfg);
    CHECK(a.train_loss.empty());
    CHECK(a.u1.size() == b.u1.size());
    CHECK(a.u1 != b.u1);
    // the initial draw respects the fan-in bound
    CHECK(a.u1.cwiseAbs().maxCoeff() <= 1.0);
    CHECK(a.u2.cwiseAbs().maxCoeff() <= 1.0 / std::sqrt(16.0));
    const auto c = fit_meta(f.side, f.preds, f.y, ConstraintKind::Convex, [&] {
        auto z = cfg;
        z.epochs = 0;
        return z;
    }());
    CHECK(c.u1 == a.u1);
    CHECK(c.u2 == a.u2);
}

TEST_CASE("training is deterministic for a seed") {
    const auto f = two_regime_fixture(100, 4);
    MLPConfig cfg;
    cfg.epochs = 20;
    cfg.seed = 77;
    const auto a = fit_meta(f.side, f.preds, f.y, ConstraintKind::Affine, cfg);
    const auto b = fit_meta(f.side, f.preds, f.y, ConstraintKind::Affine, cfg);
    CHECK(a.u1 == b.u1);
    CHECK(a.u2 == b.u2);
    CHECK(a.train_loss == b.train_loss);
}

TEST_CASE("conventional MLP") {
    const auto f = two_regime_fixture(300, 6);
    std::vector<double> y(f.y.size());
    for (std::size_t t = 0; t < y.size(); ++t) y[t] = f.preds(static_cast<Eigen::Index>(t), 0);
    MLPConfig cfg;
    cfg.epochs = 300;
    cfg.learning_rate = 1e-3;
    cfg.use_bias = true;
    const auto train = f.preds.topRows(200);
    const std::vector<double> ytrain(y.begin(), y.begin() + 200);
    const auto model = fit_conventional(train, ytrain, cfg);
    double mse = 0;
    for (Eigen::Index r = 200; r < 300; ++r) {
        const std::vector<double> row{f.preds(r, 0), f.preds(r, 1)};
        mse += std::pow(predict_conventional(model, row) - y[static_cast<std::size_t>(r)], 2);
    }
    CHECK(mse / 100 < 1e-2);

    MLPConfig zero;
    zero.epochs = 0;
    zero.zero_init = true;
    const auto z = fit_conventional(train, ytrain, zero);
    const std::vector<double> row{1.0, 2.0};
    CHECK(predict_conventional(z, row) == 0.0);

    Matrix collinear(200, 2);
    collinear.col(0) = train.col(0);
    collinear.col(1) = train.col(0);
    MLPConfig quick;
    quick.epochs = 5;
    CHECK_NOTHROW(fit_conventional(collinear, ytrain, quick));
}

TEST_CASE("serialization round-trips exactly") {
    const auto f = two_regime_fixture(60, 8);
    MLPConfig cfg;
    cfg.epochs = 3;
    cfg.use_bias = true;
    for (auto kind : {ConstraintKind::Unconstrained, ConstraintKind::Affine, ConstraintKind::Convex}) {
        const auto model = fit_meta(f.side, f.preds, f.y, kind, cfg);
        std::stringstream ss;
        save(ss, model);
        const auto back = load(ss);
        CHECK(back.u1 == model.u1);
        CHECK(back.u2 == model.u2);
        CHECK(back.b1 == model.b1);
        CHECK(back.b2 == model.b2);
        CHECK(back.input_mean == model.input_mean);
        CHECK(back.input_scale == model.input_scale);
        CHECK(back.train_loss == model.train_loss);
        CHECK(back.kind == kind);
        std::stringstream again;
        save(again, back);
        CHECK(again.str() == ss.str());
    }
}

TEST_CASE("config validation") {
    MLPConfig cfg;
    cfg.hidden_units = 0;
    CHECK_ERROR(cfg.validate(), ErrorCode::ConfigInvalid);
    cfg = {};
    cfg.learning_rate = 0;
    CHECK_ERROR(cfg.validate(), ErrorCode::ConfigInvalid);
}
