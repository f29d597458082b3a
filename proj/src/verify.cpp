#include "ctxens/verify.hpp"

#include <cmath>
#include <functional>
#include <random>

#include "ctxens/constraints.hpp"
#include "ctxens/gbdt.hpp"
#include "ctxens/mlp.hpp"
#include "ctxens/oracle.hpp"

namespace ctxens::verify {

bool SuiteReport::passed() const noexcept {
    for (const auto& c : checks) {
        if (!c.passed()) return false;
    }
    return !checks.empty();
}

double relative_error(double a, double b, double floor) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

namespace {

using Real = long double;

void record(CheckResult& c, double err) {
    c.max_error = std::max(c.max_error, err);
    if (!(err <= c.tolerance)) ++c.failures;
}

// (y - tau(p)^T yhat)^2 evaluated in extended precision.
Real meta_loss(Real y, const Vector& yhat, const std::vector<Real>& p, ConstraintKind kind) {
    const std::size_t m = p.size();
    std::vector<Real> w(m);
    if (kind == ConstraintKind::Unconstrained) {
        w = p;
    } else if (kind == ConstraintKind::Affine) {
        Real s = 0;
        for (Real v : p) s += v;
        for (std::size_t i = 0; i < m; ++i) w[i] = p[i] / s;
    } else {
        Real mx = p[0];
        for (Real v : p) mx = std::max(mx, v);
        Real s = 0;
        for (std::size_t i = 0; i < m; ++i) s += (w[i] = std::exp(p[i] - mx));
        for (auto& v : w) v /= s;
    }
    Real e = y;
    for (std::size_t i = 0; i < m; ++i) e -= w[i] * static_cast<Real>(yhat[static_cast<Eigen::Index>(i)]);
    return e * e;
}

// Fourth-order central differences of f along one coordinate. The second
// derivative uses a wider step plus one Richardson step, since rounding
// grows like 1/h^2.
struct Derivs {
    Real first;
    Real second;
};

Derivs fd(const std::function<Real(Real)>& f, Real h) {
    const Real first = (-f(2 * h) + 8 * f(h) - 8 * f(-h) + f(-2 * h)) / (12 * h);
    auto second = [&](Real s) { return (-f(2 * s) + 16 * f(s) - 30 * f(0) + 16 * f(-s) - f(-2 * s)) / (12 * s * s); };
    const Real wide = 1e-2L;
    return {first, (16 * second(wide / 2) - second(wide)) / 15};
}

ConstraintKind kinds[] = {ConstraintKind::Unconstrained, ConstraintKind::Affine, ConstraintKind::Convex};

void gbdt_checks(SuiteReport& report, std::mt19937_64& rng, std::size_t trials) {
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::uniform_int_distribution<int> msize(2, 4);
    for (auto kind : kinds) {
        CheckResult g{"gbdt gradient, " + std::string(to_string(kind)), 0.0, 1e-5, trials, 0};
        CheckResult h{"gbdt hessian, " + std::string(to_string(kind)), 0.0, 1e-4, trials, 0};
        for (std::size_t t = 0; t < trials; ++t) {
            const int m = msize(rng);
            Vector yhat(m), p(m);
            for (int i = 0; i < m; ++i) yhat[i] = u(rng);
            do {
                for (int i = 0; i < m; ++i) p[i] = u(rng);
            } while (kind == ConstraintKind::Affine && std::abs(p.sum()) < 0.5);
            const double y = u(rng);
            const auto gh = gbdt::meta_grad_hess(y, yhat, p, kind);
            for (int i = 0; i < m; ++i) {
                const auto d = fd(
                    [&](Real step) {
                        std::vector<Real> q(p.begin(), p.end());
                        q[static_cast<std::size_t>(i)] += step;
                        return meta_loss(y, yhat, q, kind);
                    },
                    1e-3L);
                record(g, relative_error(gh.grad[i], static_cast<double>(d.first)));
                record(h, relative_error(gh.hess[i], static_cast<double>(d.second)));
            }
        }
        report.checks.push_back(g);
        report.checks.push_back(h);
    }
}

Real mlp_loss(const mlp::MLPModel& net, const std::vector<Real>& u1, const std::vector<Real>& u2,
              const Vector& x, double y, const Vector& yhat) {
    const auto k = net.inputs(), l = net.hidden(), m = net.outputs();
    std::vector<Real> z(static_cast<std::size_t>(l));
    for (Eigen::Index r = 0; r < l; ++r) {
        Real v = 0;
        for (Eigen::Index c = 0; c < k; ++c) v += u1[static_cast<std::size_t>(r * k + c)] * x[c];
        z[static_cast<std::size_t>(r)] = v > 0 ? v : 0;
    }
    std::vector<Real> p(static_cast<std::size_t>(m));
    for (Eigen::Index r = 0; r < m; ++r) {
        Real v = 0;
        for (Eigen::Index c = 0; c < l; ++c) v += u2[static_cast<std::size_t>(r * l + c)] * z[static_cast<std::size_t>(c)];
        p[static_cast<std::size_t>(r)] = v;
    }
    return meta_loss(y, yhat, p, net.kind);
}

void mlp_checks(SuiteReport& report, std::mt19937_64& rng, std::size_t trials) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto kind : kinds) {
        CheckResult c{"mlp backprop, " + std::string(to_string(kind)), 0.0, 1e-4, trials, 0};
        for (std::size_t t = 0; t < trials; ++t) {
            const Eigen::Index k = 3, l = 4, m = 2 + static_cast<Eigen::Index>(t % 2);
            mlp::MLPModel net;
            Vector x(k), yhat(m);
            bool ok = false;
            while (!ok) {
                Matrix a(l, k), b(m, l);
                for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = u(rng);
                for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = u(rng);
                for (Eigen::Index i = 0; i < k; ++i) x[i] = 2.0 * u(rng);
                net = mlp::MLPModel(a, b, kind);
                const Vector v = a * x;
                ok = v.cwiseAbs().minCoeff() > 0.05;  // keep FD steps away from the ReLU kink
                if (kind == ConstraintKind::Affine) {
                    ok = ok && std::abs((b * v.cwiseMax(0.0)).sum()) > 0.5;
                }
            }
            for (Eigen::Index i = 0; i < m; ++i) yhat[i] = 2.0 * u(rng);
            const double y = 2.0 * u(rng);
            const std::vector<double> xs(x.begin(), x.end());
            const auto grads = mlp::backward(net, xs, y, yhat);

            std::vector<Real> u1(static_cast<std::size_t>(l * k)), u2(static_cast<std::size_t>(m * l));
            for (Eigen::Index r = 0; r < l; ++r)
                for (Eigen::Index q = 0; q < k; ++q) u1[static_cast<std::size_t>(r * k + q)] = net.u1(r, q);
            for (Eigen::Index r = 0; r < m; ++r)
                for (Eigen::Index q = 0; q < l; ++q) u2[static_cast<std::size_t>(r * l + q)] = net.u2(r, q);

            for (std::size_t idx = 0; idx < u1.size(); ++idx) {
                const auto d = fd(
                    [&](Real step) {
                        auto w = u1;
                        w[idx] += step;
                        return mlp_loss(net, w, u2, x, y, yhat);
                    },
                    1e-3L);
                const auto r = static_cast<Eigen::Index>(idx) / k, q = static_cast<Eigen::Index>(idx) % k;
                record(c, relative_error(grads.d_u1(r, q), static_cast<double>(d.first)));
            }
            for (std::size_t idx = 0; idx < u2.size(); ++idx) {
                const auto d = fd(
                    [&](Real step) {
                        auto w = u2;
                        w[idx] += step;
                        return mlp_loss(net, u1, w, x, y, yhat);
                    },
                    1e-3L);
                const auto r = static_cast<Eigen::Index>(idx) / l, q = static_cast<Eigen::Index>(idx) % l;
                record(c, relative_error(grads.d_u2(r, q), static_cast<double>(d.first)));
            }
        }
        report.checks.push_back(c);
    }
}

// Well-conditioned statistics whose unconstrained optimum lies in [-2, 2]^m.
ConditionalStats random_stats(std::mt19937_64& rng, Eigen::Index m) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::uniform_real_distribution<double> noise(0.1, 1.0);
    Matrix a(m + 3, m);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = n(rng);
    Matrix c = a.transpose() * a / static_cast<double>(m + 3);
    c.diagonal().array() += 0.1;
    c = 0.5 * (c + c.transpose()).eval();
    Vector w(m);
    for (Eigen::Index i = 0; i < m; ++i) w[i] = u(rng);
    const Vector av = c * w;
    return ConditionalStats(c, av, w.dot(av) + noise(rng));
}

}  // namespace

SuiteReport gradient_suite(std::uint64_t seed, std::size_t trials) {
    SuiteReport report{"grad", {}};
    std::mt19937_64 rng(seed);
    gbdt_checks(report, rng, trials);
    mlp_checks(report, rng, trials);
    return report;
}

SuiteReport oracle_suite(std::uint64_t seed, std::size_t trials) {
    SuiteReport report{"oracle", {}};
    std::mt19937_64 rng(seed);
    CheckResult unc{"unconstrained vs grid (step 1e-3)", 0.0, 2e-4, trials, 0};
    CheckResult aff{"affine vs grid (step 1e-3)", 0.0, 2e-4, trials, 0};
    CheckResult con{"convex vs grid (step 1e-4)", 0.0, 2e-4, trials, 0};
    for (std::size_t t = 0; t < trials; ++t) {
        const auto stats = random_stats(rng, 2);
        const auto loss = [&](double w1, double w2) { return loss_at_weights(stats, Vector{{w1, w2}}); };

        // Coarse pass over [-5, 5]^2, then step 1e-3 around the coarse winner.
        double best = INFINITY, c1 = 0, c2 = 0;
        for (int i = -50; i <= 50; ++i)
            for (int j = -50; j <= 50; ++j)
                if (const double l = loss(0.1 * i, 0.1 * j); l < best) best = l, c1 = 0.1 * i, c2 = 0.1 * j;
        for (int i = -200; i <= 200; ++i)
            for (int j = -200; j <= 200; ++j) best = std::min(best, loss(c1 + 1e-3 * i, c2 + 1e-3 * j));
        record(unc, std::abs(loss_unconstrained(stats) - best));

        best = INFINITY;
        for (int i = -10000; i <= 10000; ++i) best = std::min(best, loss(1e-3 * i, 1.0 - 1e-3 * i));
        record(aff, std::abs(loss_affine(stats) - best));

        best = INFINITY;
        for (int i = 0; i <= 10000; ++i) best = std::min(best, loss(1e-4 * i, 1.0 - 1e-4 * i));
        record(con, std::abs(loss_convex(stats) - best));
    }
    report.checks = {unc, aff, con};
    return report;
}

SuiteReport order_suite(std::uint64_t seed, std::size_t trials) {
    SuiteReport report{"order", {}};
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> msize(2, 5);
    CheckResult c{"unconstrained <= affine <= convex", 0.0, 1e-9, trials, 0};
    for (std::size_t t = 0; t < trials; ++t) {
        const auto stats = random_stats(rng, msize(rng));
        const double lu = loss_unconstrained(stats), la = loss_affine(stats), lc = loss_convex(stats);
        record(c, std::max({0.0, lu - la, la - lc}));
    }
    report.checks = {c};
    return report;
}

SuiteReport run_suite(std::string_view name, std::uint64_t seed) {
    if (name == "grad") return gradient_suite(seed);
    if (name == "oracle") return oracle_suite(seed);
    if (name == "order") return order_suite(seed);
    fail(ErrorCode::ConfigInvalid, "unknown verification suite '" + std::string(name) + "' (grad, oracle, order)");
}

}  // namespace ctxens::verify
