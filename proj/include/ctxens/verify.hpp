#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ctxens::verify {

struct CheckResult {
    std::string name;
    double max_error = 0.0;
    double tolerance = 0.0;
    std::size_t trials = 0;
    std::size_t failures = 0;

    bool passed() const noexcept { return failures == 0; }
};

struct SuiteReport {
    std::string suite;
    std::vector<CheckResult> checks;

    bool passed() const noexcept;
};

/// Central finite differences of the meta objective (long double, fourth
/// order) against the boosting gradients/hessians and MLP backprop.
SuiteReport gradient_suite(std::uint64_t seed, std::size_t trials = 1000);
/// Closed-form optimal weights against grid search for two bases.
SuiteReport oracle_suite(std::uint64_t seed, std::size_t trials = 100);
/// unconstrained <= affine <= convex optimal losses on random statistics.
SuiteReport order_suite(std::uint64_t seed, std::size_t trials = 100);

/// "grad", "oracle" or "order"; other names raise ConfigInvalid.
SuiteReport run_suite(std::string_view name, std::uint64_t seed = 0);

/// Fixed-width relative error with a small denominator floor.
double relative_error(double a, double b, double floor = 1e-8);

}  // namespace ctxens::verify
