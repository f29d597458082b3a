#pragma once

#include <span>
#include <vector>

namespace ctxens::metrics {

struct CurvePoint {
    std::size_t t;  ///< 1-based series index
    double value;
};

/// Running mean of squared test residuals and its final value.
struct ErrorCurve {
    std::vector<CurvePoint> points;
    double final_total = 0.0;  ///< sum of squared residuals over the window
};

double total_squared_loss(std::span<const double> y, std::span<const double> yhat);

/// Point j (1-based within the window) is (sum of the first j squared
/// residuals) / j; `t_start` labels the first point.
ErrorCurve cumulative_normalized_curve(std::span<const double> y, std::span<const double> yhat,
                                       std::size_t t_start);

}  // namespace ctxens::metrics
