#include "ctxens/metrics.hpp"

#include "ctxens/error.hpp"

namespace ctxens::metrics {

namespace {

void check_lengths(std::span<const double> y, std::span<const double> yhat) {
    if (y.size() != yhat.size()) {
        fail(ErrorCode::LengthMismatch,
             "sequences differ in length (" + std::to_string(y.size()) + " vs " + std::to_string(yhat.size()) + ")");
    }
    if (y.empty()) fail(ErrorCode::LengthMismatch, "empty sequences");
}

}  // namespace

double total_squared_loss(std::span<const double> y, std::span<const double> yhat) {
    check_lengths(y, yhat);
    double total = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) total += (y[i] - yhat[i]) * (y[i] - yhat[i]);
    return total;
}

ErrorCurve cumulative_normalized_curve(std::span<const double> y, std::span<const double> yhat,
                                       std::size_t t_start) {
    check_lengths(y, yhat);
    ErrorCurve curve;
    curve.points.reserve(y.size());
    double running = 0.0;
    for (std::size_t j = 0; j < y.size(); ++j) {
        running += (y[j] - yhat[j]) * (y[j] - yhat[j]);
        curve.points.push_back({t_start + j, running / static_cast<double>(j + 1)});
    }
    curve.final_total = running;
    return curve;
}

}  // namespace ctxens::metrics
