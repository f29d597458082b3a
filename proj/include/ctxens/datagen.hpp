#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "ctxens/core.hpp"

namespace ctxens::datagen {

/// Regime-mixing schemes: weights keyed on t mod 2, t mod 4 and t mod 16.
enum class MixKind { A, B, C };

std::string_view to_string(MixKind kind) noexcept;
MixKind parse_mix(std::string_view text);

struct SyntheticSpec {
    std::size_t length = 730;
    MixKind mix = MixKind::A;
    std::uint64_t seed = 0;
    double noise_sigma = 1.0;

    void validate() const;
};

inline constexpr std::size_t kArmaBurnIn = 100;
inline constexpr std::size_t kPiecewiseBurnIn = 50;
inline constexpr std::size_t kPiecewiseHistory = 7;

/// ARMA(2,2)-style recursion driven by Gaussian noise of std `noise_sigma`.
std::vector<double> gen_arma(std::size_t length, std::uint64_t seed, double noise_sigma = 1.0);

struct PiecewiseTrace {
    std::vector<double> values;
    std::vector<int> branches;  ///< 0..7 in table order, per emitted sample
};

/// Eight-regime piecewise-constant process around the level 50.
PiecewiseTrace gen_piecewise_trace(std::size_t length, std::uint64_t seed, double noise_sigma = 1.0);
std::vector<double> gen_piecewise(std::size_t length, std::uint64_t seed, double noise_sigma = 1.0);

/// Regime level for the three threshold conditions; ties at 50 count as "below".
double piecewise_level(double lag7, double lag1, double mean7);
int piecewise_branch(double lag7, double lag1, double mean7);

/// (alpha_t, beta_t) such that y_t = alpha_t y1_t + beta_t y2_t.
std::pair<double, double> mixing_weights(MixKind kind, std::size_t t);
std::size_t mix_period(MixKind kind) noexcept;

struct MixedSeries {
    std::vector<double> values;
    FeatureTable side_info;  ///< mod2, mod4, mod16
};

MixedSeries mix(std::span<const double> y1, std::span<const double> y2, MixKind kind);

struct SyntheticDataset {
    TimeSeriesFrame frame;  ///< y with mod2, mod4, mod16, lag1, lag7 (+ y1, y2)
    std::vector<double> component1;
    std::vector<double> component2;
};

/// Full dataset with lagged side information. Components are added as the
/// side-info columns `y1` and `y2` when requested.
SyntheticDataset generate(const SyntheticSpec& spec, bool include_components = false);

}  // namespace ctxens::datagen
