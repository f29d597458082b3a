#include "ctxens/datagen.hpp"

#include <cctype>
#include <random>

namespace ctxens::datagen {

std::string_view to_string(MixKind kind) noexcept {
    switch (kind) {
        case MixKind::A: return "a";
        case MixKind::B: return "b";
        case MixKind::C: return "c";
    }
    return "?";
}

MixKind parse_mix(std::string_view text) {
    if (text.size() == 1) {
        switch (std::tolower(static_cast<unsigned char>(text[0]))) {
            case 'a': return MixKind::A;
            case 'b': return MixKind::B;
            case 'c': return MixKind::C;
            default: break;
        }
    }
    fail(ErrorCode::ConfigInvalid, "unknown mix '" + std::string(text) + "' (expected a, b or c)");
}

void SyntheticSpec::validate() const {
    if (length <= 50) fail(ErrorCode::ConfigInvalid, "synthetic length must exceed 50");
    if (!(noise_sigma > 0.0)) fail(ErrorCode::ConfigInvalid, "noise_sigma must be positive");
}

std::vector<double> gen_arma(std::size_t length, std::uint64_t seed, double noise_sigma) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    const std::size_t total = length + kArmaBurnIn;
    std::vector<double> y(total + 2, 0.0);
    std::vector<double> e(total + 2, 0.0);
    for (std::size_t t = 2; t < total + 2; ++t) {
        const double v = noise_sigma * noise(rng);
        y[t] = 0.2 * y[t - 1] - 0.1 * y[t - 2] + 0.3 * e[t - 1] - 0.1 * e[t - 2] + v;
        e[t] = y[t] - 0.2 * y[t - 1] - 0.1 * y[t - 2];
    }
    return {y.begin() + static_cast<std::ptrdiff_t>(2 + kArmaBurnIn), y.end()};
}

int piecewise_branch(double lag7, double lag1, double mean7) {
    const int a = lag7 > 50.0 ? 0 : 1;
    const int b = lag1 > 50.0 ? 0 : 1;
    const int c = mean7 > 50.0 ? 0 : 1;
    return a * 4 + b * 2 + c;
}

double piecewise_level(double lag7, double lag1, double mean7) {
    static constexpr std::array<double, 8> kLevels{30, 35, 40, 45, 56, 61, 66, 71};
    return kLevels[static_cast<std::size_t>(piecewise_branch(lag7, lag1, mean7))];
}

PiecewiseTrace gen_piecewise_trace(std::size_t length, std::uint64_t seed, double noise_sigma) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> init(45.0, 55.0);
    std::normal_distribution<double> noise(0.0, 1.0);

    const std::size_t total = kPiecewiseHistory + kPiecewiseBurnIn + length;
    std::vector<double> y(total);
    std::vector<int> branch(total, -1);
    for (std::size_t t = 0; t < kPiecewiseHistory; ++t) y[t] = init(rng);
    for (std::size_t t = kPiecewiseHistory; t < total; ++t) {
        double mean7 = 0.0;
        for (std::size_t k = 1; k <= 7; ++k) mean7 += y[t - k];
        mean7 /= 7.0;
        branch[t] = piecewise_branch(y[t - 7], y[t - 1], mean7);
        y[t] = piecewise_level(y[t - 7], y[t - 1], mean7) + noise_sigma * noise(rng);
    }
    const auto skip = static_cast<std::ptrdiff_t>(kPiecewiseHistory + kPiecewiseBurnIn);
    return PiecewiseTrace{{y.begin() + skip, y.end()}, {branch.begin() + skip, branch.end()}};
}

std::vector<double> gen_piecewise(std::size_t length, std::uint64_t seed, double noise_sigma) {
    return gen_piecewise_trace(length, seed, noise_sigma).values;
}

std::size_t mix_period(MixKind kind) noexcept {
    switch (kind) {
        case MixKind::A: return 2;
        case MixKind::B: return 4;
        case MixKind::C: return 16;
    }
    return 1;
}

std::pair<double, double> mixing_weights(MixKind kind, std::size_t t) {
    static constexpr std::array<std::pair<double, double>, 2> kA{{{0.333, 0.667}, {0.666, 0.334}}};
    static constexpr std::array<std::pair<double, double>, 4> kB{{{0.2, 0.8}, {0.4, 0.6}, {0.6, 0.4}, {0.8, 0.2}}};
    static constexpr std::array<std::pair<double, double>, 16> kC{{{0.059, 0.941},
                                                                   {0.118, 0.882},
                                                                   {0.176, 0.824},
                                                                   {0.235, 0.765},
                                                                   {0.294, 0.706},
                                                                   {0.353, 0.647},
                                                                   {0.412, 0.588},
                                                                   {0.471, 0.529},
                                                                   {0.529, 0.471},
                                                                   {0.588, 0.412},
                                                                   {0.647, 0.353},
                                                                   {0.706, 0.294},
                                                                   {0.765, 0.235},
                                                                   {0.824, 0.176},
                                                                   {0.882, 0.118},
                                                                   {0.941, 0.059}}};
    switch (kind) {
        case MixKind::A: return kA[t % 2];
        case MixKind::B: return kB[t % 4];
        case MixKind::C: return kC[t % 16];
    }
    return {0.5, 0.5};
}

MixedSeries mix(std::span<const double> y1, std::span<const double> y2, MixKind kind) {
    if (y1.size() != y2.size()) fail(ErrorCode::LengthMismatch, "components differ in length");
    const auto n = static_cast<Eigen::Index>(y1.size());
    MixedSeries out;
    out.values.resize(y1.size());
    Matrix side(n, 3);
    for (std::size_t t = 0; t < y1.size(); ++t) {
        const auto [alpha, beta] = mixing_weights(kind, t);
        out.values[t] = alpha * y1[t] + beta * y2[t];
        const auto r = static_cast<Eigen::Index>(t);
        side(r, 0) = static_cast<double>(t % 2);
        side(r, 1) = static_cast<double>(t % 4);
        side(r, 2) = static_cast<double>(t % 16);
    }
    out.side_info = FeatureTable({"mod2", "mod4", "mod16"}, std::move(side));
    return out;
}

SyntheticDataset generate(const SyntheticSpec& spec, bool include_components) {
    spec.validate();
    constexpr std::size_t history = 7;  // rows consumed by the lag7 column
    const std::size_t total = spec.length + history;
    // Independent streams for the two components.
    const auto y1 = gen_arma(total, spec.seed * 2 + 1, spec.noise_sigma);
    const auto y2 = gen_piecewise(total, spec.seed * 2 + 2, spec.noise_sigma);
    const MixedSeries mixed = mix(y1, y2, spec.mix);

    const auto n = static_cast<Eigen::Index>(spec.length);
    std::vector<std::string> names{"mod2", "mod4", "mod16", "lag1", "lag7"};
    if (include_components) {
        names.emplace_back("y1");
        names.emplace_back("y2");
    }
    Matrix side(n, static_cast<Eigen::Index>(names.size()));
    SyntheticDataset out;
    std::vector<double> values(spec.length);
    for (std::size_t i = 0; i < spec.length; ++i) {
        const std::size_t t = i + history;
        const auto r = static_cast<Eigen::Index>(i);
        side.block(r, 0, 1, 3) = mixed.side_info.values.row(static_cast<Eigen::Index>(t));
        side(r, 3) = mixed.values[t - 1];
        side(r, 4) = mixed.values[t - 7];
        if (include_components) {
            side(r, 5) = y1[t];
            side(r, 6) = y2[t];
        }
        values[i] = mixed.values[t];
        out.component1.push_back(y1[t]);
        out.component2.push_back(y2[t]);
    }
    out.frame = TimeSeriesFrame(std::move(values), FeatureTable(std::move(names), std::move(side)));
    return out;
}

}  // namespace ctxens::datagen
