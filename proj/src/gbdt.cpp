#include "ctxens/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "ctxens/constraints.hpp"

namespace ctxens::gbdt {

void GBDTConfig::validate() const {
    if (num_rounds < 0) fail(ErrorCode::ConfigInvalid, "num_rounds must be nonnegative");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
        fail(ErrorCode::ConfigInvalid, "learning_rate must lie in (0, 1]");
    }
    if (max_leaves < 2) fail(ErrorCode::ConfigInvalid, "max_leaves must be >= 2");
    if (min_samples_leaf < 1) fail(ErrorCode::ConfigInvalid, "min_samples_leaf must be >= 1");
    if (!(l2_lambda >= 0.0)) fail(ErrorCode::ConfigInvalid, "l2_lambda must be nonnegative");
    if (histogram_bins < 2 || histogram_bins > 255) {
        fail(ErrorCode::ConfigInvalid, "histogram_bins must lie in [2, 255]");
    }
}

// ---------------------------------------------------------------------------
// Trees

double RegressionTree::predict(std::span<const double> row) const {
    if (nodes.empty()) return 0.0;
    int idx = 0;
    while (!nodes[idx].is_leaf()) {
        const auto& n = nodes[idx];
        idx = row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes[idx].value;
}

int RegressionTree::num_leaves() const {
    return static_cast<int>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

// ---------------------------------------------------------------------------
// Binning

HistogramBinner::HistogramBinner(const Matrix& features, int max_bins) {
    edges_.resize(static_cast<std::size_t>(features.cols()));
    const auto n = static_cast<std::size_t>(features.rows());
    for (Eigen::Index f = 0; f < features.cols(); ++f) {
        std::vector<double> sorted(features.col(f).data(), features.col(f).data() + n);
        std::sort(sorted.begin(), sorted.end());
        auto& edges = edges_[static_cast<std::size_t>(f)];
        for (int k = 1; k < max_bins; ++k) {
            const auto cut = static_cast<std::size_t>(static_cast<double>(k) * static_cast<double>(n) / max_bins);
            if (cut == 0 || cut >= n) continue;
            // Move the cut past a run of ties so equal values share a bin.
            std::size_t c = cut;
            while (c < n && sorted[c] == sorted[c - 1]) ++c;
            if (c >= n) continue;
            const double edge = 0.5 * (sorted[c - 1] + sorted[c]);
            if (edges.empty() || edge > edges.back()) edges.push_back(edge);
        }
        if (edges.empty() && n > 0) {
            // Few rows relative to bins: fall back to one cut per distinct value.
            for (std::size_t i = 1; i < n && static_cast<int>(edges.size()) < max_bins - 1; ++i) {
                if (sorted[i] != sorted[i - 1]) edges.push_back(0.5 * (sorted[i - 1] + sorted[i]));
            }
        }
    }
}

std::uint8_t HistogramBinner::bin(Eigen::Index feature, double x) const {
    const auto& edges = edges_[static_cast<std::size_t>(feature)];
    return static_cast<std::uint8_t>(std::lower_bound(edges.begin(), edges.end(), x) - edges.begin());
}

std::vector<std::vector<std::uint8_t>> HistogramBinner::transform(const Matrix& features) const {
    std::vector<std::vector<std::uint8_t>> out(static_cast<std::size_t>(features.cols()));
    for (Eigen::Index f = 0; f < features.cols(); ++f) {
        auto& col = out[static_cast<std::size_t>(f)];
        col.resize(static_cast<std::size_t>(features.rows()));
        for (Eigen::Index r = 0; r < features.rows(); ++r) col[static_cast<std::size_t>(r)] = bin(f, features(r, f));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Leaf-wise tree growth on histograms

namespace {

using BinnedColumns = std::vector<std::vector<std::uint8_t>>;

struct SplitCandidate {
    int feature = -1;
    int bin = -1;
    double gain = 0.0;
};

struct LeafState {
    int node = 0;
    std::vector<std::size_t> rows;
    double grad_sum = 0.0;
    double hess_sum = 0.0;
    SplitCandidate best;
};

double leaf_score(double g, double h, double lambda) { return g * g / (h + lambda); }

class TreeGrower {
public:
    TreeGrower(const BinnedColumns& bins, const HistogramBinner& binner, std::span<const double> grad,
               std::span<const double> hess, const GBDTConfig& config)
        : bins_(bins), binner_(binner), grad_(grad), hess_(hess), config_(config) {}

    RegressionTree grow() {
        RegressionTree tree;
        tree.nodes.emplace_back();

        std::vector<LeafState> leaves(1);
        leaves[0].rows.resize(grad_.size());
        std::iota(leaves[0].rows.begin(), leaves[0].rows.end(), std::size_t{0});
        summarize(leaves[0]);

        int num_leaves = 1;
        while (num_leaves < config_.max_leaves) {
            // Best-first: expand the leaf with the largest gain; ties go to
            // the earliest-created leaf.
            std::size_t pick = leaves.size();
            for (std::size_t i = 0; i < leaves.size(); ++i) {
                if (leaves[i].best.feature < 0) continue;
                if (pick == leaves.size() || leaves[i].best.gain > leaves[pick].best.gain) pick = i;
            }
            if (pick == leaves.size()) break;

            LeafState parent = std::move(leaves[pick]);
            leaves.erase(leaves.begin() + static_cast<std::ptrdiff_t>(pick));

            LeafState left;
            LeafState right;
            const auto& codes = bins_[static_cast<std::size_t>(parent.best.feature)];
            for (std::size_t r : parent.rows) {
                (codes[r] <= parent.best.bin ? left.rows : right.rows).push_back(r);
            }
            left.node = static_cast<int>(tree.nodes.size());
            right.node = left.node + 1;
            tree.nodes.emplace_back();
            tree.nodes.emplace_back();
            auto& split = tree.nodes[static_cast<std::size_t>(parent.node)];
            split.feature = parent.best.feature;
            split.threshold = binner_.upper_edge(parent.best.feature, parent.best.bin);
            split.left = left.node;
            split.right = right.node;

            summarize(left);
            summarize(right);
            leaves.push_back(std::move(left));
            leaves.push_back(std::move(right));
            ++num_leaves;
        }

        for (const auto& leaf : leaves) {
            tree.nodes[static_cast<std::size_t>(leaf.node)].value =
                -leaf.grad_sum / (leaf.hess_sum + config_.l2_lambda);
        }
        return tree;
    }

private:
    void summarize(LeafState& leaf) const {
        leaf.grad_sum = 0.0;
        leaf.hess_sum = 0.0;
        for (std::size_t r : leaf.rows) {
            leaf.grad_sum += grad_[r];
            leaf.hess_sum += hess_[r];
        }
        leaf.best = find_split(leaf);
    }

    SplitCandidate find_split(const LeafState& leaf) const {
        SplitCandidate best;
        const auto min_leaf = static_cast<std::size_t>(config_.min_samples_leaf);
        if (leaf.rows.size() < 2 * min_leaf) return best;

        const double lambda = config_.l2_lambda;
        const double parent = leaf_score(leaf.grad_sum, leaf.hess_sum, lambda);
        std::vector<double> g;
        std::vector<double> h;
        std::vector<std::size_t> count;
        for (std::size_t f = 0; f < bins_.size(); ++f) {
            const int nb = binner_.num_bins(static_cast<Eigen::Index>(f));
            if (nb < 2) continue;
            g.assign(static_cast<std::size_t>(nb), 0.0);
            h.assign(static_cast<std::size_t>(nb), 0.0);
            count.assign(static_cast<std::size_t>(nb), 0);
            const auto& codes = bins_[f];
            for (std::size_t r : leaf.rows) {
                g[codes[r]] += grad_[r];
                h[codes[r]] += hess_[r];
                ++count[codes[r]];
            }
            double gl = 0.0;
            double hl = 0.0;
            std::size_t cl = 0;
            for (int b = 0; b + 1 < nb; ++b) {
                gl += g[static_cast<std::size_t>(b)];
                hl += h[static_cast<std::size_t>(b)];
                cl += count[static_cast<std::size_t>(b)];
                const std::size_t cr = leaf.rows.size() - cl;
                if (cl < min_leaf) continue;
                if (cr < min_leaf) break;
                const double gain = leaf_score(gl, hl, lambda) +
                                    leaf_score(leaf.grad_sum - gl, leaf.hess_sum - hl, lambda) - parent;
                if (gain > 1e-12 && gain > best.gain) {
                    best = SplitCandidate{static_cast<int>(f), b, gain};
                }
            }
        }
        return best;
    }

    const BinnedColumns& bins_;
    const HistogramBinner& binner_;
    std::span<const double> grad_;
    std::span<const double> hess_;
    const GBDTConfig& config_;
};

double row_predict(const std::vector<RegressionTree>& trees, std::span<const double> row) {
    double s = 0.0;
    for (const auto& t : trees) s += t.predict(row);
    return s;
}

std::vector<double> row_of(const Matrix& m, Eigen::Index r) {
    std::vector<double> out(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) out[static_cast<std::size_t>(c)] = m(r, c);
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Base booster

double BoostedRegressor::predict(std::span<const double> row) const {
    return init_score + learning_rate * row_predict(trees, row);
}

Vector BoostedRegressor::predict(const Matrix& features) const {
    Vector out(features.rows());
    for (Eigen::Index r = 0; r < features.rows(); ++r) out[r] = predict(row_of(features, r));
    return out;
}

BoostedRegressor fit_base(const Matrix& features, std::span<const double> targets, const GBDTConfig& config) {
    config.validate();
    const auto n = targets.size();
    if (n == 0) fail(ErrorCode::EmptyData, "no training rows");
    if (static_cast<std::size_t>(features.rows()) != n) {
        fail(ErrorCode::DimensionMismatch, "features and targets differ in rows");
    }
    if (n < 2 * static_cast<std::size_t>(config.min_samples_leaf)) {
        fail(ErrorCode::EmptyData, "need at least 2*min_samples_leaf rows");
    }

    BoostedRegressor model;
    model.learning_rate = config.learning_rate;
    model.init_score = std::accumulate(targets.begin(), targets.end(), 0.0) / static_cast<double>(n);

    const HistogramBinner binner(features, config.histogram_bins);
    const auto bins = binner.transform(features);
    std::vector<double> pred(n, model.init_score);
    std::vector<double> grad(n);
    std::vector<double> hess(n, 2.0);

    for (int round = 0; round < config.num_rounds; ++round) {
        for (std::size_t i = 0; i < n; ++i) grad[i] = 2.0 * (pred[i] - targets[i]);
        RegressionTree tree = TreeGrower(bins, binner, grad, hess, config).grow();
        double loss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            pred[i] += config.learning_rate * tree.predict(row_of(features, static_cast<Eigen::Index>(i)));
            loss += (targets[i] - pred[i]) * (targets[i] - pred[i]);
        }
        loss /= static_cast<double>(n);
        if (!std::isfinite(loss)) fail(ErrorCode::NonFiniteLoss, "round " + std::to_string(round));
        model.trees.push_back(std::move(tree));
        model.train_loss.push_back(loss);
    }
    return model;
}

// ---------------------------------------------------------------------------
// Meta objective

GradHess meta_grad_hess(double y, const Vector& base_preds, const Vector& p, ConstraintKind kind) {
    if (base_preds.size() != p.size()) fail(ErrorCode::DimensionMismatch, "base predictions and outputs differ");
    if (!std::isfinite(y) || !base_preds.allFinite()) fail(ErrorCode::NonFiniteValue, "non-finite inputs");
    const Vector w = transform(p, kind).values();
    const double ens = w.dot(base_preds);
    const double resid = y - ens;

    GradHess out{Vector(p.size()), Vector(p.size())};
    switch (kind) {
        case ConstraintKind::Unconstrained:
            out.grad = -2.0 * resid * base_preds;
            out.hess = 2.0 * base_preds.array().square();
            break;
        case ConstraintKind::Affine: {
            const double c = 1.0 / p.sum();
            const Eigen::ArrayXd gap = ens - base_preds.array();  // yhat^E - yhat^(i)
            out.grad = (2.0 * resid * c) * gap;
            out.hess = 2.0 * c * c * gap * (3.0 * ens - 2.0 * y - base_preds.array());
            break;
        }
        case ConstraintKind::Convex: {
            const Eigen::ArrayXd gap = ens - base_preds.array();
            out.grad = 2.0 * resid * w.array() * gap;
            out.hess = out.grad.array() * (1.0 - 2.0 * w.array()) + 2.0 * w.array().square() * gap.square();
            break;
        }
    }
    return out;
}

Vector initial_scores(Eigen::Index num_outputs, ConstraintKind kind) {
    if (kind == ConstraintKind::Convex) return Vector::Zero(num_outputs);
    return Vector::Constant(num_outputs, 1.0 / static_cast<double>(num_outputs));
}

Vector BoostedMetaModel::raw_outputs(std::span<const double> row) const {
    Vector p = init_scores;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        p[i] += learning_rate * row_predict(forests[static_cast<std::size_t>(i)], row);
    }
    return p;
}

BoostedMetaModel fit_meta(const FeatureTable& side_info, const Matrix& base_preds, std::span<const double> targets,
                          ConstraintKind kind, const GBDTConfig& config) {
    config.validate();
    const auto n = targets.size();
    const Eigen::Index m = base_preds.cols();
    if (n == 0) fail(ErrorCode::EmptyData, "no meta training rows");
    if (m < 2) fail(ErrorCode::ConfigInvalid, "meta learner needs at least two base models");
    if (static_cast<std::size_t>(side_info.rows()) != n || static_cast<std::size_t>(base_preds.rows()) != n) {
        fail(ErrorCode::DimensionMismatch, "side info, base predictions and targets differ in rows");
    }

    BoostedMetaModel model;
    model.kind = kind;
    model.learning_rate = config.learning_rate;
    model.feature_names = side_info.names;
    model.init_scores = initial_scores(m, kind);
    model.forests.resize(static_cast<std::size_t>(m));

    const Matrix& x = side_info.values;
    const HistogramBinner binner(x, config.histogram_bins);
    const auto bins = binner.transform(x);

    Matrix p = model.init_scores.transpose().replicate(static_cast<Eigen::Index>(n), 1);
    std::vector<std::vector<double>> grad(static_cast<std::size_t>(m), std::vector<double>(n));
    std::vector<std::vector<double>> hess(static_cast<std::size_t>(m), std::vector<double>(n));

    for (int round = 0; round < config.num_rounds; ++round) {
        for (std::size_t r = 0; r < n; ++r) {
            const auto row = static_cast<Eigen::Index>(r);
            GradHess gh;
            try {
                gh = meta_grad_hess(targets[r], base_preds.row(row).transpose(), p.row(row).transpose(), kind);
            } catch (const Error& e) {
                fail(e.code(), e.detail() + " (round " + std::to_string(round) + ", row " +
                                   std::to_string(r) + ")");
            }
            for (Eigen::Index i = 0; i < m; ++i) {
                grad[static_cast<std::size_t>(i)][r] = gh.grad[i];
                hess[static_cast<std::size_t>(i)][r] = std::max(gh.hess[i], kHessianFloor);
            }
        }
        for (Eigen::Index i = 0; i < m; ++i) {
            auto idx = static_cast<std::size_t>(i);
            RegressionTree tree = TreeGrower(bins, binner, grad[idx], hess[idx], config).grow();
            for (std::size_t r = 0; r < n; ++r) {
                p(static_cast<Eigen::Index>(r), i) +=
                    config.learning_rate * tree.predict(row_of(x, static_cast<Eigen::Index>(r)));
            }
            model.forests[idx].push_back(std::move(tree));
        }

        double loss = 0.0;
        for (std::size_t r = 0; r < n; ++r) {
            const auto row = static_cast<Eigen::Index>(r);
            const Vector w = transform(p.row(row).transpose(), kind).values();
            const double e = targets[r] - w.dot(base_preds.row(row).transpose());
            loss += e * e;
        }
        loss /= static_cast<double>(n);
        if (!std::isfinite(loss)) {
            fail(ErrorCode::NonFiniteLoss, "ensemble loss diverged at round " + std::to_string(round));
        }
        model.train_loss.push_back(loss);
    }
    return model;
}

WeightVector predict_weights(const BoostedMetaModel& model, std::span<const double> side_info_row) {
    if (side_info_row.size() != model.feature_names.size()) {
        fail(ErrorCode::DimensionMismatch, "expected " + std::to_string(model.feature_names.size()) +
                                               " side-info features, got " +
                                               std::to_string(side_info_row.size()));
    }
    return transform(model.raw_outputs(side_info_row), model.kind);
}

// ---------------------------------------------------------------------------
// Serialization: line-oriented text, reals as hexfloats so round trips are exact.

namespace {

constexpr const char* kMetaMagic = "ctxens-gbdt-meta";
constexpr const char* kBaseMagic = "ctxens-gbdt-base";
constexpr int kFormatVersion = 1;

std::string hex(double v) {
    std::ostringstream os;
    os << std::hexfloat << v;
    return os.str();
}

double read_real(std::istream& in) {
    std::string tok;
    if (!(in >> tok)) fail(ErrorCode::ParseError, "unexpected end of model");
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size()) fail(ErrorCode::ParseError, "bad real '" + tok + "'");
    return v;
}

template <typename T>
T read_value(std::istream& in) {
    T v{};
    if (!(in >> v)) fail(ErrorCode::ParseError, "unexpected token in model");
    return v;
}

void expect(std::istream& in, const std::string& word) {
    std::string tok;
    if (!(in >> tok) || tok != word) fail(ErrorCode::ParseError, "expected '" + word + "', got '" + tok + "'");
}

void write_tree(std::ostream& out, const RegressionTree& tree) {
    out << "tree " << tree.nodes.size() << '\n';
    for (const auto& n : tree.nodes) {
        out << n.feature << ' ' << hex(n.threshold) << ' ' << n.left << ' ' << n.right << ' ' << hex(n.value) << '\n';
    }
}

RegressionTree read_tree(std::istream& in) {
    expect(in, "tree");
    const auto count = read_value<std::size_t>(in);
    RegressionTree tree;
    tree.nodes.resize(count);
    for (auto& n : tree.nodes) {
        n.feature = read_value<int>(in);
        n.threshold = read_real(in);
        n.left = read_value<int>(in);
        n.right = read_value<int>(in);
        n.value = read_real(in);
        const auto limit = static_cast<int>(count);
        if (!n.is_leaf() && (n.left <= 0 || n.right <= 0 || n.left >= limit || n.right >= limit)) {
            fail(ErrorCode::ParseError, "tree child index out of range");
        }
    }
    return tree;
}

void read_header(std::istream& in, const char* magic) {
    expect(in, magic);
    const int version = read_value<int>(in);
    if (version != kFormatVersion) fail(ErrorCode::ParseError, "unsupported model version " + std::to_string(version));
}

}  // namespace

void save(std::ostream& out, const BoostedMetaModel& model) {
    out << kMetaMagic << ' ' << kFormatVersion << '\n';
    out << "kind " << to_string(model.kind) << '\n';
    out << "learning_rate " << hex(model.learning_rate) << '\n';
    out << "features " << model.feature_names.size() << '\n';
    for (const auto& name : model.feature_names) {
        if (name.empty() || name.find_first_of(" \t\r\n") != std::string::npos) {
            fail(ErrorCode::IoError, "feature name '" + name + "' cannot be serialized");
        }
        out << name << '\n';
    }
    out << "outputs " << model.init_scores.size() << '\n';
    for (Eigen::Index i = 0; i < model.init_scores.size(); ++i) out << hex(model.init_scores[i]) << '\n';
    out << "rounds " << model.num_rounds() << '\n';
    for (const auto& forest : model.forests) {
        for (const auto& tree : forest) write_tree(out, tree);
    }
    out << "loss " << model.train_loss.size() << '\n';
    for (double l : model.train_loss) out << hex(l) << '\n';
}

BoostedMetaModel load_meta(std::istream& in) {
    read_header(in, kMetaMagic);
    BoostedMetaModel model;
    expect(in, "kind");
    model.kind = parse_constraint(read_value<std::string>(in));
    expect(in, "learning_rate");
    model.learning_rate = read_real(in);
    expect(in, "features");
    model.feature_names.resize(read_value<std::size_t>(in));
    for (auto& name : model.feature_names) name = read_value<std::string>(in);
    expect(in, "outputs");
    const auto m = read_value<Eigen::Index>(in);
    model.init_scores.resize(m);
    for (Eigen::Index i = 0; i < m; ++i) model.init_scores[i] = read_real(in);
    expect(in, "rounds");
    const auto rounds = read_value<std::size_t>(in);
    model.forests.resize(static_cast<std::size_t>(m));
    for (auto& forest : model.forests) {
        for (std::size_t r = 0; r < rounds; ++r) forest.push_back(read_tree(in));
    }
    expect(in, "loss");
    model.train_loss.resize(read_value<std::size_t>(in));
    for (auto& l : model.train_loss) l = read_real(in);
    return model;
}

void save(std::ostream& out, const BoostedRegressor& model) {
    out << kBaseMagic << ' ' << kFormatVersion << '\n';
    out << "init " << hex(model.init_score) << '\n';
    out << "learning_rate " << hex(model.learning_rate) << '\n';
    out << "trees " << model.trees.size() << '\n';
    for (const auto& tree : model.trees) write_tree(out, tree);
    out << "loss " << model.train_loss.size() << '\n';
    for (double l : model.train_loss) out << hex(l) << '\n';
}

BoostedRegressor load_regressor(std::istream& in) {
    read_header(in, kBaseMagic);
    BoostedRegressor model;
    expect(in, "init");
    model.init_score = read_real(in);
    expect(in, "learning_rate");
    model.learning_rate = read_real(in);
    expect(in, "trees");
    model.trees.resize(read_value<std::size_t>(in));
    for (auto& tree : model.trees) tree = read_tree(in);
    expect(in, "loss");
    model.train_loss.resize(read_value<std::size_t>(in));
    for (auto& l : model.train_loss) l = read_real(in);
    return model;
}

}  // namespace ctxens::gbdt
