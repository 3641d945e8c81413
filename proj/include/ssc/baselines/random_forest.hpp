#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "ssc/baselines/sparse.hpp"
#include "ssc/models/trainer.hpp"
#include "ssc/random.hpp"

namespace ssc {

struct RfConfig {
    std::size_t trees = 50;
    std::size_t max_depth = 16;  // 0 = unlimited
    std::size_t min_samples_split = 2;
    std::size_t max_features = 0;  // 0 = floor(sqrt(n_features))
    bool bootstrap = true;
    std::uint64_t seed = 0;
};

inline double gini(double n_neg, double n_pos) {
    const double n = n_neg + n_pos;
    if (n <= 0) return 0;
    const double a = n_neg / n, b = n_pos / n;
    return 1 - a * a - b * b;
}

struct TreeNode {
    std::int32_t feature = -1;  // -1 marks a leaf
    float threshold = 0;        // x <= threshold goes left
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::array<float, 2> counts{};  // training samples per class reaching the node
};

struct DecisionTree {
    std::vector<TreeNode> nodes;

    const TreeNode& leaf(const SparseVector& x) const {
        std::size_t n = 0;
        while (nodes[n].feature >= 0) {
            const auto v = static_cast<float>(x.get(static_cast<std::uint32_t>(nodes[n].feature)));
            n = static_cast<std::size_t>(v <= nodes[n].threshold ? nodes[n].left : nodes[n].right);
        }
        return nodes[n];
    }

    Label predict(const SparseVector& x) const {
        const auto& c = leaf(x).counts;
        return decide(c[0], c[1]);
    }
};

struct RfModel {
    std::size_t dim = 0;
    std::vector<DecisionTree> trees;

    std::size_t positive_votes(const SparseVector& x) const {
        std::size_t votes = 0;
        for (const auto& t : trees) votes += t.predict(x) == Label::positive;
        return votes;
    }

    /// Majority over trees; the probability is the positive vote share.
    Prediction predict(const SparseVector& x) const {
        const std::size_t pos = positive_votes(x);
        const double p = trees.empty() ? 0.0 : static_cast<double>(pos) / static_cast<double>(trees.size());
        return {decide(1 - p, p), p};
    }
};

namespace detail {

class TreeBuilder {
public:
    TreeBuilder(const std::vector<std::vector<float>>& columns, std::span<const Label> y, std::size_t dim,
                const RfConfig& cfg, Rng& rng)
        : cols_(columns), y_(y), dim_(dim), cfg_(cfg), rng_(rng) {
        mtry_ = cfg.max_features ? std::min(cfg.max_features, dim)
                                 : std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(dim))));
        features_.resize(dim);
        for (std::size_t j = 0; j < dim; ++j) features_[j] = static_cast<std::uint32_t>(j);
    }

    DecisionTree build(std::vector<std::uint32_t> samples) {
        DecisionTree t;
        tree_ = &t;
        grow(samples, 0);
        return t;
    }

private:
    struct Split {
        bool found = false;
        std::uint32_t feature = 0;
        float threshold = 0;
        double impurity = 0;
    };

    std::int32_t grow(std::vector<std::uint32_t>& samples, std::size_t depth) {
        TreeNode node;
        for (auto s : samples) node.counts[static_cast<std::size_t>(class_index(y_[s]))] += 1;
        const auto id = static_cast<std::int32_t>(tree_->nodes.size());
        tree_->nodes.push_back(node);

        const bool pure = node.counts[0] == 0 || node.counts[1] == 0;
        const bool depth_cap = cfg_.max_depth != 0 && depth >= cfg_.max_depth;
        if (pure || depth_cap || samples.size() < std::max<std::size_t>(2, cfg_.min_samples_split)) return id;

        const Split best = find_split(samples, node.counts);
        if (!best.found) return id;

        std::vector<std::uint32_t> left, right;
        const auto& col = cols_[best.feature];
        for (auto s : samples) (col[s] <= best.threshold ? left : right).push_back(s);
        samples.clear();
        samples.shrink_to_fit();
        const auto l = grow(left, depth + 1);
        const auto r = grow(right, depth + 1);
        auto& n = tree_->nodes[static_cast<std::size_t>(id)];
        n.feature = static_cast<std::int32_t>(best.feature);
        n.threshold = best.threshold;
        n.left = l;
        n.right = r;
        return id;
    }

    // Candidates are drawn in a random order; the first mtry are always
    // scored and further ones only while no valid split has been seen.
    Split find_split(const std::vector<std::uint32_t>& samples, const std::array<float, 2>& totals) {
        Split best;
        std::vector<std::pair<float, int>> vals(samples.size());
        for (std::size_t drawn = 0; drawn < dim_; ++drawn) {
            if (drawn >= mtry_ && best.found) break;
            const std::size_t pick = drawn + static_cast<std::size_t>(rng_.below(dim_ - drawn));
            std::swap(features_[drawn], features_[pick]);
            const std::uint32_t f = features_[drawn];
            const auto& col = cols_[f];
            const float first = col[samples[0]];
            bool constant = true;
            for (auto s : samples)
                if (col[s] != first) {
                    constant = false;
                    break;
                }
            if (constant) continue;
            for (std::size_t i = 0; i < samples.size(); ++i)
                vals[i] = {col[samples[i]], class_index(y_[samples[i]])};
            std::sort(vals.begin(), vals.end());
            double left[2] = {0, 0};
            const double n = static_cast<double>(samples.size());
            for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
                left[vals[i].second] += 1;
                if (vals[i].first == vals[i + 1].first) continue;
                const double nl = static_cast<double>(i + 1), nr = n - nl;
                const double imp = (nl * gini(left[0], left[1]) +
                                    nr * gini(totals[0] - left[0], totals[1] - left[1])) / n;
                if (!best.found || imp < best.impurity) {
                    const float a = vals[i].first, b = vals[i + 1].first;
                    float thr = static_cast<float>((static_cast<double>(a) + static_cast<double>(b)) / 2);
                    if (!(a <= thr && thr < b)) thr = a;
                    best = {true, f, thr, imp};
                }
            }
        }
        return best;
    }

    const std::vector<std::vector<float>>& cols_;
    std::span<const Label> y_;
    std::size_t dim_;
    const RfConfig& cfg_;
    Rng& rng_;
    std::size_t mtry_ = 1;
    std::vector<std::uint32_t> features_;
    DecisionTree* tree_ = nullptr;
};

}  // namespace detail

/// Each tree draws its own bootstrap sample and candidate features from a
/// generator seeded by (seed, tree index), so trees are independent of the
/// order they are built in.
inline RfModel train_rf(std::span<const SparseVector> x, std::span<const Label> y, std::size_t dim,
                        const RfConfig& cfg) {
    if (x.empty()) throw Error("random forest: empty training set");
    if (x.size() != y.size()) throw Error("random forest: feature/label count mismatch");
    if (dim == 0) throw Error("random forest: zero-dimensional features");
    if (cfg.trees == 0) throw Error("random forest: tree count must be positive");

    std::vector<std::vector<float>> cols(dim, std::vector<float>(x.size(), 0.0f));
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t k = 0; k < x[i].nnz(); ++k)
            if (x[i].index[k] < dim) cols[x[i].index[k]][i] = static_cast<float>(x[i].value[k]);

    RfModel m;
    m.dim = dim;
    for (std::size_t t = 0; t < cfg.trees; ++t) {
        Rng rng(mix_seed(cfg.seed, "tree" + std::to_string(t)));
        std::vector<std::uint32_t> samples(x.size());
        for (std::size_t i = 0; i < x.size(); ++i)
            samples[i] = static_cast<std::uint32_t>(cfg.bootstrap ? rng.below(x.size()) : i);
        detail::TreeBuilder builder(cols, y, dim, cfg, rng);
        m.trees.push_back(builder.build(std::move(samples)));
    }
    return m;
}

}  // namespace ssc
