#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "nfaslim/features.hpp"
#include "nfaslim/rng.hpp"

#include "json.hpp"

namespace nfaslim {

struct RfConfig {
    int n_trees = 32;
    int max_depth = 8;
    int min_leaf = 5;
    double bootstrap_fraction = 1.0; // sampled with replacement
    int features_per_split = 0;      // 0 = all enabled features
    uint64_t seed = 1;
};

inline void validate_config(const RfConfig& cfg) {
    if (cfg.n_trees < 1) throw std::invalid_argument("n_trees must be >= 1");
    if (cfg.max_depth < 1) throw std::invalid_argument("max_depth must be >= 1");
    if (cfg.min_leaf < 1) throw std::invalid_argument("min_leaf must be >= 1");
    if (!(cfg.bootstrap_fraction > 0.0) || cfg.bootstrap_fraction > 1.0)
        throw std::invalid_argument("bootstrap_fraction must be in (0, 1]");
    if (cfg.features_per_split < 0) throw std::invalid_argument("features_per_split must be >= 0");
}

/// Axis-aligned binary split node. feature < 0 marks a leaf; n0/n1 hold the
/// training class counts reaching the node (bootstrap multiplicities).
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int32_t left = -1;
    int32_t right = -1;
    uint64_t n0 = 0;
    uint64_t n1 = 0;
    bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
    std::vector<TreeNode> nodes; // nodes[0] is the root

    int predict(const FeatureVector& v) const {
        if (nodes.empty()) return 1;
        int32_t at = 0;
        while (!nodes[static_cast<std::size_t>(at)].is_leaf()) {
            const TreeNode& n = nodes[static_cast<std::size_t>(at)];
            at = v.get(n.feature) <= n.threshold ? n.left : n.right;
        }
        const TreeNode& leaf = nodes[static_cast<std::size_t>(at)];
        return leaf.n1 >= leaf.n0 ? 1 : 0;
    }
};

/// Trained forest. `degenerate` marks a constant model trained on a
/// single-class dataset; it predicts `constant_label` for every input.
struct ForestModel {
    std::vector<DecisionTree> trees;
    RfConfig config;
    FeatureMask mask;
    bool degenerate = false;
    int constant_label = 1;
    double theta = 0.0; // labeling threshold the training set carried

    std::size_t node_count() const {
        std::size_t n = 0;
        for (const auto& t : trees) n += t.nodes.size();
        return n;
    }
};

/// Majority vote over trees; ties keep the transition (label 1).
inline int predict(const ForestModel& model, const FeatureVector& v) {
    if (model.degenerate || model.trees.empty()) return model.constant_label;
    int votes1 = 0;
    for (const auto& t : model.trees) votes1 += t.predict(v);
    return 2 * votes1 >= static_cast<int>(model.trees.size()) ? 1 : 0;
}

namespace detail {

struct GiniBest {
    double impurity = std::numeric_limits<double>::infinity();
    int feature = -1;
    double threshold = 0.0;
};

inline double split_impurity(uint64_t l0, uint64_t l1, uint64_t r0, uint64_t r1) {
    auto gini = [](uint64_t a, uint64_t b) {
        double n = static_cast<double>(a + b);
        if (n == 0.0) return 0.0;
        double pa = a / n, pb = b / n;
        return 1.0 - pa * pa - pb * pb;
    };
    double nl = static_cast<double>(l0 + l1);
    double nr = static_cast<double>(r0 + r1);
    double n = nl + nr;
    return (nl / n) * gini(l0, l1) + (nr / n) * gini(r0, r1);
}

// Generic CART builder over explicit sample indices. Used whenever more than
// one feature is enabled or a per-split feature subset is requested.
class GenericTreeBuilder {
public:
    GenericTreeBuilder(const std::vector<LabeledSample>& samples, const std::vector<int>& features,
                       const RfConfig& cfg, Rng& rng)
        : samples_(samples), features_(features), cfg_(cfg), rng_(rng) {}

    DecisionTree build(std::vector<uint32_t> idx) {
        DecisionTree tree;
        tree.nodes.reserve(64);
        grow(tree, std::move(idx), 0);
        return tree;
    }

private:
    int32_t grow(DecisionTree& tree, std::vector<uint32_t> idx, int depth) {
        uint64_t n0 = 0, n1 = 0;
        for (uint32_t i : idx) (samples_[i].label ? n1 : n0) += 1;

        const int32_t at = static_cast<int32_t>(tree.nodes.size());
        tree.nodes.push_back({});
        tree.nodes.back().n0 = n0;
        tree.nodes.back().n1 = n1;

        if (n0 == 0 || n1 == 0 || depth >= cfg_.max_depth ||
            idx.size() < 2 * static_cast<std::size_t>(cfg_.min_leaf))
            return at;

        GiniBest best;
        for (int f : candidate_features()) {
            std::sort(idx.begin(), idx.end(), [&](uint32_t a, uint32_t b) {
                double va = samples_[a].features.get(f), vb = samples_[b].features.get(f);
                if (va != vb) return va < vb;
                return a < b;
            });
            uint64_t l0 = 0, l1 = 0;
            for (std::size_t i = 0; i + 1 < idx.size(); ++i) {
                (samples_[idx[i]].label ? l1 : l0) += 1;
                double v = samples_[idx[i]].features.get(f);
                double vn = samples_[idx[i + 1]].features.get(f);
                if (v == vn) continue;
                uint64_t left = l0 + l1;
                uint64_t right = idx.size() - left;
                if (left < static_cast<uint64_t>(cfg_.min_leaf) || right < static_cast<uint64_t>(cfg_.min_leaf))
                    continue;
                double imp = split_impurity(l0, l1, n0 - l0, n1 - l1);
                if (imp < best.impurity) best = {imp, f, v + (vn - v) / 2};
            }
        }
        if (best.feature < 0) return at;

        std::vector<uint32_t> left_idx, right_idx;
        left_idx.reserve(idx.size());
        right_idx.reserve(idx.size());
        for (uint32_t i : idx)
            (samples_[i].features.get(best.feature) <= best.threshold ? left_idx : right_idx).push_back(i);
        idx.clear();
        idx.shrink_to_fit();

        tree.nodes[static_cast<std::size_t>(at)].feature = best.feature;
        tree.nodes[static_cast<std::size_t>(at)].threshold = best.threshold;
        int32_t l = grow(tree, std::move(left_idx), depth + 1);
        tree.nodes[static_cast<std::size_t>(at)].left = l;
        int32_t r = grow(tree, std::move(right_idx), depth + 1);
        tree.nodes[static_cast<std::size_t>(at)].right = r;
        return at;
    }

    std::vector<int> candidate_features() {
        int k = cfg_.features_per_split;
        if (k <= 0 || k >= static_cast<int>(features_.size())) return features_;
        std::vector<int> pool = features_;
        std::vector<int> picked;
        picked.reserve(static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i) {
            std::size_t j = static_cast<std::size_t>(rng_.next_below(pool.size()));
            picked.push_back(pool[j]);
            pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(j));
        }
        std::sort(picked.begin(), picked.end());
        return picked;
    }

    const std::vector<LabeledSample>& samples_;
    const std::vector<int>& features_;
    const RfConfig& cfg_;
    Rng& rng_;
};

// Fast path for the common score-only configuration: the training set is
// sorted once, bootstraps become per-position multiplicities, and every tree
// node works on a contiguous range with prefix-sum class counts.
class ScoreTreeBuilder {
public:
    ScoreTreeBuilder(const std::vector<double>& sorted_values, const std::vector<uint8_t>& sorted_labels,
                     const RfConfig& cfg)
        : values_(sorted_values), labels_(sorted_labels), cfg_(cfg) {}

    DecisionTree build(const std::vector<uint32_t>& weights) {
        DecisionTree tree;
        tree.nodes.reserve(64);
        weights_ = &weights;
        // Prefix sums of weighted class counts over the sorted order.
        const std::size_t n = values_.size();
        pref0_.assign(n + 1, 0);
        pref1_.assign(n + 1, 0);
        for (std::size_t i = 0; i < n; ++i) {
            uint64_t w = weights[i];
            pref0_[i + 1] = pref0_[i] + (labels_[i] ? 0 : w);
            pref1_[i + 1] = pref1_[i] + (labels_[i] ? w : 0);
        }
        grow(tree, 0, n, 0);
        return tree;
    }

private:
    int32_t grow(DecisionTree& tree, std::size_t lo, std::size_t hi, int depth) {
        const uint64_t n0 = pref0_[hi] - pref0_[lo];
        const uint64_t n1 = pref1_[hi] - pref1_[lo];
        const uint64_t total = n0 + n1;

        const int32_t at = static_cast<int32_t>(tree.nodes.size());
        tree.nodes.push_back({});
        tree.nodes.back().n0 = n0;
        tree.nodes.back().n1 = n1;

        if (n0 == 0 || n1 == 0 || depth >= cfg_.max_depth || total < 2 * static_cast<uint64_t>(cfg_.min_leaf))
            return at;

        // Candidate thresholds are midpoints of adjacent distinct values among
        // the samples this bootstrap actually drew; zero-weight positions are
        // not part of the tree's sample.
        GiniBest best;
        std::size_t best_cut = 0;
        std::size_t last_drawn = hi;
        for (std::size_t i = lo; i < hi; ++i) {
            if ((*weights_)[i] == 0) continue;
            if (last_drawn != hi && values_[i] != values_[last_drawn]) {
                uint64_t l0 = pref0_[i] - pref0_[lo];
                uint64_t l1 = pref1_[i] - pref1_[lo];
                uint64_t left = l0 + l1;
                if (left >= static_cast<uint64_t>(cfg_.min_leaf) &&
                    total - left >= static_cast<uint64_t>(cfg_.min_leaf)) {
                    double imp = split_impurity(l0, l1, n0 - l0, n1 - l1);
                    if (imp < best.impurity) {
                        best = {imp, kFeatureScore,
                                values_[last_drawn] + (values_[i] - values_[last_drawn]) / 2};
                        best_cut = i;
                    }
                }
            }
            last_drawn = i;
        }
        if (best.feature < 0) return at;

        tree.nodes[static_cast<std::size_t>(at)].feature = best.feature;
        tree.nodes[static_cast<std::size_t>(at)].threshold = best.threshold;
        int32_t l = grow(tree, lo, best_cut, depth + 1);
        tree.nodes[static_cast<std::size_t>(at)].left = l;
        int32_t r = grow(tree, best_cut, hi, depth + 1);
        tree.nodes[static_cast<std::size_t>(at)].right = r;
        return at;
    }

    const std::vector<double>& values_;
    const std::vector<uint8_t>& labels_;
    const RfConfig& cfg_;
    const std::vector<uint32_t>* weights_ = nullptr;
    std::vector<uint64_t> pref0_, pref1_;
};

} // namespace detail

/// Trains a random forest on a threshold-labeled set. Deterministic for a
/// fixed sample order and seed. A single-class set yields a degenerate
/// constant model (flagged, not an error) so pipelines keep running when
/// theta falls outside the score range.
inline ForestModel train_forest(const TrainingSet& set, const RfConfig& cfg) {
    validate_config(cfg);
    if (set.samples.empty()) throw std::invalid_argument("train_forest: empty training set");
    if (set.mask.count() == 0) throw std::invalid_argument("train_forest: empty feature mask");

    ForestModel model;
    model.config = cfg;
    model.mask = set.mask;
    model.theta = set.theta;

    uint64_t n1 = 0;
    for (const auto& s : set.samples) n1 += static_cast<uint64_t>(s.label);
    if (n1 == 0 || n1 == set.samples.size()) {
        model.degenerate = true;
        model.constant_label = n1 == 0 ? 0 : 1;
        return model;
    }

    const std::size_t n = set.samples.size();
    const std::size_t draws = std::max<std::size_t>(1, static_cast<std::size_t>(
                                                           std::llround(cfg.bootstrap_fraction * static_cast<double>(n))));
    const std::vector<int> features = set.mask.enabled_features();
    const bool score_only = features.size() == 1 && features[0] == kFeatureScore;

    model.trees.resize(static_cast<std::size_t>(cfg.n_trees));

    if (score_only) {
        std::vector<uint32_t> order(n);
        std::iota(order.begin(), order.end(), 0u);
        std::sort(order.begin(), order.end(), [&](uint32_t a, uint32_t b) {
            double va = set.samples[a].features.score, vb = set.samples[b].features.score;
            if (va != vb) return va < vb;
            return a < b;
        });
        std::vector<double> values(n);
        std::vector<uint8_t> labels(n);
        std::vector<uint32_t> rank(n);
        for (std::size_t i = 0; i < n; ++i) {
            values[i] = set.samples[order[i]].features.score;
            labels[i] = static_cast<uint8_t>(set.samples[order[i]].label);
            rank[order[i]] = static_cast<uint32_t>(i);
        }
        detail::ScoreTreeBuilder builder(values, labels, cfg);
        std::vector<uint32_t> weights(n);
        for (int t = 0; t < cfg.n_trees; ++t) {
            Rng rng = Rng::derive(cfg.seed, static_cast<uint64_t>(t));
            std::fill(weights.begin(), weights.end(), 0u);
            for (std::size_t d = 0; d < draws; ++d) weights[rank[rng.next_below(n)]] += 1;
            model.trees[static_cast<std::size_t>(t)] = builder.build(weights);
        }
    } else {
        for (int t = 0; t < cfg.n_trees; ++t) {
            Rng rng = Rng::derive(cfg.seed, static_cast<uint64_t>(t));
            std::vector<uint32_t> idx(draws);
            for (std::size_t d = 0; d < draws; ++d) idx[d] = static_cast<uint32_t>(rng.next_below(n));
            detail::GenericTreeBuilder builder(set.samples, features, cfg, rng);
            model.trees[static_cast<std::size_t>(t)] = builder.build(std::move(idx));
        }
    }
    return model;
}

struct CvResult {
    double mean_accuracy = 0.0;
    std::vector<double> fold_accuracies;
};

/// Stratified k-fold cross-validation; accuracy is the fraction of held-out
/// samples the fold model classifies as their threshold label. Fold
/// assignment and fold-model seeds derive from cfg.seed.
inline CvResult cross_validate(const TrainingSet& set, int k, const RfConfig& cfg) {
    validate_config(cfg);
    if (k < 2) throw std::invalid_argument("cross_validate: k must be >= 2");
    if (static_cast<std::size_t>(k) > set.samples.size())
        throw std::invalid_argument("cross_validate: k exceeds sample count");

    const std::size_t n = set.samples.size();
    std::vector<int> fold(n, 0);
    Rng rng = Rng::derive(cfg.seed, 0xC5F0ULL);
    for (int cls = 0; cls <= 1; ++cls) {
        std::vector<uint32_t> idx;
        for (std::size_t i = 0; i < n; ++i)
            if (set.samples[i].label == cls) idx.push_back(static_cast<uint32_t>(i));
        for (std::size_t i = 0; i + 1 < idx.size(); ++i) {
            std::size_t j = i + static_cast<std::size_t>(rng.next_below(idx.size() - i));
            std::swap(idx[i], idx[j]);
        }
        for (std::size_t i = 0; i < idx.size(); ++i) fold[idx[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
    }

    CvResult result;
    result.fold_accuracies.reserve(static_cast<std::size_t>(k));
    for (int f = 0; f < k; ++f) {
        TrainingSet train;
        train.theta = set.theta;
        train.mask = set.mask;
        std::vector<uint32_t> test_idx;
        for (std::size_t i = 0; i < n; ++i) {
            if (fold[i] == f)
                test_idx.push_back(static_cast<uint32_t>(i));
            else
                train.samples.push_back(set.samples[i]);
        }
        RfConfig fold_cfg = cfg;
        fold_cfg.seed = Rng::derive(cfg.seed, 0xF01D0000ULL + static_cast<uint64_t>(f)).next_u64();
        double acc = 1.0;
        if (!train.samples.empty() && !test_idx.empty()) {
            ForestModel m = train_forest(train, fold_cfg);
            std::size_t correct = 0;
            for (uint32_t i : test_idx)
                if (predict(m, set.samples[i].features) == set.samples[i].label) ++correct;
            acc = static_cast<double>(correct) / static_cast<double>(test_idx.size());
        }
        result.fold_accuracies.push_back(acc);
    }
    result.mean_accuracy =
        std::accumulate(result.fold_accuracies.begin(), result.fold_accuracies.end(), 0.0) /
        static_cast<double>(result.fold_accuracies.size());
    return result;
}

// ---------------------------------------------------------------------------
// Model persistence (versioned JSON)

inline nlohmann::json model_to_json(const ForestModel& model) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& tree : model.trees) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& n : tree.nodes)
            nodes.push_back({n.feature, n.threshold, n.left, n.right, n.n0, n.n1});
        trees.push_back({{"nodes", std::move(nodes)}});
    }
    std::vector<std::string> mask_names;
    for (int f : model.mask.enabled_features()) mask_names.emplace_back(feature_name(f));
    return nlohmann::json{
        {"format_version", 1},
        {"kind", "random_forest"},
        {"config",
         {{"n_trees", model.config.n_trees},
          {"max_depth", model.config.max_depth},
          {"min_leaf", model.config.min_leaf},
          {"bootstrap_fraction", model.config.bootstrap_fraction},
          {"features_per_split", model.config.features_per_split},
          {"seed", model.config.seed}}},
        {"mask", mask_names},
        {"degenerate", model.degenerate},
        {"constant_label", model.constant_label},
        {"theta", model.theta},
        {"trees", std::move(trees)},
    };
}

inline ForestModel model_from_json(const nlohmann::json& j) {
    if (!j.contains("format_version") || j.at("format_version").get<int>() != 1)
        throw std::invalid_argument("unsupported model format version");
    if (j.at("kind").get<std::string>() != "random_forest")
        throw std::invalid_argument("unsupported model kind");
    ForestModel model;
    const auto& c = j.at("config");
    model.config.n_trees = c.at("n_trees").get<int>();
    model.config.max_depth = c.at("max_depth").get<int>();
    model.config.min_leaf = c.at("min_leaf").get<int>();
    model.config.bootstrap_fraction = c.at("bootstrap_fraction").get<double>();
    model.config.features_per_split = c.at("features_per_split").get<int>();
    model.config.seed = c.at("seed").get<uint64_t>();
    FeatureMask mask(0);
    for (const auto& name : j.at("mask")) {
        bool found = false;
        for (int f = 0; f < kFeatureCount; ++f)
            if (name.get<std::string>() == feature_name(f)) {
                mask.enable(f);
                found = true;
            }
        if (!found) throw std::invalid_argument("unknown feature in model mask");
    }
    model.mask = mask;
    model.degenerate = j.at("degenerate").get<bool>();
    model.constant_label = j.at("constant_label").get<int>();
    model.theta = j.at("theta").get<double>();
    for (const auto& tj : j.at("trees")) {
        DecisionTree tree;
        for (const auto& nj : tj.at("nodes")) {
            TreeNode n;
            n.feature = nj.at(0).get<int>();
            n.threshold = nj.at(1).get<double>();
            n.left = nj.at(2).get<int32_t>();
            n.right = nj.at(3).get<int32_t>();
            n.n0 = nj.at(4).get<uint64_t>();
            n.n1 = nj.at(5).get<uint64_t>();
            tree.nodes.push_back(n);
        }
        model.trees.push_back(std::move(tree));
    }
    return model;
}

} // namespace nfaslim
