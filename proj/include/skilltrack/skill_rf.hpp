#ifndef SKILLTRACK_SKILL_RF_HPP
#define SKILLTRACK_SKILL_RF_HPP

// Binary random forest (CART trees, Gini impurity, bootstrap) and the
// stratified cross-validation used to score skill classification.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "skilltrack/data_model.hpp"
#include "skilltrack/error.hpp"

namespace skilltrack {

/// Rows are samples; every row has the same length.
using FeatureMatrix = std::vector<std::vector<double>>;
using Labels = std::vector<SkillClass>;

struct ForestConfig {
    int n_trees = 500;
    int max_depth = 0;           // 0 = unlimited
    int features_per_split = 0;  // 0 = ceil(sqrt(F))
    int min_leaf = 1;
    std::uint64_t seed = 0;
    bool tie_votes_high = false;  // a split vote goes to Low unless set

    int resolved_features_per_split(std::size_t num_features) const {
        return features_per_split > 0 ? features_per_split : int(std::ceil(std::sqrt(double(num_features))));
    }

    void validate(std::size_t num_features) const {
        if (n_trees < 1) throw ValidationError("forest: n_trees must be >= 1");
        if (max_depth < 0) throw ValidationError("forest: max_depth must be >= 0");
        if (min_leaf < 1) throw ValidationError("forest: min_leaf must be >= 1");
        int k = resolved_features_per_split(num_features);
        if (k < 1 || std::size_t(k) > num_features)
            throw ValidationError("forest: features_per_split must lie in [1, F]");
    }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline double gini(std::size_t high, std::size_t total) {
    if (total == 0) return 0;
    double p = double(high) / double(total);
    return 2 * p * (1 - p);
}

}  // namespace detail

class DecisionTree {
public:
    struct Node {
        int feature = -1;  // -1 marks a leaf
        double threshold = 0;
        int left = -1, right = -1;
        std::uint32_t low = 0, high = 0;  // training counts reaching the node
        SkillClass leaf_class = SkillClass::Low;
    };

    /// Grows a tree on `rows` (indices into X, repeats allowed).
    static DecisionTree grow(const FeatureMatrix& X, const Labels& y, std::vector<std::size_t> rows,
                             const ForestConfig& cfg, std::mt19937_64& rng) {
        DecisionTree tree;
        tree.num_features_ = X.empty() ? 0 : X.front().size();
        tree.build(X, y, rows, 0, cfg, rng);
        return tree;
    }

    SkillClass predict(std::span<const double> x) const {
        if (x.size() != num_features_) throw ValidationError("tree: feature dimension mismatch");
        int i = 0;
        while (nodes_[std::size_t(i)].feature >= 0) {
            const Node& n = nodes_[std::size_t(i)];
            i = x[std::size_t(n.feature)] <= n.threshold ? n.left : n.right;
        }
        return nodes_[std::size_t(i)].leaf_class;
    }

    const std::vector<Node>& nodes() const { return nodes_; }

    nlohmann::json to_json() const {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& n : nodes_)
            arr.push_back({n.feature, n.threshold, n.left, n.right, n.low, n.high, n.leaf_class == SkillClass::High});
        return arr;
    }

private:
    int build(const FeatureMatrix& X, const Labels& y, std::vector<std::size_t>& rows, int depth,
              const ForestConfig& cfg, std::mt19937_64& rng) {
        const int index = int(nodes_.size());
        nodes_.emplace_back();
        Node node;
        for (auto r : rows) (y[r] == SkillClass::High ? node.high : node.low)++;
        node.leaf_class = node.high > node.low ? SkillClass::High : SkillClass::Low;

        const std::size_t n = rows.size();
        const bool pure = node.high == 0 || node.low == 0;
        const bool depth_capped = cfg.max_depth > 0 && depth >= cfg.max_depth;
        if (pure || depth_capped || n < 2 * std::size_t(cfg.min_leaf)) {
            nodes_[std::size_t(index)] = node;
            return index;
        }

        // Features considered at this node: a random subset without replacement.
        std::vector<std::size_t> features(num_features_);
        std::iota(features.begin(), features.end(), 0);
        const auto k = std::size_t(cfg.resolved_features_per_split(num_features_));
        for (std::size_t i = 0; i < k; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, features.size() - 1);
            std::swap(features[i], features[pick(rng)]);
        }

        const double parent = detail::gini(node.high, n);
        double best_impurity = parent;
        int best_feature = -1;
        double best_threshold = 0;
        std::vector<std::size_t> order(rows);
        for (std::size_t fi = 0; fi < k; ++fi) {
            const std::size_t f = features[fi];
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return X[a][f] < X[b][f] || (X[a][f] == X[b][f] && a < b);
            });
            std::size_t left_high = 0;
            for (std::size_t i = 0; i + 1 < n; ++i) {
                if (y[order[i]] == SkillClass::High) ++left_high;
                const std::size_t left_n = i + 1, right_n = n - left_n;
                double lo = X[order[i]][f], hi = X[order[i + 1]][f];
                if (!(lo < hi)) continue;
                if (left_n < std::size_t(cfg.min_leaf) || right_n < std::size_t(cfg.min_leaf)) continue;
                double impurity = (double(left_n) * detail::gini(left_high, left_n) +
                                   double(right_n) * detail::gini(node.high - left_high, right_n)) /
                                  double(n);
                if (impurity < best_impurity - 1e-12) {
                    best_impurity = impurity;
                    best_feature = int(f);
                    best_threshold = lo + (hi - lo) / 2;
                }
            }
        }
        if (best_feature < 0) {
            nodes_[std::size_t(index)] = node;
            return index;
        }

        std::vector<std::size_t> left_rows, right_rows;
        for (auto r : rows) (X[r][std::size_t(best_feature)] <= best_threshold ? left_rows : right_rows).push_back(r);
        node.feature = best_feature;
        node.threshold = best_threshold;
        nodes_[std::size_t(index)] = node;
        int l = build(X, y, left_rows, depth + 1, cfg, rng);
        int r = build(X, y, right_rows, depth + 1, cfg, rng);
        nodes_[std::size_t(index)].left = l;
        nodes_[std::size_t(index)].right = r;
        return index;
    }

    std::vector<Node> nodes_;
    std::size_t num_features_ = 0;
};

struct ForestVote {
    SkillClass predicted = SkillClass::Low;
    double high_fraction = 0;  // share of trees voting High
};

class RandomForest {
public:
    /// Each tree gets its own generator seeded from (seed, tree index), so
    /// results do not depend on training order.
    static RandomForest train(const FeatureMatrix& X, const Labels& y, const ForestConfig& cfg) {
        if (X.size() != y.size() || X.empty()) throw ValidationError("forest: X and y must be non-empty and aligned");
        const std::size_t f = X.front().size();
        for (const auto& row : X) {
            if (row.size() != f) throw ValidationError("forest: ragged feature matrix");
            for (double v : row)
                if (!std::isfinite(v)) throw ValidationError("forest: feature values must be finite");
        }
        cfg.validate(f);
        auto highs = std::count(y.begin(), y.end(), SkillClass::High);
        if (highs == 0 || highs == std::ptrdiff_t(y.size()))
            throw TrainingError("forest: training labels contain a single class");

        RandomForest forest;
        forest.cfg_ = cfg;
        forest.num_features_ = f;
        for (int t = 0; t < cfg.n_trees; ++t) {
            std::uniform_int_distribution<std::size_t> draw(0, X.size() - 1);
            std::mt19937_64 rng(detail::splitmix64(cfg.seed ^ detail::splitmix64(std::uint64_t(t))));
            std::vector<std::size_t> bootstrap(X.size());
            for (auto& b : bootstrap) b = draw(rng);
            forest.trees_.push_back(DecisionTree::grow(X, y, std::move(bootstrap), cfg, rng));
        }
        return forest;
    }

    ForestVote predict(std::span<const double> x) const {
        if (x.size() != num_features_)
            throw ValidationError("forest: expected " + std::to_string(num_features_) + " features, got " +
                                  std::to_string(x.size()));
        std::size_t high = 0;
        for (const auto& t : trees_)
            if (t.predict(x) == SkillClass::High) ++high;
        ForestVote v;
        v.high_fraction = double(high) / double(trees_.size());
        const std::size_t low = trees_.size() - high;
        v.predicted = high > low || (high == low && cfg_.tie_votes_high) ? SkillClass::High : SkillClass::Low;
        return v;
    }

    const std::vector<DecisionTree>& trees() const { return trees_; }
    std::size_t num_features() const { return num_features_; }

    nlohmann::json to_json() const {
        nlohmann::json trees = nlohmann::json::array();
        for (const auto& t : trees_) trees.push_back(t.to_json());
        return {{"num_features", num_features_}, {"trees", trees}};
    }

private:
    ForestConfig cfg_;
    std::size_t num_features_ = 0;
    std::vector<DecisionTree> trees_;
};

/// Confusion counts with High as the positive class.
struct Confusion {
    std::int64_t tp = 0, fn = 0, fp = 0, tn = 0;
    std::int64_t total() const { return tp + fn + fp + tn; }
};

struct EvalReport {
    double precision = 0, recall = 0, accuracy = 0, kappa = 0, p_value = 1;
};

inline double accuracy(const Confusion& c) {
    if (c.total() == 0) throw InsufficientDataError("accuracy of an empty confusion matrix");
    return double(c.tp + c.tn) / double(c.total());
}

/// Cohen's kappa with chance agreement from the marginals, computed in integer
/// arithmetic up to the final division. Returns 0 when chance agreement is 1.
inline double cohen_kappa(const Confusion& c) {
    const std::int64_t n = c.total();
    if (n == 0) throw InsufficientDataError("kappa of an empty confusion matrix");
    const std::int64_t pred_high = c.tp + c.fp, pred_low = c.fn + c.tn;
    const std::int64_t true_high = c.tp + c.fn, true_low = c.fp + c.tn;
    const std::int64_t chance = pred_high * true_high + pred_low * true_low;
    const std::int64_t denom = n * n - chance;
    if (denom == 0) return 0.0;
    return double(n * (c.tp + c.tn) - chance) / double(denom);
}

inline EvalReport report_from(const Confusion& c, double p_value) {
    EvalReport r;
    r.precision = c.tp + c.fp > 0 ? double(c.tp) / double(c.tp + c.fp) : 0.0;
    r.recall = c.tp + c.fn > 0 ? double(c.tp) / double(c.tp + c.fn) : 0.0;
    r.accuracy = accuracy(c);
    r.kappa = cohen_kappa(c);
    r.p_value = p_value;
    return r;
}

struct CrossValidationConfig {
    int folds = 5;
    int permutations = 10000;
    std::uint64_t seed = 0;
};

struct Fold {
    std::vector<std::size_t> test;
    std::vector<std::size_t> train;             // before oversampling
    std::vector<std::size_t> train_oversampled;
};

struct CrossValidationResult {
    EvalReport report;
    Confusion confusion;
    std::vector<SkillClass> predictions;  // held-out prediction per sample
    std::vector<Fold> folds;
    int permutations = 0;
    std::int64_t permutations_at_least_observed = 0;
};

/// Stratified split: each class is shuffled and dealt round-robin across folds.
inline std::vector<std::vector<std::size_t>> stratified_folds(const Labels& y, int k, std::uint64_t seed) {
    std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
    std::mt19937_64 rng(seed);
    std::size_t next = 0;
    for (SkillClass cls : {SkillClass::Low, SkillClass::High}) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < y.size(); ++i)
            if (y[i] == cls) idx.push_back(i);
        std::shuffle(idx.begin(), idx.end(), rng);
        for (auto i : idx) folds[next++ % std::size_t(k)].push_back(i);
    }
    for (auto& f : folds) std::sort(f.begin(), f.end());
    return folds;
}

/// Pads the minority class of `train` with draws (with replacement) from itself
/// until both classes have equal counts.
inline std::vector<std::size_t> oversample(const std::vector<std::size_t>& train, const Labels& y,
                                           std::mt19937_64& rng) {
    std::vector<std::size_t> low, high;
    for (auto i : train) (y[i] == SkillClass::High ? high : low).push_back(i);
    std::vector<std::size_t> out = train;
    auto& minority = low.size() < high.size() ? low : high;
    const std::size_t deficit = std::max(low.size(), high.size()) - minority.size();
    if (minority.empty()) return out;
    std::uniform_int_distribution<std::size_t> pick(0, minority.size() - 1);
    for (std::size_t i = 0; i < deficit; ++i) out.push_back(minority[pick(rng)]);
    return out;
}

namespace detail {

inline void assert_no_leakage(const Fold& fold) {
    for (auto i : fold.train_oversampled)
        if (std::binary_search(fold.test.begin(), fold.test.end(), i))
            throw std::logic_error("cross-validation leak: held-out sample " + std::to_string(i) + " in training set");
}

/// Held-out predictions for labels `y` on the fixed `test_folds`. When
/// `lenient`, single-class training folds predict that class instead of failing.
inline std::vector<SkillClass> held_out_predictions(const FeatureMatrix& X, const Labels& y,
                                                    const std::vector<std::vector<std::size_t>>& test_folds,
                                                    const ForestConfig& forest_cfg, std::uint64_t seed, bool lenient,
                                                    std::vector<Fold>* folds_out) {
    std::vector<SkillClass> pred(y.size(), SkillClass::Low);
    for (std::size_t k = 0; k < test_folds.size(); ++k) {
        Fold fold;
        fold.test = test_folds[k];
        for (std::size_t i = 0; i < y.size(); ++i)
            if (!std::binary_search(fold.test.begin(), fold.test.end(), i)) fold.train.push_back(i);
        std::mt19937_64 rng(splitmix64(seed ^ (0x5eedULL + k)));
        fold.train_oversampled = oversample(fold.train, y, rng);
        assert_no_leakage(fold);

        FeatureMatrix Xt;
        Labels yt;
        for (auto i : fold.train_oversampled) {
            Xt.push_back(X[i]);
            yt.push_back(y[i]);
        }
        auto highs = std::count(yt.begin(), yt.end(), SkillClass::High);
        if (highs == 0 || highs == std::ptrdiff_t(yt.size())) {
            if (!lenient) throw ConsistencyError("stratification error: training fold " + std::to_string(k) +
                                                 " contains a single class");
            for (auto i : fold.test) pred[i] = yt.empty() ? SkillClass::Low : yt.front();
        } else {
            ForestConfig cfg = forest_cfg;
            cfg.seed = splitmix64(forest_cfg.seed + k);
            auto forest = RandomForest::train(Xt, yt, cfg);
            for (auto i : fold.test) pred[i] = forest.predict(X[i]).predicted;
        }
        if (folds_out) folds_out->push_back(std::move(fold));
    }
    return pred;
}

inline Confusion confusion_of(const Labels& truth, const std::vector<SkillClass>& pred) {
    Confusion c;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        bool t = truth[i] == SkillClass::High, p = pred[i] == SkillClass::High;
        (t ? (p ? c.tp : c.fn) : (p ? c.fp : c.tn))++;
    }
    return c;
}

}  // namespace detail

/// Stratified k-fold evaluation with in-fold minority oversampling. Held-out
/// predictions are pooled into one confusion matrix. The p-value is a
/// label-permutation test on accuracy over the same folds:
/// (1 + #{permuted accuracy >= observed}) / (permutations + 1).
inline CrossValidationResult cross_validate(const FeatureMatrix& X, const Labels& y, const ForestConfig& forest_cfg,
                                            const CrossValidationConfig& cv) {
    if (cv.folds < 2) throw ValidationError("cross-validation needs at least 2 folds");
    if (cv.permutations < 0) throw ValidationError("permutation count must be >= 0");
    if (X.size() != y.size()) throw ValidationError("cross-validation: X and y differ in length");
    if (X.size() < std::size_t(cv.folds)) throw InsufficientDataError("cross-validation: fewer samples than folds");
    for (SkillClass cls : {SkillClass::Low, SkillClass::High})
        if (std::count(y.begin(), y.end(), cls) < 2)
            throw TrainingError(std::string("cross-validation: class '") + to_string(cls) + "' has fewer than 2 samples");

    const auto test_folds = stratified_folds(y, cv.folds, cv.seed);
    CrossValidationResult res;
    res.predictions = detail::held_out_predictions(X, y, test_folds, forest_cfg, cv.seed, false, &res.folds);
    res.confusion = detail::confusion_of(y, res.predictions);
    const std::int64_t observed_correct = res.confusion.tp + res.confusion.tn;

    std::mt19937_64 perm_rng(detail::splitmix64(cv.seed ^ 0x9e37ULL));
    Labels shuffled = y;
    for (int p = 0; p < cv.permutations; ++p) {
        std::shuffle(shuffled.begin(), shuffled.end(), perm_rng);
        auto pred = detail::held_out_predictions(X, shuffled, test_folds, forest_cfg, cv.seed, true, nullptr);
        auto c = detail::confusion_of(shuffled, pred);
        if (c.tp + c.tn >= observed_correct) ++res.permutations_at_least_observed;
    }
    res.permutations = cv.permutations;
    const double p_value = double(1 + res.permutations_at_least_observed) / double(cv.permutations + 1);
    res.report = report_from(res.confusion, p_value);
    return res;
}

inline nlohmann::ordered_json to_json(const EvalReport& r) {
    nlohmann::ordered_json j;
    j["precision"] = r.precision;
    j["recall"] = r.recall;
    j["accuracy"] = r.accuracy;
    j["kappa"] = r.kappa;
    j["p_value"] = r.p_value;
    return j;
}

}  // namespace skilltrack

#endif
