#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ladre/common.hpp"

namespace ladre {

struct ForestHyper {
    int tree_count = 100;
    int max_depth = 14;
    int min_leaf = 2;
    int feature_subsample = 0;  // candidate features per split; 0 = round(sqrt(dims))
    bool bootstrap = true;
    std::uint64_t seed = 0;

    bool operator==(const ForestHyper& o) const {
        return tree_count == o.tree_count && max_depth == o.max_depth && min_leaf == o.min_leaf &&
               feature_subsample == o.feature_subsample && bootstrap == o.bootstrap &&
               seed == o.seed;
    }
};

namespace detail {

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;  // leaf mean
};

struct SplitCandidate {
    bool valid = false;
    int feature = -1;
    double threshold = 0.0;
    double children_sse = std::numeric_limits<double>::infinity();
};

class TreeBuilder {
public:
    TreeBuilder(const std::vector<std::vector<double>>& x, const std::vector<double>& y, int dims,
                const ForestHyper& hyper, Rng& rng)
        : x_(x), y_(y), dims_(dims), hyper_(hyper), rng_(rng) {}

    std::vector<TreeNode> build(std::vector<std::size_t> indices) {
        nodes_.clear();
        grow(std::move(indices), 0);
        return std::move(nodes_);
    }

private:
    int grow(std::vector<std::size_t> indices, int depth) {
        const int node_id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        const double mean = mean_of(indices);
        nodes_[node_id].value = mean;

        if (depth >= hyper_.max_depth ||
            indices.size() < 2 * static_cast<std::size_t>(hyper_.min_leaf))
            return node_id;

        const SplitCandidate split = best_split(indices);
        if (!split.valid)
            return node_id;

        std::vector<std::size_t> left, right;
        left.reserve(indices.size());
        right.reserve(indices.size());
        for (std::size_t idx : indices) {
            if (x_[idx][split.feature] < split.threshold)
                left.push_back(idx);
            else
                right.push_back(idx);
        }
        indices.clear();
        indices.shrink_to_fit();

        nodes_[node_id].feature = split.feature;
        nodes_[node_id].threshold = split.threshold;
        const int l = grow(std::move(left), depth + 1);
        nodes_[node_id].left = l;
        const int r = grow(std::move(right), depth + 1);
        nodes_[node_id].right = r;
        return node_id;
    }

    double mean_of(const std::vector<std::size_t>& indices) const {
        double sum = 0.0;
        for (std::size_t idx : indices)
            sum += y_[idx];
        return sum / static_cast<double>(indices.size());
    }

    // Greedy SSE-minimising split over a random feature subset. Thresholds
    // are midpoints of adjacent distinct values; a midpoint that collapses
    // onto the lower value under rounding is skipped so the < predicate stays
    // consistent with the prefix counts.
    SplitCandidate best_split(const std::vector<std::size_t>& indices) {
        const int mtry = hyper_.feature_subsample > 0
                             ? std::min(hyper_.feature_subsample, dims_)
                             : std::max(1, static_cast<int>(std::lround(std::sqrt(dims_))));
        std::vector<int> features(dims_);
        std::iota(features.begin(), features.end(), 0);
        for (int k = 0; k < mtry; ++k) {
            const std::size_t j = k + rng_.below(static_cast<std::uint64_t>(dims_ - k));
            std::swap(features[k], features[j]);
        }

        SplitCandidate best;
        std::vector<std::pair<double, double>> order;  // (feature value, target)
        order.reserve(indices.size());
        const std::size_t n = indices.size();
        const std::size_t min_leaf = static_cast<std::size_t>(hyper_.min_leaf);

        for (int k = 0; k < mtry; ++k) {
            const int f = features[k];
            order.clear();
            for (std::size_t idx : indices)
                order.emplace_back(x_[idx][f], y_[idx]);
            std::sort(order.begin(), order.end());
            if (order.front().first == order.back().first)
                continue;

            double left_sum = 0.0, left_sq = 0.0;
            double total_sum = 0.0, total_sq = 0.0;
            for (const auto& [xv, yv] : order) {
                total_sum += yv;
                total_sq += yv * yv;
            }
            for (std::size_t i = 0; i + 1 < n; ++i) {
                left_sum += order[i].second;
                left_sq += order[i].second * order[i].second;
                if (order[i].first == order[i + 1].first)
                    continue;
                const std::size_t nl = i + 1;
                const std::size_t nr = n - nl;
                if (nl < min_leaf || nr < min_leaf)
                    continue;
                const double threshold = order[i].first + (order[i + 1].first - order[i].first) / 2;
                if (!(threshold > order[i].first))
                    continue;
                const double right_sum = total_sum - left_sum;
                const double right_sq = total_sq - left_sq;
                const double sse = (left_sq - left_sum * left_sum / nl) +
                                   (right_sq - right_sum * right_sum / nr);
                if (sse < best.children_sse) {
                    best.valid = true;
                    best.feature = f;
                    best.threshold = threshold;
                    best.children_sse = sse;
                }
            }
        }
        return best;
    }

    const std::vector<std::vector<double>>& x_;
    const std::vector<double>& y_;
    int dims_;
    const ForestHyper& hyper_;
    Rng& rng_;
    std::vector<TreeNode> nodes_;
};

}  // namespace detail

class RegressionForest {
public:
    RegressionForest() = default;

    // Bagged CART regression. Deterministic for a fixed seed: per-tree RNG
    // streams are derived from (seed, tree index), so tree-parallel training
    // yields the same forest as sequential training.
    static RegressionForest train(const std::vector<std::vector<double>>& x,
                                  const std::vector<double>& y, ForestHyper hyper,
                                  int workers = 1) {
        require(!x.empty() && x.size() == y.size(), ErrorKind::validation,
                "training inputs and targets must be non-empty and equally sized");
        require(x.size() >= 2 * static_cast<std::size_t>(hyper.min_leaf), ErrorKind::validation,
                "need at least 2*min_leaf = " + std::to_string(2 * hyper.min_leaf) +
                    " training rows, got " + std::to_string(x.size()));
        require(hyper.tree_count >= 1 && hyper.max_depth >= 1 && hyper.min_leaf >= 1,
                ErrorKind::validation, "invalid forest hyperparameters");
        const int dims = static_cast<int>(x.front().size());
        for (const auto& row : x)
            require(static_cast<int>(row.size()) == dims, ErrorKind::validation,
                    "inconsistent training row width");

        RegressionForest forest;
        forest.hyper_ = hyper;
        forest.dims_ = dims;
        forest.trees_.resize(static_cast<std::size_t>(hyper.tree_count));

        const std::size_t n = x.size();
        parallel_for(forest.trees_.size(), workers, [&](std::size_t t) {
            Rng rng(hash_mix(hyper.seed, 0x7265657eULL + t));
            std::vector<std::size_t> sample(n);
            if (hyper.bootstrap) {
                for (std::size_t i = 0; i < n; ++i)
                    sample[i] = rng.below(n);
            } else {
                std::iota(sample.begin(), sample.end(), std::size_t{0});
            }
            detail::TreeBuilder builder(x, y, dims, hyper, rng);
            forest.trees_[t] = builder.build(std::move(sample));
        });
        return forest;
    }

    double predict(std::span<const double> input) const {
        require(!trees_.empty(), ErrorKind::validation, "predict on an untrained forest");
        require(static_cast<int>(input.size()) == dims_, ErrorKind::validation,
                "predictor input has " + std::to_string(input.size()) + " dims, model expects " +
                    std::to_string(dims_));
        double sum = 0.0;
        for (const auto& tree : trees_) {
            int node = 0;
            while (tree[node].feature >= 0)
                node = input[tree[node].feature] < tree[node].threshold ? tree[node].left
                                                                        : tree[node].right;
            sum += tree[node].value;
        }
        return sum / static_cast<double>(trees_.size());
    }

    int dims() const { return dims_; }
    const ForestHyper& hyper() const { return hyper_; }
    std::size_t tree_count() const { return trees_.size(); }

    bool operator==(const RegressionForest& o) const {
        if (dims_ != o.dims_ || !(hyper_ == o.hyper_) || trees_.size() != o.trees_.size())
            return false;
        for (std::size_t t = 0; t < trees_.size(); ++t) {
            if (trees_[t].size() != o.trees_[t].size())
                return false;
            for (std::size_t i = 0; i < trees_[t].size(); ++i) {
                const auto& a = trees_[t][i];
                const auto& b = o.trees_[t][i];
                if (a.feature != b.feature || a.threshold != b.threshold || a.left != b.left ||
                    a.right != b.right || a.value != b.value)
                    return false;
            }
        }
        return true;
    }

    nlohmann::json to_json() const {
        nlohmann::json trees = nlohmann::json::array();
        for (const auto& tree : trees_) {
            nlohmann::json nodes = nlohmann::json::array();
            for (const auto& n : tree)
                nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
            trees.push_back(std::move(nodes));
        }
        return nlohmann::json{{"dims", dims_},
                              {"hyper",
                               {{"tree_count", hyper_.tree_count},
                                {"max_depth", hyper_.max_depth},
                                {"min_leaf", hyper_.min_leaf},
                                {"feature_subsample", hyper_.feature_subsample},
                                {"bootstrap", hyper_.bootstrap},
                                {"seed", hyper_.seed}}},
                              {"trees", std::move(trees)}};
    }

    static RegressionForest from_json(const nlohmann::json& j) {
        try {
            RegressionForest forest;
            forest.dims_ = j.at("dims").get<int>();
            const auto& h = j.at("hyper");
            forest.hyper_.tree_count = h.at("tree_count").get<int>();
            forest.hyper_.max_depth = h.at("max_depth").get<int>();
            forest.hyper_.min_leaf = h.at("min_leaf").get<int>();
            forest.hyper_.feature_subsample = h.at("feature_subsample").get<int>();
            forest.hyper_.bootstrap = h.at("bootstrap").get<bool>();
            forest.hyper_.seed = h.at("seed").get<std::uint64_t>();
            for (const auto& tj : j.at("trees")) {
                std::vector<detail::TreeNode> tree;
                tree.reserve(tj.size());
                for (const auto& nj : tj) {
                    detail::TreeNode n;
                    n.feature = nj.at(0).get<int>();
                    n.threshold = nj.at(1).get<double>();
                    n.left = nj.at(2).get<int>();
                    n.right = nj.at(3).get<int>();
                    n.value = nj.at(4).get<double>();
                    tree.push_back(n);
                }
                require(!tree.empty(), ErrorKind::validation, "forest JSON contains an empty tree");
                forest.trees_.push_back(std::move(tree));
            }
            require(!forest.trees_.empty(), ErrorKind::validation, "forest JSON contains no trees");
            return forest;
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorKind::validation, std::string("malformed forest JSON: ") + e.what());
        }
    }

    // Leaf-constant forest; handy for configuration-independent stubs.
    static RegressionForest constant(double value, int dims) {
        RegressionForest forest;
        forest.dims_ = dims;
        forest.hyper_.tree_count = 1;
        detail::TreeNode leaf;
        leaf.value = value;
        forest.trees_.push_back({leaf});
        return forest;
    }

private:
    std::vector<std::vector<detail::TreeNode>> trees_;
    ForestHyper hyper_;
    int dims_ = 0;
};

}  // namespace ladre
