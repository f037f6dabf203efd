#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "adarf/data.hpp"
#include "adarf/random.hpp"

namespace adarf {

struct CartConfig {
    std::size_t max_depth = 40;
    std::size_t min_samples_split = 2;
    std::optional<std::size_t> mtry;  // features tried per node; unset = all

    std::size_t resolved_mtry(std::size_t n_features) const;
};

// Internal nodes send x left iff x[feature] <= threshold. Leaves keep the
// class histogram of the training rows that reached them.
struct TreeNode {
    static constexpr std::uint32_t kLeaf = UINT32_MAX;

    std::uint32_t feature = kLeaf;
    double threshold = 0.0;
    std::uint32_t left = 0;
    std::uint32_t right = 0;
    std::vector<std::uint32_t> class_counts;
    ClassId majority = 0;

    bool is_leaf() const noexcept { return feature == kLeaf; }
    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

class DecisionTree {
public:
    DecisionTree() = default;
    explicit DecisionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

    const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
    const TreeNode& leaf_for(std::span<const double> x) const;
    ClassId predict(std::span<const double> x) const { return leaf_for(x).majority; }
    // Longest root-to-leaf path in edges (a lone leaf has depth 0).
    std::size_t depth() const;

    friend bool operator==(const DecisionTree&, const DecisionTree&) = default;

private:
    std::vector<TreeNode> nodes_;
};

double gini(std::span<const std::size_t> class_counts);

struct Split {
    std::size_t feature = 0;
    double threshold = 0.0;
    double impurity_decrease = 0.0;
};

// Exhaustive midpoint search over the given features. Absent when the node
// is pure or no split strictly lowers the size-weighted child Gini. Ties go
// to the lower feature index, then the lower threshold. `rows` may repeat.
std::optional<Split> best_split(const Dataset& ds, std::span<const std::size_t> rows,
                                std::span<const std::size_t> features);

// Midpoint between two consecutive distinct sorted values, nudged so that
// `lo <= t < hi` always holds.
double split_midpoint(double lo, double hi);

DecisionTree build_tree(const Dataset& ds, std::span<const std::size_t> rows, const CartConfig& config, Rng& rng);

struct ForestConfig {
    std::size_t n_estimators = 10;
    CartConfig cart;
    std::uint64_t seed = 0;
};

struct ForestModel {
    std::vector<DecisionTree> trees;
    ForestConfig config;
    std::vector<std::uint64_t> tree_seeds;
    // Per tree, the sorted bootstrap draw (row indices, with repeats). Not
    // serialized; it can be regenerated from the tree seed and N.
    std::vector<std::vector<std::uint32_t>> bootstrap;
    std::vector<std::string> class_names;
    std::vector<std::string> feature_names;
    std::size_t n_training_rows = 0;
    std::optional<double> oob_error;
};

ForestModel fit_forest(const Dataset& ds, const ForestConfig& config);

// Mean of the trees' one-hot votes.
std::vector<double> predict_proba(const ForestModel& model, std::span<const double> x);
ClassId predict(const ForestModel& model, std::span<const double> x);
std::vector<std::vector<double>> predict_proba(const ForestModel& model, const Matrix& rows);

// Out-of-bag misclassification rate over `ds` (the fit data). Absent when no
// row is out of bag for any tree.
std::optional<double> oob_error(const ForestModel& model, const Dataset& ds);
// Per tree: share of the N training rows missing from its bootstrap.
std::vector<double> out_of_bag_fractions(const ForestModel& model);

nlohmann::ordered_json to_json(const ForestModel& model);
ForestModel forest_from_json(const nlohmann::ordered_json& doc);

}  // namespace adarf
