#include "adarf/forest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "adarf/error.hpp"

namespace adarf {

using u128 = unsigned __int128;

std::size_t CartConfig::resolved_mtry(std::size_t n_features) const {
    const std::size_t m = mtry.value_or(n_features);
    if (m < 1 || m > n_features) throw ConfigError("mtry must be in [1, n_features]");
    return m;
}

double gini(std::span<const std::size_t> class_counts) {
    std::size_t total = 0;
    for (std::size_t c : class_counts) total += c;
    if (total == 0) throw DataError("gini: empty node");
    const double n = static_cast<double>(total);
    double sum_sq = 0.0;
    for (std::size_t c : class_counts) {
        const double p = static_cast<double>(c) / n;
        sum_sq += p * p;
    }
    return 1.0 - sum_sq;
}

double split_midpoint(double lo, double hi) {
    double mid = lo / 2.0 + hi / 2.0;
    if (std::isfinite(lo + hi)) mid = (lo + hi) / 2.0;
    if (!(mid < hi)) mid = lo;
    return mid;
}

namespace {

// Weighted child Gini is 1 - (sL/nL + sR/nR)/n, where s is a sum of squared
// class counts. Splits are ranked by the exact rational sL/nL + sR/nR.
struct SplitScore {
    u128 num = 0;
    u128 den = 1;

    bool better_than(const SplitScore& o) const { return num * o.den > o.num * den; }
};

struct Candidate {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0.0;
    SplitScore score;
    std::uint64_t n_left = 0;
};

struct NodeStats {
    std::vector<std::uint64_t> counts;
    std::uint64_t n = 0;
    std::uint64_t sum_sq = 0;

    bool pure() const {
        return std::count_if(counts.begin(), counts.end(), [](std::uint64_t c) { return c > 0; }) <= 1;
    }
    double gini() const {
        const double nn = static_cast<double>(n);
        return 1.0 - static_cast<double>(sum_sq) / (nn * nn);
    }
    // parent score S/n as a rational
    bool improved_by(const SplitScore& s) const {
        return s.num * static_cast<u128>(n) > static_cast<u128>(sum_sq) * s.den;
    }
    double decrease(const SplitScore& s) const {
        const double nn = static_cast<double>(n);
        const double child = 1.0 - static_cast<double>(s.num) / static_cast<double>(s.den) / nn;
        return gini() - child;
    }
};

// Scans one feature whose node samples are already sorted by value.
// value(i) and label(i) give the i-th smallest sample.
template <typename ValueAt, typename LabelAt>
void scan_feature(std::size_t count, ValueAt value, LabelAt label, const NodeStats& node, std::size_t feature,
                  std::vector<std::uint64_t>& left, std::vector<std::uint64_t>& right, Candidate& best) {
    std::fill(left.begin(), left.end(), 0);
    right = node.counts;
    std::uint64_t s_left = 0, s_right = node.sum_sq;
    for (std::size_t i = 0; i + 1 < count; ++i) {
        const ClassId y = label(i);
        s_left += 2 * left[y] + 1;
        ++left[y];
        s_right -= 2 * right[y] - 1;
        --right[y];
        const double v = value(i), next = value(i + 1);
        if (!(v < next)) continue;
        const std::uint64_t n_left = i + 1, n_right = count - n_left;
        SplitScore score{static_cast<u128>(s_left) * n_right + static_cast<u128>(s_right) * n_left,
                         static_cast<u128>(n_left) * n_right};
        if (!best.found || score.better_than(best.score)) {
            best.found = true;
            best.feature = feature;
            best.threshold = split_midpoint(v, next);
            best.score = score;
            best.n_left = n_left;
        }
    }
}

NodeStats stats_for(const std::vector<ClassId>& labels, std::span<const std::size_t> rows, std::size_t n_classes) {
    NodeStats s;
    s.counts.assign(n_classes, 0);
    for (std::size_t r : rows) ++s.counts[labels[r]];
    s.n = rows.size();
    for (auto c : s.counts) s.sum_sq += c * c;
    return s;
}

ClassId majority_of(const std::vector<std::uint32_t>& counts) {
    return static_cast<ClassId>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

}  // namespace

std::optional<Split> best_split(const Dataset& ds, std::span<const std::size_t> rows,
                                std::span<const std::size_t> features) {
    if (rows.empty()) return std::nullopt;
    const NodeStats node = stats_for(ds.labels, rows, ds.n_classes());
    if (node.pure()) return std::nullopt;

    std::vector<std::size_t> sorted(rows.begin(), rows.end());
    std::vector<std::uint64_t> left(ds.n_classes()), right;
    std::vector<std::size_t> ordered_features(features.begin(), features.end());
    std::sort(ordered_features.begin(), ordered_features.end());
    Candidate best;
    for (std::size_t f : ordered_features) {
        std::stable_sort(sorted.begin(), sorted.end(),
                         [&](std::size_t a, std::size_t b) { return ds.features(a, f) < ds.features(b, f); });
        scan_feature(
            sorted.size(), [&](std::size_t i) { return ds.features(sorted[i], f); },
            [&](std::size_t i) { return ds.labels[sorted[i]]; }, node, f, left, right, best);
    }
    if (!best.found || !node.improved_by(best.score)) return std::nullopt;
    return Split{best.feature, best.threshold, node.decrease(best.score)};
}

// ---------------------------------------------------------------- tree growth

namespace {

// Grows a tree over a fixed sample multiset. Each feature keeps its own
// value-sorted permutation of sample slots; a node owns the same slot range
// in every permutation, and splitting stably partitions each range.
class TreeGrower {
public:
    TreeGrower(const Dataset& ds, std::span<const std::size_t> rows, const CartConfig& config, Rng& rng)
        : ds_(ds), rows_(rows.begin(), rows.end()), config_(config), rng_(rng),
          n_features_(ds.n_features()), mtry_(config.resolved_mtry(ds.n_features())) {
        const std::size_t m = rows_.size();
        order_.resize(n_features_);
        for (std::size_t f = 0; f < n_features_; ++f) {
            auto& ord = order_[f];
            ord.resize(m);
            std::iota(ord.begin(), ord.end(), std::uint32_t{0});
            std::stable_sort(ord.begin(), ord.end(), [&](std::uint32_t a, std::uint32_t b) {
                return ds_.features(rows_[a], f) < ds_.features(rows_[b], f);
            });
        }
        goes_left_.resize(m);
        buffer_.resize(m);
        all_features_.resize(n_features_);
        std::iota(all_features_.begin(), all_features_.end(), std::size_t{0});
        left_.resize(ds.n_classes());
    }

    DecisionTree grow() {
        if (config_.max_depth < 1) throw ConfigError("max_depth must be at least 1");
        if (rows_.empty()) throw DataError("build_tree: no rows");
        grow_node(0, rows_.size(), 0);
        return DecisionTree(std::move(nodes_));
    }

private:
    std::uint32_t grow_node(std::size_t begin, std::size_t end, std::size_t depth) {
        const auto id = static_cast<std::uint32_t>(nodes_.size());
        nodes_.emplace_back();

        NodeStats node;
        node.counts.assign(ds_.n_classes(), 0);
        for (std::size_t i = begin; i < end; ++i) ++node.counts[label_of(order_[0][i])];
        node.n = end - begin;
        for (auto c : node.counts) node.sum_sq += c * c;

        Candidate best;
        const bool can_split = depth < config_.max_depth && node.n >= config_.min_samples_split && !node.pure();
        if (can_split) {
            for (std::size_t f : draw_features()) {
                const auto& ord = order_[f];
                scan_feature(
                    end - begin, [&](std::size_t i) { return value_of(ord[begin + i], f); },
                    [&](std::size_t i) { return label_of(ord[begin + i]); }, node, f, left_, right_, best);
            }
        }
        if (!best.found || !node.improved_by(best.score)) {
            make_leaf(id, node);
            return id;
        }

        const std::size_t split_feature = best.feature;
        for (std::size_t i = begin; i < end; ++i) {
            const std::uint32_t slot = order_[split_feature][i];
            goes_left_[slot] = value_of(slot, split_feature) <= best.threshold;
        }
        const std::size_t mid = begin + best.n_left;
        for (auto& ord : order_) {
            std::size_t l = begin, r = 0;
            for (std::size_t i = begin; i < end; ++i) {
                const std::uint32_t slot = ord[i];
                if (goes_left_[slot])
                    ord[l++] = slot;
                else
                    buffer_[r++] = slot;
            }
            std::copy(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(r),
                      ord.begin() + static_cast<std::ptrdiff_t>(l));
        }

        nodes_[id].feature = static_cast<std::uint32_t>(split_feature);
        nodes_[id].threshold = best.threshold;
        const std::uint32_t left = grow_node(begin, mid, depth + 1);
        const std::uint32_t right = grow_node(mid, end, depth + 1);
        nodes_[id].left = left;
        nodes_[id].right = right;
        return id;
    }

    void make_leaf(std::uint32_t id, const NodeStats& node) {
        auto& leaf = nodes_[id];
        leaf.class_counts.assign(node.counts.begin(), node.counts.end());
        leaf.majority = majority_of(leaf.class_counts);
    }

    const std::vector<std::size_t>& draw_features() {
        if (mtry_ == n_features_) return all_features_;
        subset_ = all_features_;
        for (std::size_t i = 0; i < mtry_; ++i)
            std::swap(subset_[i], subset_[i + uniform_index(rng_, n_features_ - i)]);
        subset_.resize(mtry_);
        std::sort(subset_.begin(), subset_.end());
        return subset_;
    }

    double value_of(std::uint32_t slot, std::size_t f) const { return ds_.features(rows_[slot], f); }
    ClassId label_of(std::uint32_t slot) const { return ds_.labels[rows_[slot]]; }

    const Dataset& ds_;
    std::vector<std::size_t> rows_;
    const CartConfig& config_;
    Rng& rng_;
    std::size_t n_features_;
    std::size_t mtry_;
    std::vector<std::vector<std::uint32_t>> order_;
    std::vector<char> goes_left_;
    std::vector<std::uint32_t> buffer_;
    std::vector<std::size_t> all_features_, subset_;
    std::vector<std::uint64_t> left_, right_;
    std::vector<TreeNode> nodes_;
};

}  // namespace

DecisionTree build_tree(const Dataset& ds, std::span<const std::size_t> rows, const CartConfig& config, Rng& rng) {
    return TreeGrower(ds, rows, config, rng).grow();
}

const TreeNode& DecisionTree::leaf_for(std::span<const double> x) const {
    const TreeNode* node = &nodes_.front();
    while (!node->is_leaf()) node = &nodes_[x[node->feature] <= node->threshold ? node->left : node->right];
    return *node;
}

std::size_t DecisionTree::depth() const {
    std::size_t deepest = 0;
    std::vector<std::pair<std::uint32_t, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
        auto [id, d] = stack.back();
        stack.pop_back();
        deepest = std::max(deepest, d);
        if (!nodes_[id].is_leaf()) {
            stack.emplace_back(nodes_[id].left, d + 1);
            stack.emplace_back(nodes_[id].right, d + 1);
        }
    }
    return deepest;
}

// ---------------------------------------------------------------- forest

ForestModel fit_forest(const Dataset& ds, const ForestConfig& config) {
    if (ds.size() == 0) throw DataError("fit_forest: empty training set");
    if (config.n_estimators == 0) throw ConfigError("n_estimators must be at least 1");
    config.cart.resolved_mtry(ds.n_features());

    ForestModel model;
    model.config = config;
    model.class_names = ds.class_names;
    model.feature_names = ds.feature_names;
    model.n_training_rows = ds.size();
    const std::size_t n = ds.size();
    std::vector<std::size_t> draw(n);
    for (std::size_t t = 0; t < config.n_estimators; ++t) {
        const std::uint64_t seed = derive_seed(config.seed, {t});
        Rng rng(seed);
        for (auto& r : draw) r = uniform_index(rng, n);
        std::sort(draw.begin(), draw.end());
        model.tree_seeds.push_back(seed);
        model.bootstrap.emplace_back(draw.begin(), draw.end());
        model.trees.push_back(build_tree(ds, draw, config.cart, rng));
    }
    model.oob_error = oob_error(model, ds);
    return model;
}

std::vector<double> predict_proba(const ForestModel& model, std::span<const double> x) {
    if (x.size() != model.feature_names.size())
        throw DataError("predict: expected " + std::to_string(model.feature_names.size()) + " features, got " +
                        std::to_string(x.size()));
    std::vector<std::size_t> votes(model.class_names.size(), 0);
    for (const auto& tree : model.trees) ++votes[tree.predict(x)];
    std::vector<double> proba(votes.size());
    const double n = static_cast<double>(model.trees.size());
    for (std::size_t c = 0; c < votes.size(); ++c) proba[c] = static_cast<double>(votes[c]) / n;
    return proba;
}

ClassId predict(const ForestModel& model, std::span<const double> x) {
    const auto p = predict_proba(model, x);
    return static_cast<ClassId>(std::max_element(p.begin(), p.end()) - p.begin());
}

std::vector<std::vector<double>> predict_proba(const ForestModel& model, const Matrix& rows) {
    std::vector<std::vector<double>> out;
    out.reserve(rows.rows());
    for (std::size_t r = 0; r < rows.rows(); ++r) out.push_back(predict_proba(model, rows.row(r)));
    return out;
}

std::optional<double> oob_error(const ForestModel& model, const Dataset& ds) {
    if (model.bootstrap.size() != model.trees.size() || ds.size() != model.n_training_rows)
        throw DataError("oob_error: bootstrap membership unavailable for this dataset");
    const std::size_t n = ds.size();
    std::vector<std::vector<std::uint32_t>> votes(n, std::vector<std::uint32_t>(model.class_names.size(), 0));
    std::vector<char> in_bag(n);
    for (std::size_t t = 0; t < model.trees.size(); ++t) {
        std::fill(in_bag.begin(), in_bag.end(), 0);
        for (std::uint32_t r : model.bootstrap[t]) in_bag[r] = 1;
        for (std::size_t r = 0; r < n; ++r)
            if (!in_bag[r]) ++votes[r][model.trees[t].predict(ds.features.row(r))];
    }
    std::size_t evaluated = 0, wrong = 0;
    for (std::size_t r = 0; r < n; ++r) {
        const auto& v = votes[r];
        if (std::all_of(v.begin(), v.end(), [](std::uint32_t c) { return c == 0; })) continue;
        ++evaluated;
        if (majority_of(v) != ds.labels[r]) ++wrong;
    }
    if (evaluated == 0) return std::nullopt;
    return static_cast<double>(wrong) / static_cast<double>(evaluated);
}

std::vector<double> out_of_bag_fractions(const ForestModel& model) {
    std::vector<double> out;
    const double n = static_cast<double>(model.n_training_rows);
    for (const auto& draw : model.bootstrap) {
        // draws are sorted
        std::size_t unique = draw.empty() ? 0 : 1;
        for (std::size_t i = 1; i < draw.size(); ++i)
            if (draw[i] != draw[i - 1]) ++unique;
        out.push_back((n - static_cast<double>(unique)) / n);
    }
    return out;
}

// ---------------------------------------------------------------- json

namespace {

double parse_threshold(const std::string& s) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw DataError("model: bad threshold '" + s + "'");
    return v;
}

}  // namespace

nlohmann::ordered_json to_json(const ForestModel& m) {
    nlohmann::ordered_json j;
    j["format"] = "adarf-forest";
    j["version"] = 1;
    j["class_names"] = m.class_names;
    j["feature_names"] = m.feature_names;
    nlohmann::ordered_json cfg;
    cfg["n_estimators"] = m.config.n_estimators;
    cfg["max_depth"] = m.config.cart.max_depth;
    cfg["min_samples_split"] = m.config.cart.min_samples_split;
    cfg["mtry"] = m.config.cart.mtry ? nlohmann::ordered_json(*m.config.cart.mtry) : nlohmann::ordered_json();
    cfg["criterion"] = "gini";
    cfg["seed"] = m.config.seed;
    j["config"] = std::move(cfg);
    j["tree_seeds"] = m.tree_seeds;
    j["n_training_rows"] = m.n_training_rows;
    j["oob_error"] = m.oob_error ? nlohmann::ordered_json(*m.oob_error) : nlohmann::ordered_json();
    auto trees = nlohmann::ordered_json::array();
    for (const auto& tree : m.trees) {
        auto nodes = nlohmann::ordered_json::array();
        for (const auto& node : tree.nodes()) {
            nlohmann::ordered_json e;
            if (node.is_leaf()) {
                e["counts"] = node.class_counts;
            } else {
                e["feature"] = node.feature;
                e["threshold"] = format_double(node.threshold);
                e["left"] = node.left;
                e["right"] = node.right;
            }
            nodes.push_back(std::move(e));
        }
        nlohmann::ordered_json t;
        t["nodes"] = std::move(nodes);
        trees.push_back(std::move(t));
    }
    j["trees"] = std::move(trees);
    return j;
}

ForestModel forest_from_json(const nlohmann::ordered_json& j) {
    try {
        if (j.at("format") != "adarf-forest") throw DataError("model: unknown format");
        ForestModel m;
        m.class_names = j.at("class_names").get<std::vector<std::string>>();
        m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        const auto& cfg = j.at("config");
        m.config.n_estimators = cfg.at("n_estimators").get<std::size_t>();
        m.config.cart.max_depth = cfg.at("max_depth").get<std::size_t>();
        m.config.cart.min_samples_split = cfg.at("min_samples_split").get<std::size_t>();
        if (!cfg.at("mtry").is_null()) m.config.cart.mtry = cfg.at("mtry").get<std::size_t>();
        m.config.seed = cfg.at("seed").get<std::uint64_t>();
        m.tree_seeds = j.at("tree_seeds").get<std::vector<std::uint64_t>>();
        m.n_training_rows = j.at("n_training_rows").get<std::size_t>();
        if (!j.at("oob_error").is_null()) m.oob_error = j.at("oob_error").get<double>();
        for (const auto& t : j.at("trees")) {
            std::vector<TreeNode> nodes;
            for (const auto& e : t.at("nodes")) {
                TreeNode node;
                if (e.contains("counts")) {
                    node.class_counts = e.at("counts").get<std::vector<std::uint32_t>>();
                    if (node.class_counts.size() != m.class_names.size())
                        throw DataError("model: leaf histogram width mismatch");
                    node.majority = majority_of(node.class_counts);
                } else {
                    node.feature = e.at("feature").get<std::uint32_t>();
                    node.threshold = parse_threshold(e.at("threshold").get<std::string>());
                    node.left = e.at("left").get<std::uint32_t>();
                    node.right = e.at("right").get<std::uint32_t>();
                }
                nodes.push_back(std::move(node));
            }
            for (const auto& node : nodes)
                if (!node.is_leaf() && (node.feature >= m.feature_names.size() || node.left >= nodes.size() ||
                                        node.right >= nodes.size()))
                    throw DataError("model: node reference out of range");
            if (nodes.empty()) throw DataError("model: empty tree");
            m.trees.emplace_back(std::move(nodes));
        }
        if (m.trees.size() != m.config.n_estimators) throw DataError("model: tree count mismatch");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("model: malformed document: ") + e.what());
    }
}

}  // namespace adarf
