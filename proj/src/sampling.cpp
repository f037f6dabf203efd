#include "adarf/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "adarf/error.hpp"
#include "adarf/neighbors.hpp"
#include "adarf/random.hpp"

namespace adarf {

namespace {

ClassId require_class(const Dataset& ds, const std::string& name) {
    auto id = ds.class_id(name);
    if (!id) throw ConfigError("sampling strategy names unknown class '" + name + "'");
    return *id;
}

std::vector<std::size_t> members_of(const Dataset& ds, ClassId c) {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (ds.labels[i] == c) rows.push_back(i);
    return rows;
}

// Up to K nearest rows of the same class (all other rows of the class when
// it has fewer than K + 1 members).
std::vector<std::size_t> same_class_pool(const Dataset& ds, std::size_t row, const std::vector<bool>& class_mask,
                                         std::size_t k) {
    NeighborQuery q{k, class_mask};
    std::vector<std::size_t> pool;
    for (const auto& n : knn(ds.features, row, q)) pool.push_back(n.row);
    return pool;
}

// Copies the input and reserves room for `extra` synthetic rows.
ResampleResult start_oversampled(const Dataset& ds, std::size_t extra) {
    ResampleResult out;
    out.data.feature_names = ds.feature_names;
    out.data.class_names = ds.class_names;
    out.data.labels = ds.labels;
    std::vector<double> values = ds.features.values();
    values.reserve(values.size() + extra * ds.n_features());
    out.data.features = Matrix(ds.size(), ds.n_features(), std::move(values));
    out.origin.resize(ds.size());
    std::iota(out.origin.begin(), out.origin.end(), std::size_t{0});
    return out;
}

void emit_synthetic(const Dataset& ds, ResampleResult& out, std::size_t parent, std::size_t neighbor, double gamma,
                    std::vector<double>& scratch) {
    const auto xi = ds.features.row(parent);
    const auto xz = ds.features.row(neighbor);
    scratch.resize(xi.size());
    for (std::size_t c = 0; c < xi.size(); ++c) {
        const double v = xi[c] + (xz[c] - xi[c]) * gamma;
        // rounding can push v one ulp past the segment end
        scratch[c] = std::clamp(v, std::min(xi[c], xz[c]), std::max(xi[c], xz[c]));
    }
    out.data.features.append_row(scratch);
    out.data.labels.push_back(ds.labels[parent]);
    out.origin.push_back(parent);
    out.records.push_back({parent, neighbor, gamma, ds.labels[parent]});
}

}  // namespace

std::vector<std::pair<ClassId, std::size_t>> oversampling_targets(const Dataset& ds, const SamplingStrategy& s) {
    const auto counts = ds.class_counts();
    std::vector<std::pair<ClassId, std::size_t>> targets;
    if (s.mode == StrategyMode::TargetCounts) {
        for (const auto& [name, target] : s.targets) {
            ClassId c = require_class(ds, name);
            if (target < counts[c])
                throw ConfigError("oversampling target for '" + name + "' (" + std::to_string(target) +
                                  ") is below its current count " + std::to_string(counts[c]));
            targets.emplace_back(c, target);
        }
        std::sort(targets.begin(), targets.end());
    } else {
        if (!(s.beta >= 0.0 && s.beta <= 1.0)) throw ConfigError("beta must be in [0, 1]");
        const std::size_t largest = *std::max_element(counts.begin(), counts.end());
        for (std::size_t c = 0; c < counts.size(); ++c) {
            if (counts[c] == 0 || counts[c] >= largest) continue;
            const auto g = static_cast<std::size_t>(std::floor(static_cast<double>(largest - counts[c]) * s.beta));
            targets.emplace_back(static_cast<ClassId>(c), counts[c] + g);
        }
    }
    return targets;
}

std::vector<std::size_t> apportion(const std::vector<std::size_t>& weights, std::size_t total) {
    const std::size_t n = weights.size();
    std::vector<std::size_t> out(n, 0);
    if (n == 0 || total == 0) return out;
    std::size_t sum = std::accumulate(weights.begin(), weights.end(), std::size_t{0});
    std::vector<std::size_t> w = weights;
    if (sum == 0) {
        w.assign(n, 1);
        sum = n;
    }
    // share_i = w_i * total / sum, done in 128-bit to stay exact.
    std::vector<unsigned __int128> remainder(n);
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const unsigned __int128 num = static_cast<unsigned __int128>(w[i]) * total;
        out[i] = static_cast<std::size_t>(num / sum);
        remainder[i] = num % sum;
        assigned += out[i];
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
    for (std::size_t i = 0; assigned < total; ++i, ++assigned) ++out[order[i]];
    return out;
}

ResampleResult random_undersample(const Dataset& ds, const SamplingStrategy& s) {
    if (s.mode != StrategyMode::TargetCounts) throw ConfigError("random under-sampling needs target counts");
    const auto counts = ds.class_counts();
    std::vector<std::pair<ClassId, std::size_t>> targets;
    for (const auto& [name, target] : s.targets) {
        ClassId c = require_class(ds, name);
        if (target > counts[c])
            throw ConfigError("under-sampling target for '" + name + "' (" + std::to_string(target) +
                              ") exceeds its current count " + std::to_string(counts[c]));
        targets.emplace_back(c, target);
    }
    std::sort(targets.begin(), targets.end());

    std::vector<bool> keep(ds.size(), true);
    Rng rng(s.seed);
    for (const auto& [c, target] : targets) {
        auto rows = members_of(ds, c);
        // Partial Fisher-Yates: the first `target` slots become a uniform subset.
        for (std::size_t i = 0; i < target; ++i) std::swap(rows[i], rows[i + uniform_index(rng, rows.size() - i)]);
        for (std::size_t i = target; i < rows.size(); ++i) keep[rows[i]] = false;
    }
    ResampleResult out;
    for (std::size_t i = 0; i < ds.size(); ++i)
        if (keep[i]) out.origin.push_back(i);
    out.data = select_rows(ds, out.origin);
    return out;
}

ResampleResult smote(const Dataset& ds, const SamplingStrategy& s) {
    if (s.mode != StrategyMode::TargetCounts) throw ConfigError("SMOTE needs target counts");
    if (s.k_neighbors == 0) throw ConfigError("k_neighbors must be at least 1");
    const auto targets = oversampling_targets(ds, s);
    const auto counts = ds.class_counts();
    std::size_t extra = 0;
    for (const auto& [c, target] : targets) extra += target - counts[c];

    ResampleResult out = start_oversampled(ds, extra);
    Rng rng(s.seed);
    std::vector<double> scratch;
    for (const auto& [c, target] : targets) {
        const std::size_t needed = target - counts[c];
        if (needed == 0) continue;
        const auto members = members_of(ds, c);
        if (members.size() < 2)
            throw DataError("SMOTE: class '" + ds.class_names[c] + "' has fewer than 2 rows");
        std::vector<bool> mask(ds.size(), false);
        for (std::size_t r : members) mask[r] = true;
        std::vector<std::vector<std::size_t>> pools(members.size());
        for (std::size_t t = 0; t < needed; ++t) {
            const std::size_t slot = t % members.size();
            if (pools[slot].empty()) pools[slot] = same_class_pool(ds, members[slot], mask, s.k_neighbors);
            const std::size_t neighbor = pools[slot][uniform_index(rng, pools[slot].size())];
            emit_synthetic(ds, out, members[slot], neighbor, uniform_unit(rng), scratch);
        }
    }
    return out;
}

AdasynPlan adasyn_plan(const Dataset& ds, ClassId minority, const SamplingStrategy& s) {
    if (minority >= ds.n_classes()) throw DataError("adasyn_plan: class id out of range");
    if (s.k_neighbors == 0) throw ConfigError("k_neighbors must be at least 1");
    const auto counts = ds.class_counts();
    AdasynPlan plan;
    plan.class_id = minority;
    plan.minority_count = counts[minority];
    plan.majority_count = *std::max_element(counts.begin(), counts.end());
    if (plan.minority_count == 0) throw DataError("adasyn_plan: minority class is empty");
    if (plan.minority_count == ds.size()) throw DataError("adasyn_plan: no rows outside the minority class");

    if (s.mode == StrategyMode::BalanceRatio) {
        if (!(s.beta >= 0.0 && s.beta <= 1.0)) throw ConfigError("beta must be in [0, 1]");
        const double gap = static_cast<double>(plan.majority_count) - static_cast<double>(plan.minority_count);
        plan.total_to_generate = static_cast<std::size_t>(std::floor(std::max(0.0, gap) * s.beta));
    } else {
        auto it = s.targets.find(ds.class_names[minority]);
        if (it == s.targets.end())
            throw ConfigError("no target for class '" + ds.class_names[minority] + "'");
        if (it->second < plan.minority_count)
            throw ConfigError("ADASYN target for '" + it->first + "' is below its current count");
        plan.total_to_generate = it->second - plan.minority_count;
    }
    if (plan.minority_count == 1 && plan.total_to_generate > 0)
        throw DataError("ADASYN: class '" + ds.class_names[minority] + "' has a single row, nothing to interpolate");

    plan.parents = members_of(ds, minority);
    const NeighborQuery q{s.k_neighbors, std::nullopt};
    const double k = static_cast<double>(s.k_neighbors);
    for (std::size_t row : plan.parents) {
        std::size_t delta = 0;
        for (const auto& n : knn(ds.features, row, q))
            if (ds.labels[n.row] != minority) ++delta;
        plan.delta.push_back(delta);
        plan.ratio.push_back(static_cast<double>(delta) / k);
    }
    const std::size_t delta_sum = std::accumulate(plan.delta.begin(), plan.delta.end(), std::size_t{0});
    plan.uniform_fallback = delta_sum == 0;
    const double ratio_sum = std::accumulate(plan.ratio.begin(), plan.ratio.end(), 0.0);
    for (double r : plan.ratio)
        plan.weight.push_back(plan.uniform_fallback ? 1.0 / static_cast<double>(plan.parents.size()) : r / ratio_sum);
    plan.generate = apportion(plan.delta, plan.total_to_generate);
    return plan;
}

ResampleResult adasyn(const Dataset& ds, const SamplingStrategy& s) {
    const auto targets = oversampling_targets(ds, s);
    std::vector<AdasynPlan> plans;
    std::size_t extra = 0;
    for (const auto& entry : targets) {
        plans.push_back(adasyn_plan(ds, entry.first, s));
        extra += plans.back().total_to_generate;
    }

    ResampleResult out = start_oversampled(ds, extra);
    Rng rng(s.seed);
    std::vector<double> scratch;
    for (const auto& plan : plans) {
        if (plan.total_to_generate == 0) continue;
        std::vector<bool> mask(ds.size(), false);
        for (std::size_t r : plan.parents) mask[r] = true;
        for (std::size_t i = 0; i < plan.parents.size(); ++i) {
            if (plan.generate[i] == 0) continue;
            const auto pool = same_class_pool(ds, plan.parents[i], mask, s.k_neighbors);
            for (std::size_t g = 0; g < plan.generate[i]; ++g) {
                const std::size_t neighbor = pool[uniform_index(rng, pool.size())];
                emit_synthetic(ds, out, plan.parents[i], neighbor, uniform_unit(rng), scratch);
            }
        }
    }
    out.plans = std::move(plans);
    return out;
}

nlohmann::ordered_json to_json(const std::vector<SynthesisRecord>& records) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& r : records) {
        nlohmann::ordered_json e;
        e["parent_index"] = r.parent_index;
        e["neighbor_index"] = r.neighbor_index;
        e["gamma"] = r.gamma;
        e["class_id"] = r.class_id;
        arr.push_back(std::move(e));
    }
    return arr;
}

nlohmann::ordered_json to_json(const AdasynPlan& p) {
    nlohmann::ordered_json j;
    j["class_id"] = p.class_id;
    j["majority_count"] = p.majority_count;
    j["minority_count"] = p.minority_count;
    j["total_to_generate"] = p.total_to_generate;
    j["uniform_fallback"] = p.uniform_fallback;
    j["parents"] = p.parents;
    j["delta"] = p.delta;
    j["ratio"] = p.ratio;
    j["weight"] = p.weight;
    j["generate"] = p.generate;
    return j;
}

}  // namespace adarf
