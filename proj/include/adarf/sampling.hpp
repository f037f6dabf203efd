#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "adarf/data.hpp"

namespace adarf {

enum class StrategyMode { TargetCounts, BalanceRatio };

struct SamplingStrategy {
    StrategyMode mode = StrategyMode::TargetCounts;
    std::map<std::string, std::size_t> targets;  // class name -> desired count
    double beta = 1.0;                           // BalanceRatio only
    std::size_t k_neighbors = 5;
    std::uint64_t seed = 0;

    static SamplingStrategy counts(std::map<std::string, std::size_t> targets, std::uint64_t seed = 0,
                                   std::size_t k = 5) {
        return {StrategyMode::TargetCounts, std::move(targets), 1.0, k, seed};
    }
    static SamplingStrategy ratio(double beta, std::uint64_t seed = 0, std::size_t k = 5) {
        return {StrategyMode::BalanceRatio, {}, beta, k, seed};
    }
};

// One synthetic row: features = parent + (neighbor - parent) * gamma, clamped
// componentwise to the parent/neighbor segment.
// Indices refer to rows of the sampler's input dataset.
struct SynthesisRecord {
    std::size_t parent_index = 0;
    std::size_t neighbor_index = 0;
    double gamma = 0.0;
    ClassId class_id = 0;

    friend bool operator==(const SynthesisRecord&, const SynthesisRecord&) = default;
};

struct AdasynPlan {
    ClassId class_id = 0;
    std::size_t majority_count = 0;   // m_l
    std::size_t minority_count = 0;   // m_s
    std::size_t total_to_generate = 0;  // G
    std::vector<std::size_t> parents;   // minority rows, ascending
    std::vector<std::size_t> delta;     // non-minority rows among the K nearest
    std::vector<double> ratio;          // r_i = delta_i / K
    std::vector<double> weight;         // normalized r_i
    std::vector<std::size_t> generate;  // g_i, sums to G
    bool uniform_fallback = false;
};

struct ResampleResult {
    Dataset data;
    // For every output row, the input row it came from; synthetic rows map to
    // their parent.
    std::vector<std::size_t> origin;
    std::vector<SynthesisRecord> records;
    std::vector<AdasynPlan> plans;
};

ResampleResult random_undersample(const Dataset& ds, const SamplingStrategy& strategy);
ResampleResult smote(const Dataset& ds, const SamplingStrategy& strategy);
ResampleResult adasyn(const Dataset& ds, const SamplingStrategy& strategy);

AdasynPlan adasyn_plan(const Dataset& ds, ClassId minority, const SamplingStrategy& strategy);

// floor(weight_i * total) plus one extra unit for the largest remainders,
// computed exactly from integer weights. Ties go to the lower index.
std::vector<std::size_t> apportion(const std::vector<std::size_t>& weights, std::size_t total);

// Classes an oversampler will touch, with their target counts, in class-id
// order. Validates the strategy against the dataset.
std::vector<std::pair<ClassId, std::size_t>> oversampling_targets(const Dataset& ds, const SamplingStrategy& strategy);

nlohmann::ordered_json to_json(const std::vector<SynthesisRecord>& records);
nlohmann::ordered_json to_json(const AdasynPlan& plan);

}  // namespace adarf
