#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "adarf/data.hpp"
#include "adarf/forest.hpp"
#include "adarf/metrics.hpp"
#include "adarf/sampling.hpp"

namespace adarf {

enum class SamplerMethod { None, Rus, Smote, Adasyn };

std::string to_string(SamplerMethod m);

struct SamplerSpec {
    std::string name;
    SamplerMethod method = SamplerMethod::None;
    SamplingStrategy strategy;  // seed is replaced per repetition
};

struct DeskScale {
    bool enabled = false;
    std::size_t class_threshold = 10000;
    double fraction = 0.02;
};

struct ExperimentConfig {
    std::vector<std::string> input_paths;
    std::string label_column = "Label";
    std::map<std::string, std::string> merge_map;
    double correlation_threshold = 0.95;
    double train_ratio = 0.8;
    std::size_t folds = 5;
    std::size_t cv_repetitions = 10;
    std::size_t repetitions = 50;
    SamplerSpec sampler;
    std::vector<SamplerSpec> samplers;
    std::vector<std::map<std::string, std::size_t>> candidate_grid;
    ForestConfig forest;
    std::uint64_t seed = 0;
    std::string output_dir = "out";
    DeskScale desk_scale;
    std::optional<std::string> cache_path;
    bool tune_before_run = false;
    double fbeta = 1.0;
};

// Strict: unknown keys and wrong types raise ConfigError.
ExperimentConfig parse_config(const nlohmann::ordered_json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::ordered_json to_json(const ExperimentConfig& config);
nlohmann::ordered_json to_json(const SamplerSpec& spec);

// The four comparison rows: plain forest, RUS, SMOTE, ADASYN.
std::vector<SamplerSpec> default_samplers();
// One candidate per value in {250, 500, 1000, 2000}, applied to every class
// the configured sampler targets.
std::vector<std::map<std::string, std::size_t>> default_candidate_grid(const SamplerSpec& sampler);

// Refuses any row index that belongs to the test split.
class LeakageGuard {
public:
    LeakageGuard(std::size_t n_rows, std::span<const std::size_t> test_rows);
    void check(std::span<const std::size_t> rows, const std::string& stage);
    std::size_t checks() const noexcept { return checks_; }

private:
    std::vector<char> is_test_;
    std::size_t checks_ = 0;
};

struct PreparedData {
    Dataset data;
    PreprocessReport report;
    // Classes thinned by desk-scale mode -> kept fraction.
    std::map<std::string, double> desk_scale_fractions;
};

PreparedData preprocess(const ExperimentConfig& config);
// Uses config.cache_path (and the preprocess.json beside it) when present.
PreparedData load_or_preprocess(const ExperimentConfig& config);
nlohmann::ordered_json to_json(const PreparedData& prepared);
void write_preprocess_outputs(const PreparedData& prepared, const ExperimentConfig& config,
                              const std::filesystem::path& out_dir);

// Multiplies targets of desk-scale-thinned classes by their kept fraction.
SamplingStrategy scale_strategy(const SamplingStrategy& strategy, const std::map<std::string, double>& fractions);

ResampleResult apply_sampler(const SamplerSpec& spec, const Dataset& train, std::uint64_t seed);

struct StageTimings {
    std::map<std::string, double> seconds;
    void add(const std::string& stage, double s) { seconds[stage] += s; }
};

struct RepetitionResult {
    std::size_t repetition = 0;
    std::uint64_t seed = 0;
    std::size_t train_rows = 0;
    std::size_t sampled_rows = 0;
    std::size_t test_rows = 0;
    std::optional<double> oob_error;
    MetricsReport metrics;
};

struct Aggregate {
    double macro_precision = 0, macro_recall = 0, macro_f1 = 0;
    std::optional<double> macro_auc;
};

Aggregate aggregate(const std::vector<RepetitionResult>& reps);

struct SamplerRun {
    SamplerSpec spec;
    std::vector<RepetitionResult> repetitions;
    Aggregate mean;
};

struct CandidateScore {
    std::map<std::string, std::size_t> targets;
    std::size_t total_synthesized = 0;
    std::size_t folds_evaluated = 0;
    std::optional<double> mean_macro_f1;
    std::string skipped_reason;
};

struct TuneResult {
    SamplerSpec chosen;
    std::vector<CandidateScore> candidates;
    std::vector<std::string> warnings;
};

struct RunReport {
    std::string command;
    std::uint64_t seed = 0;
    bool desk_scale = false;
    PreprocessReport preprocess;
    std::optional<TuneResult> tuning;
    std::vector<SamplerRun> runs;
    std::size_t leakage_checks = 0;
    StageTimings timings;
    std::optional<ForestModel> model;  // first repetition of the first run
};

TuneResult tune_strategy(const ExperimentConfig& config, const PreparedData& prepared, StageTimings* timings = nullptr,
                         std::size_t* leakage_checks = nullptr);
RunReport run_experiment(const ExperimentConfig& config, const PreparedData& prepared);
RunReport compare(const ExperimentConfig& config, const PreparedData& prepared);

nlohmann::ordered_json to_json(const RunReport& report);
nlohmann::ordered_json to_json(const TuneResult& result);
std::string to_text(const RunReport& report);
// report.json, report.txt, timings.json and (when present) model.json.
void write_run_outputs(const RunReport& report, const std::filesystem::path& out_dir);

// Writes `doc` as indented JSON followed by a newline.
void write_json(const nlohmann::ordered_json& doc, const std::filesystem::path& path);

}  // namespace adarf
