#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "adarf/matrix.hpp"

namespace adarf {

using ClassId = std::uint32_t;

// Raw CSV contents, headers trimmed, every row the same width as headers.
struct RawTable {
    std::vector<std::string> headers;
    std::vector<std::vector<std::string>> rows;
    std::string source_path;
};

// Splits one CSV record (RFC 4180 quoting). Embedded newlines inside quoted
// fields are not supported; CICIDS never produces them.
std::vector<std::string> split_csv_record(std::string_view line);

// Streams a CSV file record by record. The header (when has_header) is
// delivered through on_header, trimmed. Row numbers passed to on_row are
// 1-based physical line numbers.
void stream_csv(const std::filesystem::path& path, bool has_header,
                const std::function<void(std::vector<std::string>&)>& on_header,
                const std::function<void(std::vector<std::string>&, std::size_t line_no)>& on_row);

RawTable load_csv(const std::filesystem::path& path, bool has_header = true);

// Numeric flow table ready for learning. Immutable by convention once built.
struct Dataset {
    Matrix features;
    std::vector<std::string> feature_names;
    std::vector<ClassId> labels;
    std::vector<std::string> class_names;

    std::size_t size() const noexcept { return labels.size(); }
    std::size_t n_features() const noexcept { return feature_names.size(); }
    std::size_t n_classes() const noexcept { return class_names.size(); }

    std::vector<std::size_t> class_counts() const;
    std::optional<ClassId> class_id(std::string_view name) const;

    // Throws DataError if any invariant (finite values, label range, unique
    // feature names, consistent sizes) is broken.
    void validate() const;

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

// Rows in the order given; indices may repeat.
Dataset select_rows(const Dataset& ds, std::span<const std::size_t> rows);
// Keeps the listed columns in the order given.
Dataset select_columns(const Dataset& ds, std::span<const std::size_t> cols);

struct CorrelatedDrop {
    std::string kept;
    std::string dropped;
    double correlation = 0.0;
};

struct PreprocessReport {
    std::size_t rows_in = 0;
    std::size_t columns_in = 0;
    std::size_t rows_dropped_nonfinite = 0;
    std::vector<std::string> columns_dropped_constant;
    std::vector<CorrelatedDrop> columns_dropped_correlated;
    std::map<std::string, std::string> class_merge_applied;
    std::size_t final_feature_count = 0;
    // Class name -> row count, in class-id order.
    std::vector<std::pair<std::string, std::size_t>> per_class_counts;
    std::vector<std::string> warnings;

    void refresh_counts(const Dataset& ds);
};

nlohmann::ordered_json to_json(const PreprocessReport& report);
std::string to_text(const PreprocessReport& report);

// Incremental form of clean(): feed rows one at a time, so huge inputs never
// need to be materialized as strings.
class RowCleaner {
public:
    RowCleaner(std::vector<std::string> headers, const std::string& label_column,
               const std::string& source = {});

    // Headers are compared after trimming. Throws DataError on mismatch.
    void check_same_schema(const std::vector<std::string>& headers, const std::string& source) const;
    void add_row(const std::vector<std::string>& cells, std::size_t line_no);
    std::pair<Dataset, PreprocessReport> finish() &&;

private:
    std::vector<std::string> headers_;
    std::size_t label_index_ = 0;
    std::string source_;
    std::vector<double> values_;
    std::vector<ClassId> labels_;
    std::vector<std::string> class_names_;
    std::map<std::string, ClassId, std::less<>> class_lookup_;
    std::vector<double> scratch_;
    std::size_t rows_in_ = 0;
    std::size_t dropped_ = 0;
};

// Parses numbers, drops non-finite rows and constant columns, encodes labels
// in first-appearance order. Duplicate headers get a ".N" suffix.
std::pair<Dataset, PreprocessReport> clean(const RawTable& table, const std::string& label_column);

// Renames classes (original name -> merged name) and re-encodes labels.
Dataset merge_classes(const Dataset& ds, const std::map<std::string, std::string>& merge_map);

// Re-encodes labels in first-appearance row order, dropping empty classes.
Dataset canonicalize_classes(const Dataset& ds);

// Removes columns whose value is identical on every row; returns their names.
std::pair<Dataset, std::vector<std::string>> drop_constant_columns(const Dataset& ds);

double pearson(std::span<const double> x, std::span<const double> y);

// Drops the later column of every pair with |r| > threshold, scanning left to
// right; a dropped column never triggers further drops.
std::pair<Dataset, std::vector<CorrelatedDrop>> prune_correlated(const Dataset& ds, double threshold = 0.95);

struct Standardizer {
    std::vector<double> means;
    std::vector<double> std_devs;

    Dataset apply(const Dataset& ds) const;
    Dataset invert(const Dataset& ds) const;
    void apply_row(std::span<double> row) const;
};

// Population standard deviation. Throws DataError on zero variance.
Standardizer fit_standardizer(const Dataset& ds);
Standardizer fit_standardizer(const Dataset& ds, std::span<const std::size_t> rows);
inline Dataset apply_standardizer(const Standardizer& s, const Dataset& ds) { return s.apply(ds); }

struct SplitPair {
    std::vector<std::size_t> train_indices;  // ascending
    std::vector<std::size_t> test_indices;   // ascending
    double ratio = 0.8;
    std::uint64_t seed = 0;
    std::vector<std::string> warnings;
};

// Stratified: per class, round(count * ratio) rows go to train, clipped so
// both sides are nonempty when count >= 2; a single-row class goes to train.
SplitPair train_test_split(const Dataset& ds, double train_ratio = 0.8, std::uint64_t seed = 0);
SplitPair train_test_split(std::span<const ClassId> labels, std::size_t n_classes, double train_ratio,
                           std::uint64_t seed);

struct FoldPlan {
    std::size_t k = 5;
    std::vector<std::size_t> assignments;  // row -> fold id
    std::uint64_t seed = 0;

    std::vector<std::size_t> fold_rows(std::size_t fold) const;
    std::vector<std::size_t> training_rows(std::size_t fold) const;
};

// Per-class seeded shuffle, then round-robin over folds. The round-robin
// cursor carries over between classes so overall fold sizes stay level.
FoldPlan stratified_kfold(const Dataset& ds, std::size_t k = 5, std::uint64_t seed = 0);
FoldPlan stratified_kfold(std::span<const ClassId> labels, std::size_t n_classes, std::size_t k,
                          std::uint64_t seed);

// Keeps every row of classes smaller than class_threshold and a seeded
// `fraction` of larger classes (at least one row), preserving row order.
// Returns the kept row indices.
std::vector<std::size_t> stratified_subsample(const Dataset& ds, std::size_t class_threshold, double fraction,
                                              std::uint64_t seed);

// Preprocessed cache: CSV with features then a trailing label column, values
// written in shortest round-trip form.
void write_dataset_csv(const Dataset& ds, const std::filesystem::path& path, const std::string& label_column);
Dataset read_dataset_csv(const std::filesystem::path& path, const std::string& label_column);

std::string trim(std::string_view s);
// Replaces bytes that are not valid UTF-8 with U+FFFD (CICIDS web-attack
// labels carry a stray cp1252 dash).
std::string sanitize_utf8(std::string_view s);
std::string format_double(double v);

}  // namespace adarf
