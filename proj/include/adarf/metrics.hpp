#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "adarf/data.hpp"

namespace adarf {

// counts(i, j) = rows of true class i predicted as class j.
struct ConfusionMatrix {
    std::vector<std::string> class_names;
    std::vector<std::uint64_t> counts;  // row-major k x k

    std::size_t size() const noexcept { return class_names.size(); }
    std::uint64_t at(std::size_t truth, std::size_t predicted) const { return counts[truth * size() + predicted]; }
    std::uint64_t total() const;
};

ConfusionMatrix confusion(std::span<const ClassId> y_true, std::span<const ClassId> y_pred,
                          const std::vector<std::string>& class_names);

struct BinaryCounts {
    std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
};

BinaryCounts ovr_counts(const ConfusionMatrix& cm, std::size_t c);

// Zero denominators yield 0.
double precision(const BinaryCounts& b);
double recall(const BinaryCounts& b);
double f_measure(double precision, double recall, double beta);
double f_measure(const BinaryCounts& b, double beta);
double f1(const BinaryCounts& b);

struct ClassMetrics {
    std::string name;
    double precision = 0, recall = 0, f1 = 0;
    std::optional<double> auc;  // absent when the class is unscorable
};

struct MetricsReport {
    std::vector<ClassMetrics> per_class;
    double macro_precision = 0, macro_recall = 0, macro_f1 = 0;
    std::optional<double> macro_auc;
    double accuracy = 0;
    double fbeta_parameter = 1.0;
    std::vector<std::string> warnings;
};

// Unweighted per-class means over every class in the table.
MetricsReport macro_metrics(const ConfusionMatrix& cm, double fbeta = 1.0);

struct RocCurve {
    std::vector<double> fpr;
    std::vector<double> tpr;
    // Score cut for each point: rows with score >= threshold count as
    // positive. The first point uses +infinity.
    std::vector<double> thresholds;
};

// Throws DataError unless both classes are present.
RocCurve roc_curve(std::span<const double> scores, std::span<const std::uint8_t> positives);
double auc(const RocCurve& curve);

struct OvrAuc {
    std::vector<std::optional<double>> per_class;
    double macro = 0;
    std::vector<std::string> warnings;
};

// proba[row][class]. Classes with no positive or no negative row are left
// out of the mean; throws DataError if none remain.
OvrAuc ovr_macro_auc(const std::vector<std::vector<double>>& proba, std::span<const ClassId> y_true,
                     std::size_t n_classes);

// Confusion from argmax predictions, macro P/R/F1 and OvR macro AUC.
MetricsReport evaluate(const std::vector<std::vector<double>>& proba, std::span<const ClassId> y_true,
                       const std::vector<std::string>& class_names, double fbeta = 1.0);

ClassId argmax(std::span<const double> p);

nlohmann::ordered_json to_json(const MetricsReport& report);
nlohmann::ordered_json to_json(const ConfusionMatrix& cm);
std::string to_text(const MetricsReport& report);

}  // namespace adarf
