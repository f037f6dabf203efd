#include "adarf/metrics.hpp"

#include <algorithm>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include "adarf/error.hpp"

namespace adarf {

std::uint64_t ConfusionMatrix::total() const { return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}); }

ConfusionMatrix confusion(std::span<const ClassId> y_true, std::span<const ClassId> y_pred,
                          const std::vector<std::string>& class_names) {
    if (y_true.size() != y_pred.size()) throw DataError("confusion: label vectors differ in length");
    const std::size_t k = class_names.size();
    ConfusionMatrix cm{class_names, std::vector<std::uint64_t>(k * k, 0)};
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_true[i] >= k || y_pred[i] >= k) throw DataError("confusion: label outside the class table");
        ++cm.counts[y_true[i] * k + y_pred[i]];
    }
    return cm;
}

BinaryCounts ovr_counts(const ConfusionMatrix& cm, std::size_t c) {
    const std::size_t k = cm.size();
    if (c >= k) throw DataError("ovr_counts: class out of range");
    BinaryCounts b;
    b.tp = cm.at(c, c);
    std::uint64_t row = 0, col = 0;
    for (std::size_t j = 0; j < k; ++j) {
        row += cm.at(c, j);
        col += cm.at(j, c);
    }
    b.fn = row - b.tp;
    b.fp = col - b.tp;
    b.tn = cm.total() - b.tp - b.fn - b.fp;
    return b;
}

namespace {
double ratio(std::uint64_t num, std::uint64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}
}  // namespace

double precision(const BinaryCounts& b) { return ratio(b.tp, b.tp + b.fp); }
double recall(const BinaryCounts& b) { return ratio(b.tp, b.tp + b.fn); }

double f_measure(double p, double r, double beta) {
    const double b2 = beta * beta;
    const double den = b2 * p + r;
    return den == 0.0 ? 0.0 : (b2 + 1.0) * p * r / den;
}

double f_measure(const BinaryCounts& b, double beta) { return f_measure(precision(b), recall(b), beta); }
double f1(const BinaryCounts& b) { return f_measure(b, 1.0); }

MetricsReport macro_metrics(const ConfusionMatrix& cm, double fbeta) {
    const std::size_t k = cm.size();
    if (k == 0) throw DataError("macro_metrics: empty class table");
    MetricsReport r;
    r.fbeta_parameter = fbeta;
    std::uint64_t diag = 0;
    for (std::size_t c = 0; c < k; ++c) {
        const auto b = ovr_counts(cm, c);
        ClassMetrics m;
        m.name = cm.class_names[c];
        m.precision = precision(b);
        m.recall = recall(b);
        m.f1 = f_measure(m.precision, m.recall, fbeta);
        r.macro_precision += m.precision;
        r.macro_recall += m.recall;
        r.macro_f1 += m.f1;
        r.per_class.push_back(std::move(m));
        diag += b.tp;
    }
    r.macro_precision /= static_cast<double>(k);
    r.macro_recall /= static_cast<double>(k);
    r.macro_f1 /= static_cast<double>(k);
    r.accuracy = ratio(diag, cm.total());
    return r;
}

RocCurve roc_curve(std::span<const double> scores, std::span<const std::uint8_t> positives) {
    if (scores.size() != positives.size()) throw DataError("roc_curve: length mismatch");
    std::uint64_t pos = 0;
    for (auto p : positives) pos += p ? 1 : 0;
    const std::uint64_t neg = positives.size() - pos;
    if (pos == 0 || neg == 0) throw DataError("roc_curve: needs at least one positive and one negative");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocCurve curve;
    curve.fpr.push_back(0.0);
    curve.tpr.push_back(0.0);
    curve.thresholds.push_back(std::numeric_limits<double>::infinity());
    std::uint64_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < order.size();) {
        const double s = scores[order[i]];
        // tied scores cross the threshold together
        for (; i < order.size() && scores[order[i]] == s; ++i) (positives[order[i]] ? tp : fp) += 1;
        curve.fpr.push_back(ratio(fp, neg));
        curve.tpr.push_back(ratio(tp, pos));
        curve.thresholds.push_back(s);
    }
    return curve;
}

double auc(const RocCurve& curve) {
    double area = 0.0;
    for (std::size_t i = 1; i < curve.fpr.size(); ++i)
        area += (curve.fpr[i] - curve.fpr[i - 1]) * (curve.tpr[i] + curve.tpr[i - 1]) / 2.0;
    return area;
}

OvrAuc ovr_macro_auc(const std::vector<std::vector<double>>& proba, std::span<const ClassId> y_true,
                     std::size_t n_classes) {
    if (proba.size() != y_true.size()) throw DataError("ovr_macro_auc: length mismatch");
    OvrAuc out;
    out.per_class.assign(n_classes, std::nullopt);
    std::vector<double> scores(proba.size());
    std::vector<std::uint8_t> positive(proba.size());
    double sum = 0.0;
    std::size_t scored = 0;
    for (std::size_t c = 0; c < n_classes; ++c) {
        std::size_t pos = 0;
        for (std::size_t i = 0; i < proba.size(); ++i) {
            if (proba[i].size() != n_classes) throw DataError("ovr_macro_auc: probability row width mismatch");
            scores[i] = proba[i][c];
            positive[i] = y_true[i] == c ? 1 : 0;
            pos += positive[i];
        }
        if (pos == 0 || pos == proba.size()) {
            out.warnings.push_back("class " + std::to_string(c) + " has no " + (pos == 0 ? "positive" : "negative") +
                                   " rows; excluded from macro AUC");
            continue;
        }
        const double a = auc(roc_curve(scores, positive));
        out.per_class[c] = a;
        sum += a;
        ++scored;
    }
    if (scored == 0) throw DataError("ovr_macro_auc: no scorable class");
    out.macro = sum / static_cast<double>(scored);
    return out;
}

ClassId argmax(std::span<const double> p) {
    return static_cast<ClassId>(std::max_element(p.begin(), p.end()) - p.begin());
}

MetricsReport evaluate(const std::vector<std::vector<double>>& proba, std::span<const ClassId> y_true,
                       const std::vector<std::string>& class_names, double fbeta) {
    std::vector<ClassId> y_pred;
    y_pred.reserve(proba.size());
    for (const auto& p : proba) y_pred.push_back(argmax(p));
    MetricsReport report = macro_metrics(confusion(y_true, y_pred, class_names), fbeta);
    try {
        auto a = ovr_macro_auc(proba, y_true, class_names.size());
        for (std::size_t c = 0; c < class_names.size(); ++c) report.per_class[c].auc = a.per_class[c];
        report.macro_auc = a.macro;
        report.warnings = std::move(a.warnings);
    } catch (const DataError& e) {
        report.warnings.push_back(e.what());
    }
    return report;
}

namespace {
nlohmann::ordered_json opt(const std::optional<double>& v) {
    return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json();
}
}  // namespace

nlohmann::ordered_json to_json(const MetricsReport& r) {
    nlohmann::ordered_json j;
    j["macro_precision"] = r.macro_precision;
    j["macro_recall"] = r.macro_recall;
    j["macro_f1"] = r.macro_f1;
    j["macro_auc"] = opt(r.macro_auc);
    j["accuracy"] = r.accuracy;
    j["fbeta_parameter"] = r.fbeta_parameter;
    auto per = nlohmann::ordered_json::array();
    for (const auto& m : r.per_class) {
        nlohmann::ordered_json e;
        e["class"] = m.name;
        e["precision"] = m.precision;
        e["recall"] = m.recall;
        e["f1"] = m.f1;
        e["auc"] = opt(m.auc);
        per.push_back(std::move(e));
    }
    j["per_class"] = std::move(per);
    j["warnings"] = r.warnings;
    return j;
}

nlohmann::ordered_json to_json(const ConfusionMatrix& cm) {
    nlohmann::ordered_json j;
    j["class_names"] = cm.class_names;
    auto rows = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < cm.size(); ++i) {
        std::vector<std::uint64_t> row(cm.counts.begin() + static_cast<std::ptrdiff_t>(i * cm.size()),
                                       cm.counts.begin() + static_cast<std::ptrdiff_t>((i + 1) * cm.size()));
        rows.push_back(row);
    }
    j["counts"] = std::move(rows);
    return j;
}

std::string to_text(const MetricsReport& r) {
    std::size_t width = 5;
    for (const auto& m : r.per_class) width = std::max(width, m.name.size());
    std::ostringstream os;
    os << std::fixed;
    os << std::left << std::setw(static_cast<int>(width)) << "Class" << std::right << std::setw(12) << "Precision"
       << std::setw(12) << "Recall" << std::setw(12) << "F1" << std::setw(10) << "AUC" << '\n';
    auto row = [&](const std::string& name, double p, double rc, double f, std::optional<double> a) {
        os << std::left << std::setw(static_cast<int>(width)) << name << std::right << std::setprecision(3)
           << std::setw(11) << p * 100 << '%' << std::setw(11) << rc * 100 << '%' << std::setw(11) << f * 100
           << '%' << std::setprecision(5) << std::setw(10);
        if (a)
            os << *a;
        else
            os << "-";
        os << '\n';
    };
    for (const auto& m : r.per_class) row(m.name, m.precision, m.recall, m.f1, m.auc);
    row("macro", r.macro_precision, r.macro_recall, r.macro_f1, r.macro_auc);
    return os.str();
}

}  // namespace adarf
