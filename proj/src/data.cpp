#include "adarf/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "adarf/error.hpp"
#include "adarf/random.hpp"

namespace adarf {

std::string trim(std::string_view s) {
    const auto is_space = [](unsigned char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
    std::size_t b = 0, e = s.size();
    while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string sanitize_utf8(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    const auto* p = reinterpret_cast<const unsigned char*>(s.data());
    const std::size_t n = s.size();
    for (std::size_t i = 0; i < n;) {
        const unsigned char c = p[i];
        std::size_t len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 0;
        bool ok = len > 0 && i + len <= n;
        for (std::size_t k = 1; ok && k < len; ++k) ok = (p[i + k] & 0xC0) == 0x80;
        if (ok) {
            out.append(s.substr(i, len));
            i += len;
        } else {
            out += "\xEF\xBF\xBD";  // U+FFFD
            ++i;
        }
    }
    return out;
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::vector<std::string> split_csv_record(std::string_view line) {
    std::vector<std::string> cells;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    cells.push_back(std::move(cur));
    return cells;
}

void stream_csv(const std::filesystem::path& path, bool has_header,
                const std::function<void(std::vector<std::string>&)>& on_header,
                const std::function<void(std::vector<std::string>&, std::size_t)>& on_row) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());

    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    bool saw_header = !has_header;
    bool any = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
        if (line.empty()) continue;
        any = true;
        auto cells = split_csv_record(line);
        if (!saw_header) {
            for (auto& h : cells) h = trim(h);
            width = cells.size();
            saw_header = true;
            on_header(cells);
            continue;
        }
        if (width == 0) width = cells.size();
        if (cells.size() != width) {
            throw DataError(path.string() + ": line " + std::to_string(line_no) + " has " +
                            std::to_string(cells.size()) + " cells, expected " + std::to_string(width));
        }
        on_row(cells, line_no);
    }
    if (in.bad()) throw DataError("read failure on " + path.string());
    if (!any) throw DataError(path.string() + " is empty");
}

RawTable load_csv(const std::filesystem::path& path, bool has_header) {
    RawTable table;
    table.source_path = path.string();
    stream_csv(
        path, has_header, [&](std::vector<std::string>& h) { table.headers = std::move(h); },
        [&](std::vector<std::string>& cells, std::size_t) { table.rows.push_back(std::move(cells)); });
    if (!has_header && !table.rows.empty()) {
        for (std::size_t i = 0; i < table.rows.front().size(); ++i) table.headers.push_back("c" + std::to_string(i));
    }
    return table;
}

// ---------------------------------------------------------------- Dataset

std::vector<std::size_t> Dataset::class_counts() const {
    std::vector<std::size_t> counts(class_names.size(), 0);
    for (ClassId y : labels) ++counts[y];
    return counts;
}

std::optional<ClassId> Dataset::class_id(std::string_view name) const {
    for (std::size_t i = 0; i < class_names.size(); ++i)
        if (class_names[i] == name) return static_cast<ClassId>(i);
    return std::nullopt;
}

void Dataset::validate() const {
    if (features.rows() != labels.size()) throw DataError("dataset: feature rows and labels differ in length");
    if (features.cols() != feature_names.size()) throw DataError("dataset: feature name count mismatch");
    for (double v : features.values())
        if (!std::isfinite(v)) throw DataError("dataset: non-finite feature value");
    for (ClassId y : labels)
        if (y >= class_names.size()) throw DataError("dataset: label index out of range");
    std::set<std::string_view> seen;
    for (const auto& n : feature_names)
        if (!seen.insert(n).second) throw DataError("dataset: duplicate feature name '" + n + "'");
}

Dataset select_rows(const Dataset& ds, std::span<const std::size_t> rows) {
    Dataset out;
    out.feature_names = ds.feature_names;
    out.class_names = ds.class_names;
    std::vector<double> values;
    values.reserve(rows.size() * ds.n_features());
    out.labels.reserve(rows.size());
    for (std::size_t r : rows) {
        auto src = ds.features.row(r);
        values.insert(values.end(), src.begin(), src.end());
        out.labels.push_back(ds.labels[r]);
    }
    out.features = Matrix(rows.size(), ds.n_features(), std::move(values));
    return out;
}

Dataset select_columns(const Dataset& ds, std::span<const std::size_t> cols) {
    Dataset out;
    out.labels = ds.labels;
    out.class_names = ds.class_names;
    for (std::size_t c : cols) out.feature_names.push_back(ds.feature_names[c]);
    out.features = Matrix(ds.size(), cols.size());
    for (std::size_t r = 0; r < ds.size(); ++r)
        for (std::size_t j = 0; j < cols.size(); ++j) out.features(r, j) = ds.features(r, cols[j]);
    return out;
}

// ---------------------------------------------------------------- reports

void PreprocessReport::refresh_counts(const Dataset& ds) {
    per_class_counts.clear();
    auto counts = ds.class_counts();
    for (std::size_t c = 0; c < counts.size(); ++c) per_class_counts.emplace_back(ds.class_names[c], counts[c]);
    final_feature_count = ds.n_features();
}

nlohmann::ordered_json to_json(const PreprocessReport& r) {
    nlohmann::ordered_json j;
    j["rows_in"] = r.rows_in;
    j["columns_in"] = r.columns_in;
    j["rows_dropped_nonfinite"] = r.rows_dropped_nonfinite;
    j["columns_dropped_constant"] = r.columns_dropped_constant;
    auto corr = nlohmann::ordered_json::array();
    for (const auto& d : r.columns_dropped_correlated) {
        nlohmann::ordered_json e;
        e["kept"] = d.kept;
        e["dropped"] = d.dropped;
        e["correlation"] = d.correlation;
        corr.push_back(std::move(e));
    }
    j["columns_dropped_correlated"] = std::move(corr);
    nlohmann::ordered_json merges = nlohmann::ordered_json::object();
    for (const auto& [from, to] : r.class_merge_applied) merges[from] = to;
    j["class_merge_applied"] = std::move(merges);
    j["final_feature_count"] = r.final_feature_count;
    nlohmann::ordered_json counts = nlohmann::ordered_json::object();
    for (const auto& [name, n] : r.per_class_counts) counts[name] = n;
    j["per_class_counts"] = std::move(counts);
    j["warnings"] = r.warnings;
    return j;
}

std::string to_text(const PreprocessReport& r) {
    std::ostringstream os;
    os << "rows in                 " << r.rows_in << '\n'
       << "rows dropped (nonfinite) " << r.rows_dropped_nonfinite << '\n'
       << "columns in              " << r.columns_in << '\n'
       << "constant columns dropped " << r.columns_dropped_constant.size() << '\n'
       << "correlated cols dropped " << r.columns_dropped_correlated.size() << '\n'
       << "final feature count     " << r.final_feature_count << "\n\n";
    std::size_t width = 8;
    for (const auto& [name, n] : r.per_class_counts) width = std::max(width, name.size());
    os << "Category" << std::string(width - 8 + 2, ' ') << "Number\n";
    for (const auto& [name, n] : r.per_class_counts)
        os << name << std::string(width - name.size() + 2, ' ') << n << '\n';
    return os.str();
}

// ---------------------------------------------------------------- cleaning

namespace {

// Empty cells count as missing, i.e. non-finite.
bool parse_cell(const std::string& cell, double& out) {
    std::string t = trim(cell);
    if (t.empty()) {
        out = std::numeric_limits<double>::quiet_NaN();
        return true;
    }
    char* end = nullptr;
    out = std::strtod(t.c_str(), &end);
    return end == t.c_str() + t.size();
}

std::vector<std::string> dedupe_names(std::vector<std::string> names) {
    std::map<std::string, int> seen;
    std::set<std::string> taken(names.begin(), names.end());
    for (auto& n : names) {
        int& k = seen[n];
        if (k++ == 0) continue;
        std::string candidate;
        int suffix = k - 1;
        do {
            candidate = n + "." + std::to_string(suffix++);
        } while (taken.count(candidate));
        taken.insert(candidate);
        n = candidate;
    }
    return names;
}

}  // namespace

RowCleaner::RowCleaner(std::vector<std::string> headers, const std::string& label_column, const std::string& source)
    : source_(source) {
    for (auto& h : headers) h = sanitize_utf8(trim(h));
    auto it = std::find(headers.begin(), headers.end(), trim(label_column));
    if (it == headers.end())
        throw DataError("label column '" + label_column + "' not found" + (source.empty() ? "" : " in " + source));
    label_index_ = static_cast<std::size_t>(it - headers.begin());
    headers_ = std::move(headers);
    scratch_.resize(headers_.size() - 1);
}

void RowCleaner::check_same_schema(const std::vector<std::string>& headers, const std::string& source) const {
    bool same = headers.size() == headers_.size();
    for (std::size_t i = 0; same && i < headers.size(); ++i) same = sanitize_utf8(trim(headers[i])) == headers_[i];
    if (!same) throw DataError("schema mismatch: " + source + " has different columns than " + source_);
}

void RowCleaner::add_row(const std::vector<std::string>& cells, std::size_t line_no) {
    if (cells.size() != headers_.size())
        throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(headers_.size()) +
                        " cells, got " + std::to_string(cells.size()));
    ++rows_in_;
    bool finite = true;
    std::size_t j = 0;
    for (std::size_t c = 0; c < cells.size(); ++c) {
        if (c == label_index_) continue;
        double v;
        if (!parse_cell(cells[c], v))
            throw DataError((source_.empty() ? "" : source_ + ": ") + "line " + std::to_string(line_no) +
                            ", column '" + headers_[c] + "': not a number: '" + cells[c] + "'");
        if (!std::isfinite(v)) finite = false;
        scratch_[j++] = v;
    }
    if (!finite) {
        ++dropped_;
        return;
    }
    std::string label = sanitize_utf8(trim(cells[label_index_]));
    auto it = class_lookup_.find(label);
    ClassId id;
    if (it == class_lookup_.end()) {
        id = static_cast<ClassId>(class_names_.size());
        class_lookup_.emplace(label, id);
        class_names_.push_back(std::move(label));
    } else {
        id = it->second;
    }
    labels_.push_back(id);
    values_.insert(values_.end(), scratch_.begin(), scratch_.end());
}

std::pair<Dataset, PreprocessReport> RowCleaner::finish() && {
    PreprocessReport report;
    report.rows_in = rows_in_;
    report.columns_in = headers_.size() - 1;
    report.rows_dropped_nonfinite = dropped_;
    const std::size_t n = labels_.size();
    const std::size_t d = headers_.size() - 1;
    if (n == 0) throw DataError("no rows survive cleaning");

    std::vector<std::string> names;
    for (std::size_t c = 0; c < headers_.size(); ++c)
        if (c != label_index_) names.push_back(headers_[c]);
    names = dedupe_names(std::move(names));

    std::vector<std::size_t> keep;
    for (std::size_t c = 0; c < d; ++c) {
        const double first = values_[c];
        bool constant = true;
        for (std::size_t r = 1; r < n && constant; ++r) constant = values_[r * d + c] == first;
        if (constant)
            report.columns_dropped_constant.push_back(names[c]);
        else
            keep.push_back(c);
    }
    if (keep.empty()) throw DataError("no feature columns survive cleaning");

    Dataset ds;
    for (std::size_t c : keep) ds.feature_names.push_back(names[c]);
    if (keep.size() == d) {
        ds.features = Matrix(n, d, std::move(values_));
    } else {
        std::vector<double> packed;
        packed.reserve(n * keep.size());
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c : keep) packed.push_back(values_[r * d + c]);
        ds.features = Matrix(n, keep.size(), std::move(packed));
    }
    ds.labels = std::move(labels_);
    ds.class_names = std::move(class_names_);
    report.refresh_counts(ds);
    return {std::move(ds), std::move(report)};
}

std::pair<Dataset, PreprocessReport> clean(const RawTable& table, const std::string& label_column) {
    RowCleaner cleaner(table.headers, label_column, table.source_path);
    std::size_t line = 1;
    for (const auto& row : table.rows) cleaner.add_row(row, ++line);
    return std::move(cleaner).finish();
}

Dataset merge_classes(const Dataset& ds, const std::map<std::string, std::string>& merge_map) {
    for (const auto& [from, to] : merge_map)
        if (!ds.class_id(from)) throw DataError("merge_classes: unknown class '" + from + "'");

    Dataset out;
    out.features = ds.features;
    out.feature_names = ds.feature_names;
    std::vector<ClassId> remap(ds.n_classes());
    for (std::size_t c = 0; c < ds.n_classes(); ++c) {
        auto it = merge_map.find(ds.class_names[c]);
        const std::string& target = it == merge_map.end() ? ds.class_names[c] : it->second;
        auto pos = std::find(out.class_names.begin(), out.class_names.end(), target);
        if (pos == out.class_names.end()) {
            remap[c] = static_cast<ClassId>(out.class_names.size());
            out.class_names.push_back(target);
        } else {
            remap[c] = static_cast<ClassId>(pos - out.class_names.begin());
        }
    }
    out.labels.reserve(ds.size());
    for (ClassId y : ds.labels) out.labels.push_back(remap[y]);
    return out;
}

Dataset canonicalize_classes(const Dataset& ds) {
    Dataset out;
    out.features = ds.features;
    out.feature_names = ds.feature_names;
    std::vector<std::optional<ClassId>> remap(ds.n_classes());
    out.labels.reserve(ds.size());
    for (ClassId y : ds.labels) {
        if (!remap[y]) {
            remap[y] = static_cast<ClassId>(out.class_names.size());
            out.class_names.push_back(ds.class_names[y]);
        }
        out.labels.push_back(*remap[y]);
    }
    return out;
}

std::pair<Dataset, std::vector<std::string>> drop_constant_columns(const Dataset& ds) {
    std::vector<std::size_t> keep;
    std::vector<std::string> dropped;
    for (std::size_t c = 0; c < ds.n_features(); ++c) {
        bool constant = true;
        for (std::size_t r = 1; r < ds.size() && constant; ++r) constant = ds.features(r, c) == ds.features(0, c);
        if (constant)
            dropped.push_back(ds.feature_names[c]);
        else
            keep.push_back(c);
    }
    if (dropped.empty()) return {ds, {}};
    return {select_columns(ds, keep), std::move(dropped)};
}

// ---------------------------------------------------------------- correlation

double pearson(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    if (n == 0 || y.size() != n) return 0.0;
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx <= 0 || syy <= 0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

std::pair<Dataset, std::vector<CorrelatedDrop>> prune_correlated(const Dataset& ds, double threshold) {
    if (!(threshold > 0.0 && threshold <= 1.0)) throw ConfigError("correlation threshold must be in (0, 1]");
    if (ds.size() < 2) throw DataError("prune_correlated needs at least two rows");

    const std::size_t n = ds.size(), d = ds.n_features();
    // Centered, unit-norm columns so each correlation is one dot product.
    std::vector<std::vector<double>> cols(d, std::vector<double>(n));
    for (std::size_t c = 0; c < d; ++c) {
        double mean = 0;
        for (std::size_t r = 0; r < n; ++r) mean += ds.features(r, c);
        mean /= static_cast<double>(n);
        double ss = 0;
        for (std::size_t r = 0; r < n; ++r) {
            cols[c][r] = ds.features(r, c) - mean;
            ss += cols[c][r] * cols[c][r];
        }
        const double norm = std::sqrt(ss);
        for (double& v : cols[c]) v = norm > 0 ? v / norm : 0.0;
    }

    std::vector<bool> dropped(d, false);
    std::vector<CorrelatedDrop> drops;
    for (std::size_t a = 0; a < d; ++a) {
        if (dropped[a]) continue;
        for (std::size_t b = a + 1; b < d; ++b) {
            if (dropped[b]) continue;
            double r = 0;
            for (std::size_t i = 0; i < n; ++i) r += cols[a][i] * cols[b][i];
            r = std::clamp(r, -1.0, 1.0);
            if (std::abs(r) > threshold) {
                dropped[b] = true;
                drops.push_back({ds.feature_names[a], ds.feature_names[b], r});
            }
        }
    }
    std::vector<std::size_t> keep;
    for (std::size_t c = 0; c < d; ++c)
        if (!dropped[c]) keep.push_back(c);
    return {select_columns(ds, keep), std::move(drops)};
}

// ---------------------------------------------------------------- standardizer

Standardizer fit_standardizer(const Dataset& ds) {
    std::vector<std::size_t> all(ds.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return fit_standardizer(ds, all);
}

Standardizer fit_standardizer(const Dataset& ds, std::span<const std::size_t> rows) {
    if (rows.empty()) throw DataError("fit_standardizer: no rows");
    const std::size_t d = ds.n_features();
    Standardizer s;
    s.means.assign(d, 0.0);
    s.std_devs.assign(d, 0.0);
    const double n = static_cast<double>(rows.size());
    for (std::size_t r : rows)
        for (std::size_t c = 0; c < d; ++c) s.means[c] += ds.features(r, c);
    for (double& m : s.means) m /= n;
    for (std::size_t r : rows)
        for (std::size_t c = 0; c < d; ++c) {
            const double dv = ds.features(r, c) - s.means[c];
            s.std_devs[c] += dv * dv;
        }
    for (std::size_t c = 0; c < d; ++c) {
        s.std_devs[c] = std::sqrt(s.std_devs[c] / n);
        if (!(s.std_devs[c] > 0.0))
            throw DataError("fit_standardizer: feature '" + ds.feature_names[c] + "' has zero variance");
    }
    return s;
}

void Standardizer::apply_row(std::span<double> row) const {
    for (std::size_t c = 0; c < row.size(); ++c) row[c] = (row[c] - means[c]) / std_devs[c];
}

Dataset Standardizer::apply(const Dataset& ds) const {
    if (ds.n_features() != means.size()) throw DataError("standardizer arity mismatch");
    Dataset out = ds;
    for (std::size_t r = 0; r < out.size(); ++r) apply_row(out.features.row(r));
    return out;
}

Dataset Standardizer::invert(const Dataset& ds) const {
    if (ds.n_features() != means.size()) throw DataError("standardizer arity mismatch");
    Dataset out = ds;
    for (std::size_t r = 0; r < out.size(); ++r) {
        auto row = out.features.row(r);
        for (std::size_t c = 0; c < row.size(); ++c) row[c] = row[c] * std_devs[c] + means[c];
    }
    return out;
}

// ---------------------------------------------------------------- splitting

namespace {

std::vector<std::vector<std::size_t>> rows_by_class(std::span<const ClassId> labels, std::size_t n_classes) {
    std::vector<std::vector<std::size_t>> by_class(n_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) by_class.at(labels[i]).push_back(i);
    return by_class;
}

}  // namespace

SplitPair train_test_split(const Dataset& ds, double train_ratio, std::uint64_t seed) {
    return train_test_split(ds.labels, ds.n_classes(), train_ratio, seed);
}

SplitPair train_test_split(std::span<const ClassId> labels, std::size_t n_classes, double train_ratio,
                           std::uint64_t seed) {
    if (labels.empty()) throw DataError("train_test_split: empty dataset");
    if (!(train_ratio > 0.0 && train_ratio < 1.0)) throw ConfigError("train_ratio must be in (0, 1)");
    SplitPair split;
    split.ratio = train_ratio;
    split.seed = seed;
    auto by_class = rows_by_class(labels, n_classes);
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto& rows = by_class[c];
        if (rows.empty()) continue;
        Rng rng(derive_seed(seed, {c}));
        shuffle_in_place(rows, rng);
        std::size_t n_train = static_cast<std::size_t>(std::llround(static_cast<double>(rows.size()) * train_ratio));
        if (rows.size() == 1) {
            n_train = 1;
            split.warnings.push_back("class " + std::to_string(c) + " has a single row; placed in train only");
        } else {
            n_train = std::clamp<std::size_t>(n_train, 1, rows.size() - 1);
        }
        split.train_indices.insert(split.train_indices.end(), rows.begin(), rows.begin() + n_train);
        split.test_indices.insert(split.test_indices.end(), rows.begin() + n_train, rows.end());
    }
    std::sort(split.train_indices.begin(), split.train_indices.end());
    std::sort(split.test_indices.begin(), split.test_indices.end());
    return split;
}

std::vector<std::size_t> FoldPlan::fold_rows(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i] == fold) out.push_back(i);
    return out;
}

std::vector<std::size_t> FoldPlan::training_rows(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
        if (assignments[i] != fold) out.push_back(i);
    return out;
}

FoldPlan stratified_kfold(const Dataset& ds, std::size_t k, std::uint64_t seed) {
    return stratified_kfold(ds.labels, ds.n_classes(), k, seed);
}

FoldPlan stratified_kfold(std::span<const ClassId> labels, std::size_t n_classes, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw ConfigError("stratified_kfold: k must be at least 2");
    if (k > labels.size()) throw DataError("stratified_kfold: k exceeds the number of rows");
    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.assignments.assign(labels.size(), 0);
    auto by_class = rows_by_class(labels, n_classes);
    std::size_t cursor = 0;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto& rows = by_class[c];
        Rng rng(derive_seed(seed, {c}));
        shuffle_in_place(rows, rng);
        for (std::size_t r : rows) {
            plan.assignments[r] = cursor;
            cursor = (cursor + 1) % k;
        }
    }
    return plan;
}

std::vector<std::size_t> stratified_subsample(const Dataset& ds, std::size_t class_threshold, double fraction,
                                              std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("desk-scale fraction must be in (0, 1]");
    auto by_class = rows_by_class(ds.labels, ds.n_classes());
    std::vector<std::size_t> keep;
    for (std::size_t c = 0; c < by_class.size(); ++c) {
        auto& rows = by_class[c];
        if (rows.size() < class_threshold) {
            keep.insert(keep.end(), rows.begin(), rows.end());
            continue;
        }
        std::size_t n = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(static_cast<double>(rows.size()) * fraction)));
        Rng rng(derive_seed(seed, {c}));
        shuffle_in_place(rows, rng);
        keep.insert(keep.end(), rows.begin(), rows.begin() + n);
    }
    std::sort(keep.begin(), keep.end());
    return keep;
}

// ---------------------------------------------------------------- cache

void write_dataset_csv(const Dataset& ds, const std::filesystem::path& path, const std::string& label_column) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    auto quote = [](const std::string& s) {
        if (s.find_first_of(",\"") == std::string::npos) return s;
        std::string q = "\"";
        for (char c : s) {
            if (c == '"') q += '"';
            q += c;
        }
        return q + "\"";
    };
    for (const auto& name : ds.feature_names) out << quote(name) << ',';
    out << quote(label_column) << '\n';
    for (std::size_t r = 0; r < ds.size(); ++r) {
        for (double v : ds.features.row(r)) out << format_double(v) << ',';
        out << quote(ds.class_names[ds.labels[r]]) << '\n';
    }
    if (!out) throw DataError("write failure on " + path.string());
}

Dataset read_dataset_csv(const std::filesystem::path& path, const std::string& label_column) {
    std::optional<RowCleaner> cleaner;
    stream_csv(
        path, true, [&](std::vector<std::string>& h) { cleaner.emplace(h, label_column, path.string()); },
        [&](std::vector<std::string>& cells, std::size_t line) { cleaner->add_row(cells, line); });
    auto [ds, report] = std::move(*cleaner).finish();
    if (report.rows_dropped_nonfinite || !report.columns_dropped_constant.empty())
        throw DataError(path.string() + " is not a clean dataset cache");
    return std::move(ds);
}

}  // namespace adarf
