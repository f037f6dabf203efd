#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "adarf/data.hpp"
#include "adarf/random.hpp"

namespace testing {

inline adarf::Dataset make_dataset(const std::vector<std::vector<double>>& rows, std::vector<adarf::ClassId> labels,
                                   std::vector<std::string> class_names = {}) {
    adarf::Dataset ds;
    const std::size_t d = rows.empty() ? 0 : rows.front().size();
    ds.features = adarf::Matrix(0, d);
    for (const auto& r : rows) ds.features.append_row(r);
    for (std::size_t f = 0; f < d; ++f) ds.feature_names.push_back("f" + std::to_string(f));
    ds.labels = std::move(labels);
    if (class_names.empty()) {
        adarf::ClassId top = 0;
        for (auto l : ds.labels) top = std::max(top, l);
        for (adarf::ClassId c = 0; c <= top && !ds.labels.empty(); ++c) class_names.push_back("c" + std::to_string(c));
    }
    ds.class_names = std::move(class_names);
    return ds;
}

// Values on a coarse grid so ties and duplicate rows show up often.
inline adarf::Dataset random_dataset(adarf::Rng& rng, std::size_t n, std::size_t d, std::size_t k,
                                     bool coarse = false) {
    std::vector<std::vector<double>> rows(n, std::vector<double>(d));
    std::vector<adarf::ClassId> labels(n);
    std::normal_distribution<double> g(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        labels[i] = static_cast<adarf::ClassId>(i < k ? i : adarf::uniform_index(rng, k));
        for (auto& v : rows[i]) v = coarse ? static_cast<double>(adarf::uniform_index(rng, 5)) : g(rng) + labels[i];
    }
    std::vector<std::string> names;
    for (std::size_t c = 0; c < k; ++c) names.push_back("c" + std::to_string(c));
    return make_dataset(rows, labels, names);
}

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("adarf_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path write(const std::string& name, const std::string& contents) const {
        auto p = path_ / name;
        std::ofstream(p, std::ios::binary) << contents;
        return p;
    }

private:
    std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace testing
