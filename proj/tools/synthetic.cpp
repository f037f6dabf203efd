#include "synthetic.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "adarf/data.hpp"
#include "adarf/random.hpp"

namespace adarf::synth {

namespace {

const char* const kFlowNames[] = {
    " Flow Duration",          " Total Fwd Packets",      " Total Backward Packets", "Total Length of Fwd Packets",
    " Fwd Packet Length Max",  " Bwd Packet Length Mean", " Flow IAT Mean",          " Flow IAT Std",
    " Fwd IAT Total",          " Bwd IAT Mean",           " Packet Length Variance", " Average Packet Size",
};

}  // namespace

std::vector<std::string> flow_headers(const FlowTableSpec& spec) {
    std::vector<std::string> h;
    for (std::size_t f = 0; f < spec.informative; ++f) {
        const std::size_t n = std::size(kFlowNames);
        h.push_back(f < n ? kFlowNames[f] : " Feature " + std::to_string(f));
    }
    h.push_back(" Flow Bytes/s");
    h.push_back(" Bwd PSH Flags");
    h.push_back(" Subflow Fwd Packets");  // tracks the first column
    h.push_back(" Label");
    return h;
}

std::vector<std::filesystem::path> write_flow_tables(const FlowTableSpec& spec, const std::filesystem::path& dir,
                                                     std::size_t files) {
    if (files == 0) throw std::invalid_argument("files must be at least 1");
    if (spec.informative == 0) throw std::invalid_argument("need at least one informative column");
    Rng rng(spec.seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    const std::size_t d = spec.informative;

    std::vector<std::vector<double>> centers;
    for (std::size_t c = 0; c < spec.classes.size(); ++c) {
        std::vector<double> mu(d);
        for (auto& v : mu) v = noise(rng) * spec.separation;
        if (c > 0 && spec.classes[c].second < spec.rare_below)
            for (std::size_t f = 0; f < d; ++f) mu[f] = centers[0][f] + noise(rng) * spec.rare_offset;
        centers.push_back(std::move(mu));
    }

    std::vector<std::string> lines;
    for (std::size_t c = 0; c < spec.classes.size(); ++c) {
        for (std::size_t i = 0; i < spec.classes[c].second; ++i) {
            std::ostringstream os;
            double first = 0.0;
            for (std::size_t f = 0; f < d; ++f) {
                const double v = centers[c][f] + noise(rng);
                if (f == 0) first = v;
                os << format_double(v) << ',';
            }
            const double u = uniform_unit(rng);
            if (u < spec.nonfinite_rate / 2)
                os << "Infinity";
            else if (u < spec.nonfinite_rate)
                os << "NaN";
            else
                os << format_double(std::abs(noise(rng)) * 1000.0);
            os << ",0," << format_double(2.0 * first + 1e-4 * noise(rng)) << ',' << spec.classes[c].first;
            lines.push_back(os.str());
        }
    }
    shuffle_in_place(lines, rng);

    std::filesystem::create_directories(dir);
    std::string header;
    for (const auto& h : flow_headers(spec)) header += (header.empty() ? "" : ",") + h;
    std::vector<std::filesystem::path> paths;
    const std::size_t per = (lines.size() + files - 1) / files;
    for (std::size_t k = 0; k < files; ++k) {
        auto path = dir / ("flows_" + std::to_string(k) + ".csv");
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        out << header << '\n';
        for (std::size_t i = k * per; i < std::min(lines.size(), (k + 1) * per); ++i) out << lines[i] << '\n';
        paths.push_back(std::move(path));
    }
    return paths;
}

std::string blob_csv(std::size_t majority, std::size_t minority, std::size_t d, double distance, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::ostringstream os;
    for (std::size_t f = 0; f < d; ++f) os << 'f' << f << ',';
    os << "Label\n";
    auto emit = [&](std::size_t n, double shift, const char* name) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t f = 0; f < d; ++f) os << format_double(noise(rng) + (f == 0 ? shift : 0.0)) << ',';
            os << name << '\n';
        }
    };
    emit(majority, 0.0, "major");
    emit(minority, distance, "minor");
    return os.str();
}

}  // namespace adarf::synth
