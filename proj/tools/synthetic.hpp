#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace adarf::synth {

// CICIDS-flavoured flow table: padded headers, a " Label" column, Gaussian
// class blobs, one constant column, one near-duplicate column and a
// " Flow Bytes/s" column that sometimes holds Infinity or NaN.
struct FlowTableSpec {
    std::vector<std::pair<std::string, std::size_t>> classes = {
        {"BENIGN", 5000}, {"DoS Hulk", 1200}, {"PortScan", 800}, {"DDoS", 600},
        {"Bot", 60},      {"Infiltration", 18}, {"Heartbleed", 11},
    };
    std::size_t informative = 8;
    double separation = 3.0;
    // Classes with fewer rows than this sit close to BENIGN.
    std::size_t rare_below = 100;
    double rare_offset = 1.2;
    double nonfinite_rate = 0.01;
    std::uint64_t seed = 7;
};

std::vector<std::string> flow_headers(const FlowTableSpec& spec);

// Rows are shuffled across classes. With files > 1 the rows are dealt into
// consecutive chunks, each with its own header line.
std::vector<std::filesystem::path> write_flow_tables(const FlowTableSpec& spec, const std::filesystem::path& dir,
                                                     std::size_t files = 1);

// Two isotropic Gaussian blobs in d dimensions as CSV text with header
// f0..f{d-1},Label and classes "major" / "minor".
std::string blob_csv(std::size_t majority, std::size_t minority, std::size_t d, double distance, std::uint64_t seed);

}  // namespace adarf::synth
