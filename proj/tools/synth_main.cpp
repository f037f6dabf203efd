#include <iostream>

#include "CLI11.hpp"

#include "synthetic.hpp"

int main(int argc, char** argv) {
    CLI::App app{"write a small CICIDS-style flow table for smoke runs"};
    adarf::synth::FlowTableSpec spec;
    std::string dir = "synthetic";
    std::size_t files = 2;
    double scale = 1.0;
    app.add_option("--dir", dir, "output directory");
    app.add_option("--files", files, "number of CSV files")->check(CLI::PositiveNumber);
    app.add_option("--seed", spec.seed, "generator seed");
    app.add_option("--scale", scale, "multiply every class size")->check(CLI::PositiveNumber);
    CLI11_PARSE(app, argc, argv);

    for (auto& [name, n] : spec.classes) n = std::max<std::size_t>(2, static_cast<std::size_t>(n * scale));
    try {
        for (const auto& p : adarf::synth::write_flow_tables(spec, dir, files)) std::cout << p.string() << '\n';
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    }
    return 0;
}
