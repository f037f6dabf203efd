#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "adarf/error.hpp"
#include "adarf/experiment.hpp"

namespace {

enum ExitCode { kOk = 0, kConfigError = 2, kDataError = 3, kRuntimeError = 4 };

struct Overrides {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    bool desk_scale = false;
};

void add_common(CLI::App* cmd, Overrides& o) {
    cmd->add_option("-c,--config", o.config_path, "experiment config (JSON)")->required();
    cmd->add_option("--seed", o.seed, "override the master seed");
    cmd->add_option("--out-dir", o.out_dir, "override the output directory");
    cmd->add_flag("--desk-scale", o.desk_scale, "subsample large classes for a quick run");
}

adarf::ExperimentConfig resolve(const Overrides& o) {
    auto config = adarf::load_config(o.config_path);
    if (o.seed) config.seed = *o.seed;
    if (o.out_dir) config.output_dir = *o.out_dir;
    if (o.desk_scale) config.desk_scale.enabled = true;
    return config;
}

int cmd_preprocess(const adarf::ExperimentConfig& config) {
    const auto prepared = adarf::preprocess(config);
    adarf::write_preprocess_outputs(prepared, config, config.output_dir);
    std::cout << adarf::to_text(prepared.report);
    std::cout << "wrote " << (std::filesystem::path(config.output_dir) / "dataset.csv").string() << '\n';
    return kOk;
}

int cmd_tune(const adarf::ExperimentConfig& config) {
    const auto prepared = adarf::load_or_preprocess(config);
    adarf::StageTimings timings;
    std::size_t checks = 0;
    const auto result = adarf::tune_strategy(config, prepared, &timings, &checks);
    std::filesystem::create_directories(config.output_dir);
    const std::filesystem::path out = config.output_dir;
    auto doc = adarf::to_json(result);
    doc["leakage_checks"] = checks;
    adarf::write_json(doc, out / "tune.json");
    adarf::write_json(adarf::to_json(prepared), out / "preprocess.json");
    for (const auto& c : result.candidates) {
        std::cout << "candidate";
        for (const auto& [k, v] : c.targets) std::cout << ' ' << k << '=' << v;
        if (c.mean_macro_f1)
            std::cout << "  mean macro-F1 " << *c.mean_macro_f1 << " over " << c.folds_evaluated << " folds\n";
        else
            std::cout << "  skipped: " << c.skipped_reason << '\n';
    }
    std::cout << "chosen:";
    for (const auto& [k, v] : result.chosen.strategy.targets) std::cout << ' ' << k << '=' << v;
    std::cout << '\n';
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
    return kOk;
}

int cmd_report(const adarf::ExperimentConfig& config, bool comparison) {
    const auto prepared = adarf::load_or_preprocess(config);
    const auto report = comparison ? adarf::compare(config, prepared) : adarf::run_experiment(config, prepared);
    adarf::write_run_outputs(report, config.output_dir);
    adarf::write_json(adarf::to_json(prepared), std::filesystem::path(config.output_dir) / "preprocess.json");
    std::cout << adarf::to_text(report);
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ADASYN + random forest intrusion detection experiments"};
    app.require_subcommand(1);
    Overrides o;
    auto* pre = app.add_subcommand("preprocess", "clean, merge and prune the input tables; write the cache");
    auto* tune = app.add_subcommand("tune", "pick sampling targets by repeated stratified k-fold CV");
    auto* run = app.add_subcommand("run", "repeated split / sample / fit / evaluate with one sampler");
    auto* cmp = app.add_subcommand("compare", "run every configured sampler on shared splits");
    for (auto* c : {pre, tune, run, cmp}) add_common(c, o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfigError;
    }

    try {
        const auto config = resolve(o);
        if (pre->parsed()) return cmd_preprocess(config);
        if (tune->parsed()) return cmd_tune(config);
        if (run->parsed()) return cmd_report(config, false);
        return cmd_report(config, true);
    } catch (const adarf::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const adarf::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kDataError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
}
