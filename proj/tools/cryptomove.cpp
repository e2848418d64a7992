// Command-line driver for the experiment pipeline.

#include "cryptomove/error.hpp"
#include "cryptomove/pipeline.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdint>
#include <cstdio>
#include <exception>
#include <optional>
#include <string>
#include <vector>

int main(int argc, char** argv) {
    using namespace cryptomove;

    CLI::App app{"Cryptocurrency price-movement experiments: ingest, features, labels, datasets, tuning, "
                 "training, evaluation and reporting."};
    std::string config_path;
    unsigned workers = 0;
    std::optional<std::uint64_t> seed;
    std::string stage_name;
    std::string out_dir;
    bool quiet = false;

    std::vector<std::string> stage_names;
    for (auto s : kStages) stage_names.emplace_back(to_string(s));

    app.add_option("--config", config_path, "Experiment config (JSON)")->required();
    app.add_option("--workers", workers, "Worker threads for tuning (0 = all cores); results do not depend on it");
    app.add_option("--seed", seed, "Override the config's base seed");
    app.add_option("--stage", stage_name, "Run a single stage using artifacts from earlier runs")
        ->check(CLI::IsMember(stage_names));
    app.add_option("--out", out_dir, "Override the output directory");
    app.add_flag("--quiet", quiet, "Suppress progress lines");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        auto config = load_config(config_path);
        if (seed) config.seed = *seed;
        if (!out_dir.empty()) config.output = out_dir;
        RunOptions options;
        options.workers = workers;
        options.progress = !quiet;
        if (!stage_name.empty()) options.stage = parse_stage(stage_name);
        run_experiment(config, options);
    } catch (const StageError& e) {
        fmt::print(stderr, "error [{}]: {}\n", to_string(e.stage()), e.what());
        return exit_code(std::current_exception());
    } catch (const std::exception& e) {
        fmt::print(stderr, "error [config]: {}\n", e.what());
        return exit_code(std::current_exception());
    }
    return 0;
}
