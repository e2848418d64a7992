#pragma once

#include "cryptomove/dataset.hpp"
#include "cryptomove/indicators.hpp"
#include "cryptomove/ingest.hpp"
#include "cryptomove/metrics.hpp"
#include "cryptomove/tune.hpp"

#include <array>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cryptomove {

/// Experiment description loaded from a JSON file. Relative paths are
/// resolved against the directory holding the config.
struct ExperimentConfig {
    std::string asset;
    Frequency frequency = Frequency::hourly;
    std::filesystem::path candles;
    CandleFormat candle_format = CandleFormat::canonical_csv;
    Frequency candle_frequency = Frequency::hourly;
    std::optional<std::filesystem::path> affect;
    std::optional<std::filesystem::path> lexicon;
    std::optional<std::filesystem::path> comments;  // raw text for VAD scoring; needs `lexicon`
    FeatureSet feature_set = FeatureSet::restricted;
    int lag = 1;
    LabelSign label_sign = LabelSign::rising;
    std::vector<indicators::IndicatorSpec> indicators;
    std::array<double, 3> split{0.6, 0.2, 0.2};
    std::vector<SearchSpace> search;  // one entry per architecture, in run order
    nn::NetworkSpec network;          // fields outside the search space
    int iterations = 200;
    ResampleMode resample = ResampleMode::bootstrap;
    double oob_fraction = 0.378;
    Metric objective = Metric::accuracy;
    std::uint64_t seed = 0;
    std::filesystem::path output;
    std::string sha256;  // of the config file bytes
};

/// Throws ConfigError for malformed JSON, unknown enum values, a missing
/// seed, or referenced files that do not exist.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(std::string_view text, const std::filesystem::path& base_dir);

enum class Stage { ingest, features, label, dataset, tune, train, evaluate, report };
inline constexpr std::array<Stage, 8> kStages = {Stage::ingest, Stage::features, Stage::label, Stage::dataset,
                                                 Stage::tune,   Stage::train,    Stage::evaluate, Stage::report};

std::string_view to_string(Stage s) noexcept;
Stage parse_stage(std::string_view s);

struct RunOptions {
    /// Run only this stage, reading its inputs from earlier artifacts in the
    /// output directory. Unset runs every stage.
    std::optional<Stage> stage;
    unsigned workers = 0;
    bool progress = true;  // one line per stage step on stdout
};

/// Failure inside a stage; `stage()` names where it happened.
class StageError : public std::runtime_error {
public:
    StageError(Stage stage, std::exception_ptr cause, const std::string& what)
        : std::runtime_error(std::string(to_string(stage)) + ": " + what), stage_(stage), cause_(std::move(cause)) {}

    Stage stage() const noexcept { return stage_; }
    const std::exception_ptr& cause() const noexcept { return cause_; }

private:
    Stage stage_;
    std::exception_ptr cause_;
};

/// Runs the pipeline and writes artifacts plus `manifest.json` into
/// config.output. Artifacts become visible only when every requested stage
/// succeeds; on failure none of this run's files are left behind and a
/// StageError wrapping the original exception is thrown.
void run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

/// 0 success, 2 config, 3 data, 4 training, 5 I/O, 1 anything else.
int exit_code(const std::exception_ptr& error) noexcept;

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);
std::string sha256_hex(std::string_view bytes);

}  // namespace cryptomove
