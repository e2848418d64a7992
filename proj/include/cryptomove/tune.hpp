#pragma once

#include "cryptomove/dataset.hpp"
#include "cryptomove/metrics.hpp"
#include "cryptomove/nn/network.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <ostream>
#include <random>
#include <vector>

namespace cryptomove {

/// Candidate lists for one architecture. MALSTM-FCN fixes its layer sizes, so
/// its hidden_layers, activations and neurons lists must be empty.
struct SearchSpace {
    nn::Architecture architecture = nn::Architecture::mlp;
    std::vector<int> epochs;
    std::vector<int> hidden_layers;
    std::vector<int> batch_sizes;
    std::vector<nn::OptimizerKind> optimizers;
    std::vector<nn::ActivationKind> activations;
    std::vector<int> neurons;

    /// Searching intervals used for the reported experiments. The CNN list
    /// starts at two hidden layers because a single conv layer is rejected.
    static SearchSpace defaults(nn::Architecture a);
};

void validate(const SearchSpace& space);

/// Cartesian product, ordered lexicographically by epochs, hidden_layers,
/// batch_size, optimizer, activation, neurons (last varies fastest). Fields
/// outside the space are copied from `base`.
std::vector<nn::NetworkSpec> grid(const SearchSpace& space, const nn::NetworkSpec& base = {});

/// Deterministic 64-bit mix of a seed and two indices.
std::uint64_t mix_seed(std::uint64_t base_seed, std::uint64_t a, std::uint64_t b) noexcept;

struct ResampleSplit {
    std::vector<std::size_t> in_bag;  // sorted; may repeat indices
    std::vector<std::size_t> oob;     // sorted, distinct
};

/// n draws with replacement; oob holds the indices never drawn.
ResampleSplit bootstrap_split(std::size_t n, std::mt19937_64& rng);

/// Fixed-fraction holdout: round(n * oob_fraction) distinct indices form the oob set.
ResampleSplit holdout_split(std::size_t n, double oob_fraction, std::mt19937_64& rng);

enum class ResampleMode { bootstrap, holdout };

/// Trains on `train` and returns predicted labels for the rows of `eval`.
using Trainer = std::function<nn::Labels(const nn::NetworkSpec&, const LabeledDataset& train,
                                         const LabeledDataset& eval)>;

/// fit() followed by predict().
nn::Labels default_trainer(const nn::NetworkSpec& spec, const LabeledDataset& train, const LabeledDataset& eval);

struct TuneOptions {
    int iterations = 200;
    std::uint64_t base_seed = 0;
    ResampleMode mode = ResampleMode::bootstrap;
    double oob_fraction = 0.378;
    Metric objective = Metric::accuracy;
    /// Worker threads; 0 uses the hardware concurrency. Never changes results.
    unsigned workers = 0;
    double max_failure_rate = 0.1;
    Trainer trainer = default_trainer;
};

/// Per-class summaries over resampling iterations, indexed by ReportClass.
struct MetricDistribution {
    std::array<ScoreSummary, 4> by_class{};
    int iterations = 0;  // successful iterations
    int failures = 0;
    std::uint64_t seed = 0;

    const ScoreSummary& headline() const noexcept { return by_class[static_cast<std::size_t>(ReportClass::weighted)]; }
    const ScoreSummary& at(ReportClass c) const noexcept { return by_class[static_cast<std::size_t>(c)]; }
};

struct ConfigResult {
    nn::NetworkSpec spec;
    MetricDistribution metrics;
    bool failed = false;
};

/// Iteration i uses seed mix_seed(base_seed, config_index, i) for both the
/// resample and the network initialisation. A diverged iteration counts as a
/// failure; the config fails when failures exceed max_failure_rate.
ConfigResult evaluate_config(const nn::NetworkSpec& spec, const LabeledDataset& ds, std::size_t config_index,
                             const TuneOptions& options);

struct SearchResult {
    std::vector<ConfigResult> results;  // grid order
    std::size_t best = 0;

    const ConfigResult& best_result() const { return results.at(best); }
};

/// Best = highest objective mean of the weighted average row, then lower
/// std, then earlier grid position. Throws TrainingError when every config fails.
SearchResult grid_search(const std::vector<nn::NetworkSpec>& configs, const LabeledDataset& ds,
                         const TuneOptions& options);
SearchResult grid_search(const SearchSpace& space, const LabeledDataset& ds, const TuneOptions& options,
                         const nn::NetworkSpec& base = {});

/// Index of the winner under the tie-break rules; failed configs are skipped.
std::size_t select_best(const std::vector<ConfigResult>& results, Metric objective);

/// Headline (weighted average) results table.
void write_results(std::ostream& out, const std::vector<ConfigResult>& results);

}  // namespace cryptomove
