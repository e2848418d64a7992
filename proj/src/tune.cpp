#include "cryptomove/tune.hpp"

#include "cryptomove/error.hpp"
#include "cryptomove/nn/model.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <thread>

namespace cryptomove {

using nn::ActivationKind;
using nn::Architecture;
using nn::OptimizerKind;

SearchSpace SearchSpace::defaults(Architecture a) {
    SearchSpace s;
    s.architecture = a;
    s.epochs = {100, 250, 500, 1000};
    s.batch_sizes = {32, 64, 128, 256, 512};
    s.optimizers = {OptimizerKind::adam, OptimizerKind::nadam, OptimizerKind::adamax, OptimizerKind::rmsprop,
                    OptimizerKind::sgd};
    switch (a) {
        case Architecture::malstm_fcn:
            break;
        case Architecture::lstm:
            s.hidden_layers = {1, 2, 3, 4, 5};
            s.activations = {ActivationKind::relu, ActivationKind::tanh};
            s.neurons = {16, 32, 64, 128, 256};
            break;
        case Architecture::cnn:
            s.hidden_layers = {2, 3, 4, 5};
            s.activations = {ActivationKind::relu, ActivationKind::tanh, ActivationKind::softmax};
            s.neurons = {16, 32, 64, 128, 256};
            break;
        case Architecture::mlp:
            s.hidden_layers = {1, 2, 3, 4, 5};
            s.activations = {ActivationKind::relu, ActivationKind::tanh, ActivationKind::softmax};
            s.neurons = {16, 32, 64, 128, 256};
            break;
    }
    return s;
}

void validate(const SearchSpace& space) {
    const auto positive = [](const std::vector<int>& v, const char* name) {
        if (v.empty()) throw std::invalid_argument(std::string("search space: empty ") + name + " list");
        for (int x : v)
            if (x < 1) throw std::invalid_argument(std::string("search space: ") + name + " values must be >= 1");
    };
    positive(space.epochs, "epochs");
    positive(space.batch_sizes, "batch_size");
    if (space.optimizers.empty()) throw std::invalid_argument("search space: empty optimizer list");
    if (space.architecture == Architecture::malstm_fcn) {
        if (!space.hidden_layers.empty() || !space.activations.empty() || !space.neurons.empty())
            throw std::invalid_argument("search space: malstm_fcn takes no hidden_layers, activation or neurons");
        return;
    }
    positive(space.hidden_layers, "hidden_layers");
    positive(space.neurons, "neurons");
    if (space.activations.empty()) throw std::invalid_argument("search space: empty activation list");
}

std::vector<nn::NetworkSpec> grid(const SearchSpace& space, const nn::NetworkSpec& base) {
    validate(space);
    const bool fixed = space.architecture == Architecture::malstm_fcn;
    const std::vector<int> hidden = fixed ? std::vector<int>{base.hidden_layers} : space.hidden_layers;
    const std::vector<ActivationKind> acts = fixed ? std::vector<ActivationKind>{base.activation} : space.activations;
    const std::vector<int> neurons = fixed ? std::vector<int>{base.neurons} : space.neurons;

    std::vector<nn::NetworkSpec> out;
    out.reserve(space.epochs.size() * hidden.size() * space.batch_sizes.size() * space.optimizers.size() *
                acts.size() * neurons.size());
    for (int e : space.epochs)
        for (int h : hidden)
            for (int b : space.batch_sizes)
                for (auto o : space.optimizers)
                    for (auto a : acts)
                        for (int n : neurons) {
                            nn::NetworkSpec s = base;
                            s.architecture = space.architecture;
                            s.epochs = e;
                            s.hidden_layers = h;
                            s.batch_size = b;
                            s.optimizer = o;
                            s.activation = a;
                            s.neurons = n;
                            nn::validate(s);
                            out.push_back(s);
                        }
    return out;
}

namespace {

std::uint64_t splitmix(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

std::size_t draw_below(std::mt19937_64& rng, std::size_t bound) {
    const std::uint64_t b = bound;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % b;
    std::uint64_t r;
    do r = rng();
    while (r >= limit);
    return static_cast<std::size_t>(r % b);
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t base_seed, std::uint64_t a, std::uint64_t b) noexcept {
    return splitmix(splitmix(splitmix(base_seed) ^ a) ^ b);
}

ResampleSplit bootstrap_split(std::size_t n, std::mt19937_64& rng) {
    if (n == 0) throw std::invalid_argument("bootstrap_split: n must be >= 1");
    ResampleSplit s;
    s.in_bag.resize(n);
    std::vector<bool> drawn(n, false);
    for (auto& i : s.in_bag) {
        i = draw_below(rng, n);
        drawn[i] = true;
    }
    std::sort(s.in_bag.begin(), s.in_bag.end());
    for (std::size_t i = 0; i < n; ++i)
        if (!drawn[i]) s.oob.push_back(i);
    return s;
}

ResampleSplit holdout_split(std::size_t n, double oob_fraction, std::mt19937_64& rng) {
    if (!(oob_fraction > 0.0 && oob_fraction < 1.0))
        throw std::invalid_argument("holdout_split: oob_fraction must lie in (0, 1)");
    const auto k = static_cast<std::size_t>(std::llround(static_cast<double>(n) * oob_fraction));
    if (k == 0 || k >= n) throw std::invalid_argument("holdout_split: too few rows for the requested fraction");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    nn::shuffle_indices(idx, rng);
    ResampleSplit s;
    s.oob.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
    s.in_bag.assign(idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end());
    std::sort(s.oob.begin(), s.oob.end());
    std::sort(s.in_bag.begin(), s.in_bag.end());
    return s;
}

nn::Labels default_trainer(const nn::NetworkSpec& spec, const LabeledDataset& train, const LabeledDataset& eval) {
    const auto model = nn::fit(spec, train);
    return nn::predict(model, eval.X).labels;
}

namespace {

// nullopt marks a failed (diverged) iteration.
using Outcome = std::optional<std::array<Scores, 4>>;

Outcome run_iteration(const nn::NetworkSpec& spec, const LabeledDataset& ds, std::size_t config_index, int iteration,
                      const TuneOptions& options) {
    const auto seed = mix_seed(options.base_seed, config_index, static_cast<std::uint64_t>(iteration));
    std::mt19937_64 rng(seed);
    const auto n = ds.rows();
    ResampleSplit split;
    if (options.mode == ResampleMode::holdout) {
        split = holdout_split(n, options.oob_fraction, rng);
    } else {
        do split = bootstrap_split(n, rng);
        while (split.oob.empty());
    }
    const auto train = take_rows(ds, split.in_bag);
    const auto eval = take_rows(ds, split.oob);
    auto s = spec;
    s.seed = seed;
    nn::Labels pred;
    try {
        pred = options.trainer(s, train, eval);
    } catch (const TrainingError&) {
        return std::nullopt;
    }
    const auto report = classification_report(confusion(eval.y, pred));
    std::array<Scores, 4> out;
    for (auto c : kReportClasses) out[static_cast<std::size_t>(c)] = scores(report, c);
    return out;
}

ConfigResult aggregate(const nn::NetworkSpec& spec, const std::vector<Outcome>& outcomes, const TuneOptions& options) {
    ConfigResult r;
    r.spec = spec;
    r.metrics.seed = options.base_seed;
    std::array<std::array<std::vector<double>, 4>, 4> values;  // [class][metric]
    for (const auto& o : outcomes) {
        if (!o) {
            ++r.metrics.failures;
            continue;
        }
        ++r.metrics.iterations;
        for (std::size_t c = 0; c < 4; ++c)
            for (auto m : {Metric::accuracy, Metric::precision, Metric::recall, Metric::f1})
                values[c][static_cast<std::size_t>(m)].push_back((*o)[c].get(m));
    }
    for (std::size_t c = 0; c < 4; ++c) {
        auto& s = r.metrics.by_class[c];
        s.accuracy = summarize(values[c][0]);
        s.precision = summarize(values[c][1]);
        s.recall = summarize(values[c][2]);
        s.f1 = summarize(values[c][3]);
    }
    r.failed = r.metrics.iterations == 0 ||
               static_cast<double>(r.metrics.failures) > options.max_failure_rate * static_cast<double>(outcomes.size());
    return r;
}

void check_inputs(const LabeledDataset& ds, const TuneOptions& options) {
    if (options.iterations < 1) throw std::invalid_argument("tune: iterations must be >= 1");
    if (ds.rows() < 2) throw std::invalid_argument("tune: need at least 2 rows to resample");
}

std::vector<ConfigResult> run_configs(const std::vector<nn::NetworkSpec>& configs,
                                      const std::vector<std::size_t>& indices, const LabeledDataset& ds,
                                      const TuneOptions& options) {
    check_inputs(ds, options);
    for (const auto& c : configs) nn::validate(c);
    const auto iterations = static_cast<std::size_t>(options.iterations);
    const std::size_t total = configs.size() * iterations;
    std::vector<Outcome> outcomes(total);
    std::vector<std::exception_ptr> errors(total);

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t t = next++; t < total; t = next++) {
            const auto c = t / iterations;
            const auto i = static_cast<int>(t % iterations);
            try {
                outcomes[t] = run_iteration(configs[c], ds, indices[c], i, options);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        }
    };
    unsigned workers = options.workers ? options.workers : std::max(1u, std::thread::hardware_concurrency());
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, total));
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    std::vector<ConfigResult> results;
    results.reserve(configs.size());
    for (std::size_t c = 0; c < configs.size(); ++c) {
        const auto first = outcomes.begin() + static_cast<std::ptrdiff_t>(c * iterations);
        results.push_back(
            aggregate(configs[c], std::vector<Outcome>(first, first + static_cast<std::ptrdiff_t>(iterations)), options));
    }
    return results;
}

}  // namespace

ConfigResult evaluate_config(const nn::NetworkSpec& spec, const LabeledDataset& ds, std::size_t config_index,
                             const TuneOptions& options) {
    return run_configs({spec}, {config_index}, ds, options).front();
}

std::size_t select_best(const std::vector<ConfigResult>& results, Metric objective) {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (results[i].failed) continue;
        if (!best) {
            best = i;
            continue;
        }
        const auto& a = results[i].metrics.headline().get(objective);
        const auto& b = results[*best].metrics.headline().get(objective);
        if (a.mean > b.mean || (a.mean == b.mean && a.std < b.std)) best = i;
    }
    if (!best) throw TrainingError("grid search: every configuration failed");
    return *best;
}

SearchResult grid_search(const std::vector<nn::NetworkSpec>& configs, const LabeledDataset& ds,
                         const TuneOptions& options) {
    if (configs.empty()) throw std::invalid_argument("grid search: no configurations");
    std::vector<std::size_t> indices(configs.size());
    std::iota(indices.begin(), indices.end(), std::size_t{0});
    SearchResult r;
    r.results = run_configs(configs, indices, ds, options);
    r.best = select_best(r.results, options.objective);
    return r;
}

SearchResult grid_search(const SearchSpace& space, const LabeledDataset& ds, const TuneOptions& options,
                         const nn::NetworkSpec& base) {
    return grid_search(grid(space, base), ds, options);
}

void write_results(std::ostream& out, const std::vector<ConfigResult>& results) {
    out << kSpecCsvHeader << ',' << kScoreCsvHeader << '\n';
    for (const auto& r : results)
        out << spec_csv_fields(r.spec) << ','
            << score_csv_fields(r.metrics.headline(), r.metrics.iterations, r.metrics.failures) << '\n';
}

}  // namespace cryptomove
