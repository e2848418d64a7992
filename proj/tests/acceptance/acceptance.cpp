// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails. An optional argument runs only the
// criteria whose name contains it.

#include "cryptomove/dataset.hpp"
#include "cryptomove/indicators.hpp"
#include "cryptomove/metrics.hpp"
#include "cryptomove/nn/model.hpp"
#include "cryptomove/nn/network.hpp"
#include "cryptomove/pipeline.hpp"
#include "cryptomove/tune.hpp"
#include "oracle/indicator_oracle.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace cryptomove;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = CRYPTOMOVE_FIXTURES;

struct Outcome {
    bool pass = false;
    std::string detail;
};

constexpr std::array kArchitectures = {nn::Architecture::mlp, nn::Architecture::lstm, nn::Architecture::cnn,
                                       nn::Architecture::malstm_fcn};

// ---------------------------------------------------------------------------

Outcome indicator_oracle() {
    const auto catalogue = indicators::default_catalogue();
    std::mt19937_64 rng(1000);
    double worst = 0.0;
    std::size_t mismatched_definedness = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto s = oracle::random_candles(rng, 500);
        for (const auto& spec : catalogue) {
            const auto got = indicators::compute_indicator(spec, s);
            const auto want = oracle::naive_indicator(spec, s);
            for (std::size_t t = 0; t < got.size(); ++t) {
                const bool g = is_defined(got[t]), w = is_defined(want[t]);
                if (g != w) ++mismatched_definedness;
                if (g && w) worst = std::max(worst, oracle::rel_err(got[t], want[t]));
            }
        }
    }
    return {catalogue.size() == 36 && worst <= 1e-9 && mismatched_definedness == 0,
            fmt::format("{} indicators x 1000 series x 500 bars, max rel err {:.2e}, definedness mismatches {}",
                        catalogue.size(), worst, mismatched_definedness)};
}

// ---------------------------------------------------------------------------

nn::NetworkSpec toy_spec(nn::Architecture a, std::uint64_t seed) {
    nn::NetworkSpec s;
    s.architecture = a;
    s.seed = seed;
    s.activation = nn::ActivationKind::tanh;
    s.hidden_layers = 2;
    s.neurons = 4;
    s.fcn_filters = {4, 8, 8};
    s.attention_cells = 3;
    return s;
}

Outcome gradient_verification() {
    struct Case {
        nn::Architecture arch;
        std::size_t input_dim, sequence_len;
        double bound;
    };
    const Case cases[] = {{nn::Architecture::mlp, 5, 1, 1e-4},
                          {nn::Architecture::cnn, 12, 4, 1e-4},
                          {nn::Architecture::lstm, 6, 3, 1e-4},
                          {nn::Architecture::malstm_fcn, 12, 4, 1e-3}};
    bool pass = true;
    std::string detail = "20 seeds, max rel err";
    for (const auto& c : cases) {
        double worst = 0.0;
        for (std::uint64_t seed = 1; seed <= 20; ++seed) {
            const auto spec = toy_spec(c.arch, seed);
            std::mt19937_64 rng(seed + 100);
            auto net = nn::build_network(spec, c.input_dim, c.sequence_len);
            nn::Tensor X({8, c.input_dim});
            std::normal_distribution<double> d;
            for (auto& v : X.data) v = d(rng);
            Labels y(8);
            for (auto& v : y) v = static_cast<int>(rng() & 1);
            worst = std::max(worst, nn::gradient_check(net, X, y));
        }
        pass = pass && worst <= c.bound;
        detail += fmt::format(" {} {:.2e} (<= {:.0e})", nn::to_string(c.arch), worst, c.bound);
    }
    return {pass, detail};
}

// ---------------------------------------------------------------------------

Outcome bootstrap_oob() {
    std::mt19937_64 rng(2000);
    double total = 0.0;
    for (int i = 0; i < 2000; ++i) total += static_cast<double>(bootstrap_split(1000, rng).oob.size()) / 1000.0;
    const double mean = total / 2000.0;
    return {mean >= 0.358 && mean <= 0.378, fmt::format("n=1000, 2000 iterations, mean OOB fraction {:.4f}", mean)};
}

// ---------------------------------------------------------------------------

Outcome class_distribution_fidelity() {
    struct Row {
        const char* name;
        std::size_t up, down;
        double up_pct, down_pct;
    };
    // Reference percentages. BTC daily down is 55.2 (817/1482 = 55.13, and 44.8 + 55.2 = 100).
    const Row rows[] = {{"BTC hourly", 17246, 18271, 48.5, 51.5},
                        {"ETH hourly", 16844, 16956, 49.8, 50.2},
                        {"BTC daily", 665, 817, 44.8, 55.2},
                        {"ETH daily", 684, 727, 48.5, 51.5}};
    std::mt19937_64 rng(5);
    bool pass = true;
    std::string detail;
    for (const auto& r : rows) {
        Labels y(r.up, 1);
        y.insert(y.end(), r.down, 0);
        std::shuffle(y.begin(), y.end(), rng);
        const auto d = class_distribution(y);
        const bool ok = d.up == r.up && d.down == r.down && std::abs(d.up_percent - r.up_pct) <= 0.1 &&
                        std::abs(d.down_percent - r.down_pct) <= 0.1;
        pass = pass && ok;
        detail += fmt::format("{}{} {}/{} -> {:.2f}%/{:.2f}% vs {}/{}{}", detail.empty() ? "" : "; ", r.name, d.up,
                              d.down, d.up_percent, d.down_percent, r.up_pct, r.down_pct, ok ? "" : " MISMATCH");
    }
    return {pass, detail};
}

// ---------------------------------------------------------------------------
// Synthetic market whose next-bar gap follows the sign of the mean Reddit
// sentiment of the current hour. Prices are mean-reverting noise, so OHLCV
// carries no information about the label.

constexpr std::size_t kSyntheticRows = 5000;
constexpr int kSyntheticLag = 2;

struct SyntheticData {
    LabeledDataset unrestricted;
    LabeledDataset restricted;
};

SyntheticData synthetic_data() {
    constexpr Timestamp start = 1577836800;
    constexpr std::size_t bars = kSyntheticRows + 200;
    std::mt19937_64 rng(424242);
    std::normal_distribution<double> noise;
    std::uniform_real_distribution<double> unit;

    AffectRecordSet affect;
    std::vector<int> direction(bars);
    for (std::size_t i = 0; i < bars; ++i) {
        const Timestamp hour = start + 3600 * static_cast<Timestamp>(i);
        int sum = 0;
        auto record = [&](Source source, int sentiment) {
            AffectRecord r;
            r.timestamp = hour + static_cast<Timestamp>(rng() % 3600);
            r.source = source;
            r.channel = "bitcoin";
            r.sentiment = sentiment;
            const auto emotion = rng() % 5;
            r.love = emotion == 0;
            r.joy = emotion == 1;
            r.anger = emotion == 2;
            r.sadness = emotion == 3;
            r.valence = 1.0 + 8.0 * unit(rng);
            r.arousal = 1.0 + 8.0 * unit(rng);
            r.dominance = 1.0 + 8.0 * unit(rng);
            affect.records.push_back(r);
        };
        for (int k = 0; k < 3; ++k) {
            const int s = (rng() & 1) ? 1 : -1;
            sum += s;
            record(Source::reddit, s);
        }
        for (auto k = rng() % 3; k > 0; --k) record(Source::github, static_cast<int>(rng() % 3) - 1);
        direction[i] = sum > 0 ? 1 : -1;
    }
    std::stable_sort(affect.records.begin(), affect.records.end(),
                     [](const auto& a, const auto& b) { return a.timestamp < b.timestamp; });

    std::vector<Bar> series;
    double open = 7200.0;
    for (std::size_t i = 0; i < bars; ++i) {
        Bar b;
        b.timestamp = start + 3600 * static_cast<Timestamp>(i);
        b.open = open;
        b.close = open * (1.0 + 0.004 * noise(rng) - 0.02 * std::log(open / 7200.0));
        b.high = std::max(b.open, b.close) * (1.0 + 0.002 * std::abs(noise(rng)));
        b.low = std::min(b.open, b.close) * (1.0 - 0.002 * std::abs(noise(rng)));
        b.volume = 1.0 + std::abs(350.0 + 120.0 * noise(rng));
        series.push_back(b);
        open = b.close * (1.0 + direction[i] * (1e-4 + 0.0008 * std::abs(noise(rng))));
    }
    const CandleSeries candles(Frequency::hourly, std::move(series));
    const auto frame = indicators::indicator_frame(candles, indicators::default_catalogue());
    const std::vector<AffectSeries> social{aggregate_affect(affect, Frequency::hourly, candles.timestamps())};

    SyntheticData out;
    auto full = build_dataset(candles, frame, social, FeatureSet::unrestricted, kSyntheticLag);
    if (full.rows() < kSyntheticRows) throw std::logic_error("synthetic series too short");
    std::vector<std::size_t> keep(kSyntheticRows);
    std::iota(keep.begin(), keep.end(), full.rows() - kSyntheticRows);
    out.unrestricted = take_rows(full, keep);

    const auto restricted = build_dataset(candles, frame, social, FeatureSet::restricted, kSyntheticLag);
    keep.clear();
    for (std::size_t r = 0; r < restricted.rows(); ++r)
        if (std::binary_search(out.unrestricted.timestamps.begin(), out.unrestricted.timestamps.end(),
                               restricted.timestamps[r]))
            keep.push_back(r);
    out.restricted = take_rows(restricted, keep);
    if (out.restricted.timestamps != out.unrestricted.timestamps || out.restricted.y != out.unrestricted.y)
        throw std::logic_error("feature sets are not row-aligned");
    return out;
}

nn::NetworkSpec synthetic_spec(nn::Architecture a) {
    nn::NetworkSpec s;
    s.architecture = a;
    s.optimizer = nn::OptimizerKind::adam;
    s.learning_rate = 1e-3;
    s.batch_size = 32;
    s.seed = 11;
    switch (a) {
        case nn::Architecture::mlp:
            s.hidden_layers = 2;
            s.neurons = 32;
            s.activation = nn::ActivationKind::relu;
            s.epochs = 20;
            break;
        case nn::Architecture::lstm:
            s.hidden_layers = 1;
            s.neurons = 32;
            s.activation = nn::ActivationKind::tanh;
            s.epochs = 20;
            break;
        case nn::Architecture::cnn:
            s.hidden_layers = 2;
            s.neurons = 16;
            s.activation = nn::ActivationKind::relu;
            s.epochs = 20;
            break;
        case nn::Architecture::malstm_fcn:
            s.epochs = 10;
            break;
    }
    return s;
}

/// Chronological 0.6/0.2/0.2 split, normalised on train; accuracy on test.
double test_accuracy(const LabeledDataset& ds, nn::Architecture a) {
    auto parts = split(ds, {0.6, 0.2, 0.2});
    normalize(parts[0], std::span(parts).subspan(1));
    const auto model = nn::fit(synthetic_spec(a), parts[0]);
    const auto predicted = nn::predict(model, parts[2].X).labels;
    return classification_report(confusion(parts[2].y, predicted)).accuracy;
}

Outcome restricted_vs_unrestricted(const SyntheticData& data) {
    bool pass = true;
    std::string detail = fmt::format("{} rows, lag {}, test accuracy restricted/unrestricted:", data.restricted.rows(),
                                     kSyntheticLag);
    for (auto a : kArchitectures) {
        const double r = test_accuracy(data.restricted, a);
        const double u = test_accuracy(data.unrestricted, a);
        pass = pass && u >= 0.95 && std::abs(r - 0.5) <= 0.05;
        detail += fmt::format(" {} {:.3f}/{:.3f}", nn::to_string(a), r, u);
    }
    return {pass, detail};
}

Outcome shuffled_labels(const SyntheticData& data) {
    auto shuffled = data.unrestricted;
    std::mt19937_64 rng(99);
    std::shuffle(shuffled.y.begin(), shuffled.y.end(), rng);
    bool pass = true;
    std::string detail = "unrestricted features, permuted labels, test accuracy:";
    for (auto a : kArchitectures) {
        const double acc = test_accuracy(shuffled, a);
        pass = pass && std::abs(acc - 0.5) <= 0.05;
        detail += fmt::format(" {} {:.3f}", nn::to_string(a), acc);
    }
    return {pass, detail};
}

// ---------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome determinism() {
    auto j = nlohmann::ordered_json::parse(slurp(kFixtures / "restricted.json"));
    j["feature_set"] = "unrestricted";
    j["affect"] = "affect_500h.csv";
    j["comments"] = "comments_500h.csv";
    j["lexicon"] = "lexicon.csv";
    const auto root = fs::temp_directory_path() / "cryptomove_acceptance_determinism";
    fs::remove_all(root);
    std::string reports[2];
    for (int run = 0; run < 2; ++run) {
        auto config = parse_config(j.dump(), kFixtures);
        config.output = root / std::to_string(run);
        RunOptions options;
        options.workers = run == 0 ? 1 : 4;
        options.progress = false;
        run_experiment(config, options);
        reports[run] = slurp(config.output / "report.csv");
    }
    fs::remove_all(root);
    const bool same = !reports[0].empty() && reports[0] == reports[1];
    return {same, fmt::format("unrestricted fixture run twice (1 and 4 workers): report.csv {} bytes, sha256 {} / {}",
                              reports[0].size(), sha256_hex(reports[0]).substr(0, 12),
                              sha256_hex(reports[1]).substr(0, 12))};
}

// ---------------------------------------------------------------------------

Outcome untrained_loss() {
    nn::BuildOptions zero;
    zero.zero_output_layer = true;
    std::mt19937_64 rng(77);
    std::normal_distribution<double> d(0.0, 3.0);
    double worst = 0.0;
    for (auto a : {nn::Architecture::mlp, nn::Architecture::lstm, nn::Architecture::cnn}) {
        for (std::uint64_t seed = 0; seed < 10; ++seed) {
            auto spec = toy_spec(a, seed);
            spec.neurons = 16;
            auto net = nn::build_network(spec, 12, 3, zero);
            nn::Tensor X({32, 12});
            for (auto& v : X.data) v = d(rng);
            Labels y(32);
            for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<int>(i % 2);
            std::shuffle(y.begin(), y.end(), rng);
            worst = std::max(worst, std::abs(net.loss(X, y) - std::log(2.0)));
        }
    }
    return {worst <= 1e-9, fmt::format("mlp/lstm/cnn x 10 seeds, balanced batch of 32, max |loss - ln 2| = {:.2e}",
                                       worst)};
}

}  // namespace

int main(int argc, char** argv) {
    using Clock = std::chrono::steady_clock;
    const std::string filter = argc > 1 ? argv[1] : "";
    int failures = 0, ran = 0;
    auto run = [&](const char* name, double budget_seconds, const std::function<Outcome()>& check) {
        if (std::string_view(name).find(filter) == std::string_view::npos) return;
        ++ran;
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = check();
        } catch (const std::exception& e) {
            o = {false, fmt::format("threw: {}", e.what())};
        }
        const double seconds = std::chrono::duration<double>(Clock::now() - t0).count();
        if (budget_seconds > 0 && seconds > budget_seconds) {
            o.pass = false;
            o.detail += fmt::format("; over the {:.0f} s budget", budget_seconds);
        }
        if (!o.pass) ++failures;
        fmt::print("{} {} ({:.1f} s): {}\n", o.pass ? "PASS" : "FAIL", name, seconds, o.detail);
        std::fflush(stdout);
    };

    run("indicator-oracle", 60, indicator_oracle);
    run("gradient-verification", 300, gradient_verification);
    run("bootstrap-oob", 0, bootstrap_oob);
    run("class-distribution", 0, class_distribution_fidelity);

    std::optional<SyntheticData> data;
    run("restricted-vs-unrestricted", 600, [&] {
        data = synthetic_data();
        return restricted_vs_unrestricted(*data);
    });
    run("shuffled-label-control", 0, [&] {
        if (!data) data = synthetic_data();
        return shuffled_labels(*data);
    });
    run("determinism", 0, determinism);
    run("untrained-loss", 0, untrained_loss);

    fmt::print("{} of {} criteria passed\n", ran - failures, ran);
    return failures == 0 ? 0 : 1;
}
