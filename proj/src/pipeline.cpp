#include "cryptomove/pipeline.hpp"

#include "cryptomove/affect.hpp"
#include "cryptomove/error.hpp"
#include "cryptomove/nn/model.hpp"
#include "nn/spec_json.hpp"

#include <fmt/format.h>
#include <json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace cryptomove {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string sha256_hex(std::string_view bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw IoError("SHA-256 computation failed");
    std::string hex;
    hex.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
    return hex;
}

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

}  // namespace

std::string sha256_file(const fs::path& path) {
    return sha256_hex(read_file(path));
}

std::string_view to_string(Stage s) noexcept {
    switch (s) {
        case Stage::ingest: return "ingest";
        case Stage::features: return "features";
        case Stage::label: return "label";
        case Stage::dataset: return "dataset";
        case Stage::tune: return "tune";
        case Stage::train: return "train";
        case Stage::evaluate: return "evaluate";
        case Stage::report: return "report";
    }
    return "";
}

Stage parse_stage(std::string_view s) {
    for (auto stage : kStages)
        if (to_string(stage) == s) return stage;
    throw ConfigError("unknown stage '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Config

namespace {

const std::set<std::string> kConfigKeys = {
    "asset",  "frequency", "candles",    "candle_format", "candle_frequency", "affect",    "lexicon",
    "comments", "feature_set", "lag",    "label_sign",    "indicators",       "split",     "search",
    "network", "bootstrap", "objective", "seed",          "output"};

template <class Parse>
auto parse_enum(const ordered_json& j, const char* key, Parse parse) {
    try {
        return parse(j.get<std::string>());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string(key) + ": " + e.what());
    }
}

template <class T, class Convert>
std::vector<T> list_of(const ordered_json& j, Convert convert) {
    std::vector<T> out;
    if (j.is_array())
        for (const auto& v : j) out.push_back(convert(v));
    else
        out.push_back(convert(j));
    return out;
}

SearchSpace parse_search(nn::Architecture a, const ordered_json& j) {
    auto space = SearchSpace::defaults(a);
    if (!j.is_object()) throw ConfigError(fmt::format("search.{}: expected an object", nn::to_string(a)));
    const auto to_int = [](const ordered_json& v) { return v.get<int>(); };
    for (const auto& [key, value] : j.items()) {
        if (key == "epochs")
            space.epochs = list_of<int>(value, to_int);
        else if (key == "hidden_layers")
            space.hidden_layers = list_of<int>(value, to_int);
        else if (key == "batch_size")
            space.batch_sizes = list_of<int>(value, to_int);
        else if (key == "neurons")
            space.neurons = list_of<int>(value, to_int);
        else if (key == "optimizer")
            space.optimizers = list_of<nn::OptimizerKind>(
                value, [](const ordered_json& v) { return parse_enum(v, "optimizer", nn::parse_optimizer); });
        else if (key == "activation")
            space.activations = list_of<nn::ActivationKind>(
                value, [](const ordered_json& v) { return parse_enum(v, "activation", nn::parse_activation); });
        else
            throw ConfigError(fmt::format("search.{}: unknown key '{}'", nn::to_string(a), key));
    }
    return space;
}

indicators::IndicatorSpec parse_indicator(const ordered_json& j) {
    indicators::IndicatorSpec spec;
    if (!j.is_object() || !j.contains("name")) throw ConfigError("indicators: each entry needs a name");
    spec.name = j["name"].get<std::string>();
    const auto& names = indicators::supported_indicators();
    if (std::find(names.begin(), names.end(), spec.name) == names.end())
        throw ConfigError("indicators: unsupported indicator '" + spec.name + "'");
    if (j.contains("window")) spec.window = j["window"].get<int>();
    if (j.contains("lag")) spec.lag = j["lag"].get<int>();
    if (j.contains("params"))
        for (const auto& [k, v] : j["params"].items()) spec.params[k] = v.get<double>();
    return spec;
}

fs::path existing_file(const ordered_json& j, const char* key, const fs::path& base_dir) {
    fs::path p = j.get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    if (!fs::is_regular_file(p)) throw ConfigError(std::string(key) + ": file not found: " + p.string());
    return p;
}

}  // namespace

ExperimentConfig parse_config(std::string_view text, const fs::path& base_dir) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const ordered_json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [key, value] : j.items())
        if (!kConfigKeys.count(key)) throw ConfigError("unknown config key '" + key + "'");

    ExperimentConfig c;
    c.sha256 = sha256_hex(text);
    try {
        if (!j.contains("seed") || !j["seed"].is_number_unsigned()) throw ConfigError("seed: a non-negative integer is required");
        c.seed = j["seed"].get<std::uint64_t>();
        if (!j.contains("asset")) throw ConfigError("asset: required");
        c.asset = j["asset"].get<std::string>();
        if (c.asset.empty() || c.asset.find_first_of(",\n\"") != std::string::npos)
            throw ConfigError("asset: must be a non-empty name without commas or quotes");
        if (j.contains("frequency")) c.frequency = parse_enum(j["frequency"], "frequency", parse_frequency);
        c.candle_frequency = c.frequency;
        if (j.contains("candle_frequency"))
            c.candle_frequency = parse_enum(j["candle_frequency"], "candle_frequency", parse_frequency);
        if (c.candle_frequency == Frequency::daily && c.frequency == Frequency::hourly)
            throw ConfigError("candle_frequency: daily candles cannot feed an hourly experiment");
        if (j.contains("candle_format")) {
            const auto f = j["candle_format"].get<std::string>();
            if (f == "canonical_csv") c.candle_format = CandleFormat::canonical_csv;
            else if (f == "exchange_csv") c.candle_format = CandleFormat::exchange_csv;
            else throw ConfigError("candle_format: unknown format '" + f + "'");
        }
        if (!j.contains("feature_set")) throw ConfigError("feature_set: required");
        c.feature_set = parse_enum(j["feature_set"], "feature_set", parse_feature_set);
        if (!j.contains("candles")) throw ConfigError("candles: required");
        c.candles = existing_file(j["candles"], "candles", base_dir);
        if (j.contains("affect")) c.affect = existing_file(j["affect"], "affect", base_dir);
        if (j.contains("lexicon")) c.lexicon = existing_file(j["lexicon"], "lexicon", base_dir);
        if (j.contains("comments")) c.comments = existing_file(j["comments"], "comments", base_dir);
        if (c.comments && !c.lexicon) throw ConfigError("comments: scoring raw comments needs a lexicon");
        if (c.comments && !c.affect) throw ConfigError("comments: raw comments annotate an affect file");
        if (c.feature_set != FeatureSet::restricted && !c.affect)
            throw ConfigError(fmt::format("feature_set: {} needs an affect file", to_string(c.feature_set)));

        if (j.contains("lag")) c.lag = j["lag"].get<int>();
        if (c.lag < 1) throw ConfigError("lag: must be >= 1");
        if (j.contains("label_sign")) {
            const auto s = j["label_sign"].get<std::string>();
            if (s == "rising") c.label_sign = LabelSign::rising;
            else if (s == "inverted") c.label_sign = LabelSign::inverted;
            else throw ConfigError("label_sign: expected rising or inverted");
        }
        if (j.contains("indicators") && !(j["indicators"].is_string() && j["indicators"] == "default")) {
            if (!j["indicators"].is_array()) throw ConfigError("indicators: expected a list or \"default\"");
            for (const auto& spec : j["indicators"]) c.indicators.push_back(parse_indicator(spec));
            if (c.indicators.empty() && c.feature_set == FeatureSet::unrestricted)
                throw ConfigError("indicators: the unrestricted feature set needs at least one indicator");
        } else {
            c.indicators = indicators::default_catalogue();
        }
        if (j.contains("split")) {
            const auto v = j["split"].get<std::vector<double>>();
            if (v.size() != 3) throw ConfigError("split: expected [train, validation, test]");
            c.split = {v[0], v[1], v[2]};
        }
        if (std::any_of(c.split.begin(), c.split.end(), [](double f) { return !(f > 0.0); }) ||
            std::abs(c.split[0] + c.split[1] + c.split[2] - 1.0) > 1e-9)
            throw ConfigError("split: fractions must be positive and sum to 1");

        if (j.contains("network")) {
            c.network = nn::spec_from_json(json::parse(j["network"].dump()));
            for (const auto& [key, value] : j["network"].items())
                if (key != "learning_rate" && key != "fcn_filters" && key != "attention_cells" && key != "cnn_kernel")
                    throw ConfigError("network: unknown or searched key '" + key + "'");
        }
        if (j.contains("search")) {
            if (!j["search"].is_object() || j["search"].empty())
                throw ConfigError("search: expected an object keyed by architecture");
            for (const auto& [arch, space] : j["search"].items()) {
                const auto a = parse_enum(ordered_json(arch), "search", nn::parse_architecture);
                c.search.push_back(parse_search(a, space));
            }
        } else {
            for (auto a : {nn::Architecture::mlp, nn::Architecture::lstm, nn::Architecture::malstm_fcn,
                           nn::Architecture::cnn})
                c.search.push_back(SearchSpace::defaults(a));
        }
        for (const auto& s : c.search) {
            try {
                grid(s, c.network);
            } catch (const std::invalid_argument& e) {
                throw ConfigError(fmt::format("search.{}: {}", nn::to_string(s.architecture), e.what()));
            }
        }

        if (j.contains("bootstrap")) {
            const auto& b = j["bootstrap"];
            for (const auto& [key, value] : b.items()) {
                if (key == "iterations") c.iterations = value.get<int>();
                else if (key == "mode") {
                    const auto m = value.get<std::string>();
                    if (m == "bootstrap") c.resample = ResampleMode::bootstrap;
                    else if (m == "holdout") c.resample = ResampleMode::holdout;
                    else throw ConfigError("bootstrap.mode: expected bootstrap or holdout");
                } else if (key == "oob_fraction") c.oob_fraction = value.get<double>();
                else throw ConfigError("bootstrap: unknown key '" + key + "'");
            }
        }
        if (c.iterations < 1) throw ConfigError("bootstrap.iterations: must be >= 1");
        if (!(c.oob_fraction > 0.0 && c.oob_fraction < 1.0)) throw ConfigError("bootstrap.oob_fraction: must lie in (0, 1)");
        if (j.contains("objective")) c.objective = parse_enum(j["objective"], "objective", parse_metric);
        c.output = j.contains("output") ? fs::path(j["output"].get<std::string>()) : fs::path("out");
        if (c.output.is_relative()) c.output = base_dir / c.output;
    } catch (const ordered_json::exception& e) {
        throw ConfigError(std::string("config field has the wrong type: ") + e.what());
    }
    return c;
}

ExperimentConfig load_config(const fs::path& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const IoError&) {
        throw ConfigError("cannot read config " + path.string());
    }
    return parse_config(text, path.parent_path().empty() ? fs::path(".") : path.parent_path());
}

// ---------------------------------------------------------------------------
// Pipeline

namespace {

constexpr std::uint64_t kTuneStream = 1;
constexpr std::uint64_t kTrainStream = 2;

/// Files written by this run land in a staging directory and move into the
/// output directory only on commit().
class Artifacts {
public:
    explicit Artifacts(fs::path out) : out_(std::move(out)), staging_(out_ / ".staging") {
        created_out_ = !fs::exists(out_);
        fs::remove_all(staging_);
        fs::create_directories(staging_);
    }
    Artifacts(const Artifacts&) = delete;
    Artifacts& operator=(const Artifacts&) = delete;

    ~Artifacts() {
        if (committed_) return;
        std::error_code ec;
        fs::remove_all(staging_, ec);
        if (created_out_) fs::remove(out_, ec);  // only succeeds when empty
    }

    fs::path stage(const std::string& name) const { return staging_ / name; }
    fs::path final_path(const std::string& name) const { return out_ / name; }

    void write(const std::string& name, const std::string& content) const {
        std::ofstream out(stage(name), std::ios::binary);
        if (!out) throw IoError("cannot write " + stage(name).string());
        out << content;
        if (!out) throw IoError("failed writing " + stage(name).string());
    }

    /// Staged file names with their SHA-256, sorted by name.
    std::map<std::string, std::string> checksums() const {
        std::map<std::string, std::string> out;
        for (const auto& e : fs::directory_iterator(staging_))
            if (e.is_regular_file()) out[e.path().filename().string()] = sha256_file(e.path());
        return out;
    }

    void commit() {
        for (const auto& e : fs::directory_iterator(staging_))
            fs::rename(e.path(), out_ / e.path().filename());
        fs::remove(staging_);
        committed_ = true;
    }

private:
    fs::path out_, staging_;
    bool created_out_ = false;
    bool committed_ = false;
};

json distribution_json(const ClassDistribution& d) {
    return json{{"down", d.down}, {"up", d.up}, {"down_percent", d.down_percent}, {"up_percent", d.up_percent}};
}

json summary_json(const ScoreSummary& s) {
    json j;
    for (auto m : {Metric::accuracy, Metric::precision, Metric::recall, Metric::f1})
        j[std::string(to_string(m))] = {{"mean", s.get(m).mean}, {"std", s.get(m).std}};
    return j;
}

ScoreSummary summary_from_json(const json& j) {
    ScoreSummary s;
    const auto get = [&](const char* k) { return Summary{j.at(k).at("mean").get<double>(), j.at(k).at("std").get<double>()}; };
    s.accuracy = get("accuracy");
    s.precision = get("precision");
    s.recall = get("recall");
    s.f1 = get("f1");
    return s;
}

std::string model_file(nn::Architecture a) {
    return fmt::format("model_{}.bin", nn::to_string(a));
}

class Pipeline {
public:
    Pipeline(const ExperimentConfig& config, const RunOptions& options, Artifacts& artifacts)
        : c_(config), options_(options), a_(artifacts) {
        const auto existing = a_.final_path("manifest.json");
        if (options_.stage && fs::exists(existing)) {
            try {
                manifest_ = json::parse(read_file(existing));
            } catch (const json::exception&) {
                manifest_ = json::object();
            }
        }
        manifest_["config_sha256"] = c_.sha256;
        manifest_["asset"] = c_.asset;
        manifest_["frequency"] = to_string(c_.frequency);
        manifest_["feature_set"] = to_string(c_.feature_set);
        manifest_["lag"] = c_.lag;
        manifest_["seeds"]["base"] = c_.seed;
    }

    void run(Stage s) {
        try {
            switch (s) {
                case Stage::ingest: ingest(); break;
                case Stage::features: features(); break;
                case Stage::label: label(); break;
                case Stage::dataset: dataset(); break;
                case Stage::tune: tune(); break;
                case Stage::train: train(); break;
                case Stage::evaluate: evaluate(); break;
                case Stage::report: report(); break;
            }
        } catch (const StageError&) {
            throw;
        } catch (const std::exception& e) {
            throw StageError(s, std::current_exception(), e.what());
        }
    }

    void finish() {
        auto sums = a_.checksums();
        for (const auto& [name, sum] : sums) manifest_["artifacts"][name] = sum;
        a_.write("manifest.json", manifest_.dump(2) + "\n");
        a_.commit();
    }

private:
    bool uses_affect() const { return c_.feature_set != FeatureSet::restricted; }

    // Inputs: taken from this run when available, else from committed artifacts.
    const CandleSeries& candles() {
        if (!candles_) candles_ = read_candles(input("candles.csv"), CandleFormat::canonical_csv, c_.frequency);
        return *candles_;
    }
    const AffectRecordSet& records() {
        if (!records_) records_ = read_affect_records(input("affect_records.csv"));
        return *records_;
    }
    const indicators::IndicatorFrame& frame() {
        if (!frame_) frame_ = indicators::indicator_frame(candles(), c_.indicators);
        return *frame_;
    }
    const std::vector<AffectSeries>& affect() {
        if (!affect_) {
            affect_.emplace();
            if (uses_affect()) affect_->push_back(aggregate_affect(records(), c_.frequency, candles().timestamps()));
        }
        return *affect_;
    }
    std::array<LabeledDataset, 3>& parts() {
        if (!parts_)
            parts_ = std::array<LabeledDataset, 3>{import_dataset(input("dataset_train.csv")),
                                                   import_dataset(input("dataset_val.csv")),
                                                   import_dataset(input("dataset_test.csv"))};
        return *parts_;
    }
    const std::vector<ConfigResult>& best() {
        if (!best_) {
            best_.emplace();
            try {
                for (const auto& j : json::parse(read_file(input("best.json")))) {
                    ConfigResult r;
                    r.spec = nn::spec_from_json(j.at("spec"));
                    r.metrics.iterations = j.at("iterations").get<int>();
                    r.metrics.failures = j.at("failures").get<int>();
                    for (auto cls : kReportClasses)
                        r.metrics.by_class[static_cast<std::size_t>(cls)] =
                            summary_from_json(j.at("classes").at(std::string(to_string(cls))));
                    best_->push_back(r);
                }
            } catch (const json::exception& e) {
                throw DataError("best.json: " + std::string(e.what()));
            }
        }
        return *best_;
    }
    const nn::TrainedModel& model(nn::Architecture a) {
        auto it = models_.find(a);
        if (it == models_.end()) it = models_.emplace(a, nn::load_model(input(model_file(a)))).first;
        return it->second;
    }

    fs::path input(const std::string& name) const {
        const auto p = a_.final_path(name);
        if (!fs::exists(p)) throw IoError("missing input artifact " + p.string() + " (run the earlier stages first)");
        return p;
    }

    void say(Stage s, const std::string& msg) const {
        if (options_.progress) fmt::print("[{}] {}\n", to_string(s), msg);
    }

    void ingest() {
        auto raw = read_candles(c_.candles, c_.candle_format, c_.candle_frequency);
        candles_ = c_.frequency != c_.candle_frequency ? resample(raw, c_.frequency) : std::move(raw);
        if (candles_->size() < 2) throw ValidationError(c_.candles.string() + ": need at least two bars");
        {
            std::ofstream out(a_.stage("candles.csv"), std::ios::binary);
            write_candles(out, *candles_);
            if (!out) throw IoError("failed writing candles.csv");
        }
        manifest_["rows"]["candles"] = candles_->size();
        std::string msg = fmt::format("{} bars", candles_->size());
        if (c_.affect) {
            records_ = read_affect_records(*c_.affect);
            if (c_.comments) fill_vad(*records_, read_raw_comments(*c_.comments), read_vad_lexicon(*c_.lexicon));
            std::ostringstream out;
            write_affect_records(out, *records_);
            a_.write("affect_records.csv", out.str());
            manifest_["rows"]["affect_records"] = records_->records.size();
            msg += fmt::format(", {} affect records", records_->records.size());
        }
        say(Stage::ingest, msg);
    }

    void features() {
        std::ostringstream ind;
        indicators::write_frame_csv(ind, frame());
        a_.write("indicators.csv", ind.str());
        manifest_["rows"]["indicator_columns"] = frame().columns.size();
        std::string msg = fmt::format("{} indicator columns", frame().columns.size());
        if (uses_affect()) {
            const auto& series = affect().front();
            std::ostringstream out;
            write_affect_series(out, series);
            a_.write("affect_series.csv", out.str());
            manifest_["rows"]["affect_columns"] = series.columns.size();
            manifest_["rows"]["affect_dropped"] = series.dropped;
            msg += fmt::format(", {} affect columns", series.columns.size());
        }
        say(Stage::features, msg);
    }

    void label() {
        const auto labels = label_movements(candles(), c_.label_sign);
        const auto ts = candles().timestamps();
        std::string out = "timestamp,label\n";
        for (std::size_t i = 0; i < labels.size(); ++i) out += fmt::format("{},{}\n", ts[i], labels[i]);
        a_.write("labels.csv", out);
        const auto d = class_distribution(labels);
        manifest_["rows"]["labels"] = labels.size();
        manifest_["class_distribution"]["raw"] = distribution_json(d);
        say(Stage::label, fmt::format("{} labels, up {:.1f}% / down {:.1f}%", labels.size(), d.up_percent_rounded(),
                                      d.down_percent_rounded()));
    }

    void dataset() {
        const auto ds = build_dataset(candles(), frame(), affect(), c_.feature_set, c_.lag, c_.label_sign);
        if (ds.rows() == 0) throw ValidationError("dataset is empty after warm-up and gap removal");
        auto p = split(ds, c_.split);
        normalize(p[0], std::span<LabeledDataset>(p.data() + 1, 2));
        const std::array<const char*, 3> names = {"dataset_train.csv", "dataset_val.csv", "dataset_test.csv"};
        for (std::size_t i = 0; i < 3; ++i) export_dataset(p[i], a_.stage(names[i]));
        manifest_["rows"]["dataset"] = ds.rows();
        manifest_["rows"]["features"] = ds.dims();
        manifest_["rows"]["train"] = p[0].rows();
        manifest_["rows"]["val"] = p[1].rows();
        manifest_["rows"]["test"] = p[2].rows();
        manifest_["class_distribution"]["dataset"] = distribution_json(class_distribution(ds.y));
        say(Stage::dataset, fmt::format("{} rows x {} features (train {}, val {}, test {})", ds.rows(), ds.dims(),
                                        p[0].rows(), p[1].rows(), p[2].rows()));
        parts_ = std::move(p);
    }

    void tune() {
        const auto& train = parts()[0];
        std::ostringstream table;
        best_.emplace();
        json best = json::array();
        bool header = true;
        for (const auto& space : c_.search) {
            TuneOptions opt;
            opt.iterations = c_.iterations;
            opt.base_seed = mix_seed(c_.seed, kTuneStream, static_cast<std::uint64_t>(space.architecture));
            opt.mode = c_.resample;
            opt.oob_fraction = c_.oob_fraction;
            opt.objective = c_.objective;
            opt.workers = options_.workers;
            const auto result = grid_search(space, train, opt, c_.network);
            std::ostringstream part;
            write_results(part, result.results);
            auto text = part.str();
            if (!header) text.erase(0, text.find('\n') + 1);
            header = false;
            table << text;
            const auto& winner = result.best_result();
            best_->push_back(winner);
            json classes;
            for (auto cls : kReportClasses) classes[std::string(to_string(cls))] = summary_json(winner.metrics.at(cls));
            best.push_back({{"spec", nn::spec_to_json(winner.spec)},
                            {"iterations", winner.metrics.iterations},
                            {"failures", winner.metrics.failures},
                            {"classes", classes}});
            const auto arch = std::string(nn::to_string(space.architecture));
            manifest_["seeds"]["tune"][arch] = opt.base_seed;
            say(Stage::tune, fmt::format("{}: {} configs, best {} {} = {:.4f} ± {:.4f}", arch, result.results.size(),
                                         spec_csv_fields(winner.spec), to_string(c_.objective),
                                         winner.metrics.headline().get(c_.objective).mean,
                                         winner.metrics.headline().get(c_.objective).std));
        }
        a_.write("tune_results.csv", table.str());
        a_.write("best.json", best.dump(2) + "\n");
    }

    void train() {
        const auto& data = parts()[0];
        for (const auto& r : best()) {
            auto spec = r.spec;
            spec.seed = mix_seed(c_.seed, kTrainStream, static_cast<std::uint64_t>(spec.architecture));
            auto m = nn::fit(spec, data);
            nn::save_model(m, a_.stage(model_file(spec.architecture)));
            const auto arch = std::string(nn::to_string(spec.architecture));
            manifest_["seeds"]["train"][arch] = spec.seed;
            say(Stage::train, fmt::format("{}: final loss {:.6f}", arch, m.loss_trace.empty() ? 0.0 : m.loss_trace.back()));
            models_.insert_or_assign(spec.architecture, std::move(m));
        }
    }

    void evaluate() {
        const auto& test = parts()[2];
        std::vector<ReportRow> rows;
        for (const auto& r : best()) {
            const auto& m = model(r.spec.architecture);
            const auto pred = nn::predict(m, test.X);
            const auto rep = classification_report(confusion(test.y, pred.labels));
            for (auto cls : kReportClasses) {
                const auto s = scores(rep, cls);
                ReportRow row;
                row.model = std::string(to_string(c_.feature_set));
                row.asset = c_.asset;
                row.spec = m.spec;
                row.report_class = cls;
                row.scores = {{s.accuracy, 0.0}, {s.precision, 0.0}, {s.recall, 0.0}, {s.f1, 0.0}};
                row.iterations = 1;
                rows.push_back(row);
            }
            const auto arch = std::string(nn::to_string(r.spec.architecture));
            manifest_["test_accuracy"][arch] = rep.accuracy;
            say(Stage::evaluate, fmt::format("{}: test accuracy {:.4f}", arch, rep.accuracy));
        }
        std::ostringstream out;
        write_report_csv(out, rows);
        a_.write("evaluation.csv", out.str());
    }

    void report() {
        std::vector<ReportRow> rows;
        for (const auto& r : best())
            for (auto cls : kReportClasses) {
                ReportRow row;
                row.model = std::string(to_string(c_.feature_set));
                row.asset = c_.asset;
                row.spec = r.spec;
                row.report_class = cls;
                row.scores = r.metrics.at(cls);
                row.iterations = r.metrics.iterations;
                row.failures = r.metrics.failures;
                rows.push_back(row);
            }
        if (rows.empty()) throw DataError("no tuned configurations to report");
        std::ostringstream csv, text;
        write_report_csv(csv, rows);
        write_report_text(text, rows);
        a_.write("report.csv", csv.str());
        a_.write("report.txt", text.str());
        say(Stage::report, fmt::format("{} rows", rows.size()));
    }

    const ExperimentConfig& c_;
    const RunOptions& options_;
    Artifacts& a_;
    json manifest_ = json::object();

    std::optional<CandleSeries> candles_;
    std::optional<AffectRecordSet> records_;
    std::optional<indicators::IndicatorFrame> frame_;
    std::optional<std::vector<AffectSeries>> affect_;
    std::optional<std::array<LabeledDataset, 3>> parts_;
    std::optional<std::vector<ConfigResult>> best_;
    std::map<nn::Architecture, nn::TrainedModel> models_;
};

}  // namespace

void run_experiment(const ExperimentConfig& config, const RunOptions& options) {
    const Stage first = options.stage.value_or(Stage::ingest);
    std::optional<Artifacts> artifacts;
    try {
        artifacts.emplace(config.output);
    } catch (const fs::filesystem_error& e) {
        throw StageError(first, std::make_exception_ptr(IoError(e.what())), e.what());
    }
    Pipeline pipeline(config, options, *artifacts);
    if (options.stage) {
        pipeline.run(*options.stage);
    } else {
        for (auto s : kStages) pipeline.run(s);
    }
    const Stage last = options.stage.value_or(Stage::report);
    try {
        pipeline.finish();
    } catch (const std::exception& e) {
        throw StageError(last, std::current_exception(), e.what());
    }
}

int exit_code(const std::exception_ptr& error) noexcept {
    if (!error) return 0;
    try {
        std::rethrow_exception(error);
    } catch (const StageError& e) {
        return e.cause() ? exit_code(e.cause()) : 1;
    } catch (const ConfigError&) {
        return 2;
    } catch (const std::invalid_argument&) {
        return 2;
    } catch (const DataError&) {
        return 3;
    } catch (const TrainingError&) {
        return 4;
    } catch (const IoError&) {
        return 5;
    } catch (const fs::filesystem_error&) {
        return 5;
    } catch (...) {
        return 1;
    }
}

}  // namespace cryptomove
