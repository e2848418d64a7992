#include "cryptomove/nn/model.hpp"

#include "cryptomove/error.hpp"
#include "spec_json.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace cryptomove::nn {

namespace {

using nlohmann::json;

constexpr std::string_view kMagic = "CRYPTOMOVE-MODEL 1\n";
constexpr std::size_t kPredictChunk = 1024;

// SplitMix64 finaliser.
std::uint64_t shuffle_seed(std::uint64_t seed) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

void write_doubles(std::ostream& out, const std::vector<double>& v) {
    for (double d : v) {
        auto bits = std::bit_cast<std::uint64_t>(d);
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
        char buf[8];
        std::memcpy(buf, &bits, 8);
        out.write(buf, 8);
    }
}

void read_doubles(std::istream& in, std::vector<double>& v, const std::string& source) {
    for (auto& d : v) {
        char buf[8];
        if (!in.read(buf, 8)) throw ValidationError(source + ": truncated tensor data");
        std::uint64_t bits;
        std::memcpy(&bits, buf, 8);
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
        d = std::bit_cast<double>(bits);
    }
}

}  // namespace

TrainedModel fit(const NetworkSpec& spec, const cryptomove::Matrix& X, const Labels& y, std::size_t sequence_len,
                 const FitOptions& options) {
    const auto n = static_cast<std::size_t>(X.rows());
    if (n == 0) throw std::invalid_argument("cannot fit on an empty dataset");
    if (y.size() != n) throw std::invalid_argument("label count differs from row count");
    TrainedModel model;
    model.spec = spec;
    model.input_dim = static_cast<std::size_t>(X.cols());
    model.sequence_len = sequence_len;
    model.network = build_network(spec, model.input_dim, sequence_len, options.build);

    Optimizer opt(spec.optimizer, spec.learning_rate);
    std::mt19937_64 rng(shuffle_seed(spec.seed));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto batch = static_cast<std::size_t>(spec.batch_size);
    Labels yb;
    for (int epoch = 0; epoch < spec.epochs; ++epoch) {
        shuffle_indices(order, rng);
        double total = 0.0;
        for (std::size_t start = 0; start < n; start += batch) {
            const auto count = std::min(batch, n - start);
            const Tensor xb = gather_rows(X, order.data() + start, count);
            yb.resize(count);
            for (std::size_t i = 0; i < count; ++i) yb[i] = y[order[start + i]];
            total += train_step(model.network, xb, yb, opt, epoch) * static_cast<double>(count);
        }
        const double mean = total / static_cast<double>(n);
        if (!std::isfinite(mean)) throw TrainingDiverged(epoch);
        model.loss_trace.push_back(mean);
    }
    return model;
}

TrainedModel fit(const NetworkSpec& spec, const LabeledDataset& train, const FitOptions& options) {
    auto model = fit(spec, train.X, train.y, static_cast<std::size_t>(train.lag), options);
    model.normalization = train.normalization;
    model.feature_names = train.feature_names;
    return model;
}

Prediction predict(const TrainedModel& model, const cryptomove::Matrix& X) {
    if (static_cast<std::size_t>(X.cols()) != model.input_dim)
        throw std::invalid_argument("model expects " + std::to_string(model.input_dim) + " features, got " +
                                    std::to_string(X.cols()));
    Network net = model.network;
    Prediction out;
    const auto n = static_cast<std::size_t>(X.rows());
    out.probabilities.reserve(n);
    std::vector<std::size_t> rows(std::min(n, kPredictChunk));
    for (std::size_t start = 0; start < n; start += kPredictChunk) {
        const auto count = std::min(kPredictChunk, n - start);
        for (std::size_t i = 0; i < count; ++i) rows[i] = start + i;
        const auto p = net.up_probability(gather_rows(X, rows.data(), count));
        out.probabilities.insert(out.probabilities.end(), p.begin(), p.end());
    }
    out.labels.reserve(n);
    for (double p : out.probabilities) out.labels.push_back(p >= 0.5 ? 1 : 0);
    return out;
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
    Network net = model.network;
    json header;
    header["spec"] = spec_to_json(model.spec);
    header["input_dim"] = model.input_dim;
    header["sequence_len"] = model.sequence_len;
    header["loss_trace"] = model.loss_trace;
    header["feature_names"] = model.feature_names;
    if (model.normalization) {
        const auto& nz = *model.normalization;
        header["normalization"] = {{"mean", nz.mean}, {"std", nz.std}, {"passthrough", nz.passthrough}};
    }
    json tensors = json::array();
    for (auto* p : net.parameters()) tensors.push_back({{"name", p->name}, {"shape", p->value.shape}});
    header["tensors"] = tensors;

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << kMagic << header.dump() << '\n';
    for (auto* p : net.parameters()) write_doubles(out, p->value.data);
    if (!out) throw IoError("failed writing " + path.string());
}

TrainedModel load_model(const std::filesystem::path& path) {
    const auto source = path.string();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + source);
    std::string magic(kMagic.size(), '\0');
    if (!in.read(magic.data(), static_cast<std::streamsize>(magic.size())) || magic != kMagic)
        throw ValidationError(source + ": not a model file");
    std::string line;
    if (!std::getline(in, line)) throw ValidationError(source + ": missing header");
    json header;
    try {
        header = json::parse(line);
    } catch (const json::exception& e) {
        throw ValidationError(source + ": malformed header: " + e.what());
    }

    TrainedModel model;
    try {
        const auto& stored = header.at("spec");
        for (const auto* key : {"architecture", "hidden_layers", "neurons", "activation", "optimizer", "epochs",
                                "batch_size", "learning_rate", "seed", "fcn_filters", "attention_cells", "cnn_kernel"})
            if (!stored.contains(key)) throw ValidationError(source + ": stored spec lacks " + key);
        model.spec = spec_from_json(stored);
        model.input_dim = header.at("input_dim").get<std::size_t>();
        model.sequence_len = header.at("sequence_len").get<std::size_t>();
        model.loss_trace = header.at("loss_trace").get<std::vector<double>>();
        model.feature_names = header.at("feature_names").get<std::vector<std::string>>();
        if (header.contains("normalization")) {
            Normalization nz;
            const auto& j = header["normalization"];
            nz.mean = j.at("mean").get<std::vector<double>>();
            nz.std = j.at("std").get<std::vector<double>>();
            nz.passthrough = j.at("passthrough").get<std::vector<bool>>();
            model.normalization = std::move(nz);
        }
        model.network = build_network(model.spec, model.input_dim, model.sequence_len);
    } catch (const json::exception& e) {
        throw ValidationError(source + ": bad header field: " + e.what());
    } catch (const std::invalid_argument& e) {
        throw ValidationError(source + ": stored spec is invalid: " + e.what());
    }

    const auto& tensors = header.at("tensors");
    auto params = model.network.parameters();
    if (tensors.size() != params.size())
        throw ValidationError(source + ": stored tensor count does not match the spec");
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto name = tensors[i].at("name").get<std::string>();
        const auto shape = tensors[i].at("shape").get<std::vector<std::size_t>>();
        if (name != params[i]->name || shape != params[i]->value.shape)
            throw ValidationError(source + ": tensor " + name + " does not match the spec (expected " +
                                  params[i]->name + " " + params[i]->value.shape_string() + ")");
        read_doubles(in, params[i]->value.data, source);
    }
    if (in.peek() != std::char_traits<char>::eof()) throw ValidationError(source + ": trailing bytes after tensors");
    return model;
}

}  // namespace cryptomove::nn
