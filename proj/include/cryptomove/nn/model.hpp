#pragma once

#include "cryptomove/dataset.hpp"
#include "cryptomove/nn/network.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace cryptomove::nn {

struct TrainedModel {
    NetworkSpec spec;
    std::size_t input_dim = 0;
    std::size_t sequence_len = 1;
    Network network;
    std::vector<double> loss_trace;  // mean training loss per epoch
    std::optional<Normalization> normalization;
    std::vector<std::string> feature_names;
};

struct FitOptions {
    BuildOptions build;
};

/// Trains for spec.epochs epochs of shuffled mini-batches. All randomness
/// (initialisation and batch order) derives from spec.seed.
TrainedModel fit(const NetworkSpec& spec, const cryptomove::Matrix& X, const Labels& y, std::size_t sequence_len,
                 const FitOptions& options = {});

/// Convenience overload that also records the dataset's normalization and feature names.
TrainedModel fit(const NetworkSpec& spec, const LabeledDataset& train, const FitOptions& options = {});

struct Prediction {
    Labels labels;  // 1 iff probability >= 0.5
    std::vector<double> probabilities;
};

/// Safe to call concurrently on one model.
Prediction predict(const TrainedModel& model, const cryptomove::Matrix& X);

void save_model(const TrainedModel& model, const std::filesystem::path& path);
/// Throws ValidationError if the stored tensors do not fit the stored spec.
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace cryptomove::nn
