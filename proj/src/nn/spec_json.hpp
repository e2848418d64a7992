#pragma once

#include "cryptomove/nn/network.hpp"

#include <json.hpp>

namespace cryptomove::nn {

inline nlohmann::json spec_to_json(const NetworkSpec& s) {
    return nlohmann::json{{"architecture", to_string(s.architecture)},
                          {"hidden_layers", s.hidden_layers},
                          {"neurons", s.neurons},
                          {"activation", to_string(s.activation)},
                          {"optimizer", to_string(s.optimizer)},
                          {"epochs", s.epochs},
                          {"batch_size", s.batch_size},
                          {"learning_rate", s.learning_rate},
                          {"seed", s.seed},
                          {"fcn_filters", s.fcn_filters},
                          {"attention_cells", s.attention_cells},
                          {"cnn_kernel", s.cnn_kernel}};
}

/// Missing fields keep the values of `base`.
inline NetworkSpec spec_from_json(const nlohmann::json& j, NetworkSpec base = {}) {
    NetworkSpec s = base;
    if (j.contains("architecture")) s.architecture = parse_architecture(j["architecture"].get<std::string>());
    if (j.contains("hidden_layers")) s.hidden_layers = j["hidden_layers"].get<int>();
    if (j.contains("neurons")) s.neurons = j["neurons"].get<int>();
    if (j.contains("activation")) s.activation = parse_activation(j["activation"].get<std::string>());
    if (j.contains("optimizer")) s.optimizer = parse_optimizer(j["optimizer"].get<std::string>());
    if (j.contains("epochs")) s.epochs = j["epochs"].get<int>();
    if (j.contains("batch_size")) s.batch_size = j["batch_size"].get<int>();
    if (j.contains("learning_rate")) s.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("seed")) s.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("fcn_filters")) s.fcn_filters = j["fcn_filters"].get<std::array<int, 3>>();
    if (j.contains("attention_cells")) s.attention_cells = j["attention_cells"].get<int>();
    if (j.contains("cnn_kernel")) s.cnn_kernel = j["cnn_kernel"].get<int>();
    return s;
}

}  // namespace cryptomove::nn
