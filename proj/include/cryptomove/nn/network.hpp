#pragma once

#include "cryptomove/nn/layers.hpp"

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace cryptomove::nn {

using Labels = std::vector<int>;

enum class Architecture { mlp, lstm, malstm_fcn, cnn };
enum class OptimizerKind { sgd, adam, nadam, adamax, rmsprop };

std::string_view to_string(Architecture a) noexcept;
Architecture parse_architecture(std::string_view s);
std::string_view to_string(OptimizerKind o) noexcept;
/// Accepts the lower-case names and the capitalised forms ("Nadam", "RMSprop", "SGD").
OptimizerKind parse_optimizer(std::string_view s);

struct NetworkSpec {
    Architecture architecture = Architecture::mlp;
    int hidden_layers = 1;
    int neurons = 16;
    ActivationKind activation = ActivationKind::relu;
    OptimizerKind optimizer = OptimizerKind::adam;
    int epochs = 100;
    int batch_size = 32;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
    // malstm_fcn only
    std::array<int, 3> fcn_filters = {128, 256, 256};
    int attention_cells = 8;
    // cnn only
    int cnn_kernel = 3;

    friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;
};

/// Throws std::invalid_argument for out-of-range fields or unsupported combinations.
void validate(const NetworkSpec& spec);

enum class Head { sigmoid, softmax };

class Network {
public:
    Network() = default;
    Network(Sequential body, Head head, std::size_t input_dim);

    Head head() const noexcept { return head_; }
    std::size_t input_dim() const noexcept { return input_dim_; }

    /// Logits: (batch, 1) for the sigmoid head, (batch, 2) for softmax.
    Tensor logits(const Tensor& x, bool training);
    /// Probabilities: (batch, 1) in (0, 1), or (batch, 2) rows summing to 1.
    Tensor forward(const Tensor& x, bool training = false);
    /// P(up) per row.
    std::vector<double> up_probability(const Tensor& x);

    /// Mean cross-entropy without touching gradients.
    double loss(const Tensor& x, const Labels& y, bool training = true);
    /// Mean cross-entropy; gradients are overwritten with d loss / d θ.
    double loss_and_gradient(const Tensor& x, const Labels& y);

    std::vector<Parameter*> parameters();
    std::size_t parameter_count();
    void zero_grad();

    const Sequential& body() const noexcept { return body_; }

private:
    Tensor check_input(const Tensor& x) const;

    Sequential body_;
    Head head_ = Head::sigmoid;
    std::size_t input_dim_ = 0;
};

struct BuildOptions {
    /// Zero the output layer so an untrained network predicts exactly 0.5.
    bool zero_output_layer = false;
};

/// Input rows are `sequence_len` blocks of input_dim / sequence_len features,
/// oldest first. The MLP sees the flat row; the other architectures see the
/// blocks as a sequence.
Network build_network(const NetworkSpec& spec, std::size_t input_dim, std::size_t sequence_len,
                      const BuildOptions& options = {});

class Optimizer {
public:
    static constexpr double beta1 = 0.9;
    static constexpr double beta2 = 0.999;
    static constexpr double rho = 0.9;
    static constexpr double epsilon = 1e-8;

    Optimizer(OptimizerKind kind, double learning_rate);
    void step(const std::vector<Parameter*>& params);
    OptimizerKind kind() const noexcept { return kind_; }
    double learning_rate() const noexcept { return lr_; }

private:
    OptimizerKind kind_;
    double lr_;
    long long t_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

/// One optimiser update on (X, y); returns the pre-update loss.
/// Throws TrainingDiverged carrying `epoch` if the loss or gradient is non-finite.
double train_step(Network& net, const Tensor& X, const Labels& y, Optimizer& opt, int epoch = 0);

/// Central differences over every trainable parameter entry; returns
/// max |a - n| / max(|a|, |n|, 1e-12).
double gradient_check(Network& net, const Tensor& X, const Labels& y, double epsilon = 1e-5);

/// Rows of X selected by index, as a (count × cols) tensor.
Tensor gather_rows(const Matrix& X, const std::size_t* rows, std::size_t count);

/// Fisher-Yates shuffle driven by 64-bit draws; identical across platforms.
void shuffle_indices(std::vector<std::size_t>& idx, std::mt19937_64& rng);

}  // namespace cryptomove::nn
