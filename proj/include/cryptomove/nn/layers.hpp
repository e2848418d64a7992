#pragma once

#include "cryptomove/nn/tensor.hpp"

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace cryptomove::nn {

enum class ActivationKind { relu, tanh, sigmoid, softmax };

std::string_view to_string(ActivationKind a) noexcept;
ActivationKind parse_activation(std::string_view s);

/// Elementwise relu/tanh/sigmoid; softmax normalises along the last axis.
Tensor activation(ActivationKind kind, const Tensor& x);
double sigmoid(double x) noexcept;

/// Gate weights in row-vector convention: gate = x·U + h·W + b.
/// U_* is (inputs × units), W_* is (units × units), b_* has `units` entries.
struct LstmWeights {
    Matrix U_f, W_f, U_i, W_i, U_g, W_g, U_o, W_o;
    Eigen::RowVectorXd b_f, b_i, b_g, b_o;

    static LstmWeights zeros(std::size_t inputs, std::size_t units);
    std::size_t inputs() const noexcept { return static_cast<std::size_t>(U_f.rows()); }
    std::size_t units() const noexcept { return static_cast<std::size_t>(U_f.cols()); }
};

struct LstmState {
    Matrix h;  // batch × units
    Matrix c;
};

/// f = σ(xU_f + hW_f), i = σ(xU_i + hW_i) ⊙ g(xU_g + hW_g), c' = f ⊙ c + i,
/// h' = g(c') ⊙ σ(xU_o + hW_o), with g = `cell_activation` (tanh by default).
LstmState lstm_step(const LstmWeights& w, const Matrix& x, const Matrix& h_prev, const Matrix& c_prev,
                    ActivationKind cell_activation = ActivationKind::tanh);

struct AttentionResult {
    Eigen::VectorXd scores;   // e(j)
    Eigen::VectorXd weights;  // α(j), sums to 1
    Eigen::RowVectorXd context;
};

/// Additive attention over encoder states h (M × units) given decoder state
/// s_prev: e(j) = V_a · tanh(s_prev·U_a + h(j)·W_a), α = softmax(e), c = Σ α(j) h(j).
AttentionResult attention_context(const Matrix& h, const Eigen::RowVectorXd& s_prev, const Matrix& W_a,
                                  const Matrix& U_a, const Eigen::VectorXd& V_a);

/// (batch, time, vars) → (batch, vars, time).
Tensor dimension_shuffle(const Tensor& x);

struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;
    bool trainable = true;  // false for running statistics
};

/// Deterministic uniform draw in [lo, hi) from 53 random bits.
double uniform(std::mt19937_64& rng, double lo, double hi);

/// Layers cache what backward() needs during forward(training = true).
class Layer {
public:
    virtual ~Layer() = default;
    virtual Tensor forward(const Tensor& x, bool training) = 0;
    /// Accumulates parameter gradients and returns the gradient w.r.t. the input.
    virtual Tensor backward(const Tensor& grad_out) = 0;
    virtual std::vector<Parameter*> parameters() { return {}; }
    virtual std::unique_ptr<Layer> clone() const = 0;
    virtual std::string kind() const = 0;
};

using LayerPtr = std::unique_ptr<Layer>;

/// (batch, in) → (batch, out).
class Dense final : public Layer {
public:
    Dense(std::string name, std::size_t in, std::size_t out, std::mt19937_64& rng, bool zero_init = false);
    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& grad_out) override;
    std::vector<Parameter*> parameters() override { return {&W_, &b_}; }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Dense>(*this); }
    std::string kind() const override { return "dense"; }

private:
    Parameter W_, b_;
    Tensor input_;
};

class Activation final : public Layer {
public:
    explicit Activation(ActivationKind kind) : kind_(kind) {}
    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& grad_out) override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Activation>(*this); }
    std::string kind() const override { return "activation"; }

private:
    ActivationKind kind_;
    Tensor input_, output_;
};

/// (batch, time, in) → (batch, units), or (batch, time, units) with return_sequences.
class Lstm final : public Layer {
public:
    Lstm(std::string name, std::size_t in, std::size_t units, ActivationKind cell_activation, bool return_sequences,
         std::mt19937_64& rng);
    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& grad_out) override;
    std::vector<Parameter*> parameters() override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Lstm>(*this); }
    std::string kind() const override { return "lstm"; }

    LstmWeights weights() const;

private:
    std::size_t in_, units_;
    ActivationKind act_;
    bool return_sequences_;
    Parameter U_[4], W_[4], b_[4];  // gate order f, i, g, o
    // Per-step caches, each (batch × units) except xs_.
    std::vector<Matrix> xs_, hs_, cs_, f_, i_, g_, o_, gpre_, ac_;
    std::size_t batch_ = 0, steps_ = 0;
};

/// Context vector over a (batch, M, units) sequence with s_prev = h(M).
class Attention final : public Layer {
public:
    Attention(std::string name, std::size_t units, std::mt19937_64& rng);
    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& grad_out) override;
    std::vector<Parameter*> parameters() override { return {&W_a_, &U_a_, &V_a_}; }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Attention>(*this); }
    std::string kind() const override { return "attention"; }

    /// Attention weights of the last forward pass, (batch × M).
    const Matrix& last_weights() const noexcept { return alpha_; }

private:
    std::size_t units_;
    Parameter W_a_, U_a_, V_a_;
    Tensor input_;
    Matrix alpha_;
    std::vector<Matrix> tanh_;  // per sample: M × units
};

/// Same-padded 1-D convolution, (batch, time, in) → (batch, time, filters).
class Conv1d final : public Layer {
public:
    Conv1d(std::string name, std::size_t in, std::size_t filters, std::size_t kernel, bool use_bias,
           std::mt19937_64& rng);
    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& grad_out) override;
    std::vector<Parameter*> parameters() override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Conv1d>(*this); }
    std::string kind() const override { return "conv1d"; }

private:
    std::size_t in_, filters_, kernel_;
    bool use_bias_;
    Parameter W_, b_;  // W: (kernel, in, filters)
    Tensor input_;
};

/// Normalises the last axis over all leading axes.
class BatchNorm final : public Layer {
public:
    BatchNorm(std::string name, std::size_t features, double epsilon = 1e-5, double momentum = 0.99);
    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& grad_out) override;
    std::vector<Parameter*> parameters() override { return {&gamma_, &beta_, &mean_, &var_}; }
    std::unique_ptr<Layer> clone() const override { return std::make_unique<BatchNorm>(*this); }
    std::string kind() const override { return "batchnorm"; }

private:
    double eps_, momentum_;
    Parameter gamma_, beta_, mean_, var_;
    Tensor xhat_;
    Eigen::RowVectorXd inv_std_;
};

/// Window-2 max pooling over time; output length is ceil(time / 2).
class MaxPool1d final : public Layer {
public:
    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& grad_out) override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<MaxPool1d>(*this); }
    std::string kind() const override { return "maxpool1d"; }

private:
    std::vector<std::size_t> input_shape_;
    std::vector<std::size_t> argmax_;
};

class GlobalAvgPool1d final : public Layer {
public:
    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& grad_out) override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<GlobalAvgPool1d>(*this); }
    std::string kind() const override { return "global_avg_pool1d"; }

private:
    std::vector<std::size_t> input_shape_;
};

/// Reshapes every sample; the batch axis is kept.
class Reshape final : public Layer {
public:
    explicit Reshape(std::vector<std::size_t> sample_shape) : sample_shape_(std::move(sample_shape)) {}
    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& grad_out) override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Reshape>(*this); }
    std::string kind() const override { return "reshape"; }

private:
    std::vector<std::size_t> sample_shape_;
    std::vector<std::size_t> input_shape_;
};

class DimensionShuffle final : public Layer {
public:
    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& grad_out) override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<DimensionShuffle>(*this); }
    std::string kind() const override { return "dimension_shuffle"; }
};

/// Applies layers in order.
class Sequential final : public Layer {
public:
    Sequential() = default;
    explicit Sequential(std::vector<LayerPtr> layers) : layers_(std::move(layers)) {}
    Sequential(const Sequential& other);
    Sequential& operator=(const Sequential& other);
    Sequential(Sequential&&) noexcept = default;
    Sequential& operator=(Sequential&&) noexcept = default;

    void add(LayerPtr layer) { layers_.push_back(std::move(layer)); }
    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& grad_out) override;
    std::vector<Parameter*> parameters() override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<Sequential>(*this); }
    std::string kind() const override { return "sequential"; }

    const std::vector<LayerPtr>& layers() const noexcept { return layers_; }

private:
    std::vector<LayerPtr> layers_;
};

/// Runs two branches on the same input and concatenates their (batch, k) outputs.
class ParallelConcat final : public Layer {
public:
    ParallelConcat(Sequential left, Sequential right) : left_(std::move(left)), right_(std::move(right)) {}
    Tensor forward(const Tensor& x, bool training) override;
    Tensor backward(const Tensor& grad_out) override;
    std::vector<Parameter*> parameters() override;
    std::unique_ptr<Layer> clone() const override { return std::make_unique<ParallelConcat>(*this); }
    std::string kind() const override { return "parallel_concat"; }

private:
    Sequential left_, right_;
    std::size_t left_width_ = 0;
};

}  // namespace cryptomove::nn
