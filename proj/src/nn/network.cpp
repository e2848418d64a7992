#include "cryptomove/nn/network.hpp"

#include "cryptomove/error.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cryptomove::nn {

namespace {

double softplus(double z) {
    return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

void check_labels(const Labels& y, std::size_t rows) {
    if (y.size() != rows)
        throw std::invalid_argument("got " + std::to_string(y.size()) + " labels for " + std::to_string(rows) + " rows");
    for (int v : y)
        if (v != 0 && v != 1) throw std::invalid_argument("labels must be 0 or 1");
}

// Mean cross-entropy of logits; fills d loss / d logits when grad is non-null.
double cross_entropy(Head head, const Tensor& logits, const Labels& y, Tensor* grad) {
    const auto B = logits.dim(0);
    const double inv_b = 1.0 / static_cast<double>(B);
    double total = 0.0;
    if (grad) *grad = Tensor(logits.shape);
    if (head == Head::sigmoid) {
        for (std::size_t b = 0; b < B; ++b) {
            const double z = logits.data[b];
            total += softplus(z) - y[b] * z;
            if (grad) grad->data[b] = (sigmoid(z) - y[b]) * inv_b;
        }
    } else {
        for (std::size_t b = 0; b < B; ++b) {
            const double z0 = logits.data[2 * b], z1 = logits.data[2 * b + 1];
            const double mx = std::max(z0, z1);
            const double lse = mx + std::log(std::exp(z0 - mx) + std::exp(z1 - mx));
            total += lse - (y[b] == 1 ? z1 : z0);
            if (grad) {
                const double p1 = std::exp(z1 - lse), p0 = std::exp(z0 - lse);
                grad->data[2 * b] = (p0 - (y[b] == 0 ? 1.0 : 0.0)) * inv_b;
                grad->data[2 * b + 1] = (p1 - (y[b] == 1 ? 1.0 : 0.0)) * inv_b;
            }
        }
    }
    return total * inv_b;
}

}  // namespace

std::string_view to_string(Architecture a) noexcept {
    switch (a) {
        case Architecture::mlp: return "mlp";
        case Architecture::lstm: return "lstm";
        case Architecture::malstm_fcn: return "malstm_fcn";
        case Architecture::cnn: return "cnn";
    }
    return "mlp";
}

Architecture parse_architecture(std::string_view s) {
    if (s == "mlp") return Architecture::mlp;
    if (s == "lstm") return Architecture::lstm;
    if (s == "malstm_fcn") return Architecture::malstm_fcn;
    if (s == "cnn") return Architecture::cnn;
    throw std::invalid_argument("unknown architecture '" + std::string(s) + "'");
}

std::string_view to_string(OptimizerKind o) noexcept {
    switch (o) {
        case OptimizerKind::sgd: return "sgd";
        case OptimizerKind::adam: return "adam";
        case OptimizerKind::nadam: return "nadam";
        case OptimizerKind::adamax: return "adamax";
        case OptimizerKind::rmsprop: return "rmsprop";
    }
    return "adam";
}

OptimizerKind parse_optimizer(std::string_view s) {
    std::string lower(s);
    for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (lower == "sgd") return OptimizerKind::sgd;
    if (lower == "adam") return OptimizerKind::adam;
    if (lower == "nadam") return OptimizerKind::nadam;
    if (lower == "adamax") return OptimizerKind::adamax;
    if (lower == "rmsprop") return OptimizerKind::rmsprop;
    throw std::invalid_argument("unknown optimizer '" + std::string(s) + "'");
}

void validate(const NetworkSpec& spec) {
    if (spec.epochs < 1) throw std::invalid_argument("epochs must be >= 1");
    if (spec.batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (!(spec.learning_rate >= 0.0) || !std::isfinite(spec.learning_rate))
        throw std::invalid_argument("learning_rate must be finite and >= 0");
    switch (spec.architecture) {
        case Architecture::mlp:
        case Architecture::lstm:
        case Architecture::cnn:
            if (spec.neurons < 1) throw std::invalid_argument("neurons must be >= 1");
            if (spec.hidden_layers < 1) throw std::invalid_argument("hidden_layers must be >= 1");
            break;
        case Architecture::malstm_fcn:
            for (int f : spec.fcn_filters)
                if (f < 1) throw std::invalid_argument("convolution filter counts must be >= 1");
            if (spec.attention_cells < 1) throw std::invalid_argument("attention_cells must be >= 1");
            break;
    }
    if (spec.architecture == Architecture::cnn) {
        if (spec.hidden_layers < 2) throw std::invalid_argument("cnn needs at least 2 convolution layers");
        if (spec.cnn_kernel < 1) throw std::invalid_argument("cnn_kernel must be >= 1");
    }
    if (spec.architecture == Architecture::lstm && spec.activation == ActivationKind::softmax)
        throw std::invalid_argument("softmax cannot be an LSTM activation");
}

// ---------------------------------------------------------------------------
// Network

Network::Network(Sequential body, Head head, std::size_t input_dim)
    : body_(std::move(body)), head_(head), input_dim_(input_dim) {}

Tensor Network::check_input(const Tensor& x) const {
    if (x.rank() != 2 || x.dim(1) != input_dim_)
        throw std::invalid_argument("network expects (batch, " + std::to_string(input_dim_) + ") input, got " +
                                    x.shape_string());
    if (x.dim(0) == 0) throw std::invalid_argument("empty batch");
    return x;
}

Tensor Network::logits(const Tensor& x, bool training) {
    return body_.forward(check_input(x), training);
}

Tensor Network::forward(const Tensor& x, bool training) {
    Tensor z = logits(x, training);
    if (head_ == Head::softmax) return activation(ActivationKind::softmax, z);
    return activation(ActivationKind::sigmoid, z);
}

std::vector<double> Network::up_probability(const Tensor& x) {
    const Tensor p = forward(x, false);
    std::vector<double> out(p.dim(0));
    for (std::size_t b = 0; b < out.size(); ++b) out[b] = head_ == Head::softmax ? p.data[2 * b + 1] : p.data[b];
    return out;
}

double Network::loss(const Tensor& x, const Labels& y, bool training) {
    check_labels(y, x.rank() > 0 ? x.dim(0) : 0);
    return cross_entropy(head_, logits(x, training), y, nullptr);
}

double Network::loss_and_gradient(const Tensor& x, const Labels& y) {
    check_labels(y, x.rank() > 0 ? x.dim(0) : 0);
    zero_grad();
    const Tensor z = logits(x, true);
    Tensor grad;
    const double l = cross_entropy(head_, z, y, &grad);
    body_.backward(grad);
    return l;
}

std::vector<Parameter*> Network::parameters() {
    return body_.parameters();
}

std::size_t Network::parameter_count() {
    std::size_t n = 0;
    for (auto* p : parameters())
        if (p->trainable) n += p->value.size();
    return n;
}

void Network::zero_grad() {
    for (auto* p : parameters()) std::fill(p->grad.data.begin(), p->grad.data.end(), 0.0);
}

// ---------------------------------------------------------------------------
// Construction

Network build_network(const NetworkSpec& spec, std::size_t input_dim, std::size_t sequence_len,
                      const BuildOptions& options) {
    validate(spec);
    if (input_dim < 1) throw std::invalid_argument("input_dim must be >= 1");
    if (sequence_len < 1 || input_dim % sequence_len != 0)
        throw std::invalid_argument("input_dim " + std::to_string(input_dim) + " is not a multiple of sequence length " +
                                    std::to_string(sequence_len));
    const auto L = sequence_len;
    const auto F = input_dim / sequence_len;
    const auto n = static_cast<std::size_t>(spec.neurons);
    const auto layers = static_cast<std::size_t>(spec.hidden_layers);
    std::mt19937_64 rng(spec.seed);
    Sequential body;
    Head head = Head::sigmoid;

    switch (spec.architecture) {
        case Architecture::mlp: {
            std::size_t width = input_dim;
            for (std::size_t k = 0; k < layers; ++k) {
                body.add(std::make_unique<Dense>("dense" + std::to_string(k), width, n, rng));
                body.add(std::make_unique<Activation>(spec.activation));
                width = n;
            }
            body.add(std::make_unique<Dense>("output", width, 1, rng, options.zero_output_layer));
            break;
        }
        case Architecture::lstm: {
            body.add(std::make_unique<Reshape>(std::vector<std::size_t>{L, F}));
            std::size_t width = F;
            for (std::size_t k = 0; k < layers; ++k) {
                body.add(std::make_unique<Lstm>("lstm" + std::to_string(k), width, n, spec.activation, k + 1 < layers,
                                                rng));
                width = n;
            }
            body.add(std::make_unique<Dense>("output", width, 1, rng, options.zero_output_layer));
            break;
        }
        case Architecture::cnn: {
            body.add(std::make_unique<Reshape>(std::vector<std::size_t>{L, F}));
            std::size_t width = F;
            for (std::size_t k = 0; k < layers; ++k) {
                body.add(std::make_unique<Conv1d>("conv" + std::to_string(k), width, n,
                                                  static_cast<std::size_t>(spec.cnn_kernel), true, rng));
                body.add(std::make_unique<Activation>(spec.activation));
                width = n;
            }
            body.add(std::make_unique<MaxPool1d>());
            const auto pooled = (L + 1) / 2;
            body.add(std::make_unique<Reshape>(std::vector<std::size_t>{pooled * n}));
            body.add(std::make_unique<Dense>("output", pooled * n, 1, rng, options.zero_output_layer));
            break;
        }
        case Architecture::malstm_fcn: {
            head = Head::softmax;
            const auto cells = static_cast<std::size_t>(spec.attention_cells);
            body.add(std::make_unique<Reshape>(std::vector<std::size_t>{L, F}));
            Sequential attention;
            attention.add(std::make_unique<DimensionShuffle>());
            attention.add(std::make_unique<Lstm>("attention_lstm", L, cells, ActivationKind::tanh, true, rng));
            attention.add(std::make_unique<Attention>("attention", cells, rng));
            Sequential fcn;
            static constexpr std::size_t kernels[] = {8, 5, 3};
            std::size_t width = F;
            for (std::size_t k = 0; k < 3; ++k) {
                const auto filters = static_cast<std::size_t>(spec.fcn_filters[k]);
                const auto name = "fcn" + std::to_string(k);
                fcn.add(std::make_unique<Conv1d>(name, width, filters, kernels[k], false, rng));
                fcn.add(std::make_unique<BatchNorm>(name + "_bn", filters));
                fcn.add(std::make_unique<Activation>(ActivationKind::relu));
                width = filters;
            }
            fcn.add(std::make_unique<GlobalAvgPool1d>());
            body.add(std::make_unique<ParallelConcat>(std::move(attention), std::move(fcn)));
            body.add(std::make_unique<Dense>("output", cells + width, 2, rng, options.zero_output_layer));
            break;
        }
    }
    return Network(std::move(body), head, input_dim);
}

// ---------------------------------------------------------------------------
// Optimisation

Optimizer::Optimizer(OptimizerKind kind, double learning_rate) : kind_(kind), lr_(learning_rate) {
    if (!(learning_rate >= 0.0)) throw std::invalid_argument("learning rate must be >= 0");
}

void Optimizer::step(const std::vector<Parameter*>& params) {
    if (m_.empty()) {
        m_.resize(params.size());
        v_.resize(params.size());
        for (std::size_t p = 0; p < params.size(); ++p) {
            m_[p].assign(params[p]->value.size(), 0.0);
            v_[p].assign(params[p]->value.size(), 0.0);
        }
    }
    if (m_.size() != params.size()) throw std::invalid_argument("optimizer used with a different parameter set");
    ++t_;
    const double t = static_cast<double>(t_);
    const double bc1 = 1.0 - std::pow(beta1, t);
    const double bc1_next = 1.0 - std::pow(beta1, t + 1.0);
    const double bc2 = 1.0 - std::pow(beta2, t);
    for (std::size_t p = 0; p < params.size(); ++p) {
        auto* param = params[p];
        if (!param->trainable) continue;
        auto& theta = param->value.data;
        const auto& g = param->grad.data;
        auto& m = m_[p];
        auto& v = v_[p];
        for (std::size_t k = 0; k < theta.size(); ++k) {
            const double gk = g[k];
            switch (kind_) {
                case OptimizerKind::sgd:
                    theta[k] -= lr_ * gk;
                    break;
                case OptimizerKind::rmsprop:
                    v[k] = rho * v[k] + (1.0 - rho) * gk * gk;
                    theta[k] -= lr_ * gk / (std::sqrt(v[k]) + epsilon);
                    break;
                case OptimizerKind::adam:
                    m[k] = beta1 * m[k] + (1.0 - beta1) * gk;
                    v[k] = beta2 * v[k] + (1.0 - beta2) * gk * gk;
                    theta[k] -= lr_ * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + epsilon);
                    break;
                case OptimizerKind::adamax:
                    m[k] = beta1 * m[k] + (1.0 - beta1) * gk;
                    v[k] = std::max(beta2 * v[k], std::abs(gk));
                    theta[k] -= (lr_ / bc1) * m[k] / (v[k] + epsilon);
                    break;
                case OptimizerKind::nadam: {
                    m[k] = beta1 * m[k] + (1.0 - beta1) * gk;
                    v[k] = beta2 * v[k] + (1.0 - beta2) * gk * gk;
                    const double m_hat = beta1 * m[k] / bc1_next + (1.0 - beta1) * gk / bc1;
                    theta[k] -= lr_ * m_hat / (std::sqrt(v[k] / bc2) + epsilon);
                    break;
                }
            }
        }
    }
}

double train_step(Network& net, const Tensor& X, const Labels& y, Optimizer& opt, int epoch) {
    const double loss = net.loss_and_gradient(X, y);
    if (!std::isfinite(loss)) throw TrainingDiverged(epoch);
    auto params = net.parameters();
    for (auto* p : params)
        if (p->trainable && !p->grad.all_finite()) throw TrainingDiverged(epoch);
    opt.step(params);
    for (auto* p : params)
        if (!p->value.all_finite()) throw TrainingDiverged(epoch);
    return loss;
}

double gradient_check(Network& net, const Tensor& X, const Labels& y, double epsilon) {
    net.loss_and_gradient(X, y);
    auto params = net.parameters();
    std::vector<std::vector<double>> analytic;
    for (auto* p : params) analytic.push_back(p->grad.data);
    double worst = 0.0;
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto* p = params[k];
        if (!p->trainable) continue;
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            const double saved = p->value.data[i];
            p->value.data[i] = saved + epsilon;
            const double plus = net.loss(X, y, true);
            p->value.data[i] = saved - epsilon;
            const double minus = net.loss(X, y, true);
            p->value.data[i] = saved;
            const double numeric = (plus - minus) / (2.0 * epsilon);
            const double a = analytic[k][i];
            const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-12});
            worst = std::max(worst, err);
        }
    }
    return worst;
}

Tensor gather_rows(const Matrix& X, const std::size_t* rows, std::size_t count) {
    Tensor t({count, static_cast<std::size_t>(X.cols())});
    auto M = t.matrix();
    for (std::size_t i = 0; i < count; ++i) M.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(rows[i]));
    return t;
}

void shuffle_indices(std::vector<std::size_t>& idx, std::mt19937_64& rng) {
    for (std::size_t i = idx.size(); i > 1; --i) {
        const std::uint64_t bound = i;
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % bound;
        std::uint64_t r;
        do r = rng();
        while (r >= limit);
        std::swap(idx[i - 1], idx[static_cast<std::size_t>(r % bound)]);
    }
}

}  // namespace cryptomove::nn
