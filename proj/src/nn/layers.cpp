#include "cryptomove/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cryptomove::nn {

namespace {

using RowVector = Eigen::RowVectorXd;

Tensor glorot(std::vector<std::size_t> shape, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
    Tensor t(std::move(shape));
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (auto& v : t.data) v = uniform(rng, -limit, limit);
    return t;
}

Parameter make_param(std::string name, Tensor value, bool trainable = true) {
    Parameter p;
    p.name = std::move(name);
    p.grad = Tensor(value.shape);
    p.value = std::move(value);
    p.trainable = trainable;
    return p;
}

void require_rank(const Tensor& x, std::size_t rank, const char* who) {
    if (x.rank() != rank)
        throw std::invalid_argument(std::string(who) + " expects a rank-" + std::to_string(rank) + " input, got " +
                                    x.shape_string());
}

double apply_scalar(ActivationKind k, double x) {
    switch (k) {
        case ActivationKind::relu: return x > 0.0 ? x : 0.0;
        case ActivationKind::tanh: return std::tanh(x);
        case ActivationKind::sigmoid: return sigmoid(x);
        case ActivationKind::softmax: break;
    }
    throw std::invalid_argument("softmax is not an elementwise activation");
}

// Derivative expressed through the pre-activation x and output y.
double derivative_scalar(ActivationKind k, double x, double y) {
    switch (k) {
        case ActivationKind::relu: return x > 0.0 ? 1.0 : 0.0;
        case ActivationKind::tanh: return 1.0 - y * y;
        case ActivationKind::sigmoid: return y * (1.0 - y);
        case ActivationKind::softmax: break;
    }
    throw std::invalid_argument("softmax is not an elementwise activation");
}

Matrix apply(ActivationKind k, const Matrix& x) {
    return x.unaryExpr([k](double v) { return apply_scalar(k, v); });
}

Matrix derivative(ActivationKind k, const Matrix& x, const Matrix& y) {
    Matrix d(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.size(); ++i) d.data()[i] = derivative_scalar(k, x.data()[i], y.data()[i]);
    return d;
}

Matrix sigmoid_matrix(const Matrix& x) {
    return x.unaryExpr([](double v) { return sigmoid(v); });
}

// Rows b*T + t of a (batch, time, features) tensor for fixed t.
Matrix time_slice(const Tensor& x, std::size_t t) {
    const auto B = x.dim(0), T = x.dim(1), F = x.dim(2);
    Matrix out(static_cast<Eigen::Index>(B), static_cast<Eigen::Index>(F));
    const auto m = x.matrix(B * T, F);
    for (std::size_t b = 0; b < B; ++b) out.row(static_cast<Eigen::Index>(b)) = m.row(static_cast<Eigen::Index>(b * T + t));
    return out;
}

void add_time_slice(Tensor& x, std::size_t t, const Matrix& m) {
    const auto B = x.dim(0), T = x.dim(1), F = x.dim(2);
    auto dst = x.matrix(B * T, F);
    for (std::size_t b = 0; b < B; ++b) dst.row(static_cast<Eigen::Index>(b * T + t)) += m.row(static_cast<Eigen::Index>(b));
}

void softmax_rows(MatrixMap m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        auto row = m.row(r);
        const double mx = row.maxCoeff();
        row = (row.array() - mx).exp();
        row /= row.sum();
    }
}

}  // namespace

std::string_view to_string(ActivationKind a) noexcept {
    switch (a) {
        case ActivationKind::relu: return "relu";
        case ActivationKind::tanh: return "tanh";
        case ActivationKind::sigmoid: return "sigmoid";
        case ActivationKind::softmax: return "softmax";
    }
    return "relu";
}

ActivationKind parse_activation(std::string_view s) {
    if (s == "relu") return ActivationKind::relu;
    if (s == "tanh") return ActivationKind::tanh;
    if (s == "sigmoid") return ActivationKind::sigmoid;
    if (s == "softmax") return ActivationKind::softmax;
    throw std::invalid_argument("unknown activation '" + std::string(s) + "'");
}

double sigmoid(double x) noexcept {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Tensor activation(ActivationKind kind, const Tensor& x) {
    Tensor y = x;
    if (kind == ActivationKind::softmax) {
        if (x.rank() == 0 || x.cols() == 0) return y;
        softmax_rows(y.matrix());
        return y;
    }
    for (auto& v : y.data) v = apply_scalar(kind, v);
    return y;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
}

// ---------------------------------------------------------------------------
// LSTM and attention primitives

LstmWeights LstmWeights::zeros(std::size_t inputs, std::size_t units) {
    const auto in = static_cast<Eigen::Index>(inputs), u = static_cast<Eigen::Index>(units);
    LstmWeights w;
    for (Matrix* U : {&w.U_f, &w.U_i, &w.U_g, &w.U_o}) *U = Matrix::Zero(in, u);
    for (Matrix* W : {&w.W_f, &w.W_i, &w.W_g, &w.W_o}) *W = Matrix::Zero(u, u);
    for (RowVector* b : {&w.b_f, &w.b_i, &w.b_g, &w.b_o}) *b = RowVector::Zero(u);
    return w;
}

LstmState lstm_step(const LstmWeights& w, const Matrix& x, const Matrix& h_prev, const Matrix& c_prev,
                    ActivationKind cell_activation) {
    if (cell_activation == ActivationKind::softmax) throw std::invalid_argument("softmax cannot be an LSTM activation");
    const auto units = static_cast<Eigen::Index>(w.units());
    if (x.cols() != w.U_f.rows() || h_prev.cols() != units || c_prev.cols() != units || h_prev.rows() != x.rows() ||
        c_prev.rows() != x.rows())
        throw std::invalid_argument("lstm_step: inconsistent shapes");
    auto gate = [&](const Matrix& U, const Matrix& W, const RowVector& b) {
        Matrix z = x * U + h_prev * W;
        z.rowwise() += b;
        return z;
    };
    const Matrix f = sigmoid_matrix(gate(w.U_f, w.W_f, w.b_f));
    const Matrix i = sigmoid_matrix(gate(w.U_i, w.W_i, w.b_i));
    const Matrix g = apply(cell_activation, gate(w.U_g, w.W_g, w.b_g));
    const Matrix o = sigmoid_matrix(gate(w.U_o, w.W_o, w.b_o));
    LstmState s;
    s.c = f.cwiseProduct(c_prev) + i.cwiseProduct(g);
    s.h = apply(cell_activation, s.c).cwiseProduct(o);
    return s;
}

AttentionResult attention_context(const Matrix& h, const RowVector& s_prev, const Matrix& W_a, const Matrix& U_a,
                                  const Eigen::VectorXd& V_a) {
    if (h.rows() < 1) throw std::invalid_argument("attention needs at least one encoder state");
    if (W_a.rows() != h.cols() || U_a.rows() != s_prev.size() || W_a.cols() != U_a.cols() || V_a.size() != W_a.cols())
        throw std::invalid_argument("attention_context: inconsistent shapes");
    Matrix P = h * W_a;
    P.rowwise() += s_prev * U_a;
    AttentionResult r;
    r.scores = P.array().tanh().matrix() * V_a;
    const double mx = r.scores.maxCoeff();
    r.weights = (r.scores.array() - mx).exp();
    r.weights /= r.weights.sum();
    r.context = r.weights.transpose() * h;
    return r;
}

Tensor dimension_shuffle(const Tensor& x) {
    require_rank(x, 3, "dimension_shuffle");
    const auto B = x.dim(0), T = x.dim(1), V = x.dim(2);
    Tensor y({B, V, T});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t v = 0; v < V; ++v) y.data[(b * V + v) * T + t] = x.data[(b * T + t) * V + v];
    return y;
}

// ---------------------------------------------------------------------------
// Dense

Dense::Dense(std::string name, std::size_t in, std::size_t out, std::mt19937_64& rng, bool zero_init) {
    W_ = make_param(name + ".W", zero_init ? Tensor({in, out}) : glorot({in, out}, in, out, rng));
    b_ = make_param(name + ".b", Tensor({out}));
}

Tensor Dense::forward(const Tensor& x, bool training) {
    const auto in = W_.value.dim(0), out = W_.value.dim(1);
    if (x.rank() < 2 || x.cols() != in)
        throw std::invalid_argument("dense layer expects last dimension " + std::to_string(in) + ", got " +
                                    x.shape_string());
    auto shape = x.shape;
    shape.back() = out;
    Tensor y(shape);
    auto Y = y.matrix();
    Y.noalias() = x.matrix() * W_.value.matrix(in, out);
    Y.rowwise() += b_.value.matrix(1, out).row(0);
    if (training) input_ = x;
    return y;
}

Tensor Dense::backward(const Tensor& grad_out) {
    const auto in = W_.value.dim(0), out = W_.value.dim(1);
    const auto G = grad_out.matrix();
    const auto X = input_.matrix();
    W_.grad.matrix(in, out).noalias() += X.transpose() * G;
    b_.grad.matrix(1, out).row(0) += G.colwise().sum();
    Tensor dx(input_.shape);
    dx.matrix().noalias() = G * W_.value.matrix(in, out).transpose();
    return dx;
}

// ---------------------------------------------------------------------------
// Activation

Tensor Activation::forward(const Tensor& x, bool training) {
    Tensor y = activation(kind_, x);
    if (training) {
        input_ = x;
        output_ = y;
    }
    return y;
}

Tensor Activation::backward(const Tensor& grad_out) {
    Tensor dx(grad_out.shape);
    if (kind_ == ActivationKind::softmax) {
        const auto Y = output_.matrix();
        const auto G = grad_out.matrix();
        auto D = dx.matrix();
        for (Eigen::Index r = 0; r < Y.rows(); ++r) {
            const double dot = Y.row(r).dot(G.row(r));
            D.row(r) = Y.row(r).array() * (G.row(r).array() - dot);
        }
        return dx;
    }
    for (std::size_t i = 0; i < dx.size(); ++i)
        dx.data[i] = grad_out.data[i] * derivative_scalar(kind_, input_.data[i], output_.data[i]);
    return dx;
}

// ---------------------------------------------------------------------------
// LSTM layer

Lstm::Lstm(std::string name, std::size_t in, std::size_t units, ActivationKind cell_activation, bool return_sequences,
           std::mt19937_64& rng)
    : in_(in), units_(units), act_(cell_activation), return_sequences_(return_sequences) {
    if (cell_activation == ActivationKind::softmax) throw std::invalid_argument("softmax cannot be an LSTM activation");
    static constexpr const char* gates[] = {"f", "i", "g", "o"};
    for (int k = 0; k < 4; ++k) {
        U_[k] = make_param(name + ".U_" + gates[k], glorot({in, units}, in, units, rng));
        W_[k] = make_param(name + ".W_" + gates[k], glorot({units, units}, units, units, rng));
        b_[k] = make_param(name + ".b_" + gates[k], Tensor({units}, k == 0 ? 1.0 : 0.0));
    }
}

std::vector<Parameter*> Lstm::parameters() {
    std::vector<Parameter*> out;
    for (int k = 0; k < 4; ++k) {
        out.push_back(&U_[k]);
        out.push_back(&W_[k]);
        out.push_back(&b_[k]);
    }
    return out;
}

LstmWeights Lstm::weights() const {
    LstmWeights w;
    Matrix* U[] = {&w.U_f, &w.U_i, &w.U_g, &w.U_o};
    Matrix* W[] = {&w.W_f, &w.W_i, &w.W_g, &w.W_o};
    RowVector* b[] = {&w.b_f, &w.b_i, &w.b_g, &w.b_o};
    for (int k = 0; k < 4; ++k) {
        *U[k] = U_[k].value.matrix(in_, units_);
        *W[k] = W_[k].value.matrix(units_, units_);
        *b[k] = b_[k].value.matrix(1, units_).row(0);
    }
    return w;
}

Tensor Lstm::forward(const Tensor& x, bool training) {
    require_rank(x, 3, "lstm");
    if (x.dim(2) != in_) throw std::invalid_argument("lstm expects " + std::to_string(in_) + " inputs per step");
    const auto B = x.dim(0), T = x.dim(1);
    const auto Bi = static_cast<Eigen::Index>(B), Ui = static_cast<Eigen::Index>(units_);
    Matrix h = Matrix::Zero(Bi, Ui), c = Matrix::Zero(Bi, Ui);
    if (training) {
        batch_ = B;
        steps_ = T;
        for (auto* v : {&xs_, &f_, &i_, &g_, &o_, &gpre_, &ac_}) v->assign(T, Matrix());
        hs_.assign(T + 1, Matrix());
        cs_.assign(T + 1, Matrix());
        hs_[0] = h;
        cs_[0] = c;
    }
    Tensor y(return_sequences_ ? std::vector<std::size_t>{B, T, units_} : std::vector<std::size_t>{B, units_});
    for (std::size_t t = 0; t < T; ++t) {
        Matrix xt = time_slice(x, t);
        Matrix pre[4];
        for (int k = 0; k < 4; ++k) {
            pre[k].noalias() = xt * U_[k].value.matrix(in_, units_);
            pre[k].noalias() += h * W_[k].value.matrix(units_, units_);
            pre[k].rowwise() += b_[k].value.matrix(1, units_).row(0);
        }
        Matrix f = sigmoid_matrix(pre[0]);
        Matrix i = sigmoid_matrix(pre[1]);
        Matrix g = apply(act_, pre[2]);
        Matrix o = sigmoid_matrix(pre[3]);
        c = f.cwiseProduct(c) + i.cwiseProduct(g);
        Matrix ac = apply(act_, c);
        h = ac.cwiseProduct(o);
        if (return_sequences_) add_time_slice(y, t, h);
        if (training) {
            xs_[t] = std::move(xt);
            f_[t] = std::move(f);
            i_[t] = std::move(i);
            g_[t] = std::move(g);
            o_[t] = std::move(o);
            gpre_[t] = std::move(pre[2]);
            ac_[t] = std::move(ac);
            hs_[t + 1] = h;
            cs_[t + 1] = c;
        }
    }
    if (!return_sequences_) y.matrix() = h;
    return y;
}

Tensor Lstm::backward(const Tensor& grad_out) {
    const auto B = batch_, T = steps_;
    const auto Bi = static_cast<Eigen::Index>(B), Ui = static_cast<Eigen::Index>(units_);
    Tensor dx({B, T, in_});
    Matrix dh_next = Matrix::Zero(Bi, Ui), dc_next = Matrix::Zero(Bi, Ui);
    for (std::size_t t = T; t-- > 0;) {
        Matrix dh = dh_next;
        if (return_sequences_)
            dh += time_slice(grad_out, t);
        else if (t == T - 1)
            dh += grad_out.matrix(B, units_);
        const Matrix& c = cs_[t + 1];
        const Matrix d_o = dh.cwiseProduct(ac_[t]);
        const Matrix dc = dc_next + dh.cwiseProduct(o_[t]).cwiseProduct(derivative(act_, c, ac_[t]));
        Matrix dpre[4];
        dpre[0] = dc.cwiseProduct(cs_[t]).cwiseProduct(f_[t].cwiseProduct((1.0 - f_[t].array()).matrix()));
        dpre[1] = dc.cwiseProduct(g_[t]).cwiseProduct(i_[t].cwiseProduct((1.0 - i_[t].array()).matrix()));
        dpre[2] = dc.cwiseProduct(i_[t]).cwiseProduct(derivative(act_, gpre_[t], g_[t]));
        dpre[3] = d_o.cwiseProduct(o_[t].cwiseProduct((1.0 - o_[t].array()).matrix()));
        dc_next = dc.cwiseProduct(f_[t]);
        Matrix dxt = Matrix::Zero(Bi, static_cast<Eigen::Index>(in_));
        dh_next.setZero();
        for (int k = 0; k < 4; ++k) {
            U_[k].grad.matrix(in_, units_).noalias() += xs_[t].transpose() * dpre[k];
            W_[k].grad.matrix(units_, units_).noalias() += hs_[t].transpose() * dpre[k];
            b_[k].grad.matrix(1, units_).row(0) += dpre[k].colwise().sum();
            dxt.noalias() += dpre[k] * U_[k].value.matrix(in_, units_).transpose();
            dh_next.noalias() += dpre[k] * W_[k].value.matrix(units_, units_).transpose();
        }
        add_time_slice(dx, t, dxt);
    }
    return dx;
}

// ---------------------------------------------------------------------------
// Attention

Attention::Attention(std::string name, std::size_t units, std::mt19937_64& rng) : units_(units) {
    W_a_ = make_param(name + ".W_a", glorot({units, units}, units, units, rng));
    U_a_ = make_param(name + ".U_a", glorot({units, units}, units, units, rng));
    V_a_ = make_param(name + ".V_a", glorot({units}, units, 1, rng));
}

Tensor Attention::forward(const Tensor& x, bool training) {
    require_rank(x, 3, "attention");
    if (x.dim(2) != units_) throw std::invalid_argument("attention expects " + std::to_string(units_) + " features");
    const auto B = x.dim(0), M = x.dim(1);
    if (M == 0) throw std::invalid_argument("attention needs at least one encoder state");
    const auto W_a = W_a_.value.matrix(units_, units_);
    const auto U_a = U_a_.value.matrix(units_, units_);
    const Eigen::Map<const Eigen::VectorXd> V_a(V_a_.value.data.data(), static_cast<Eigen::Index>(units_));
    Tensor y({B, units_});
    auto Y = y.matrix();
    if (training) {
        input_ = x;
        alpha_.resize(static_cast<Eigen::Index>(B), static_cast<Eigen::Index>(M));
        tanh_.assign(B, Matrix());
    }
    const auto X = x.matrix(B * M, units_);
    for (std::size_t b = 0; b < B; ++b) {
        const Matrix H = X.middleRows(static_cast<Eigen::Index>(b * M), static_cast<Eigen::Index>(M));
        Matrix P = H * W_a;
        P.rowwise() += H.row(static_cast<Eigen::Index>(M - 1)) * U_a;
        Matrix Tn = P.array().tanh().matrix();
        Eigen::VectorXd e = Tn * V_a;
        Eigen::VectorXd alpha = (e.array() - e.maxCoeff()).exp();
        alpha /= alpha.sum();
        Y.row(static_cast<Eigen::Index>(b)) = alpha.transpose() * H;
        if (training) {
            alpha_.row(static_cast<Eigen::Index>(b)) = alpha.transpose();
            tanh_[b] = std::move(Tn);
        }
    }
    return y;
}

Tensor Attention::backward(const Tensor& grad_out) {
    const auto B = input_.dim(0), M = input_.dim(1);
    const auto Mi = static_cast<Eigen::Index>(M);
    const auto W_a = W_a_.value.matrix(units_, units_);
    const auto U_a = U_a_.value.matrix(units_, units_);
    const Eigen::Map<const Eigen::VectorXd> V_a(V_a_.value.data.data(), static_cast<Eigen::Index>(units_));
    auto dW_a = W_a_.grad.matrix(units_, units_);
    auto dU_a = U_a_.grad.matrix(units_, units_);
    Eigen::Map<Eigen::VectorXd> dV_a(V_a_.grad.data.data(), static_cast<Eigen::Index>(units_));
    Tensor dx(input_.shape);
    const auto X = input_.matrix(B * M, units_);
    auto DX = dx.matrix(B * M, units_);
    const auto G = grad_out.matrix(B, units_);
    for (std::size_t b = 0; b < B; ++b) {
        const auto bi = static_cast<Eigen::Index>(b);
        const Matrix H = X.middleRows(bi * Mi, Mi);
        const RowVector dc = G.row(bi);
        const Eigen::VectorXd alpha = alpha_.row(bi).transpose();
        const Matrix& Tn = tanh_[b];
        Matrix dH = alpha * dc;
        const Eigen::VectorXd dalpha = H * dc.transpose();
        const Eigen::VectorXd de = alpha.array() * (dalpha.array() - alpha.dot(dalpha));
        dV_a.noalias() += Tn.transpose() * de;
        const Matrix dP = (de * V_a.transpose()).cwiseProduct((1.0 - Tn.array().square()).matrix());
        dW_a.noalias() += H.transpose() * dP;
        dH.noalias() += dP * W_a.transpose();
        const RowVector dq = dP.colwise().sum();
        const RowVector s = H.row(Mi - 1);
        dU_a.noalias() += s.transpose() * dq;
        dH.row(Mi - 1).noalias() += dq * U_a.transpose();
        DX.middleRows(bi * Mi, Mi) = dH;
    }
    return dx;
}

// ---------------------------------------------------------------------------
// Conv1d

Conv1d::Conv1d(std::string name, std::size_t in, std::size_t filters, std::size_t kernel, bool use_bias,
               std::mt19937_64& rng)
    : in_(in), filters_(filters), kernel_(kernel), use_bias_(use_bias) {
    if (kernel == 0) throw std::invalid_argument("kernel size must be >= 1");
    W_ = make_param(name + ".W", glorot({kernel, in, filters}, kernel * in, kernel * filters, rng));
    if (use_bias) b_ = make_param(name + ".b", Tensor({filters}));
}

std::vector<Parameter*> Conv1d::parameters() {
    if (use_bias_) return {&W_, &b_};
    return {&W_};
}

Tensor Conv1d::forward(const Tensor& x, bool training) {
    require_rank(x, 3, "conv1d");
    if (x.dim(2) != in_) throw std::invalid_argument("conv1d expects " + std::to_string(in_) + " channels");
    const auto B = x.dim(0), T = x.dim(1);
    const auto Ti = static_cast<long>(T);
    const long pad_left = static_cast<long>(kernel_ - 1) / 2;
    Tensor y({B, T, filters_});
    auto Y = y.matrix(B * T, filters_);
    if (use_bias_) Y.rowwise() = b_.value.matrix(1, filters_).row(0);
    const auto X = x.matrix(B * T, in_);
    Matrix tap;
    for (std::size_t j = 0; j < kernel_; ++j) {
        const long s = static_cast<long>(j) - pad_left;
        if (s >= Ti || -s >= Ti) continue;
        const ConstMatrixMap Wj(W_.value.data.data() + j * in_ * filters_, static_cast<Eigen::Index>(in_),
                                static_cast<Eigen::Index>(filters_));
        tap.noalias() = X * Wj;
        if (s == 0) {
            Y += tap;
            continue;
        }
        const long t0 = std::max(0L, -s), len = std::min(Ti, Ti - s) - t0;
        for (std::size_t b = 0; b < B; ++b) {
            const long base = static_cast<long>(b) * Ti;
            Y.middleRows(base + t0, len) += tap.middleRows(base + t0 + s, len);
        }
    }
    if (training) input_ = x;
    return y;
}

Tensor Conv1d::backward(const Tensor& grad_out) {
    const auto B = input_.dim(0), T = input_.dim(1);
    const auto Ti = static_cast<long>(T);
    const long pad_left = static_cast<long>(kernel_ - 1) / 2;
    const auto G = grad_out.matrix(B * T, filters_);
    const auto X = input_.matrix(B * T, in_);
    Tensor dx(input_.shape);
    auto DX = dx.matrix(B * T, in_);
    if (use_bias_) b_.grad.matrix(1, filters_).row(0) += G.colwise().sum();
    Matrix shifted;
    for (std::size_t j = 0; j < kernel_; ++j) {
        const long s = static_cast<long>(j) - pad_left;
        if (s >= Ti || -s >= Ti) continue;
        const ConstMatrixMap Wj(W_.value.data.data() + j * in_ * filters_, static_cast<Eigen::Index>(in_),
                                static_cast<Eigen::Index>(filters_));
        MatrixMap dWj(W_.grad.data.data() + j * in_ * filters_, static_cast<Eigen::Index>(in_),
                      static_cast<Eigen::Index>(filters_));
        if (s == 0) {
            dWj.noalias() += X.transpose() * G;
            DX.noalias() += G * Wj.transpose();
            continue;
        }
        // shifted row (b, t + s) carries the output gradient at (b, t)
        shifted.setZero(G.rows(), G.cols());
        const long t0 = std::max(0L, -s), len = std::min(Ti, Ti - s) - t0;
        for (std::size_t b = 0; b < B; ++b) {
            const long base = static_cast<long>(b) * Ti;
            shifted.middleRows(base + t0 + s, len) = G.middleRows(base + t0, len);
        }
        dWj.noalias() += X.transpose() * shifted;
        DX.noalias() += shifted * Wj.transpose();
    }
    return dx;
}

// ---------------------------------------------------------------------------
// BatchNorm

BatchNorm::BatchNorm(std::string name, std::size_t features, double epsilon, double momentum)
    : eps_(epsilon), momentum_(momentum) {
    gamma_ = make_param(name + ".gamma", Tensor({features}, 1.0));
    beta_ = make_param(name + ".beta", Tensor({features}));
    mean_ = make_param(name + ".moving_mean", Tensor({features}), false);
    var_ = make_param(name + ".moving_variance", Tensor({features}, 1.0), false);
}

Tensor BatchNorm::forward(const Tensor& x, bool training) {
    const auto F = gamma_.value.size();
    if (x.rank() < 2 || x.cols() != F)
        throw std::invalid_argument("batch norm expects " + std::to_string(F) + " features, got " + x.shape_string());
    const auto X = x.matrix();
    const auto n = static_cast<double>(X.rows());
    const RowVector gamma = gamma_.value.matrix(1, F).row(0);
    const RowVector beta = beta_.value.matrix(1, F).row(0);
    auto rmean = mean_.value.matrix(1, F).row(0);
    auto rvar = var_.value.matrix(1, F).row(0);
    Tensor y(x.shape);
    auto Y = y.matrix();
    if (training) {
        const RowVector mu = X.colwise().sum() / n;
        Matrix centered = X.rowwise() - mu;
        const RowVector var = centered.array().square().colwise().sum() / n;
        inv_std_ = (var.array() + eps_).rsqrt();
        xhat_ = Tensor(x.shape);
        auto Xh = xhat_.matrix();
        Xh = centered.array().rowwise() * inv_std_.array();
        Y = (Xh.array().rowwise() * gamma.array()).rowwise() + beta.array();
        rmean = momentum_ * rmean + (1.0 - momentum_) * mu;
        rvar = momentum_ * rvar + (1.0 - momentum_) * var;
    } else {
        const RowVector inv = (rvar.array() + eps_).rsqrt();
        Y = (((X.rowwise() - RowVector(rmean)).array().rowwise() * (inv.array() * gamma.array())).rowwise() +
             beta.array());
    }
    return y;
}

Tensor BatchNorm::backward(const Tensor& grad_out) {
    const auto F = gamma_.value.size();
    const auto G = grad_out.matrix();
    const auto Xh = xhat_.matrix();
    const auto n = static_cast<double>(G.rows());
    const RowVector gamma = gamma_.value.matrix(1, F).row(0);
    gamma_.grad.matrix(1, F).row(0) += (G.array() * Xh.array()).colwise().sum().matrix();
    beta_.grad.matrix(1, F).row(0) += G.colwise().sum();
    const Matrix dxhat = G.array().rowwise() * gamma.array();
    const RowVector sum_d = dxhat.colwise().sum();
    const RowVector sum_dx = (dxhat.array() * Xh.array()).colwise().sum().matrix();
    Tensor dx(grad_out.shape);
    auto DX = dx.matrix();
    DX = ((n * dxhat.array()).rowwise() - sum_d.array() - (Xh.array().rowwise() * sum_dx.array())).rowwise() *
         (inv_std_.array() / n);
    return dx;
}

// ---------------------------------------------------------------------------
// Pooling, reshaping

Tensor MaxPool1d::forward(const Tensor& x, bool training) {
    require_rank(x, 3, "maxpool1d");
    const auto B = x.dim(0), T = x.dim(1), C = x.dim(2);
    const auto P = (T + 1) / 2;
    Tensor y({B, P, C});
    if (training) {
        input_shape_ = x.shape;
        argmax_.assign(y.size(), 0);
    }
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t p = 0; p < P; ++p)
            for (std::size_t c = 0; c < C; ++c) {
                std::size_t best = (b * T + 2 * p) * C + c;
                if (2 * p + 1 < T) {
                    const std::size_t other = (b * T + 2 * p + 1) * C + c;
                    if (x.data[other] > x.data[best]) best = other;
                }
                const std::size_t out = (b * P + p) * C + c;
                y.data[out] = x.data[best];
                if (training) argmax_[out] = best;
            }
    return y;
}

Tensor MaxPool1d::backward(const Tensor& grad_out) {
    Tensor dx(input_shape_);
    for (std::size_t i = 0; i < grad_out.size(); ++i) dx.data[argmax_[i]] += grad_out.data[i];
    return dx;
}

Tensor GlobalAvgPool1d::forward(const Tensor& x, bool training) {
    require_rank(x, 3, "global_avg_pool1d");
    const auto B = x.dim(0), T = x.dim(1), C = x.dim(2);
    Tensor y({B, C});
    const auto X = x.matrix(B * T, C);
    auto Y = y.matrix();
    for (std::size_t b = 0; b < B; ++b)
        Y.row(static_cast<Eigen::Index>(b)) =
            X.middleRows(static_cast<Eigen::Index>(b * T), static_cast<Eigen::Index>(T)).colwise().sum() /
            static_cast<double>(T);
    if (training) input_shape_ = x.shape;
    return y;
}

Tensor GlobalAvgPool1d::backward(const Tensor& grad_out) {
    const auto B = input_shape_[0], T = input_shape_[1], C = input_shape_[2];
    Tensor dx(input_shape_);
    auto DX = dx.matrix(B * T, C);
    const auto G = grad_out.matrix(B, C);
    for (std::size_t b = 0; b < B; ++b)
        DX.middleRows(static_cast<Eigen::Index>(b * T), static_cast<Eigen::Index>(T)).rowwise() =
            G.row(static_cast<Eigen::Index>(b)) / static_cast<double>(T);
    return dx;
}

Tensor Reshape::forward(const Tensor& x, bool training) {
    if (x.rank() < 1) throw std::invalid_argument("reshape needs a batch axis");
    std::vector<std::size_t> shape{x.dim(0)};
    shape.insert(shape.end(), sample_shape_.begin(), sample_shape_.end());
    if (product(shape) != x.size())
        throw std::invalid_argument("cannot reshape " + x.shape_string() + " to per-sample " +
                                    Tensor(sample_shape_).shape_string());
    if (training) input_shape_ = x.shape;
    return Tensor(std::move(shape), x.data);
}

Tensor Reshape::backward(const Tensor& grad_out) {
    return Tensor(input_shape_, grad_out.data);
}

Tensor DimensionShuffle::forward(const Tensor& x, bool) {
    return dimension_shuffle(x);
}

Tensor DimensionShuffle::backward(const Tensor& grad_out) {
    return dimension_shuffle(grad_out);
}

// ---------------------------------------------------------------------------
// Containers

Sequential::Sequential(const Sequential& other) {
    layers_.reserve(other.layers_.size());
    for (const auto& l : other.layers_) layers_.push_back(l->clone());
}

Sequential& Sequential::operator=(const Sequential& other) {
    if (this != &other) {
        Sequential copy(other);
        layers_ = std::move(copy.layers_);
    }
    return *this;
}

Tensor Sequential::forward(const Tensor& x, bool training) {
    Tensor h = x;
    for (auto& l : layers_) h = l->forward(h, training);
    return h;
}

Tensor Sequential::backward(const Tensor& grad_out) {
    Tensor g = grad_out;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
    return g;
}

std::vector<Parameter*> Sequential::parameters() {
    std::vector<Parameter*> out;
    for (auto& l : layers_) {
        auto p = l->parameters();
        out.insert(out.end(), p.begin(), p.end());
    }
    return out;
}

Tensor ParallelConcat::forward(const Tensor& x, bool training) {
    const Tensor a = left_.forward(x, training);
    const Tensor b = right_.forward(x, training);
    if (a.rank() != 2 || b.rank() != 2 || a.dim(0) != b.dim(0))
        throw std::invalid_argument("parallel branches must produce (batch, k) outputs");
    const auto B = a.dim(0), wa = a.dim(1), wb = b.dim(1);
    Tensor y({B, wa + wb});
    auto Y = y.matrix();
    Y.leftCols(static_cast<Eigen::Index>(wa)) = a.matrix();
    Y.rightCols(static_cast<Eigen::Index>(wb)) = b.matrix();
    left_width_ = wa;
    return y;
}

Tensor ParallelConcat::backward(const Tensor& grad_out) {
    const auto B = grad_out.dim(0), w = grad_out.dim(1);
    const auto wa = left_width_, wb = w - wa;
    const auto G = grad_out.matrix();
    Tensor ga({B, wa}), gb({B, wb});
    ga.matrix() = G.leftCols(static_cast<Eigen::Index>(wa));
    gb.matrix() = G.rightCols(static_cast<Eigen::Index>(wb));
    Tensor dx = left_.backward(ga);
    const Tensor dr = right_.backward(gb);
    for (std::size_t i = 0; i < dx.size(); ++i) dx.data[i] += dr.data[i];
    return dx;
}

std::vector<Parameter*> ParallelConcat::parameters() {
    auto out = left_.parameters();
    auto r = right_.parameters();
    out.insert(out.end(), r.begin(), r.end());
    return out;
}

}  // namespace cryptomove::nn
