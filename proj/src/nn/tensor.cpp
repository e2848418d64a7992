#include "cryptomove/nn/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace cryptomove::nn {

std::size_t product(const std::vector<std::size_t>& shape) noexcept {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

Tensor::Tensor(std::vector<std::size_t> s, double fill) : shape(std::move(s)), data(product(shape), fill) {}

Tensor::Tensor(std::vector<std::size_t> s, std::vector<double> d) : shape(std::move(s)), data(std::move(d)) {
    if (product(shape) != data.size())
        throw std::invalid_argument("tensor shape " + shape_string() + " does not match " +
                                    std::to_string(data.size()) + " values");
}

Tensor Tensor::from_matrix(const Matrix& m) {
    Tensor t({static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
    MatrixMap(t.data.data(), m.rows(), m.cols()) = m;
    return t;
}

std::size_t Tensor::rows() const noexcept {
    if (shape.empty()) return 0;
    std::size_t n = 1;
    for (std::size_t i = 0; i + 1 < shape.size(); ++i) n *= shape[i];
    return n;
}

MatrixMap Tensor::matrix() {
    return {data.data(), static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(cols())};
}

ConstMatrixMap Tensor::matrix() const {
    return {data.data(), static_cast<Eigen::Index>(rows()), static_cast<Eigen::Index>(cols())};
}

MatrixMap Tensor::matrix(std::size_t r, std::size_t c) {
    if (r * c != size()) throw std::invalid_argument("matrix view does not cover tensor " + shape_string());
    return {data.data(), static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)};
}

ConstMatrixMap Tensor::matrix(std::size_t r, std::size_t c) const {
    if (r * c != size()) throw std::invalid_argument("matrix view does not cover tensor " + shape_string());
    return {data.data(), static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)};
}

namespace {

std::size_t flat_index(const std::vector<std::size_t>& shape, std::initializer_list<std::size_t> index) {
    if (index.size() != shape.size()) throw std::invalid_argument("index rank differs from tensor rank");
    std::size_t flat = 0, k = 0;
    for (auto i : index) {
        if (i >= shape[k]) throw std::out_of_range("tensor index out of range");
        flat = flat * shape[k] + i;
        ++k;
    }
    return flat;
}

}  // namespace

double& Tensor::at(std::initializer_list<std::size_t> index) {
    return data[flat_index(shape, index)];
}

double Tensor::at(std::initializer_list<std::size_t> index) const {
    return data[flat_index(shape, index)];
}

Tensor Tensor::reshaped(std::vector<std::size_t> new_shape) const {
    return Tensor(std::move(new_shape), data);
}

bool Tensor::all_finite() const noexcept {
    for (double v : data)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string Tensor::shape_string() const {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ", ";
        s += std::to_string(shape[i]);
    }
    return s + ")";
}

}  // namespace cryptomove::nn
