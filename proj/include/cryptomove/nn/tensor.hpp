#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace cryptomove::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<Matrix>;
using ConstMatrixMap = Eigen::Map<const Matrix>;

/// Dense row-major tensor of doubles.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor from_matrix(const Matrix& m);

    std::size_t rank() const noexcept { return shape.size(); }
    std::size_t size() const noexcept { return data.size(); }
    std::size_t dim(std::size_t i) const { return shape.at(i); }

    /// Product of all dimensions but the last.
    std::size_t rows() const noexcept;
    std::size_t cols() const noexcept { return shape.empty() ? 0 : shape.back(); }

    /// View as a (rows × last-dimension) matrix.
    MatrixMap matrix();
    ConstMatrixMap matrix() const;
    /// View with an explicit 2-D shape; r * c must equal size().
    MatrixMap matrix(std::size_t r, std::size_t c);
    ConstMatrixMap matrix(std::size_t r, std::size_t c) const;

    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }
    double& at(std::initializer_list<std::size_t> index);
    double at(std::initializer_list<std::size_t> index) const;

    Tensor reshaped(std::vector<std::size_t> new_shape) const;
    bool all_finite() const noexcept;
    std::string shape_string() const;

    friend bool operator==(const Tensor&, const Tensor&) = default;
};

std::size_t product(const std::vector<std::size_t>& shape) noexcept;

}  // namespace cryptomove::nn
