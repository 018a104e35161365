#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "posegen/errors.hpp"

namespace posegen {

/// Dense row-major matrix of reals. Vectors are 1xN or Nx1, scalars 1x1.
/// T is float (training default) or double (gradient-check mode).
template <typename T>
class Tensor {
public:
    Tensor() = default;
    Tensor(std::int64_t rows, std::int64_t cols, T fill = T(0))
        : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows * cols), fill) {}

    static Tensor scalar(T v) {
        Tensor t(1, 1);
        t.data_[0] = v;
        return t;
    }

    static Tensor from_rows(std::int64_t rows, std::int64_t cols, std::vector<T> values) {
        if (static_cast<std::int64_t>(values.size()) != rows * cols)
            throw ShapeMismatch("from_rows: " + std::to_string(values.size()) +
                                " values for " + std::to_string(rows) + "x" +
                                std::to_string(cols));
        Tensor t;
        t.rows_ = rows;
        t.cols_ = cols;
        t.data_ = std::move(values);
        return t;
    }

    std::int64_t rows() const { return rows_; }
    std::int64_t cols() const { return cols_; }
    std::int64_t size() const { return rows_ * cols_; }
    std::vector<std::int64_t> shape() const { return {rows_, cols_}; }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    T& operator()(std::int64_t i, std::int64_t j) { return data_[i * cols_ + j]; }
    T operator()(std::int64_t i, std::int64_t j) const { return data_[i * cols_ + j]; }
    T& operator[](std::int64_t k) { return data_[k]; }
    T operator[](std::int64_t k) const { return data_[k]; }

    bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    bool all_finite() const {
        for (const T& v : data_)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    std::string shape_str() const {
        return std::to_string(rows_) + "x" + std::to_string(cols_);
    }

private:
    std::int64_t rows_ = 0;
    std::int64_t cols_ = 0;
    std::vector<T> data_;
};

namespace detail {

/// C[m x n] += A[m x k] * B[k x n]
template <typename T>
void gemm_nn_acc(const T* __restrict__ a, const T* __restrict__ b, T* __restrict__ c,
                 std::int64_t m, std::int64_t k, std::int64_t n) {
    for (std::int64_t i = 0; i < m; ++i) {
        const T* arow = a + i * k;
        T* crow = c + i * n;
        for (std::int64_t p = 0; p < k; ++p) {
            const T av = arow[p];
            const T* brow = b + p * n;
            for (std::int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

/// C[m x k] += A[m x n] * B[k x n]^T  (rows of A dotted with rows of B)
template <typename T>
void gemm_nt_acc(const T* __restrict__ a, const T* __restrict__ b, T* __restrict__ c,
                 std::int64_t m, std::int64_t n, std::int64_t k) {
    for (std::int64_t i = 0; i < m; ++i) {
        const T* arow = a + i * n;
        T* crow = c + i * k;
        for (std::int64_t p = 0; p < k; ++p) {
            const T* brow = b + p * n;
            T acc = T(0);
            for (std::int64_t j = 0; j < n; ++j) acc += arow[j] * brow[j];
            crow[p] += acc;
        }
    }
}

/// C[k x n] += A[m x k]^T * B[m x n]
template <typename T>
void gemm_tn_acc(const T* __restrict__ a, const T* __restrict__ b, T* __restrict__ c,
                 std::int64_t m, std::int64_t k, std::int64_t n) {
    for (std::int64_t i = 0; i < m; ++i) {
        const T* arow = a + i * k;
        const T* brow = b + i * n;
        for (std::int64_t p = 0; p < k; ++p) {
            const T av = arow[p];
            T* crow = c + p * n;
            for (std::int64_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

}  // namespace detail

/// C = A * B, shapes checked.
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.cols() != b.rows())
        throw ShapeMismatch("matmul: " + a.shape_str() + " * " + b.shape_str());
    Tensor<T> c(a.rows(), b.cols());
    detail::gemm_nn_acc(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
    return c;
}

}  // namespace posegen
