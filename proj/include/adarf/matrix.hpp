#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace adarf {

// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_) throw std::invalid_argument("Matrix: data size mismatch");
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return rows_ == 0; }

    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }
    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }

    std::span<const double> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }
    std::span<double> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }

    void append_row(std::span<const double> values) {
        if (values.size() != cols_) throw std::invalid_argument("Matrix: row arity mismatch");
        data_.insert(data_.end(), values.begin(), values.end());
        ++rows_;
    }

    void reserve_rows(std::size_t n) { data_.reserve(n * cols_); }

    const std::vector<double>& values() const noexcept { return data_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

}  // namespace adarf
