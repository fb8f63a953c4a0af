#pragma once

#include <algorithm>
#include <cstddef>
#include <vector>

#include "r1als/errors.hpp"

namespace r1als {

/// Minimal dense row-major matrix. Factor matrices and two-mode contraction
/// matrices in this library are tiny, so no external backend is used.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), a_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
        : rows_(rows), cols_(cols), a_(std::move(values)) {
        if (a_.size() != rows_ * cols_)
            throw BadDims("Matrix: value count does not match shape");
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    [[nodiscard]] std::size_t rows() const { return rows_; }
    [[nodiscard]] std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

    [[nodiscard]] const std::vector<double>& data() const { return a_; }
    std::vector<double>& data() { return a_; }

    [[nodiscard]] std::vector<double> column(std::size_t j) const {
        std::vector<double> c(rows_);
        for (std::size_t i = 0; i < rows_; ++i) c[i] = a_[i * cols_ + j];
        return c;
    }

    void setColumn(std::size_t j, const std::vector<double>& c) {
        if (c.size() != rows_) throw DimMismatch("Matrix::setColumn: length mismatch");
        for (std::size_t i = 0; i < rows_; ++i) a_[i * cols_ + j] = c[i];
    }

    [[nodiscard]] Matrix transposed() const {
        Matrix t(cols_, rows_);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
        return t;
    }

    [[nodiscard]] std::vector<double> multiply(const std::vector<double>& x) const {
        if (x.size() != cols_) throw DimMismatch("Matrix::multiply: length mismatch");
        std::vector<double> y(rows_, 0.0);
        for (std::size_t i = 0; i < rows_; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < cols_; ++j) s += a_[i * cols_ + j] * x[j];
            y[i] = s;
        }
        return y;
    }

    [[nodiscard]] std::vector<double> multiplyTransposed(const std::vector<double>& x) const {
        if (x.size() != rows_) throw DimMismatch("Matrix::multiplyTransposed: length mismatch");
        std::vector<double> y(cols_, 0.0);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) y[j] += a_[i * cols_ + j] * x[i];
        return y;
    }

    [[nodiscard]] Matrix multiply(const Matrix& b) const {
        if (cols_ != b.rows()) throw DimMismatch("Matrix::multiply: shape mismatch");
        Matrix c(rows_, b.cols());
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t k = 0; k < cols_; ++k) {
                const double aik = (*this)(i, k);
                if (aik == 0.0) continue;
                for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
            }
        return c;
    }

    /// max_{i,j} |A_ij - B_ij|
    [[nodiscard]] double maxAbsDiff(const Matrix& b) const {
        if (rows_ != b.rows() || cols_ != b.cols())
            throw DimMismatch("Matrix::maxAbsDiff: shape mismatch");
        double m = 0.0;
        for (std::size_t i = 0; i < a_.size(); ++i) {
            const double d = a_[i] - b.data()[i];
            m = std::max(m, d < 0 ? -d : d);
        }
        return m;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> a_;
};

} // namespace r1als
