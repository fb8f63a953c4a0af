#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "r1als/matrix.hpp"
#include "r1als/tensor.hpp"

namespace r1als {

namespace detail {

/// Multiply axis `axis` of a flat buffer by a matrix:
/// out[... i ...] = sum_t M(i, t) buf[... t ...]; dims[axis] becomes M.rows().
inline void modeMultiply(std::vector<double>& buf, std::vector<std::size_t>& dims,
                         std::size_t axis, const Matrix& m) {
    const std::size_t told = dims[axis];
    if (m.cols() != told) throw DimMismatch("modeMultiply: matrix shape mismatch");
    const std::size_t tnew = m.rows();
    std::size_t outer = 1, innerSz = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= dims[i];
    for (std::size_t i = axis + 1; i < dims.size(); ++i) innerSz *= dims[i];

    std::vector<double> out(outer * tnew * innerSz, 0.0);
    for (std::size_t o = 0; o < outer; ++o)
        for (std::size_t i = 0; i < tnew; ++i) {
            double* dst = out.data() + (o * tnew + i) * innerSz;
            for (std::size_t t = 0; t < told; ++t) {
                const double w = m(i, t);
                if (w == 0.0) continue;
                const double* src = buf.data() + (o * told + t) * innerSz;
                for (std::size_t k = 0; k < innerSz; ++k) dst[k] += w * src[k];
            }
        }
    buf = std::move(out);
    dims[axis] = tnew;
}

inline void checkUnitColumns(const Matrix& b, const char* what) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
        double n2 = 0.0;
        for (std::size_t i = 0; i < b.rows(); ++i) n2 += b(i, j) * b(i, j);
        if (std::abs(std::sqrt(n2) - 1.0) > 1e-12)
            throw BadDims(std::string(what) + ": factor column is not unit norm");
    }
}

inline void checkOrthonormalColumns(const Matrix& b, const char* what) {
    for (std::size_t j = 0; j < b.cols(); ++j)
        for (std::size_t k = j; k < b.cols(); ++k) {
            double s = 0.0;
            for (std::size_t i = 0; i < b.rows(); ++i) s += b(i, j) * b(i, k);
            const double want = (j == k) ? 1.0 : 0.0;
            if (std::abs(s - want) > 1e-12)
                throw BadDims(std::string(what) + ": factor columns are not orthonormal");
        }
}

} // namespace detail

// ---------------------------------------------------------------- CPTensor

/// Canonical polyadic representation: sum_j lambda_j b_{j1} (x) ... (x) b_{jd}
/// with unit-norm factor columns and weights sorted descending.
class CPTensor {
public:
    CPTensor(std::vector<double> weights, std::vector<Matrix> factors,
             bool orthonormalColumns = false)
        : weights_(std::move(weights)), factors_(std::move(factors)),
          orthonormalColumns_(orthonormalColumns) {
        if (factors_.size() < 2) throw BadDims("CPTensor: order must be at least 2");
        if (weights_.empty()) throw BadDims("CPTensor: empty weight list");
        for (std::size_t j = 0; j < weights_.size(); ++j) {
            if (weights_[j] < 0.0) throw NegativeLambda("CPTensor: negative weight");
            if (weights_[j] == 0.0) throw BadDims("CPTensor: zero weight");
            if (j > 0 && weights_[j] > weights_[j - 1] * (1.0 + 1e-15))
                throw BadDims("CPTensor: weights must be descending");
        }
        for (const auto& b : factors_) {
            if (b.cols() != weights_.size())
                throw BadDims("CPTensor: factor column count must equal rank");
            detail::checkUnitColumns(b, "CPTensor");
            if (orthonormalColumns_) detail::checkOrthonormalColumns(b, "CPTensor");
        }
    }

    [[nodiscard]] std::size_t order() const { return factors_.size(); }
    [[nodiscard]] std::size_t rank() const { return weights_.size(); }
    [[nodiscard]] const std::vector<double>& weights() const { return weights_; }
    [[nodiscard]] const Matrix& factor(std::size_t mu) const { return factors_.at(mu); }
    [[nodiscard]] bool orthonormalColumns() const { return orthonormalColumns_; }

    [[nodiscard]] std::vector<std::size_t> dims() const {
        std::vector<std::size_t> d(factors_.size());
        for (std::size_t mu = 0; mu < factors_.size(); ++mu) d[mu] = factors_[mu].rows();
        return d;
    }

    /// Term j as an (unweighted) rank-one representation.
    [[nodiscard]] RankOneRep term(std::size_t j) const {
        if (j >= rank()) throw OutOfRange("CPTensor::term: index out of range");
        std::vector<std::vector<double>> f(order());
        for (std::size_t mu = 0; mu < order(); ++mu) f[mu] = factors_[mu].column(j);
        return RankOneRep(std::move(f));
    }

private:
    std::vector<double> weights_;
    std::vector<Matrix> factors_;
    bool orthonormalColumns_;
};

[[nodiscard]] inline DenseTensor cp_to_dense(const CPTensor& cp) {
    DenseTensor out(cp.dims());
    for (std::size_t j = 0; j < cp.rank(); ++j) {
        const DenseTensor t = evaluate_rank_one(cp.term(j));
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += cp.weights()[j] * t[i];
    }
    return out;
}

/// Structured inner product: sum_{i,j} la_i mu_j prod_mu <a_{i mu}, b_{j mu}>.
[[nodiscard]] inline double inner(const CPTensor& a, const CPTensor& b) {
    if (a.dims() != b.dims()) throw DimMismatch("inner: CP shapes differ");
    double s = 0.0;
    for (std::size_t i = 0; i < a.rank(); ++i)
        for (std::size_t j = 0; j < b.rank(); ++j) {
            double prod = a.weights()[i] * b.weights()[j];
            for (std::size_t mu = 0; mu < a.order(); ++mu) {
                double dp = 0.0;
                const Matrix& fa = a.factor(mu);
                const Matrix& fb = b.factor(mu);
                for (std::size_t r = 0; r < fa.rows(); ++r) dp += fa(r, i) * fb(r, j);
                prod *= dp;
            }
            s += prod;
        }
    return s;
}

[[nodiscard]] inline double norm(const CPTensor& a) { return std::sqrt(inner(a, a)); }

// ---------------------------------------------------------------- TuckerTensor

/// Tucker representation: core (t_1 x ... x t_d) multiplied by orthonormal
/// basis matrices B_mu (n_mu x t_mu) on each mode.
class TuckerTensor {
public:
    TuckerTensor(DenseTensor core, std::vector<Matrix> factors)
        : core_(std::move(core)), factors_(std::move(factors)) {
        if (factors_.size() != core_.order())
            throw BadDims("TuckerTensor: one factor matrix per mode required");
        for (std::size_t mu = 0; mu < factors_.size(); ++mu) {
            if (factors_[mu].cols() != core_.dim(mu))
                throw BadDims("TuckerTensor: factor column count must match core dim");
            if (factors_[mu].cols() > factors_[mu].rows())
                throw RankTooLarge("TuckerTensor: core dim exceeds mode size");
            detail::checkOrthonormalColumns(factors_[mu], "TuckerTensor");
        }
    }

    [[nodiscard]] std::size_t order() const { return core_.order(); }
    [[nodiscard]] const DenseTensor& core() const { return core_; }
    [[nodiscard]] const Matrix& factor(std::size_t mu) const { return factors_.at(mu); }

    [[nodiscard]] std::vector<std::size_t> dims() const {
        std::vector<std::size_t> d(factors_.size());
        for (std::size_t mu = 0; mu < factors_.size(); ++mu) d[mu] = factors_[mu].rows();
        return d;
    }

private:
    DenseTensor core_;
    std::vector<Matrix> factors_;
};

[[nodiscard]] inline DenseTensor tucker_to_dense(const TuckerTensor& t) {
    std::vector<double> buf = t.core().values();
    std::vector<std::size_t> dims = t.core().dims();
    for (std::size_t mu = 0; mu < t.order(); ++mu)
        detail::modeMultiply(buf, dims, mu, t.factor(mu));
    return DenseTensor(dims, std::move(buf));
}

/// Structured inner product via the core Gramians:
/// <T1, T2> = <core1, core2 x_mu (B1_mu^T B2_mu)>.
[[nodiscard]] inline double inner(const TuckerTensor& a, const TuckerTensor& b) {
    if (a.dims() != b.dims()) throw DimMismatch("inner: Tucker shapes differ");
    std::vector<double> buf = b.core().values();
    std::vector<std::size_t> dims = b.core().dims();
    for (std::size_t mu = 0; mu < a.order(); ++mu) {
        const Matrix w = a.factor(mu).transposed().multiply(b.factor(mu));
        detail::modeMultiply(buf, dims, mu, w);
    }
    double s = 0.0;
    for (std::size_t i = 0; i < buf.size(); ++i) s += a.core().values()[i] * buf[i];
    return s;
}

[[nodiscard]] inline double norm(const TuckerTensor& a) { return std::sqrt(inner(a, a)); }

} // namespace r1als
