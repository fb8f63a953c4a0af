#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <vector>

#include "r1als/errors.hpp"
#include "r1als/matrix.hpp"

namespace r1als {

/// Thin singular value decomposition a = u * diag(sigma) * v^T.
/// u is m x min(m,n), v is n x min(m,n), sigma descending.
struct SVDResult {
    Matrix u{1, 1};
    std::vector<double> sigma;
    Matrix v{1, 1};
};

namespace detail {

/// One-sided Jacobi on the columns of a (m x n with m >= n): rotate column
/// pairs until mutually orthogonal, accumulating the rotations into v.
inline void jacobiColumns(Matrix& a, Matrix& v, std::size_t maxSweeps = 60) {
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();
    const double tol = 1e-15;
    for (std::size_t sweep = 0; sweep < maxSweeps; ++sweep) {
        bool rotated = false;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double app = 0.0, aqq = 0.0, apq = 0.0;
                for (std::size_t i = 0; i < m; ++i) {
                    app += a(i, p) * a(i, p);
                    aqq += a(i, q) * a(i, q);
                    apq += a(i, p) * a(i, q);
                }
                if (std::abs(apq) <= tol * std::sqrt(app * aqq)) continue;
                rotated = true;
                const double zeta = (aqq - app) / (2.0 * apq);
                const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                for (std::size_t i = 0; i < m; ++i) {
                    const double x = a(i, p);
                    const double y = a(i, q);
                    a(i, p) = c * x - s * y;
                    a(i, q) = s * x + c * y;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const double x = v(i, p);
                    const double y = v(i, q);
                    v(i, p) = c * x - s * y;
                    v(i, q) = s * x + c * y;
                }
            }
        }
        if (!rotated) return;
    }
}

} // namespace detail

/// Singular value decomposition via one-sided Jacobi rotations.
/// Columns of u belonging to zero singular values are left as zero vectors.
[[nodiscard]] inline SVDResult svd_jacobi(const Matrix& input) {
    const bool flip = input.rows() < input.cols();
    Matrix a = flip ? input.transposed() : input;
    const std::size_t m = a.rows();
    const std::size_t n = a.cols();

    Matrix v = Matrix::identity(n);
    detail::jacobiColumns(a, v);

    std::vector<double> sigma(n);
    Matrix u(m, n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        double s2 = 0.0;
        for (std::size_t i = 0; i < m; ++i) s2 += a(i, j) * a(i, j);
        sigma[j] = std::sqrt(s2);
        if (sigma[j] > 0.0)
            for (std::size_t i = 0; i < m; ++i) u(i, j) = a(i, j) / sigma[j];
    }

    // sort descending, permuting the columns of u and v alongside
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::sort(perm.begin(), perm.end(),
              [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

    SVDResult out;
    out.sigma.resize(n);
    out.u = Matrix(m, n, 0.0);
    out.v = Matrix(n, n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        out.sigma[j] = sigma[perm[j]];
        out.u.setColumn(j, u.column(perm[j]));
        out.v.setColumn(j, v.column(perm[j]));
    }
    if (flip) std::swap(out.u, out.v);
    return out;
}

} // namespace r1als
