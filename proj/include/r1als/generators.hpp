#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "r1als/rng.hpp"
#include "r1als/structured.hpp"

namespace r1als {

// ---------------------------------------------------------------- random raw

/// Dense tensor with i.i.d. uniform entries in [-1, 1].
[[nodiscard]] inline DenseTensor gen_random_dense(const std::vector<std::size_t>& dims,
                                                  std::uint64_t seed) {
    Xorshift64Star rng(seed);
    std::size_t total = 1;
    for (std::size_t n : dims) total *= n;
    return DenseTensor(dims, rng.uniformSymVector(total));
}

/// Rank-one representation with i.i.d. uniform factor entries in [-1, 1].
[[nodiscard]] inline RankOneRep gen_random_rank_one(const std::vector<std::size_t>& dims,
                                                    std::uint64_t seed) {
    Xorshift64Star rng(seed);
    std::vector<std::vector<double>> factors;
    for (std::size_t n : dims) factors.push_back(rng.uniformSymVector(n));
    return RankOneRep(std::move(factors));
}

namespace detail {

/// n x r matrix with orthonormal columns by modified Gram-Schmidt on random
/// input; columns that project away are redrawn.
[[nodiscard]] inline Matrix randomOrthonormal(std::size_t n, std::size_t r, Xorshift64Star& rng) {
    if (r > n) throw RankTooLarge("randomOrthonormal: more columns than rows");
    Matrix q(n, r, 0.0);
    for (std::size_t j = 0; j < r; ++j) {
        for (int attempt = 0;; ++attempt) {
            std::vector<double> c = rng.uniformSymVector(n);
            for (std::size_t k = 0; k < j; ++k) {
                const std::vector<double> prev = q.column(k);
                const double dp = inner(c, prev);
                for (std::size_t i = 0; i < n; ++i) c[i] -= dp * prev[i];
            }
            const double nm = norm(c);
            if (nm > 1e-8) {
                for (double& x : c) x /= nm;
                q.setColumn(j, c);
                break;
            }
            if (attempt > 64) throw Error("randomOrthonormal: could not draw independent column");
        }
    }
    return q;
}

} // namespace detail

// ---------------------------------------------------------------- named instances

/// The 2x2x2 benchmark with weights (2, 1) on the two axis-aligned rank-one
/// terms: 2 e1(x)e1(x)e1 + e2(x)e2(x)e2.
[[nodiscard]] inline CPTensor gen_mohlenkamp() {
    Matrix id = Matrix::identity(2);
    return CPTensor({2.0, 1.0}, {id, id, id}, /*orthonormalColumns=*/true);
}

/// Symmetric starting guess (tau, 1)^(x)3 for runs on the 2x2x2 benchmark.
[[nodiscard]] inline RankOneRep gen_initial_tau(double tau) {
    std::vector<double> f{tau, 1.0};
    return RankOneRep({f, f, f});
}

// ---------------------------------------------------------------- one-parameter family

/// Symmetric one-parameter family around a unit direction p with transverse
/// unit direction q:  p^(x)d + t * sum_mu (q,...,q,p,q,...,q)  (p in slot mu).
struct BLambdaInstance {
    CPTensor cp;
    std::vector<double> p;
    std::vector<double> q;
    std::size_t pTermIndex = 0; ///< index of the pure-p term among the CP terms
};

[[nodiscard]] inline BLambdaInstance gen_b_lambda(double t, std::size_t d, std::size_t n,
                                                  std::uint64_t seed) {
    if (t < 0.0) throw NegativeLambda("gen_b_lambda: parameter must be nonnegative");
    if (d < 3) throw OrderTooSmall("gen_b_lambda: needs order d >= 3");
    if (n < 2) throw BadDims("gen_b_lambda: needs mode dimension n >= 2");

    Xorshift64Star rng(seed);
    const Matrix pq = detail::randomOrthonormal(n, 2, rng);
    const std::vector<double> p = pq.column(0);
    const std::vector<double> q = pq.column(1);

    // one pure-p term, then (for t > 0) d mixed terms with p in one slot each
    std::vector<std::vector<std::size_t>> pattern; // per term: slot carrying p
    std::vector<double> weights{1.0};
    pattern.push_back({});
    if (t > 0.0) {
        for (std::size_t mu = 0; mu < d; ++mu) {
            weights.push_back(t);
            pattern.push_back({mu});
        }
    }

    // CP weights must be descending; for t > 1 the mixed terms come first
    std::vector<std::size_t> order(weights.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return weights[a] > weights[b]; });

    std::size_t pIndex = 0;
    std::vector<double> w(order.size());
    std::vector<Matrix> factors(d, Matrix(n, order.size(), 0.0));
    for (std::size_t col = 0; col < order.size(); ++col) {
        const std::size_t src = order[col];
        w[col] = weights[src];
        if (src == 0) pIndex = col;
        for (std::size_t mu = 0; mu < d; ++mu) {
            const bool usesP = (src == 0) || (pattern[src].front() == mu);
            factors[mu].setColumn(col, usesP ? p : q);
        }
    }
    return {CPTensor(std::move(w), std::move(factors)), p, q, pIndex};
}

// ---------------------------------------------------------------- orthogonal CP

/// Random CP decomposition with orthonormal factor columns in every mode and
/// descending weights drawn from [1, 2].
[[nodiscard]] inline CPTensor gen_orthogonal_cp(const std::vector<std::size_t>& dims, std::size_t r,
                                                std::uint64_t seed) {
    if (dims.size() < 2) throw BadDims("gen_orthogonal_cp: order must be at least 2");
    if (r == 0) throw BadDims("gen_orthogonal_cp: rank must be positive");
    Xorshift64Star rng(seed);
    std::vector<double> weights(r);
    for (double& w : weights) w = 1.0 + rng.uniform01();
    std::sort(weights.begin(), weights.end(), std::greater<>());
    std::vector<Matrix> factors;
    for (std::size_t n : dims) factors.push_back(detail::randomOrthonormal(n, r, rng));
    return CPTensor(std::move(weights), std::move(factors), /*orthonormalColumns=*/true);
}

// ---------------------------------------------------------------- ordering example

/// Two-term 2x2x2 instance whose update ordering selects the limit:
/// b = e1^(x)3 + t e2^(x)3 with starting factors (1, alpha_mu).
struct OrderingInstance {
    CPTensor cp;
    RankOneRep init;
    double fTerm1 = 0.0; ///< objective value at the heavier axis term
    double fTerm2 = 0.0; ///< objective value at the lighter axis term
    double gap = 0.0;    ///< fTerm2 - fTerm1 = (1 - t^2) / (2 (1 + t^2))
};

/// The start (1, 1) (x) (1, alpha2) (x) (1, alpha3) bifurcates: update order
/// 1,2,3 converges to the heavier term, order 1,3,2 to the lighter one.
/// That requires  alpha2^3 alpha3^2 >= t^-5 >= alpha2^2 alpha3^3,
/// otherwise ConstraintViolated.
[[nodiscard]] inline OrderingInstance gen_ordering_example(double t, double alpha2,
                                                           double alpha3) {
    if (!(t > 0.0 && t < 1.0)) throw OutOfRange("gen_ordering_example: need 0 < t < 1");
    if (!(alpha2 > 0.0 && alpha3 > 0.0))
        throw OutOfRange("gen_ordering_example: alphas must be positive");
    const double bound = std::pow(t, -5.0);
    const double left = alpha2 * alpha2 * alpha2 * alpha3 * alpha3;
    const double right = alpha2 * alpha2 * alpha3 * alpha3 * alpha3;
    if (!(left >= bound && bound >= right))
        throw ConstraintViolated("gen_ordering_example: need alpha2^3 alpha3^2 >= t^-5 >= "
                                 "alpha2^2 alpha3^3");

    Matrix id = Matrix::identity(2);
    CPTensor cp({1.0, t}, {id, id, id}, /*orthonormalColumns=*/true);
    RankOneRep init({{1.0, 1.0}, {1.0, alpha2}, {1.0, alpha3}});
    const double nrm2 = 1.0 + t * t;
    return {std::move(cp), std::move(init), -1.0 / (2.0 * nrm2), -(t * t) / (2.0 * nrm2),
            (1.0 - t * t) / (2.0 * nrm2)};
}

// ---------------------------------------------------------------- order-4 synthetic

/// Random order-4 subspace-structured tensor (3,3,3,3 ambient, 2,2,2,2 core)
/// with orthonormal mode bases.
[[nodiscard]] inline TuckerTensor gen_synthetic_order4(std::uint64_t seed) {
    Xorshift64Star rng(seed);
    std::vector<Matrix> bases;
    for (std::size_t mu = 0; mu < 4; ++mu) bases.push_back(detail::randomOrthonormal(3, 2, rng));
    DenseTensor core({2, 2, 2, 2}, rng.uniformSymVector(16));
    return TuckerTensor(std::move(core), std::move(bases));
}

} // namespace r1als
