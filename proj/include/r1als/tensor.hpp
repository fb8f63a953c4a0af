#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "r1als/errors.hpp"
#include "r1als/matrix.hpp"

namespace r1als {

// ---------------------------------------------------------------- vectors

[[nodiscard]] inline double inner(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw DimMismatch("inner: vector lengths differ");
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
    return s;
}

[[nodiscard]] inline double norm(const std::vector<double>& x) { return std::sqrt(inner(x, x)); }

// ---------------------------------------------------------------- DenseTensor

/// Dense tensor of order d >= 2. Values are stored flat in lexicographic
/// order with the LAST index fastest.
class DenseTensor {
public:
    explicit DenseTensor(std::vector<std::size_t> dims)
        : dims_(std::move(dims)), values_(checkedSize(dims_), 0.0) {}

    DenseTensor(std::vector<std::size_t> dims, std::vector<double> values)
        : dims_(std::move(dims)), values_(std::move(values)) {
        if (values_.size() != checkedSize(dims_))
            throw BadDims("DenseTensor: value count does not match dims");
    }

    [[nodiscard]] std::size_t order() const { return dims_.size(); }
    [[nodiscard]] std::size_t dim(std::size_t mu) const { return dims_.at(mu); }
    [[nodiscard]] const std::vector<std::size_t>& dims() const { return dims_; }
    [[nodiscard]] std::size_t size() const { return values_.size(); }

    double& operator[](std::size_t flat) { return values_[flat]; }
    double operator[](std::size_t flat) const { return values_[flat]; }

    [[nodiscard]] std::size_t flatIndex(const std::vector<std::size_t>& idx) const {
        if (idx.size() != dims_.size()) throw DimMismatch("flatIndex: wrong index length");
        std::size_t f = 0;
        for (std::size_t mu = 0; mu < dims_.size(); ++mu) {
            if (idx[mu] >= dims_[mu]) throw OutOfRange("flatIndex: index out of range");
            f = f * dims_[mu] + idx[mu];
        }
        return f;
    }

    double& at(const std::vector<std::size_t>& idx) { return values_[flatIndex(idx)]; }
    double at(const std::vector<std::size_t>& idx) const { return values_[flatIndex(idx)]; }

    [[nodiscard]] const std::vector<double>& values() const { return values_; }
    std::vector<double>& values() { return values_; }

    [[nodiscard]] bool sameShape(const DenseTensor& o) const { return dims_ == o.dims_; }

private:
    static std::size_t checkedSize(const std::vector<std::size_t>& dims) {
        if (dims.size() < 2) throw BadDims("DenseTensor: order must be at least 2");
        std::size_t n = 1;
        for (std::size_t d : dims) {
            if (d == 0) throw BadDims("DenseTensor: zero-length mode");
            n *= d;
        }
        return n;
    }

    std::vector<std::size_t> dims_;
    std::vector<double> values_;
};

[[nodiscard]] inline double inner(const DenseTensor& a, const DenseTensor& b) {
    if (!a.sameShape(b)) throw DimMismatch("inner: tensor shapes differ");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

[[nodiscard]] inline double norm(const DenseTensor& a) { return std::sqrt(inner(a, a)); }

[[nodiscard]] inline DenseTensor subtract(const DenseTensor& a, const DenseTensor& b) {
    if (!a.sameShape(b)) throw DimMismatch("subtract: tensor shapes differ");
    DenseTensor r = a;
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
    return r;
}

[[nodiscard]] inline DenseTensor add(const DenseTensor& a, const DenseTensor& b) {
    if (!a.sameShape(b)) throw DimMismatch("add: tensor shapes differ");
    DenseTensor r = a;
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += b[i];
    return r;
}

[[nodiscard]] inline DenseTensor scale(double s, const DenseTensor& a) {
    DenseTensor r = a;
    for (std::size_t i = 0; i < r.size(); ++i) r[i] *= s;
    return r;
}

// ---------------------------------------------------------------- RankOneRep

/// Factor representation p_1 (x) ... (x) p_d of a rank-one tensor.
/// No factor may be the zero vector.
class RankOneRep {
public:
    explicit RankOneRep(std::vector<std::vector<double>> factors)
        : factors_(std::move(factors)) {
        if (factors_.size() < 2) throw BadDims("RankOneRep: order must be at least 2");
        for (const auto& f : factors_) {
            if (f.empty()) throw BadDims("RankOneRep: empty factor");
            if (norm(f) == 0.0) throw DegenerateFactor("RankOneRep: zero factor");
        }
    }

    [[nodiscard]] std::size_t order() const { return factors_.size(); }
    [[nodiscard]] const std::vector<double>& factor(std::size_t mu) const { return factors_.at(mu); }
    [[nodiscard]] const std::vector<std::vector<double>>& factors() const { return factors_; }

    void setFactor(std::size_t mu, std::vector<double> f) {
        if (f.size() != factors_.at(mu).size()) throw DimMismatch("setFactor: length mismatch");
        if (norm(f) == 0.0) throw DegenerateFactor("setFactor: zero factor");
        factors_[mu] = std::move(f);
    }

    [[nodiscard]] std::vector<std::size_t> dims() const {
        std::vector<std::size_t> d(factors_.size());
        for (std::size_t mu = 0; mu < factors_.size(); ++mu) d[mu] = factors_[mu].size();
        return d;
    }

    /// prod_mu ||p_mu|| (equals the norm of the represented tensor).
    [[nodiscard]] double normProduct() const {
        double g = 1.0;
        for (const auto& f : factors_) g *= norm(f);
        return g;
    }

private:
    std::vector<std::vector<double>> factors_;
};

/// Densify p_1 (x) ... (x) p_d by an iterative Kronecker build.
[[nodiscard]] inline DenseTensor evaluate_rank_one(const RankOneRep& p) {
    std::vector<double> acc{1.0};
    for (std::size_t mu = 0; mu < p.order(); ++mu) {
        const auto& f = p.factor(mu);
        std::vector<double> next(acc.size() * f.size());
        std::size_t k = 0;
        for (double a : acc)
            for (double x : f) next[k++] = a * x;
        acc = std::move(next);
    }
    return DenseTensor(p.dims(), std::move(acc));
}

// ---------------------------------------------------------------- objectives

/// f(v) = (1/||b||^2) (0.5 <v,v> - <b,v>).  Bounded below by -1/2.
[[nodiscard]] inline double objective_f(const DenseTensor& v, const DenseTensor& b) {
    const double b2 = inner(b, b);
    if (b2 == 0.0) throw ZeroTarget("objective_f: target tensor is zero");
    return (0.5 * inner(v, v) - inner(b, v)) / b2;
}

/// Unnormalized objective 0.5 <v,v> - <b,v>.
[[nodiscard]] inline double raw_objective(const DenseTensor& v, const DenseTensor& b) {
    if (!v.sameShape(b)) throw DimMismatch("raw_objective: tensor shapes differ");
    return 0.5 * inner(v, v) - inner(b, v);
}

// ---------------------------------------------------------------- contractions

namespace detail {

/// Contract one axis of a flat buffer with a vector; dims is updated in place.
inline void contractAxis(std::vector<double>& buf, std::vector<std::size_t>& dims,
                         std::size_t axis, const std::vector<double>& v) {
    const std::size_t m = dims[axis];
    if (v.size() != m) throw DimMismatch("contractAxis: vector length mismatch");
    std::size_t outer = 1, innerSz = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= dims[i];
    for (std::size_t i = axis + 1; i < dims.size(); ++i) innerSz *= dims[i];

    std::vector<double> out(outer * innerSz, 0.0);
    for (std::size_t o = 0; o < outer; ++o) {
        const std::size_t base = o * m * innerSz;
        for (std::size_t t = 0; t < m; ++t) {
            const double w = v[t];
            if (w == 0.0) continue;
            const double* src = buf.data() + base + t * innerSz;
            double* dst = out.data() + o * innerSz;
            for (std::size_t i = 0; i < innerSz; ++i) dst[i] += w * src[i];
        }
    }
    buf = std::move(out);
    dims.erase(dims.begin() + static_cast<std::ptrdiff_t>(axis));
}

/// Contract every mode that has a vector attached (null entries keep the
/// mode). Returns the flat buffer over the kept modes, in mode order.
/// Modes are processed from last to first, so the axis position of mode
/// `step` in the shrinking dims list is always `step` itself.
inline std::vector<double> contractExcept(const DenseTensor& b,
                                          const std::vector<const std::vector<double>*>& vecs,
                                          std::vector<std::size_t>& keptDims) {
    if (vecs.size() != b.order()) throw DimMismatch("contractExcept: one entry per mode required");
    std::vector<double> buf = b.values();
    std::vector<std::size_t> dims = b.dims();
    for (std::size_t step = b.order(); step-- > 0;)
        if (vecs[step] != nullptr) contractAxis(buf, dims, step, *vecs[step]);
    keptDims = std::move(dims);
    return buf;
}

} // namespace detail

/// Contraction of b with all factor vectors except mode mu:
///   w[i] = sum over the other indices of b * prod_{nu != mu} p_nu[i_nu].
/// With `normalized` set, each fixed factor enters as p_nu / ||p_nu||^2,
/// which is exactly the micro-step direction map.
[[nodiscard]] inline std::vector<double> contract_all_but_one(
    const DenseTensor& b, const std::vector<std::vector<double>>& factors,
    std::size_t mu, bool normalized) {
    const std::size_t d = b.order();
    if (factors.size() != d) throw DimMismatch("contract_all_but_one: wrong factor count");
    if (mu >= d) throw OutOfRange("contract_all_but_one: mode out of range");

    std::vector<std::vector<double>> scaled;
    std::vector<const std::vector<double>*> vecs(d, nullptr);
    scaled.reserve(d);
    for (std::size_t nu = 0; nu < d; ++nu) {
        if (nu == mu) continue;
        if (factors[nu].size() != b.dim(nu))
            throw DimMismatch("contract_all_but_one: factor length mismatch");
        if (normalized) {
            const double n2 = inner(factors[nu], factors[nu]);
            if (n2 == 0.0) throw DegenerateFactor("contract_all_but_one: zero fixed factor");
            auto& s = scaled.emplace_back(factors[nu]);
            for (double& x : s) x /= n2;
            vecs[nu] = &s;
        } else {
            vecs[nu] = &factors[nu];
        }
    }
    std::vector<std::size_t> kept;
    return detail::contractExcept(b, vecs, kept);
}

/// Two-mode contraction matrix M of shape n_mu x n_nu:
///   (M g)[i_mu] = sum b * g[i_nu] * prod_{xi not in {nu,mu}} partial[xi][i_xi].
/// Entries of `partial` at positions nu and mu are ignored.
[[nodiscard]] inline Matrix contraction_matrix(const DenseTensor& b,
                                               const std::vector<std::vector<double>>& partial,
                                               std::size_t nu, std::size_t mu) {
    const std::size_t d = b.order();
    if (partial.size() != d) throw DimMismatch("contraction_matrix: wrong factor count");
    if (nu >= d || mu >= d) throw OutOfRange("contraction_matrix: mode out of range");
    if (nu == mu) throw OutOfRange("contraction_matrix: modes must differ");

    std::vector<const std::vector<double>*> vecs(d, nullptr);
    for (std::size_t xi = 0; xi < d; ++xi) {
        if (xi == nu || xi == mu) continue;
        if (partial[xi].size() != b.dim(xi))
            throw DimMismatch("contraction_matrix: factor length mismatch");
        vecs[xi] = &partial[xi];
    }
    std::vector<std::size_t> kept;
    std::vector<double> buf = detail::contractExcept(b, vecs, kept);

    const std::size_t nMu = b.dim(mu), nNu = b.dim(nu);
    Matrix m(nMu, nNu);
    if (nu < mu) {
        // kept order is (nu, mu): buf[iNu * nMu + iMu]
        for (std::size_t iMu = 0; iMu < nMu; ++iMu)
            for (std::size_t iNu = 0; iNu < nNu; ++iNu) m(iMu, iNu) = buf[iNu * nMu + iMu];
    } else {
        // kept order is (mu, nu): buf[iMu * nNu + iNu]
        for (std::size_t iMu = 0; iMu < nMu; ++iMu)
            for (std::size_t iNu = 0; iNu < nNu; ++iNu) m(iMu, iNu) = buf[iMu * nNu + iNu];
    }
    return m;
}

/// Apply the rank-one projector (x)_{nu != skip} phat_nu phat_nu^T (x) Id to t,
/// mode by mode; the projector matrix is never materialized.
[[nodiscard]] inline DenseTensor project_onto_factors(const DenseTensor& t,
                                                      const std::vector<std::vector<double>>& factors,
                                                      std::size_t skip) {
    const std::size_t d = t.order();
    if (factors.size() != d) throw DimMismatch("project_onto_factors: wrong factor count");
    if (skip >= d) throw OutOfRange("project_onto_factors: mode out of range");

    std::vector<double> buf = t.values();
    const auto& dims = t.dims();
    for (std::size_t nu = 0; nu < d; ++nu) {
        if (nu == skip) continue;
        const auto& p = factors[nu];
        if (p.size() != dims[nu]) throw DimMismatch("project_onto_factors: factor length mismatch");
        const double n2 = inner(p, p);
        if (n2 == 0.0) throw DegenerateFactor("project_onto_factors: zero factor");

        const std::size_t m = dims[nu];
        std::size_t outer = 1, innerSz = 1;
        for (std::size_t i = 0; i < nu; ++i) outer *= dims[i];
        for (std::size_t i = nu + 1; i < d; ++i) innerSz *= dims[i];

        std::vector<double> coef(innerSz);
        for (std::size_t o = 0; o < outer; ++o) {
            double* base = buf.data() + o * m * innerSz;
            std::fill(coef.begin(), coef.end(), 0.0);
            for (std::size_t s = 0; s < m; ++s) {
                const double w = p[s] / n2; // p p^T / ||p||^2, applied as two passes
                const double* src = base + s * innerSz;
                for (std::size_t i = 0; i < innerSz; ++i) coef[i] += w * src[i];
            }
            for (std::size_t s = 0; s < m; ++s) {
                double* dst = base + s * innerSz;
                for (std::size_t i = 0; i < innerSz; ++i) dst[i] = p[s] * coef[i];
            }
        }
    }
    return DenseTensor(dims, std::move(buf));
}

// ---------------------------------------------------------------- gradient

/// Gradient of F(p_1,...,p_d) = (0.5 ||(x)p||^2 - <b,(x)p>) / ||b||^2 with
/// respect to each factor:
///   grad_mu = ( (prod_{nu != mu} ||p_nu||^2) p_mu - w_mu ) / ||b||^2,
/// where w_mu is the unnormalized all-but-one contraction.
[[nodiscard]] inline std::vector<std::vector<double>> gradient_F(const RankOneRep& p,
                                                                 const DenseTensor& b) {
    if (p.dims() != b.dims()) throw DimMismatch("gradient_F: shape mismatch");
    const double b2 = inner(b, b);
    if (b2 == 0.0) throw ZeroTarget("gradient_F: target tensor is zero");

    const std::size_t d = p.order();
    std::vector<double> n2(d);
    for (std::size_t nu = 0; nu < d; ++nu) n2[nu] = inner(p.factor(nu), p.factor(nu));

    std::vector<std::vector<double>> g(d);
    for (std::size_t mu = 0; mu < d; ++mu) {
        double prodOther = 1.0;
        for (std::size_t nu = 0; nu < d; ++nu)
            if (nu != mu) prodOther *= n2[nu];
        std::vector<double> w = contract_all_but_one(b, p.factors(), mu, /*normalized=*/false);
        std::vector<double> comp(p.factor(mu).size());
        for (std::size_t i = 0; i < comp.size(); ++i)
            comp[i] = (prodOther * p.factor(mu)[i] - w[i]) / b2;
        g[mu] = std::move(comp);
    }
    return g;
}

/// max_mu ||grad_mu|| — the stationarity measure the solver stops on.
[[nodiscard]] inline double gradient_max_norm(const std::vector<std::vector<double>>& g) {
    double m = 0.0;
    for (const auto& c : g) m = std::max(m, norm(c));
    return m;
}

} // namespace r1als
