#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "r1als/rng.hpp"
#include "r1als/solver.hpp"
#include "r1als/svd.hpp"

namespace r1als {

// ---------------------------------------------------------------- stationarity

namespace detail {

/// Copy of the factors rescaled to unit norm.
[[nodiscard]] inline std::vector<std::vector<double>> unitFactors(const RankOneRep& p) {
    std::vector<std::vector<double>> out = p.factors();
    for (auto& f : out) {
        const double n = norm(f);
        for (double& x : f) x /= n;
    }
    return out;
}

/// Mode-mu unfolding of a dense tensor: rows indexed by i_mu, columns by a
/// linearization of all other indices.
[[nodiscard]] inline Matrix unfold(const DenseTensor& b, std::size_t mu) {
    const auto& dims = b.dims();
    const std::size_t n = dims.at(mu);
    std::size_t innerSize = 1;
    for (std::size_t k = mu + 1; k < dims.size(); ++k) innerSize *= dims[k];
    std::size_t outerSize = 1;
    for (std::size_t k = 0; k < mu; ++k) outerSize *= dims[k];

    Matrix m(n, outerSize * innerSize, 0.0);
    const auto& vals = b.values();
    for (std::size_t outer = 0; outer < outerSize; ++outer)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t inner = 0; inner < innerSize; ++inner)
                m(i, outer * innerSize + inner) = vals[(outer * n + i) * innerSize + inner];
    return m;
}

} // namespace detail

/// First-order optimality check independent of the sweep machinery.
/// With unit factors q_mu and scale lambda = <b, q_1 (x) ... (x) q_d>, a
/// critical point satisfies  M_{nu,mu} q_nu = lambda q_mu  for every ordered
/// mode pair.  Returns the largest norm of the defect over all pairs.
[[nodiscard]] inline double stationarity_residual(const DenseTensor& b, const RankOneRep& p) {
    if (p.dims() != b.dims()) throw DimMismatch("stationarity_residual: shape mismatch");
    const std::vector<std::vector<double>> q = detail::unitFactors(p);
    const double lambda = inner(b.values(), evaluate_rank_one(RankOneRep(q)).values());

    const std::size_t d = b.order();
    double worst = 0.0;
    for (std::size_t nu = 0; nu < d; ++nu)
        for (std::size_t mu = 0; mu < d; ++mu) {
            if (nu == mu) continue;
            const Matrix m = contraction_matrix(b, q, nu, mu);
            std::vector<double> w = m.multiply(q[nu]);
            for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lambda * q[mu][i];
            worst = std::max(worst, norm(w));
        }
    return worst;
}

// ---------------------------------------------------------------- certificate

/// Spectrum of one pair contraction matrix at a critical point.
struct CertificatePair {
    std::size_t nu = 0;
    std::size_t mu = 0;
    std::vector<double> sigma; ///< descending singular values of M_{nu,mu}
    double sigmaMax = 0.0;
    double gap = 0.0;          ///< sigma_1 - sigma_2 (sigma_1 when only one exists)
    bool matchesNorm = false;  ///< |sigma_max - ||v*|| | <= 1e-8 sigma_max
};

struct Certificate {
    double lambda = 0.0;       ///< <b, unit rank-one direction>; ||v*|| = |lambda|
    double vNorm = 0.0;
    double stationarity = 0.0;
    std::vector<CertificatePair> pairs;
    bool allMatch = false;
};

/// Singular-value certificate of a critical point: for every unordered mode
/// pair, the contraction matrix at the point is decomposed and its largest
/// singular value compared against the critical value ||v*||.  Requires the
/// point to be stationary to 1e-8 first.
[[nodiscard]] inline Certificate singular_certificate(const DenseTensor& b, const RankOneRep& p) {
    Certificate cert;
    cert.stationarity = stationarity_residual(b, p);
    if (cert.stationarity > 1e-8)
        throw NotStationary("singular_certificate: stationarity residual " +
                            std::to_string(cert.stationarity) + " above 1e-8");

    const std::vector<std::vector<double>> q = detail::unitFactors(p);
    cert.lambda = inner(b.values(), evaluate_rank_one(RankOneRep(q)).values());
    cert.vNorm = std::abs(cert.lambda);

    const std::size_t d = b.order();
    cert.allMatch = true;
    for (std::size_t nu = 0; nu < d; ++nu)
        for (std::size_t mu = nu + 1; mu < d; ++mu) {
            CertificatePair pr;
            pr.nu = nu;
            pr.mu = mu;
            const Matrix m = contraction_matrix(b, q, nu, mu);
            pr.sigma = svd_jacobi(m).sigma;
            pr.sigmaMax = pr.sigma.empty() ? 0.0 : pr.sigma.front();
            pr.gap = pr.sigma.size() > 1 ? pr.sigma[0] - pr.sigma[1] : pr.sigmaMax;
            pr.matchesNorm = std::abs(pr.sigmaMax - cert.vNorm) <= 1e-8 * std::max(pr.sigmaMax, 1e-300);
            cert.allMatch = cert.allMatch && pr.matchesNorm;
            cert.pairs.push_back(std::move(pr));
        }
    return cert;
}

// ---------------------------------------------------------------- multistart

/// Deterministic start built from the dominant left singular vector of each
/// mode unfolding.
[[nodiscard]] inline RankOneRep spectral_start(const DenseTensor& b) {
    std::vector<std::vector<double>> factors;
    for (std::size_t mu = 0; mu < b.order(); ++mu) {
        const SVDResult s = svd_jacobi(detail::unfold(b, mu));
        factors.push_back(s.u.column(0));
    }
    return RankOneRep(std::move(factors));
}

struct StartRecord {
    std::uint64_t seed = 0;    ///< 0 marks the deterministic spectral start
    double f = 0.0;
    double residual = 0.0;     ///< stationarity residual at the final iterate
    std::size_t clusterId = 0;
    RankOneRep rep;
    std::vector<double> direction; ///< flattened v / ||v||
};

struct ClusterInfo {
    std::size_t representative = 0; ///< index into starts, lowest f in the cluster
    std::size_t size = 0;
    double bestF = 0.0;
    bool global = false;
};

struct MultistartResult {
    std::vector<StartRecord> starts;
    std::vector<ClusterInfo> clusters;
    double fStar = 0.0;
    std::size_t globalClusters = 0;
    std::size_t distinctF = 0;
    std::size_t failedStarts = 0;
};

struct MultistartOptions {
    std::size_t numStarts = 32;
    std::uint64_t seed = 1;
    SolverConfig config{};
    double directionTol = 0.05; ///< single-link distance between normalized limits
    double fTol = 1e-8;         ///< objective resolution for distinct-value counting
    bool spectralStart = true;
};

/// Run the solver from many starting points and group the limits.
/// Clusters are single-link components under euclidean distance between the
/// normalized limit tensors; a cluster is global when its best objective
/// value is within fTol of the overall best.
[[nodiscard]] inline MultistartResult best_rank_one_multistart(const DenseTensor& b,
                                                               MultistartOptions opts = {}) {
    if (opts.numStarts == 0 && !opts.spectralStart)
        throw OutOfRange("best_rank_one_multistart: no starts requested");
    opts.config.keepIterates = false;

    MultistartResult out;

    auto runFrom = [&](const RankOneRep& init, std::uint64_t tag) {
        try {
            SolveResult r = solve(b, init, opts.config);
            StartRecord rec{tag,
                            r.finalF,
                            stationarity_residual(b, r.solution),
                            0,
                            r.solution,
                            {}};
            const DenseTensor v = evaluate_rank_one(r.solution);
            const double n = norm(v.values());
            rec.direction = v.values();
            for (double& x : rec.direction) x /= n;
            out.starts.push_back(std::move(rec));
        } catch (const Error&) {
            ++out.failedStarts;
        }
    };

    if (opts.spectralStart) runFrom(spectral_start(b), 0);
    for (std::size_t s = 0; s < opts.numStarts; ++s) {
        const std::uint64_t tag = opts.seed + 1 + s;
        Xorshift64Star local(tag);
        std::vector<std::vector<double>> factors;
        for (std::size_t nmu : b.dims()) factors.push_back(local.uniformSymVector(nmu));
        try {
            runFrom(RankOneRep(std::move(factors)), tag);
        } catch (const Error&) {
            ++out.failedStarts;
        }
    }
    if (out.starts.empty()) throw Error("best_rank_one_multistart: every start failed");

    // single-link clustering of the normalized limits
    const std::size_t n = out.starts.size();
    std::vector<std::size_t> parent(n);
    for (std::size_t i = 0; i < n; ++i) parent[i] = i;
    auto find = [&parent](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double d2 = 0.0;
            const auto& a = out.starts[i].direction;
            const auto& c = out.starts[j].direction;
            for (std::size_t k = 0; k < a.size(); ++k) {
                const double diff = a[k] - c[k];
                d2 += diff * diff;
            }
            if (std::sqrt(d2) <= opts.directionTol) parent[find(i)] = find(j);
        }

    std::vector<std::size_t> rootToCluster(n, SIZE_MAX);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t root = find(i);
        if (rootToCluster[root] == SIZE_MAX) {
            rootToCluster[root] = out.clusters.size();
            out.clusters.push_back({i, 0, out.starts[i].f, false});
        }
        ClusterInfo& c = out.clusters[rootToCluster[root]];
        ++c.size;
        if (out.starts[i].f < c.bestF) {
            c.bestF = out.starts[i].f;
            c.representative = i;
        }
        out.starts[i].clusterId = rootToCluster[root];
    }

    out.fStar = out.starts[0].f;
    for (const StartRecord& r : out.starts) out.fStar = std::min(out.fStar, r.f);
    for (ClusterInfo& c : out.clusters) {
        c.global = c.bestF <= out.fStar + opts.fTol;
        if (c.global) ++out.globalClusters;
    }

    std::vector<double> fs;
    for (const StartRecord& r : out.starts) fs.push_back(r.f);
    std::sort(fs.begin(), fs.end());
    out.distinctF = fs.empty() ? 0 : 1;
    for (std::size_t i = 1; i < fs.size(); ++i)
        if (fs[i] - fs[i - 1] > opts.fTol) ++out.distinctF;
    return out;
}

// ---------------------------------------------------------------- parametric family

namespace detail {

/// Tangent-recursion contraction factor of the symmetric one-parameter
/// family, valid on 0 <= t < 1/2 (no domain check).
[[nodiscard]] inline double bLambdaRateFormula(double t) {
    const double a = 3.0 * t + t * t;
    return 0.5 * t * (a + std::sqrt(a * a + 4.0 * t));
}

} // namespace detail

/// Stationary values of the transverse coefficient alpha of the symmetric
/// one-parameter family: always 0; for t > 1/2 additionally +-sqrt((2t-1)/t).
[[nodiscard]] inline std::vector<double> b_lambda_alphas(double t) {
    if (t < 0.0) throw NegativeLambda("b_lambda_alphas: parameter must be nonnegative");
    std::vector<double> out{0.0};
    if (t > 0.5) {
        const double a = std::sqrt((2.0 * t - 1.0) / t);
        out.push_back(a);
        out.push_back(-a);
    }
    return out;
}

[[nodiscard]] inline std::size_t b_lambda_count(double t) { return b_lambda_alphas(t).size(); }

/// Asymptotic linear rate of the family below the bifurcation.
/// Only defined for 0 <= t < 1/2; the rate tends to 1 as t -> 1/2.
[[nodiscard]] inline double b_lambda_rate(double t) {
    if (t < 0.0) throw NegativeLambda("b_lambda_rate: parameter must be nonnegative");
    if (t >= 0.5) throw OutOfRange("b_lambda_rate: only defined below the bifurcation at 1/2");
    return detail::bLambdaRateFormula(t);
}

// ---------------------------------------------------------------- gradient check

/// Central finite-difference probe of the analytic gradient; returns the
/// largest absolute entrywise deviation over every mode.
[[nodiscard]] inline double finite_diff_gradient_check(const DenseTensor& b, const RankOneRep& p,
                                                       double h = 1e-6) {
    if (h <= 0.0) throw OutOfRange("finite_diff_gradient_check: step must be positive");
    const std::vector<std::vector<double>> g = gradient_F(p, b);
    double worst = 0.0;
    for (std::size_t mu = 0; mu < p.order(); ++mu) {
        for (std::size_t i = 0; i < p.factor(mu).size(); ++i) {
            auto shifted = [&](double delta) {
                RankOneRep q = p;
                std::vector<double> f = q.factor(mu);
                f[i] += delta;
                q.setFactor(mu, std::move(f));
                return objective_f(evaluate_rank_one(q), b);
            };
            const double fd = (shifted(h) - shifted(-h)) / (2.0 * h);
            worst = std::max(worst, std::abs(fd - g[mu][i]));
        }
    }
    return worst;
}

} // namespace r1als
