#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "r1als/solver.hpp"
#include "r1als/structured.hpp"

namespace r1als {

// ---------------------------------------------------------------- rates

enum class RateClass { QSuperlinear, QLinear, SublinearOrNone };

[[nodiscard]] inline const char* to_string(RateClass c) {
    switch (c) {
        case RateClass::QSuperlinear: return "Q-superlinear";
        case RateClass::QLinear: return "Q-linear";
        case RateClass::SublinearOrNone: return "sublinear/none";
    }
    return "?";
}

/// Finite-window rate summary of a tangent series.
struct RateEstimate {
    double qLimsup = 0.0;      ///< max over the final tailWindow successive ratios
    RateClass classification = RateClass::SublinearOrNone;
    double rhoHat = 0.0;       ///< tail mean; the rate when classification is Q-linear
    std::size_t tailWindow = 0;
    std::vector<double> tail;  ///< the raw tail ratios the estimate is built from
};

/// Successive tangent ratios tan_{k+1}/tan_k of one mode of a trace.
/// The series stops at the first tangent that is zero or not finite
/// (underflow after superlinear collapse).
[[nodiscard]] inline std::vector<double> q_ratio_series(const SweepTrace& trace, std::size_t mode) {
    if (trace.componentTan.empty())
        throw InsufficientTrace("q_ratio_series: trace has no reference tangents");
    if (mode >= trace.componentTan.size())
        throw OutOfRange("q_ratio_series: mode out of range");
    const std::vector<double>& t = trace.componentTan[mode];
    std::vector<double> r;
    for (std::size_t k = 0; k + 1 < t.size(); ++k) {
        if (!(t[k] > 0.0) || !std::isfinite(t[k]) || !(t[k + 1] > 0.0) || !std::isfinite(t[k + 1]))
            break;
        r.push_back(t[k + 1] / t[k]);
    }
    return r;
}

/// Classify the decay of a tangent series from its final `tailWindow`
/// successive ratios.  Thresholds: Q-superlinear = strictly decreasing tail
/// ending below 0.05; Q-linear = tail within +-10% of its mean, mean < 0.98;
/// anything else (ratios near or above 1) = sublinear/none.
/// Tangents below `floor` are treated as measurement noise (a double-precision
/// iterate resolves angles only down to ~1e-15) and end the usable series.
[[nodiscard]] inline RateEstimate estimate_rate(const std::vector<double>& tangents,
                                                std::size_t tailWindow, double floor = 0.0) {
    if (tailWindow == 0) throw OutOfRange("estimate_rate: tailWindow must be positive");
    std::vector<double> clean;
    for (double t : tangents) {
        if (!(t > 0.0) || !std::isfinite(t) || t < floor) break;
        clean.push_back(t);
    }
    if (clean.size() < tailWindow + 1)
        throw InsufficientTrace("estimate_rate: need at least tailWindow+1 finite tangents");

    std::vector<double> ratios(clean.size() - 1);
    for (std::size_t k = 0; k + 1 < clean.size(); ++k) ratios[k] = clean[k + 1] / clean[k];

    RateEstimate est;
    est.tailWindow = tailWindow;
    est.tail.assign(ratios.end() - static_cast<std::ptrdiff_t>(tailWindow), ratios.end());

    est.qLimsup = 0.0;
    double sum = 0.0;
    bool strictlyDecreasing = true;
    for (std::size_t i = 0; i < est.tail.size(); ++i) {
        est.qLimsup = std::max(est.qLimsup, est.tail[i]);
        sum += est.tail[i];
        if (i > 0 && !(est.tail[i] < est.tail[i - 1])) strictlyDecreasing = false;
    }
    est.rhoHat = sum / static_cast<double>(est.tail.size());

    if (strictlyDecreasing && est.tail.back() < 0.05) {
        est.classification = RateClass::QSuperlinear;
    } else if (est.rhoHat < 0.98) {
        bool withinBand = true;
        for (double r : est.tail)
            if (std::abs(r - est.rhoHat) > 0.1 * est.rhoHat) withinBand = false;
        est.classification = withinBand ? RateClass::QLinear : RateClass::SublinearOrNone;
    } else {
        est.classification = RateClass::SublinearOrNone;
    }
    return est;
}

// ---------------------------------------------------------------- dominance

struct DominanceResult {
    bool holds = false;
    std::size_t jStar = 0;
};

/// Strict single-term dominance of a CP decomposition at the point p:
/// lambda_{j*}^{2/(d-2)} <b_{j*mu}, p_mu>^2 > lambda_j^{2/(d-2)} <b_{j mu}, p_mu>^2
/// for every other term j and every mode mu.  Scale-free in p.
[[nodiscard]] inline DominanceResult dominance_check(const CPTensor& cp, const RankOneRep& p) {
    const std::size_t d = cp.order();
    if (d < 3) throw OrderTooSmall("dominance_check: needs order d >= 3");
    if (p.dims() != cp.dims()) throw DimMismatch("dominance_check: shape mismatch");
    const std::size_t r = cp.rank();
    const double expo = 2.0 / static_cast<double>(d - 2);

    // score(j, mu) = lambda_j^(2/(d-2)) <b_{j mu}, p_mu>^2
    std::vector<double> lamPow(r);
    for (std::size_t j = 0; j < r; ++j) lamPow[j] = std::pow(cp.weights()[j], expo);

    std::vector<std::vector<double>> score(d, std::vector<double>(r));
    for (std::size_t mu = 0; mu < d; ++mu)
        for (std::size_t j = 0; j < r; ++j) {
            const double dp = inner(cp.factor(mu).column(j), p.factor(mu));
            score[mu][j] = lamPow[j] * dp * dp;
        }

    for (std::size_t cand = 0; cand < r; ++cand) {
        bool ok = true;
        for (std::size_t mu = 0; mu < d && ok; ++mu)
            for (std::size_t j = 0; j < r; ++j)
                if (j != cand && !(score[mu][cand] > score[mu][j])) {
                    ok = false;
                    break;
                }
        if (ok) return {true, cand};
    }
    return {false, 0};
}

/// Contraction factor of the dominant-term tangent recursion:
/// max_{j != j*} (lambda_j prod_{mu=2}^{d-1} <b_{j mu}, p_mu>)^2
///            / (lambda_{j*} prod_{mu=2}^{d-1} <b_{j* mu}, p_mu>)^2.
/// The product runs over the interior modes only (paper-style 1-based modes
/// 2..d-1, i.e. every mode except the first and the last).
[[nodiscard]] inline double superlinear_bound(const CPTensor& cp, const RankOneRep& p,
                                              std::size_t jStar) {
    const std::size_t d = cp.order();
    if (d < 3) throw OrderTooSmall("superlinear_bound: needs order d >= 3");
    if (jStar >= cp.rank()) throw OutOfRange("superlinear_bound: term index out of range");
    if (p.dims() != cp.dims()) throw DimMismatch("superlinear_bound: shape mismatch");

    auto interiorProduct = [&](std::size_t j) {
        double prod = cp.weights()[j];
        for (std::size_t mu = 1; mu + 1 < d; ++mu)
            prod *= inner(cp.factor(mu).column(j), p.factor(mu));
        return prod;
    };

    const double denom = interiorProduct(jStar);
    if (denom == 0.0)
        throw ZeroCoefficient("superlinear_bound: dominant-term interior product vanishes");
    double worst = 0.0;
    for (std::size_t j = 0; j < cp.rank(); ++j) {
        if (j == jStar) continue;
        const double q = interiorProduct(j) / denom;
        worst = std::max(worst, q * q);
    }
    return worst;
}

/// For a rank-2 decomposition the tangent recursion bound is attained
/// exactly from the second sweep on.  Returns the largest absolute
/// deviation |measured ratio - bound| across those sweeps.  Tangents below
/// `floor` are numeric dust (the iterate itself carries ~1e-16 relative
/// error) and end the comparison.
[[nodiscard]] inline double check_sharpness_r2(const SweepTrace& trace, double floor = 1e-12) {
    if (!trace.reference || !trace.reference->cp)
        throw InsufficientTrace("check_sharpness_r2: trace carries no decomposition reference");
    const CPTensor& cp = *trace.reference->cp;
    if (cp.rank() != 2) throw OutOfRange("check_sharpness_r2: needs a rank-2 decomposition");
    if (trace.componentTan.empty() || trace.iterates.size() < 3)
        throw InsufficientTrace("check_sharpness_r2: needs tangents and iterate snapshots");

    const std::size_t jStar = trace.reference->term;
    const std::vector<double>& t = trace.componentTan[0];
    double worst = 0.0;
    // ratio over sweep k (snapshots k-1 -> k); the first sweep only aligns
    // the start with the invariant structure, so measurement begins at k=2.
    for (std::size_t k = 2; k < trace.iterates.size() && k < t.size(); ++k) {
        if (!(t[k - 1] > floor) || !std::isfinite(t[k - 1])) break;
        if (!(t[k] > floor) || !std::isfinite(t[k])) break;
        const RankOneRep atStart{trace.iterates[k - 1]};
        const DominanceResult dom = dominance_check(cp, atStart);
        if (!dom.holds || dom.jStar != jStar) continue;
        const double bound = superlinear_bound(cp, atStart, jStar);
        worst = std::max(worst, std::abs(t[k] / t[k - 1] - bound));
    }
    return worst;
}

// ---------------------------------------------------------------- basin

/// tan of the attraction-boundary angle between the two strongest terms:
/// (lambda1/lambda2)^(1/(d-2)).
[[nodiscard]] inline double basin_tangent(double lambda1, double lambda2, std::size_t d) {
    if (d < 3) throw OrderTooSmall("basin_tangent: needs order d >= 3");
    if (lambda1 < 0.0 || lambda2 < 0.0) throw NegativeLambda("basin_tangent: negative weight");
    if (lambda2 == 0.0) throw OutOfRange("basin_tangent: second weight must be positive");
    return std::pow(lambda1 / lambda2, 1.0 / static_cast<double>(d - 2));
}

[[nodiscard]] inline double basin_angle(double lambda1, double lambda2, std::size_t d) {
    return std::atan(basin_tangent(lambda1, lambda2, d));
}

// ---------------------------------------------------------------- audit

struct AuditSummary {
    std::size_t recordsChecked = 0;
    double maxAscent = 0.0;     ///< worst observed f increase across a micro step
    double finalDistance = 0.0; ///< last per-sweep ||v_k - v_{k-1}||
    double finalGradNorm = 0.0;
};

/// Monotonicity / termination audit of a recorded run: every micro step must
/// not increase f (within rounding slack), and the final sweep-to-sweep
/// movement must have fallen below relTol * ||b||.
inline AuditSummary descent_audit(const SweepTrace& trace, double relTol = 1e-5) {
    AuditSummary s;
    for (std::size_t i = 0; i < trace.records.size(); ++i) {
        const MicroStepRecord& r = trace.records[i];
        const double slack = 1e-12 * std::max(1.0, std::abs(r.fBefore));
        const double ascent = r.fAfter - r.fBefore;
        s.maxAscent = std::max(s.maxAscent, ascent);
        if (ascent > slack)
            throw AuditFailure("descent_audit: objective increased at record " + std::to_string(i));
        ++s.recordsChecked;
    }
    if (trace.sweepDistance.empty())
        throw AuditFailure("descent_audit: trace has no completed sweep");
    s.finalDistance = trace.sweepDistance.back();
    if (!(s.finalDistance <= relTol * trace.bNorm))
        throw AuditFailure("descent_audit: final sweep movement " + std::to_string(s.finalDistance) +
                           " above tolerance");
    if (!trace.records.empty()) s.finalGradNorm = trace.records.back().gradNorm;
    return s;
}

} // namespace r1als
