#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "r1als/angles.hpp"
#include "r1als/structured.hpp"
#include "r1als/tensor.hpp"

namespace r1als {

// ---------------------------------------------------------------- config

enum class TerminationReason { MaxSweeps, GradTolerance, DeltaFTolerance };

[[nodiscard]] inline const char* to_string(TerminationReason r) {
    switch (r) {
        case TerminationReason::MaxSweeps: return "max-sweeps";
        case TerminationReason::GradTolerance: return "grad-tolerance";
        case TerminationReason::DeltaFTolerance: return "delta-f-tolerance";
    }
    return "?";
}

struct SolverConfig {
    std::size_t maxSweeps = 100000;
    double tolGrad = 1e-10;   ///< stop when max-mode gradient norm falls below; 0 disables
    double tolDeltaF = 1e-15; ///< relative per-sweep objective change; 0 disables
    std::vector<std::size_t> modeOrder; ///< permutation of 0..d-1; empty = identity
    bool rebalance = false;   ///< equalize factor norms after each sweep (value-preserving)
    std::size_t traceEvery = 1; ///< retain micro-step records for every n-th sweep
    bool keepIterates = true; ///< store per-sweep factor snapshots in the trace

    [[nodiscard]] std::vector<std::size_t> orderFor(std::size_t d) const {
        if (modeOrder.empty()) {
            std::vector<std::size_t> id(d);
            for (std::size_t i = 0; i < d; ++i) id[i] = i;
            return id;
        }
        return modeOrder;
    }

    void validate(std::size_t d) const {
        if (maxSweeps == 0) throw OutOfRange("SolverConfig: maxSweeps must be positive");
        if (tolGrad < 0.0 || tolDeltaF < 0.0)
            throw OutOfRange("SolverConfig: tolerances must be nonnegative");
        if (traceEvery == 0) throw OutOfRange("SolverConfig: traceEvery must be positive");
        if (!modeOrder.empty()) {
            if (modeOrder.size() != d)
                throw OutOfRange("SolverConfig: modeOrder must be a permutation of all modes");
            std::vector<bool> seen(d, false);
            for (std::size_t m : modeOrder) {
                if (m >= d || seen[m])
                    throw OutOfRange("SolverConfig: modeOrder must be a permutation of all modes");
                seen[m] = true;
            }
        }
    }
};

// ---------------------------------------------------------------- records

/// Everything measured across one micro step.
struct MicroStepRecord {
    std::size_t sweep = 0; ///< 1-based sweep counter
    std::size_t mode = 0;  ///< 0-based mode index
    double fBefore = 0.0;
    double fAfter = 0.0;
    double descentPredicted = 0.0; ///< 0.5 <Pi r, r> / ||b||^2, via the projector route
    double identityResidual = 0.0; ///< |fBefore - fAfter - descentPredicted|
    double energyResidual = 0.0;   ///< |fAfter + ||v||^2 / (2||b||^2)|
    double factorNorm = 0.0;       ///< norm of the freshly updated factor
    double normV = 0.0;            ///< ||v|| after the step
    double gradNorm = 0.0;         ///< max-mode gradient norm after the step
};

// ---------------------------------------------------------------- state

/// Mutable ALS state: the factor iterate, its densification, cached squared
/// factor norms, and the cached objective value.
class SweepState {
public:
    SweepState(const DenseTensor& b, RankOneRep init)
        : iterate_(std::move(init)), v_(evaluate_rank_one(iterate_)),
          bNormSq_(inner(b, b)) {
        if (bNormSq_ == 0.0) throw ZeroTarget("SweepState: target tensor is zero");
        if (iterate_.dims() != b.dims()) throw DimMismatch("SweepState: shape mismatch");
        if (iterate_.normProduct() == 0.0)
            throw ZeroInitial("SweepState: initial guess evaluates to zero");
        const std::size_t d = iterate_.order();
        normSq_.resize(d);
        for (std::size_t mu = 0; mu < d; ++mu)
            normSq_[mu] = inner(iterate_.factor(mu), iterate_.factor(mu));
        f_ = objective_f(v_, b);
    }

    [[nodiscard]] const RankOneRep& iterate() const { return iterate_; }
    [[nodiscard]] const DenseTensor& v() const { return v_; }
    [[nodiscard]] double f() const { return f_; }
    [[nodiscard]] double bNormSq() const { return bNormSq_; }
    [[nodiscard]] double normSq(std::size_t mu) const { return normSq_.at(mu); }
    [[nodiscard]] std::ptrdiff_t lastUpdatedMode() const { return lastUpdatedMode_; }

    /// Scale every factor to the common norm (prod ||p_mu||)^(1/d); the
    /// represented tensor is unchanged.
    void rebalance(const DenseTensor& b) {
        double logProd = 0.0;
        const std::size_t d = iterate_.order();
        for (std::size_t mu = 0; mu < d; ++mu) logProd += 0.5 * std::log(normSq_[mu]);
        const double target = std::exp(logProd / static_cast<double>(d));
        for (std::size_t mu = 0; mu < d; ++mu) {
            const double s = target / std::sqrt(normSq_[mu]);
            std::vector<double> f = iterate_.factor(mu);
            for (double& x : f) x *= s;
            iterate_.setFactor(mu, std::move(f));
            normSq_[mu] = inner(iterate_.factor(mu), iterate_.factor(mu));
        }
        v_ = evaluate_rank_one(iterate_);
        f_ = objective_f(v_, b);
    }

    friend MicroStepRecord micro_step(SweepState& state, const DenseTensor& b, std::size_t mu);

private:
    RankOneRep iterate_;
    DenseTensor v_;
    std::vector<double> normSq_;
    double f_ = 0.0;
    double bNormSq_ = 0.0;
    std::ptrdiff_t lastUpdatedMode_ = -1;
};

/// Pi_{k,mu} applied to an arbitrary tensor, using the state's current
/// factors on every mode except mu.
[[nodiscard]] inline DenseTensor projection_apply(const SweepState& state, std::size_t mu,
                                                  const DenseTensor& t) {
    return project_onto_factors(t, state.iterate().factors(), mu);
}

/// One ALS micro step on mode mu: replaces p_mu by the normalized
/// all-but-one contraction of b and records the step's invariants.  The
/// predicted descent is measured through the projector route, which is an
/// independent computation from the two objective evaluations.
inline MicroStepRecord micro_step(SweepState& state, const DenseTensor& b, std::size_t mu) {
    const std::size_t d = state.iterate_.order();
    if (mu >= d) throw OutOfRange("micro_step: mode out of range");

    MicroStepRecord rec;
    rec.mode = mu;
    rec.fBefore = state.f_;

    const DenseTensor r = subtract(b, state.v_);
    const DenseTensor pir = projection_apply(state, mu, r);
    rec.descentPredicted = 0.5 * inner(pir, r) / state.bNormSq_;

    std::vector<double> w = contract_all_but_one(b, state.iterate_.factors(), mu,
                                                 /*normalized=*/true);
    const double wNorm = norm(w);
    if (wNorm < 1e-150)
        throw DegenerateIterate("micro_step: updated factor norm below 1e-150");

    state.iterate_.setFactor(mu, std::move(w));
    state.normSq_[mu] = wNorm * wNorm;
    state.v_ = evaluate_rank_one(state.iterate_);
    const double fAfter = objective_f(state.v_, b);

    rec.fAfter = fAfter;
    rec.factorNorm = wNorm;
    rec.normV = norm(state.v_);
    rec.energyResidual = std::abs(fAfter + rec.normV * rec.normV / (2.0 * state.bNormSq_));
    rec.identityResidual = std::abs(rec.fBefore - fAfter - rec.descentPredicted);
    rec.gradNorm = gradient_max_norm(gradient_F(state.iterate_, b));

    state.f_ = fAfter;
    state.lastUpdatedMode_ = static_cast<std::ptrdiff_t>(mu);
    return rec;
}

/// Gram-route micro step: rebuilds the same update as micro_step from the
/// two-mode contraction matrix against the predecessor mode,
///   p_mu <- M M^T p_mu / (G_mu G_prev),   G_m = prod_{nu != m} ||p_nu||^2,
/// without touching the state.  Requires that the immediately preceding
/// micro step updated some other mode (for the first mode of a sweep that
/// is the last mode of the previous sweep, so the route exists from the
/// second sweep on).
[[nodiscard]] inline std::vector<double> gram_micro_step(const SweepState& state,
                                                         const DenseTensor& b, std::size_t mu) {
    const std::size_t d = state.iterate().order();
    if (mu >= d) throw OutOfRange("gram_micro_step: mode out of range");
    const std::ptrdiff_t prevSigned = state.lastUpdatedMode();
    if (prevSigned < 0 || static_cast<std::size_t>(prevSigned) == mu)
        throw Error("gram_micro_step: predecessor mode has not been updated yet");
    const std::size_t prev = static_cast<std::size_t>(prevSigned);

    const Matrix m = contraction_matrix(b, state.iterate().factors(), /*nu=*/prev, /*mu=*/mu);
    std::vector<double> w = m.multiply(m.multiplyTransposed(state.iterate().factor(mu)));

    double gMu = 1.0, gPrev = 1.0;
    for (std::size_t nu = 0; nu < d; ++nu) {
        if (nu != mu) gMu *= state.normSq(nu);
        if (nu != prev) gPrev *= state.normSq(nu);
    }
    const double denom = gMu * gPrev;
    if (denom == 0.0) throw DegenerateFactor("gram_micro_step: zero factor norm product");
    for (double& x : w) x /= denom;
    return w;
}

/// The iteration matrix of the Gram route (what gram_micro_step applies to
/// the current factor).  Exposed for the structure tests.
[[nodiscard]] inline Matrix gram_iteration_matrix(const SweepState& state, const DenseTensor& b,
                                                  std::size_t mu) {
    const std::ptrdiff_t prevSigned = state.lastUpdatedMode();
    if (prevSigned < 0 || static_cast<std::size_t>(prevSigned) == mu)
        throw Error("gram_iteration_matrix: predecessor mode has not been updated yet");
    const std::size_t prev = static_cast<std::size_t>(prevSigned);
    const std::size_t d = state.iterate().order();

    const Matrix m = contraction_matrix(b, state.iterate().factors(), prev, mu);
    Matrix g = m.multiply(m.transposed());
    double gMu = 1.0, gPrev = 1.0;
    for (std::size_t nu = 0; nu < d; ++nu) {
        if (nu != mu) gMu *= state.normSq(nu);
        if (nu != prev) gPrev *= state.normSq(nu);
    }
    for (double& x : g.data()) x /= gMu * gPrev;
    return g;
}

/// One full sweep in the given mode order; the callback sees every record.
inline std::vector<MicroStepRecord> sweep(SweepState& state, const DenseTensor& b,
                                          const std::vector<std::size_t>& order,
                                          const std::function<void(const MicroStepRecord&)>& onStep = {}) {
    std::vector<MicroStepRecord> recs;
    recs.reserve(order.size());
    for (std::size_t mu : order) {
        MicroStepRecord rec = micro_step(state, b, mu);
        recs.push_back(rec);
        if (onStep) onStep(rec);
    }
    return recs;
}

// ---------------------------------------------------------------- trace

/// Reference configuration for angle diagnostics: a tensor to measure
/// tensor-space angles against, optionally with per-mode directions and the
/// decomposition it came from (for dominance-based diagnostics).
struct TraceReference {
    DenseTensor dense;
    std::optional<RankOneRep> factors;
    std::optional<CPTensor> cp;
    std::size_t term = 0;
};

/// Complete record of one solver run.
struct SweepTrace {
    std::vector<MicroStepRecord> records;  ///< thinned by traceEvery
    std::vector<double> tanAngle;          ///< per record, tensor-space; NaN without reference
    std::vector<double> qRatioTensor;      ///< per record, ratio to previous micro step; NaN if undefined
    std::vector<std::vector<double>> componentTan; ///< [mode][sweep], entry 0 = initial guess
    std::vector<double> fPerSweep;         ///< entry 0 = initial guess
    std::vector<double> sweepDistance;     ///< ||v_k - v_{k-1}||, one per completed sweep
    std::vector<std::vector<std::vector<double>>> iterates; ///< factor snapshots per sweep, entry 0 = initial
    std::optional<TraceReference> reference;
    double bNorm = 0.0;
    TerminationReason reason = TerminationReason::MaxSweeps;
    std::size_t sweeps = 0;
};

struct SolveResult {
    RankOneRep solution;
    SweepTrace trace;
    double finalF = 0.0;
    double finalGradNorm = 0.0;
};

// ---------------------------------------------------------------- solve

inline SolveResult solve(const DenseTensor& b, const RankOneRep& init, const SolverConfig& config,
                         std::optional<TraceReference> reference = std::nullopt) {
    config.validate(b.order());
    const std::vector<std::size_t> order = config.orderFor(b.order());

    SweepState state(b, init);
    const std::size_t d = b.order();

    SweepTrace trace;
    trace.reference = std::move(reference);
    trace.bNorm = std::sqrt(state.bNormSq());

    const bool haveRef = trace.reference.has_value();
    const bool haveRefFactors = haveRef && trace.reference->factors.has_value();
    if (haveRefFactors && trace.reference->factors->dims() != b.dims())
        throw DimMismatch("solve: reference factor dims do not match target");
    if (haveRef && !trace.reference->dense.sameShape(b))
        throw DimMismatch("solve: reference dims do not match target");

    if (haveRefFactors) trace.componentTan.resize(d);

    // Tangents recorded along a run must stay total: an iterate that drifts
    // orthogonal to the reference gets an infinite tangent, not an error.
    const double inf = std::numeric_limits<double>::infinity();
    auto tensorTan = [&]() -> double {
        const CoefficientSplit cs = coefficient_split(state.v(), trace.reference->dense);
        return cs.c == 0.0 ? inf : cs.sNorm / std::abs(cs.c);
    };
    auto modeTan = [&](std::size_t mu) -> double {
        try {
            return component_tan_angle(state.iterate().factor(mu),
                                       trace.reference->factors->factor(mu));
        } catch (const OrthogonalToReference&) {
            return inf;
        }
    };

    auto pushSweepStats = [&] {
        trace.fPerSweep.push_back(state.f());
        if (haveRefFactors)
            for (std::size_t mu = 0; mu < d; ++mu) trace.componentTan[mu].push_back(modeTan(mu));
        if (config.keepIterates) trace.iterates.push_back(state.iterate().factors());
    };
    pushSweepStats(); // initial guess

    const double nan = std::numeric_limits<double>::quiet_NaN();
    double prevMicroTan = haveRef ? tensorTan() : nan;

    double lastGrad = std::numeric_limits<double>::infinity();
    TerminationReason reason = TerminationReason::MaxSweeps;
    std::size_t k = 0;
    while (k < config.maxSweeps) {
        ++k;
        const double fStart = state.f();
        const DenseTensor vStart = state.v();
        const bool retain = ((k - 1) % config.traceEvery) == 0;

        for (std::size_t mu : order) {
            MicroStepRecord rec = micro_step(state, b, mu);
            rec.sweep = k;
            double tanNow = nan, ratio = nan;
            if (haveRef) {
                tanNow = tensorTan();
                if (std::isfinite(prevMicroTan) && prevMicroTan > 0.0) ratio = tanNow / prevMicroTan;
                prevMicroTan = tanNow;
            }
            lastGrad = rec.gradNorm;
            if (retain) {
                trace.records.push_back(rec);
                trace.tanAngle.push_back(tanNow);
                trace.qRatioTensor.push_back(ratio);
            }
        }

        trace.sweepDistance.push_back(norm(subtract(state.v(), vStart)));
        pushSweepStats();
        if (config.rebalance) state.rebalance(b);

        if (config.tolGrad > 0.0 && lastGrad <= config.tolGrad) {
            reason = TerminationReason::GradTolerance;
            break;
        }
        if (config.tolDeltaF > 0.0 &&
            std::abs(fStart - state.f()) <= config.tolDeltaF * std::max(1.0, std::abs(state.f()))) {
            reason = TerminationReason::DeltaFTolerance;
            break;
        }
    }

    trace.reason = reason;
    trace.sweeps = k;
    return SolveResult{state.iterate(), std::move(trace), state.f(), lastGrad};
}

// ---------------------------------------------------------------- tucker gamma

/// Core-side coupling matrix of the two-mode contraction for a Tucker
/// target: Gamma[i_nu, i_mu] = sum over the other core indices of
/// core * prod_{xi not in {nu, mu}} <b_{xi, i_xi}, p_xi>.  The full matrix
/// satisfies M_{nu,mu} = B_mu Gamma^T B_nu^T.
[[nodiscard]] inline Matrix tucker_gamma(const TuckerTensor& t, const RankOneRep& p,
                                         std::size_t nu, std::size_t mu) {
    const std::size_t d = t.order();
    if (p.dims() != t.dims()) throw DimMismatch("tucker_gamma: shape mismatch");
    if (nu >= d || mu >= d) throw OutOfRange("tucker_gamma: mode out of range");
    if (nu == mu) throw OutOfRange("tucker_gamma: modes must differ");

    // Inner products with the factor bases: u_xi = B_xi^T p_xi.
    std::vector<std::vector<double>> u(d);
    std::vector<const std::vector<double>*> vecs(d, nullptr);
    for (std::size_t xi = 0; xi < d; ++xi) {
        if (xi == nu || xi == mu) continue;
        u[xi] = t.factor(xi).multiplyTransposed(p.factor(xi));
        vecs[xi] = &u[xi];
    }
    std::vector<std::size_t> kept;
    std::vector<double> buf = detail::contractExcept(t.core(), vecs, kept);

    const std::size_t tNu = t.core().dim(nu), tMu = t.core().dim(mu);
    Matrix g(tNu, tMu);
    if (nu < mu) {
        for (std::size_t iNu = 0; iNu < tNu; ++iNu)
            for (std::size_t iMu = 0; iMu < tMu; ++iMu) g(iNu, iMu) = buf[iNu * tMu + iMu];
    } else {
        for (std::size_t iNu = 0; iNu < tNu; ++iNu)
            for (std::size_t iMu = 0; iMu < tMu; ++iMu) g(iNu, iMu) = buf[iMu * tNu + iNu];
    }
    return g;
}

} // namespace r1als
