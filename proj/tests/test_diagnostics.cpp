#include <catch_amalgamated.hpp>

#include "r1als/diagnostics.hpp"
#include "r1als/generators.hpp"
#include "r1als/rng.hpp"

#include <cmath>
#include <limits>
#include <vector>

using namespace r1als;

namespace {

std::vector<double> tangentsFromRatios(double t0, const std::vector<double>& ratios) {
    std::vector<double> t{t0};
    for (double r : ratios) t.push_back(t.back() * r);
    return t;
}

DenseTensor randomTensor(std::vector<std::size_t> dims, std::uint64_t seed) {
    Xorshift64Star rng(seed);
    DenseTensor t(std::move(dims));
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniformSym();
    return t;
}

} // namespace

TEST_CASE("rate estimation from tangent series", "[diagnostics]") {
    SECTION("clean geometric decay is Q-linear at the common ratio") {
        std::vector<double> t;
        for (int k = 0; k <= 12; ++k) t.push_back(std::pow(0.3, k));
        const RateEstimate est = estimate_rate(t, 5);
        REQUIRE(est.classification == RateClass::QLinear);
        REQUIRE(est.rhoHat == Catch::Approx(0.3).epsilon(1e-12));
        REQUIRE(est.qLimsup == Catch::Approx(0.3).epsilon(1e-12));
        REQUIRE(est.tail.size() == 5);
    }

    SECTION("squaring decay is Q-superlinear") {
        std::vector<double> t{0.5};
        for (int k = 0; k < 6; ++k) t.push_back(t.back() * t.back());
        const RateEstimate est = estimate_rate(t, 5);
        REQUIRE(est.classification == RateClass::QSuperlinear);
        REQUIRE(est.tail.back() < 1e-9);
    }

    SECTION("ratios near one are sublinear/none") {
        std::vector<double> t;
        for (int k = 0; k <= 15; ++k) t.push_back(std::pow(0.999, k));
        REQUIRE(estimate_rate(t, 5).classification == RateClass::SublinearOrNone);
    }

    SECTION("banded ratios around a sub-one mean are Q-linear") {
        const std::vector<double> t =
            tangentsFromRatios(1.0, {0.5, 0.55, 0.5, 0.45, 0.5, 0.52, 0.48});
        const RateEstimate est = estimate_rate(t, 5);
        REQUIRE(est.classification == RateClass::QLinear);
        REQUIRE(est.rhoHat == Catch::Approx((0.45 + 0.5 + 0.52 + 0.48 + 0.5) / 5.0).epsilon(1e-12));
    }

    SECTION("oscillating ratios fall out of the band") {
        const std::vector<double> t =
            tangentsFromRatios(1.0, {0.3, 0.7, 0.3, 0.7, 0.3, 0.7, 0.3});
        REQUIRE(estimate_rate(t, 5).classification == RateClass::SublinearOrNone);
    }

    SECTION("needs tailWindow+1 usable tangents") {
        const std::vector<double> five{1.0, 0.5, 0.25, 0.125, 0.0625};
        REQUIRE_THROWS_AS(estimate_rate(five, 5), InsufficientTrace);
        REQUIRE_NOTHROW(estimate_rate(five, 4));
        REQUIRE_THROWS_AS(estimate_rate(five, 0), OutOfRange);
    }

    SECTION("a zero or non-finite tangent ends the usable series") {
        const std::vector<double> t{1.0, 0.5, 0.25, 0.125, 0.0625, 0.03125, 0.0,
                                    std::numeric_limits<double>::infinity()};
        const RateEstimate est = estimate_rate(t, 4);
        REQUIRE(est.rhoHat == Catch::Approx(0.5).epsilon(1e-12));
    }

    SECTION("the floor cuts off sub-resolution noise") {
        // A Q-linear decade-per-step decay that collapses into noise.
        std::vector<double> t{1.0, 0.1, 0.01, 1e-3, 1e-4, 1e-5, 1e-20, 0.5, 0.05};
        const RateEstimate floored = estimate_rate(t, 3, 1e-10);
        REQUIRE(floored.classification == RateClass::QLinear);
        REQUIRE(floored.rhoHat == Catch::Approx(0.1).epsilon(1e-12));
        const RateEstimate raw = estimate_rate(t, 3);
        REQUIRE(raw.classification != RateClass::QLinear);
    }
}

TEST_CASE("successive-ratio extraction from a trace", "[diagnostics]") {
    SweepTrace tr;
    tr.componentTan = {{1.0, 0.5, 0.25, 0.0, 0.125},
                       {1.0, 0.1, std::numeric_limits<double>::infinity()}};

    const std::vector<double> r0 = q_ratio_series(tr, 0);
    REQUIRE(r0 == std::vector<double>{0.5, 0.5}); // stops at the zero entry
    const std::vector<double> r1 = q_ratio_series(tr, 1);
    REQUIRE(r1 == std::vector<double>{0.1}); // stops at the infinity

    REQUIRE_THROWS_AS(q_ratio_series(tr, 2), OutOfRange);
    SweepTrace empty;
    REQUIRE_THROWS_AS(q_ratio_series(empty, 0), InsufficientTrace);
}

TEST_CASE("strict single-term dominance", "[diagnostics]") {
    const CPTensor cp = gen_mohlenkamp(); // weights 2, 1 on e1-, e2-spikes

    SECTION("near the heavy term") {
        const DominanceResult d = dominance_check(cp, RankOneRep({{1, 0.1}, {1, 0.2}, {1, 0.1}}));
        REQUIRE(d.holds);
        REQUIRE(d.jStar == 0);
    }

    SECTION("near the light term") {
        const DominanceResult d = dominance_check(cp, RankOneRep({{0.1, 1}, {0.2, 1}, {0.1, 1}}));
        REQUIRE(d.holds);
        REQUIRE(d.jStar == 1);
    }

    SECTION("exactly on the boundary: not strict") {
        // With weights 2 and 1 at order 3, scores tie at factor ratio 1:2.
        const DominanceResult d = dominance_check(cp, RankOneRep({{1, 2}, {1, 2}, {1, 2}}));
        REQUIRE_FALSE(d.holds);
    }

    SECTION("no mode-consistent winner") {
        const DominanceResult d = dominance_check(cp, RankOneRep({{1, 0.1}, {0.1, 1}, {1, 0.1}}));
        REQUIRE_FALSE(d.holds);
    }

    SECTION("scale-free in the point") {
        RankOneRep p({{1, 0.1}, {1, 0.2}, {1, 0.1}});
        RankOneRep q = p;
        for (std::size_t mu = 0; mu < 3; ++mu) {
            auto f = q.factor(mu);
            for (double& x : f) x *= (mu + 1) * 7.0;
            q.setFactor(mu, f);
        }
        REQUIRE(dominance_check(cp, p).holds == dominance_check(cp, q).holds);
        REQUIRE(dominance_check(cp, p).jStar == dominance_check(cp, q).jStar);
    }

    SECTION("validation") {
        const CPTensor order2({2.0, 1.0}, {Matrix::identity(2), Matrix::identity(2)}, true);
        REQUIRE_THROWS_AS(dominance_check(order2, RankOneRep({{1, 0}, {1, 0}})), OrderTooSmall);
        REQUIRE_THROWS_AS(dominance_check(cp, RankOneRep({{1, 0}, {1, 0}})), DimMismatch);
    }
}

TEST_CASE("superlinear contraction bound", "[diagnostics]") {
    const CPTensor cp = gen_mohlenkamp();

    SECTION("frozen values at a symmetric point, order 3") {
        // Interior mode is mode 1 only; products are lambda_j <b_j1, p_1>.
        const RankOneRep p({{0.4, 1}, {0.4, 1}, {0.4, 1}});
        REQUIRE(superlinear_bound(cp, p, 1) == Catch::Approx(0.64).epsilon(1e-14));
        REQUIRE(superlinear_bound(cp, p, 0) == Catch::Approx(1.5625).epsilon(1e-14));
    }

    SECTION("order 4 uses both interior modes") {
        const CPTensor cp4({2.0, 1.0},
                           {Matrix::identity(2), Matrix::identity(2), Matrix::identity(2),
                            Matrix::identity(2)},
                           true);
        const RankOneRep p({{0.5, 1}, {0.5, 1}, {0.5, 1}, {0.5, 1}});
        // j=0: 2 * 0.5 * 0.5 = 0.5; j=1: 1 * 1 * 1 = 1 -> bound = 0.25.
        REQUIRE(superlinear_bound(cp4, p, 1) == Catch::Approx(0.25).epsilon(1e-14));
    }

    SECTION("validation") {
        const RankOneRep p({{0.4, 1}, {0.4, 1}, {0.4, 1}});
        REQUIRE_THROWS_AS(superlinear_bound(cp, p, 2), OutOfRange);
        REQUIRE_THROWS_AS(superlinear_bound(cp, RankOneRep({{1, 0}, {1, 0}}), 0), DimMismatch);
        // Dominant interior product vanishes when p_1 is orthogonal to the column.
        const RankOneRep orth({{1, 1}, {0, 1}, {1, 1}});
        REQUIRE_THROWS_AS(superlinear_bound(cp, orth, 0), ZeroCoefficient);
    }
}

TEST_CASE("tangent ratios attain the bound on rank-2 targets", "[diagnostics]") {
    const CPTensor cp = gen_mohlenkamp();
    const DenseTensor b = cp_to_dense(cp);

    auto runWithReference = [&](double tau, std::size_t term) {
        TraceReference ref{evaluate_rank_one(cp.term(term)), cp.term(term), cp, term};
        SolverConfig cfg;
        cfg.maxSweeps = 12;
        cfg.tolGrad = 0.0;
        cfg.tolDeltaF = 0.0;
        return solve(b, RankOneRep({{tau, 1}, {tau, 1}, {tau, 1}}), cfg, ref);
    };

    SECTION("light-term basin") {
        const SolveResult res = runWithReference(0.4, 1);
        REQUIRE(check_sharpness_r2(res.trace) <= 1e-10);
    }

    SECTION("heavy-term basin") {
        const SolveResult res = runWithReference(0.6, 0);
        REQUIRE(check_sharpness_r2(res.trace) <= 1e-10);
    }

    SECTION("one ratio spot-checked against the bound directly") {
        const SolveResult res = runWithReference(0.4, 1);
        const std::vector<double>& t = res.trace.componentTan[0];
        const RankOneRep snapshot{res.trace.iterates[1]};
        const double bound = superlinear_bound(cp, snapshot, 1);
        REQUIRE(t[2] / t[1] == Catch::Approx(bound).epsilon(1e-10));
    }

    SECTION("requires a rank-2 reference decomposition") {
        SolverConfig cfg;
        cfg.maxSweeps = 5;
        cfg.tolGrad = 0.0;
        cfg.tolDeltaF = 0.0;
        const SolveResult bare = solve(b, RankOneRep({{0.4, 1}, {0.4, 1}, {0.4, 1}}), cfg);
        REQUIRE_THROWS_AS(check_sharpness_r2(bare.trace), InsufficientTrace);

        const CPTensor rank3 = gen_orthogonal_cp({3, 3, 3}, 3, 5);
        TraceReference ref{evaluate_rank_one(rank3.term(0)), rank3.term(0), rank3, 0};
        const SolveResult wrongRank =
            solve(cp_to_dense(rank3), RankOneRep({{1, 1, 1}, {1, 1, 1}, {1, 1, 1}}), cfg, ref);
        REQUIRE_THROWS_AS(check_sharpness_r2(wrongRank.trace), OutOfRange);
    }
}

TEST_CASE("attraction-boundary tangents", "[diagnostics]") {
    SECTION("frozen values for weight ratio two") {
        REQUIRE(basin_tangent(2.0, 1.0, 3) == 2.0);
        REQUIRE(basin_tangent(2.0, 1.0, 4) == Catch::Approx(std::sqrt(2.0)).margin(1e-15));
        REQUIRE(basin_tangent(2.0, 1.0, 5) == Catch::Approx(std::cbrt(2.0)).margin(1e-15));
    }

    SECTION("decreases toward one as the order grows") {
        double prev = basin_tangent(2.0, 1.0, 3);
        for (std::size_t d = 4; d <= 8; ++d) {
            const double t = basin_tangent(2.0, 1.0, d);
            REQUIRE(t < prev);
            REQUIRE(t > 1.0);
            prev = t;
        }
    }

    SECTION("equal weights give a diagonal boundary") {
        REQUIRE(basin_tangent(1.0, 1.0, 3) == 1.0);
        REQUIRE(basin_angle(1.0, 1.0, 4) == Catch::Approx(std::atan(1.0)).margin(1e-15));
    }

    SECTION("angle is the arctangent") {
        REQUIRE(basin_angle(2.0, 1.0, 3) == Catch::Approx(std::atan(2.0)).margin(1e-15));
    }

    SECTION("validation") {
        REQUIRE_THROWS_AS(basin_tangent(2.0, 1.0, 2), OrderTooSmall);
        REQUIRE_THROWS_AS(basin_tangent(-1.0, 1.0, 3), NegativeLambda);
        REQUIRE_THROWS_AS(basin_tangent(2.0, 0.0, 3), OutOfRange);
    }
}

TEST_CASE("descent audit", "[diagnostics]") {
    SECTION("a converged run passes") {
        // Stop on the objective-change tolerance: that fires one sweep after
        // the superlinear collapse, so the last recorded sweep is a settled
        // one rather than the collapse jump itself.
        const DenseTensor b = cp_to_dense(gen_mohlenkamp());
        SolverConfig cfg;
        cfg.tolGrad = 0.0;
        cfg.tolDeltaF = 1e-15;
        const SolveResult res = solve(b, RankOneRep({{0.4, 1}, {0.4, 1}, {0.4, 1}}), cfg);
        const AuditSummary s = descent_audit(res.trace);
        REQUIRE(s.recordsChecked == res.trace.records.size());
        REQUIRE(s.maxAscent <= 0.0 + 1e-14);
        REQUIRE(s.finalGradNorm <= 1e-13);
    }

    SECTION("an objective increase is flagged with its record index") {
        SweepTrace tr;
        MicroStepRecord good;
        good.fBefore = -0.1;
        good.fAfter = -0.2;
        MicroStepRecord bad;
        bad.fBefore = -0.2;
        bad.fAfter = -0.15; // ascent
        tr.records = {good, bad};
        tr.sweepDistance = {1e-9};
        tr.bNorm = 1.0;
        REQUIRE_THROWS_WITH(descent_audit(tr), Catch::Matchers::ContainsSubstring("record 1"));
    }

    SECTION("a run that is still moving fails the final-distance gate") {
        SweepTrace tr;
        MicroStepRecord good;
        good.fBefore = -0.1;
        good.fAfter = -0.2;
        tr.records = {good};
        tr.sweepDistance = {0.5};
        tr.bNorm = 1.0;
        REQUIRE_THROWS_AS(descent_audit(tr), AuditFailure);
        REQUIRE_NOTHROW(descent_audit(tr, /*relTol=*/1.0));
    }

    SECTION("a trace without a completed sweep fails") {
        SweepTrace tr;
        REQUIRE_THROWS_AS(descent_audit(tr), AuditFailure);
    }
}

TEST_CASE("coefficient split and angle measurements", "[diagnostics]") {
    SECTION("split against a reference line") {
        const DenseTensor ref({2, 2}, {1, 0, 0, 0});
        const DenseTensor v({2, 2}, {3, 4, 0, 0});
        const CoefficientSplit cs = coefficient_split(v, ref);
        REQUIRE(cs.c == 3.0);
        REQUIRE(cs.sNorm == 4.0);
        REQUIRE(tan_angle_tensor(v, ref) == Catch::Approx(4.0 / 3.0).epsilon(1e-15));
        REQUIRE_THROWS_AS(coefficient_split(v, DenseTensor({2, 2})), DegenerateFactor);
    }

    SECTION("mode-space tangent stays exact far below sqrt(machine eps)") {
        const std::vector<double> ref{1, 0};
        const std::vector<double> p{1, 1e-12};
        // The explicit-residual route resolves the angle exactly...
        REQUIRE(component_tan_angle(p, ref) == 1e-12);
        // ...while the Pythagorean tensor route rounds it to zero, which is
        // why per-mode tangents use the residual route.
        const DenseTensor refT({2, 2}, {1, 0, 0, 0});
        const DenseTensor vT({2, 2}, {1, 1e-12, 0, 0});
        REQUIRE(tan_angle_tensor(vT, refT) == 0.0);
    }

    SECTION("orthogonal iterates are reported, not silently zeroed") {
        REQUIRE_THROWS_AS(component_tan_angle({0, 1}, {1, 0}), OrthogonalToReference);
        const DenseTensor refT({2, 2}, {1, 0, 0, 0});
        const DenseTensor orthT({2, 2}, {0, 1, 0, 0});
        REQUIRE_THROWS_AS(tan_angle_tensor(orthT, refT), OrthogonalToReference);
    }

    SECTION("per-step contraction components multiply back to the tangent ratio") {
        const DenseTensor ref = randomTensor({3, 3}, 7);
        const DenseTensor before = randomTensor({3, 3}, 8);
        const DenseTensor after = randomTensor({3, 3}, 9);
        const QComponents q = q_components(before, after, ref);
        REQUIRE(q.tanAfter == Catch::Approx((q.qs / q.qc) * q.tanBefore).epsilon(1e-14));

        REQUIRE_THROWS_AS(q_components(ref, after, ref), ZeroCoefficient);
    }
}
