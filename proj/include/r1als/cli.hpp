#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "r1als/diagnostics.hpp"
#include "r1als/generators.hpp"
#include "r1als/io.hpp"
#include "r1als/oracles.hpp"
#include "r1als/solver.hpp"

namespace r1als {

// ---------------------------------------------------------------- config

/// Everything a single experiment needs; filled from flags and key=value
/// config files (flags win).
struct ExperimentConfig {
    std::string configPath; ///< optional key=value file merged under the flags

    // tensor source (exactly one)
    std::string tensorPath;
    std::string generateName;

    // generator parameters
    double genLambda = 0.5;
    double alpha2 = 2.0;
    double alpha3 = 0.72;
    std::size_t genN = 2;
    std::size_t genD = 3;
    std::size_t genRank = 2;
    std::vector<std::size_t> genDims;
    std::uint64_t genSeed = 42;

    // initial guess
    std::string initSpec = "random"; ///< "random", "tau", or a file path
    double initTau = 0.5;
    std::uint64_t seed = 1;

    // solver settings
    std::string orderSpec;
    std::size_t maxSweeps = 100000;
    double tolGrad = 1e-10;
    double tolDeltaF = 1e-15;
    bool rebalance = false;
    std::size_t traceEvery = 1;

    // reference for angle tracking
    std::string referencePath;
    std::size_t referenceTerm = 0; ///< 1-based CP term; 0 = unset

    // outputs
    std::string traceOut;
    std::string reportOut;
    std::string plotOut;
    std::size_t tailWindow = 5;
    double tanFloor = 1e-13; ///< tangents below this count as measurement noise

    std::size_t jobs = 1;
};

/// A loaded/generated target plus whatever structure came with it.
struct TargetTensor {
    DenseTensor dense;
    std::optional<CPTensor> cp;
    std::optional<BLambdaInstance> family;
    std::optional<OrderingInstance> ordering;
};

namespace detail {

[[nodiscard]] inline TargetTensor load_target(const ExperimentConfig& cfg) {
    const bool fromFile = !cfg.tensorPath.empty();
    const bool fromGen = !cfg.generateName.empty();
    if (fromFile == fromGen)
        throw OutOfRange("exactly one tensor source required: --tensor or --generate");

    if (fromFile) {
        TensorFile f = read_tensor_file(cfg.tensorPath);
        TargetTensor t{densify(f), std::nullopt, std::nullopt, std::nullopt};
        if (auto* cp = std::get_if<CPTensor>(&f)) t.cp = std::move(*cp);
        return t;
    }

    const std::string& g = cfg.generateName;
    if (g == "mohlenkamp") {
        CPTensor cp = gen_mohlenkamp();
        return {cp_to_dense(cp), std::move(cp), std::nullopt, std::nullopt};
    }
    if (g == "blambda") {
        BLambdaInstance inst = gen_b_lambda(cfg.genLambda, cfg.genD, cfg.genN, cfg.genSeed);
        DenseTensor dense = cp_to_dense(inst.cp);
        CPTensor cp = inst.cp;
        return {std::move(dense), std::move(cp), std::move(inst), std::nullopt};
    }
    if (g == "ordering") {
        OrderingInstance inst = gen_ordering_example(cfg.genLambda, cfg.alpha2, cfg.alpha3);
        DenseTensor dense = cp_to_dense(inst.cp);
        CPTensor cp = inst.cp;
        return {std::move(dense), std::move(cp), std::nullopt, std::move(inst)};
    }
    if (g == "orthogonal-cp") {
        std::vector<std::size_t> dims = cfg.genDims.empty()
                                            ? std::vector<std::size_t>{3, 3, 3}
                                            : cfg.genDims;
        CPTensor cp = gen_orthogonal_cp(dims, cfg.genRank, cfg.genSeed);
        return {cp_to_dense(cp), std::move(cp), std::nullopt, std::nullopt};
    }
    if (g == "random-dense") {
        std::vector<std::size_t> dims = cfg.genDims.empty()
                                            ? std::vector<std::size_t>{3, 3, 3}
                                            : cfg.genDims;
        return {gen_random_dense(dims, cfg.genSeed), std::nullopt, std::nullopt, std::nullopt};
    }
    if (g == "synthetic4") {
        TuckerTensor t = gen_synthetic_order4(cfg.genSeed);
        return {tucker_to_dense(t), std::nullopt, std::nullopt, std::nullopt};
    }
    throw OutOfRange("unknown generator '" + g + "'");
}

[[nodiscard]] inline RankOneRep build_init(const ExperimentConfig& cfg,
                                           const std::vector<std::size_t>& dims) {
    if (cfg.initSpec == "random") {
        Xorshift64Star rng(cfg.seed);
        std::vector<std::vector<double>> f;
        for (std::size_t n : dims) f.push_back(rng.uniformSymVector(n));
        return RankOneRep(std::move(f));
    }
    if (cfg.initSpec == "tau") {
        for (std::size_t n : dims)
            if (n != 2) throw OutOfRange("tau-form init needs every mode dimension equal to 2");
        std::vector<double> f{cfg.initTau, 1.0};
        return RankOneRep(std::vector<std::vector<double>>(dims.size(), f));
    }
    // anything else is a tensor file holding a rank-one cp decomposition
    TensorFile f = read_tensor_file(cfg.initSpec);
    const auto* cp = std::get_if<CPTensor>(&f);
    if (!cp || cp->rank() != 1)
        throw ParseError(cfg.initSpec + ": init file must hold a rank-one cp decomposition");
    RankOneRep rep = cp->term(0);
    std::vector<double> f0 = rep.factor(0);
    for (double& x : f0) x *= cp->weights()[0];
    rep.setFactor(0, std::move(f0));
    return rep;
}

[[nodiscard]] inline TraceReference reference_from_term(const CPTensor& cp, std::size_t term1Based) {
    if (term1Based == 0 || term1Based > cp.rank())
        throw OutOfRange("--reference-term out of range (1-based CP term index)");
    const std::size_t j = term1Based - 1;
    RankOneRep factors = cp.term(j);
    RankOneRep scaled = factors;
    std::vector<double> f0 = scaled.factor(0);
    for (double& x : f0) x *= cp.weights()[j];
    scaled.setFactor(0, std::move(f0));
    return TraceReference{evaluate_rank_one(scaled), std::move(factors), cp, j};
}

[[nodiscard]] inline std::optional<TraceReference> build_reference(const ExperimentConfig& cfg,
                                                                  const TargetTensor& target) {
    if (!cfg.referencePath.empty() && cfg.referenceTerm != 0)
        throw OutOfRange("--reference and --reference-term are mutually exclusive");
    if (cfg.referenceTerm != 0) {
        if (!target.cp)
            throw OutOfRange("--reference-term needs a cp-structured target");
        return reference_from_term(*target.cp, cfg.referenceTerm);
    }
    if (!cfg.referencePath.empty()) {
        TensorFile f = read_tensor_file(cfg.referencePath);
        TraceReference ref{densify(f), std::nullopt, std::nullopt, 0};
        if (auto* cp = std::get_if<CPTensor>(&f)) {
            if (cp->rank() == 1) ref.factors = cp->term(0);
            ref.cp = std::move(*cp);
        }
        return ref;
    }
    return std::nullopt;
}

[[nodiscard]] inline SolverConfig solver_config(const ExperimentConfig& cfg, std::size_t d) {
    SolverConfig sc;
    sc.maxSweeps = cfg.maxSweeps;
    sc.tolGrad = cfg.tolGrad;
    sc.tolDeltaF = cfg.tolDeltaF;
    sc.rebalance = cfg.rebalance;
    sc.traceEvery = cfg.traceEvery;
    if (!cfg.orderSpec.empty()) {
        std::vector<std::size_t> order;
        std::stringstream ss(cfg.orderSpec);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            std::size_t v = 0;
            try {
                v = static_cast<std::size_t>(std::stoull(tok));
            } catch (const std::exception&) {
                throw OutOfRange("--order: bad mode index '" + tok + "'");
            }
            if (v == 0) throw OutOfRange("--order uses 1-based mode indices");
            order.push_back(v - 1);
        }
        sc.modeOrder = std::move(order);
    }
    sc.validate(d);
    return sc;
}

/// Per-mode rate estimates for every mode that has a usable tangent series.
/// A run shorter than the requested tail is still summarized with the widest
/// window that fits (reported in the estimate), down to two ratios.
[[nodiscard]] inline std::vector<std::pair<std::size_t, RateEstimate>>
rate_summary(const SweepTrace& trace, std::size_t tailWindow, double floor = 0.0) {
    std::vector<std::pair<std::size_t, RateEstimate>> out;
    for (std::size_t mu = 0; mu < trace.componentTan.size(); ++mu) {
        for (std::size_t window = tailWindow; window >= 2; --window) {
            try {
                out.emplace_back(mu, estimate_rate(trace.componentTan[mu], window, floor));
                break;
            } catch (const InsufficientTrace&) {
                // shrink and retry; a mode with fewer than 3 tangents stays out
            }
        }
    }
    return out;
}

} // namespace detail

// ---------------------------------------------------------------- run

inline int cmd_run(const ExperimentConfig& cfg, std::ostream& out = std::cout) {
    const TargetTensor target = detail::load_target(cfg);
    const RankOneRep init = detail::build_init(cfg, target.dense.dims());
    const SolverConfig sc = detail::solver_config(cfg, target.dense.order());
    std::optional<TraceReference> ref = detail::build_reference(cfg, target);

    const SolveResult res = solve(target.dense, init, sc, std::move(ref));

    out << "sweeps " << res.trace.sweeps << '\n';
    out << "termination " << to_string(res.trace.reason) << '\n';
    out << "final_f " << format_double(res.finalF) << '\n';
    out << "final_grad_norm " << format_double(res.finalGradNorm) << '\n';

    if (!cfg.traceOut.empty()) write_trace_csv_file(cfg.traceOut, res.trace);
    if (!cfg.reportOut.empty()) {
        std::ofstream rep(cfg.reportOut);
        if (!rep) throw ParseError(cfg.reportOut + ": cannot open for writing");
        const auto rates = detail::rate_summary(res.trace, cfg.tailWindow, cfg.tanFloor);
        if (!rates.empty())
            write_rate_report(rep, rates);
        else if (res.trace.componentTan.empty())
            rep << "no per-mode tangent series (reference with factors required)\n";
        else
            rep << "run too short for tail window " << cfg.tailWindow << '\n';
    }
    if (!cfg.plotOut.empty()) {
        if (cfg.traceOut.empty())
            throw OutOfRange("--plot-out needs --trace-out (the script plots that file)");
        std::ofstream plot(cfg.plotOut);
        if (!plot) throw ParseError(cfg.plotOut + ": cannot open for writing");
        write_gnuplot_script(plot, "tangent decay", {{cfg.traceOut, "run"}});
    }
    return res.trace.reason == TerminationReason::MaxSweeps ? 2 : 0;
}

// ---------------------------------------------------------------- sweep

/// One grid point of a parameter sweep; empty error means success.
struct SweepRow {
    double param = 0.0;
    std::string convergedTo;
    double finalF = 0.0;
    double qLimsup = 0.0;
    std::string classification;
    std::string error;
};

namespace detail {

/// Label the limit of a run against the known critical points of the family.
[[nodiscard]] inline std::string limit_label(const TargetTensor& target, const SolveResult& res) {
    const double f = res.finalF;
    if (target.family) {
        // transverse coefficient of the first factor against p and q
        const auto& p0 = res.solution.factor(0);
        const double cp_ = inner(p0, target.family->p);
        const double cq = inner(p0, target.family->q);
        if (cp_ != 0.0) {
            const double alpha = cq / cp_;
            if (std::abs(alpha) < 1e-4) return "alpha0";
            return alpha > 0.0 ? "alpha+" : "alpha-";
        }
        return "other";
    }
    if (target.cp && target.cp->rank() == 2) {
        const double b2 = inner(target.dense.values(), target.dense.values());
        const double w1 = target.cp->weights()[0], w2 = target.cp->weights()[1];
        if (std::abs(f + w1 * w1 / (2.0 * b2)) < 1e-6) return "term1";
        if (std::abs(f + w2 * w2 / (2.0 * b2)) < 1e-6) return "term2";
        return "other";
    }
    return "f=" + format_double(f);
}

/// Re-run with the converged limit as reference so tangent ratios and the
/// classification describe approach to the actual limit.
[[nodiscard]] inline SolveResult resolve_with_limit_reference(const DenseTensor& b,
                                                              const RankOneRep& init,
                                                              const SolverConfig& sc,
                                                              const SolveResult& first) {
    TraceReference ref{evaluate_rank_one(first.solution), first.solution, std::nullopt, 0};
    return solve(b, init, sc, std::move(ref));
}

} // namespace detail

inline int cmd_sweep(const ExperimentConfig& cfg, const std::string& param,
                     const std::vector<double>& values, const std::string& outDir,
                     std::ostream& out = std::cout) {
    if (values.empty()) {
        std::cerr << "sweep: empty grid; pass --values v1,v2,...\n";
        return 1;
    }
    if (param != "tau" && param != "lambda" && param != "seed") {
        std::cerr << "sweep: --param must be tau, lambda, or seed\n";
        return 1;
    }
    std::filesystem::create_directories(outDir.empty() ? "." : outDir);
    const std::string dir = outDir.empty() ? "." : outDir;

    std::vector<SweepRow> rows(values.size());
    std::atomic<std::size_t> nextIndex{0};

    auto worker = [&]() {
        for (;;) {
            const std::size_t i = nextIndex.fetch_add(1);
            if (i >= values.size()) return;
            SweepRow& row = rows[i];
            row.param = values[i];
            try {
                ExperimentConfig local = cfg;
                if (param == "tau") {
                    if (local.generateName.empty()) local.generateName = "mohlenkamp";
                    local.initSpec = "tau";
                    local.initTau = values[i];
                } else if (param == "lambda") {
                    if (local.generateName.empty()) local.generateName = "blambda";
                    local.genLambda = values[i];
                } else {
                    local.seed = static_cast<std::uint64_t>(values[i]);
                    local.initSpec = "random";
                }
                const TargetTensor target = detail::load_target(local);
                const RankOneRep init = detail::build_init(local, target.dense.dims());
                const SolverConfig sc = detail::solver_config(local, target.dense.order());

                SolveResult first = solve(target.dense, init, sc);
                SolveResult traced =
                    detail::resolve_with_limit_reference(target.dense, init, sc, first);

                row.convergedTo = detail::limit_label(target, traced);
                row.finalF = traced.finalF;
                const auto rates = detail::rate_summary(traced.trace, local.tailWindow, local.tanFloor);
                if (!rates.empty()) {
                    row.qLimsup = rates.front().second.qLimsup;
                    row.classification = to_string(rates.front().second.classification);
                } else {
                    row.classification = "unclassified";
                }

                std::ostringstream name;
                name << dir << '/' << param << '_' << format_param(values[i]) << ".csv";
                write_trace_csv_file(name.str(), traced.trace);
            } catch (const std::exception& e) {
                row.error = e.what();
            }
        }
    };

    const std::size_t nThreads = std::max<std::size_t>(1, std::min(cfg.jobs, values.size()));
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < nThreads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();

    const std::string summaryPath =
        cfg.reportOut.empty() ? dir + "/summary.csv" : cfg.reportOut;
    std::ofstream sum(summaryPath);
    if (!sum) throw ParseError(summaryPath + ": cannot open for writing");
    sum << "param,converged_to,final_f,q_limsup,classification,error\n";
    for (const SweepRow& r : rows) {
        sum << format_param(r.param) << ',';
        if (r.error.empty()) {
            sum << r.convergedTo << ',' << format_double(r.finalF) << ','
                << format_double(r.qLimsup) << ',' << r.classification << ",\n";
        } else {
            std::string sanitized = r.error;
            for (char& c : sanitized)
                if (c == ',' || c == '\n') c = ';';
            sum << ",,," << ',' << sanitized << '\n';
        }
    }
    out << "summary " << summaryPath << '\n';
    return 0;
}

// ---------------------------------------------------------------- verify

inline int cmd_verify(const ExperimentConfig& cfg, const std::string& pointPath,
                      std::ostream& out = std::cout) {
    const TargetTensor target = detail::load_target(cfg);

    std::optional<RankOneRep> point;
    if (!pointPath.empty()) {
        TensorFile f = read_tensor_file(pointPath);
        const auto* cp = std::get_if<CPTensor>(&f);
        if (!cp || cp->rank() != 1)
            throw ParseError(pointPath + ": point file must hold a rank-one cp decomposition");
        RankOneRep rep = cp->term(0);
        std::vector<double> f0 = rep.factor(0);
        for (double& x : f0) x *= cp->weights()[0];
        rep.setFactor(0, std::move(f0));
        point = std::move(rep);
    } else {
        const RankOneRep init = detail::build_init(cfg, target.dense.dims());
        const SolverConfig sc = detail::solver_config(cfg, target.dense.order());
        point = solve(target.dense, init, sc).solution;
    }

    bool pass = true;
    Certificate cert;
    try {
        cert = singular_certificate(target.dense, *point);
    } catch (const NotStationary& e) {
        out << "not_stationary " << e.what() << '\n';
        return 1;
    }
    write_certificate_report(out, cert);
    if (!cert.allMatch)
        out << "warning: largest singular value does not match the critical value on every "
               "pair (saddle or non-global critical point)\n";

    const DenseTensor v = evaluate_rank_one(*point);
    const double b2 = inner(target.dense.values(), target.dense.values());
    const double f = objective_f(v, target.dense);
    const double energyResidual = std::abs(f + inner(v.values(), v.values()) / (2.0 * b2));
    out << "energy_identity_residual " << format_double(energyResidual) << '\n';
    if (energyResidual > 1e-10) pass = false;

    const double fd = finite_diff_gradient_check(target.dense, *point);
    out << "finite_diff_deviation " << format_double(fd) << '\n';
    if (fd > 1e-5) pass = false;

    out << (pass ? "verify pass" : "verify fail") << '\n';
    return pass ? 0 : 1;
}

// ---------------------------------------------------------------- generate

inline int cmd_generate(const ExperimentConfig& cfg, const std::string& outPath,
                        std::ostream& out = std::cout) {
    if (cfg.generateName.empty()) throw OutOfRange("generate: --generate NAME required");
    if (outPath.empty()) throw OutOfRange("generate: --out PATH required");
    const TargetTensor target = detail::load_target(cfg);
    if (target.cp)
        write_tensor_file(outPath, TensorFile{*target.cp});
    else if (cfg.generateName == "synthetic4")
        write_tensor_file(outPath, TensorFile{gen_synthetic_order4(cfg.genSeed)});
    else
        write_tensor_file(outPath, TensorFile{target.dense});
    out << "wrote " << outPath << '\n';
    return 0;
}

// ---------------------------------------------------------------- reproduce

namespace detail {

inline void reproduce_tau_family(const std::string& dir, const std::string& figure,
                                 const std::vector<double>& taus, std::size_t referenceTerm,
                                 std::ostream& out) {
    std::vector<std::pair<std::string, std::string>> files;
    for (double tau : taus) {
        ExperimentConfig cfg;
        cfg.generateName = "mohlenkamp";
        cfg.initSpec = "tau";
        cfg.initTau = tau;
        cfg.referenceTerm = referenceTerm;
        cfg.tolGrad = 0.0;          // run on a fixed sweep budget for clean series
        cfg.tolDeltaF = 0.0;
        cfg.maxSweeps = 60;

        const TargetTensor target = load_target(cfg);
        const RankOneRep init = build_init(cfg, target.dense.dims());
        const SolverConfig sc = solver_config(cfg, target.dense.order());
        const SolveResult res =
            solve(target.dense, init, sc, build_reference(cfg, target));

        std::ostringstream name;
        name << "tau_" << format_param(tau) << ".csv";
        write_trace_csv_file(dir + "/" + name.str(), res.trace);
        files.emplace_back(name.str(), "tau=" + format_param(tau));
        out << "tau " << format_param(tau) << " final_f " << format_double(res.finalF) << '\n';
    }
    // column 9 = tangent, 10 = step ratio
    const std::size_t column = figure == "fig-tan" ? 9 : 10;
    std::ofstream plot(dir + "/" + figure + ".gp");
    write_gnuplot_script(plot,
                         figure == "fig-tan" ? "tangent to limit term"
                                             : "successive tangent ratios",
                         files, column);
}

inline void reproduce_blambda(const std::string& dir, double lambda, std::size_t maxSweeps,
                              std::size_t traceEvery, std::ostream& out,
                              const std::string& figure) {
    ExperimentConfig cfg;
    cfg.generateName = "blambda";
    cfg.genLambda = lambda;
    cfg.genN = 8;
    cfg.genD = 3;
    cfg.genSeed = 42;
    cfg.seed = 7;
    cfg.maxSweeps = maxSweeps;
    cfg.tolGrad = 0.0;          // fixed budget: figure series have a set length
    cfg.tolDeltaF = 0.0;
    cfg.traceEvery = traceEvery;

    const TargetTensor target = load_target(cfg);
    const RankOneRep init = build_init(cfg, target.dense.dims());
    const SolverConfig sc = solver_config(cfg, target.dense.order());

    // reference: the pure-p term of the family (the limit below the bifurcation)
    TraceReference ref =
        reference_from_term(target.family->cp, target.family->pTermIndex + 1);
    const SolveResult res = solve(target.dense, init, sc, std::move(ref));

    std::ostringstream name;
    name << "blambda_" << format_param(lambda) << ".csv";
    write_trace_csv_file(dir + "/" + name.str(), res.trace);
    std::ofstream plot(dir + "/" + figure + ".gp");
    write_gnuplot_script(plot, "successive tangent ratios", {{name.str(), "lambda=" +
                         format_param(lambda)}}, 10);

    out << "lambda " << format_param(lambda) << " termination "
        << to_string(res.trace.reason) << " sweeps " << res.trace.sweeps << '\n';
    const auto rates = rate_summary(res.trace, 5, cfg.tanFloor);
    if (!rates.empty()) {
        out << "q_limsup " << format_double(rates.front().second.qLimsup) << '\n';
        out << "classification " << to_string(rates.front().second.classification) << '\n';
        if (lambda < 0.5)
            out << "predicted_rate " << format_double(b_lambda_rate(lambda)) << '\n';
    }
}

inline void reproduce_ordering(const std::string& dir, std::ostream& out) {
    const OrderingInstance inst = gen_ordering_example(0.9, 2.0, 0.72);
    const DenseTensor b = cp_to_dense(inst.cp);

    for (const std::vector<std::size_t>& order :
         {std::vector<std::size_t>{0, 1, 2}, std::vector<std::size_t>{0, 2, 1}}) {
        SolverConfig sc;
        sc.modeOrder = order;
        sc.tolGrad = 1e-12;
        const SolveResult res = solve(b, inst.init, sc);
        std::ostringstream name;
        name << "ordering_" << (order[1] == 1 ? "123" : "132") << ".csv";
        write_trace_csv_file(dir + "/" + name.str(), res.trace);
        out << "order " << (order[1] == 1 ? "1,2,3" : "1,3,2") << " final_f "
            << format_double(res.finalF) << '\n';
    }
    out << "predicted_f_term1 " << format_double(inst.fTerm1) << '\n';
    out << "predicted_f_term2 " << format_double(inst.fTerm2) << '\n';
    out << "predicted_gap " << format_double(inst.gap) << '\n';
}

} // namespace detail

inline int cmd_reproduce(const std::string& figure, const std::string& outDir,
                         std::ostream& out = std::cout) {
    const std::string dir = outDir.empty() ? "." : outDir;
    std::filesystem::create_directories(dir);

    if (figure == "fig-tan")
        detail::reproduce_tau_family(dir, figure, {0.4, 0.495, 0.4999}, 2, out);
    else if (figure == "fig-q1")
        detail::reproduce_tau_family(dir, figure, {0.5001, 0.505, 0.6}, 1, out);
    else if (figure == "fig-q2")
        detail::reproduce_tau_family(dir, figure, {0.4999, 0.495, 0.4}, 2, out);
    else if (figure == "fig-blambda-02")
        detail::reproduce_blambda(dir, 0.2, 40, 1, out, figure);
    else if (figure == "fig-blambda-05")
        detail::reproduce_blambda(dir, 0.5, 20000, 10, out, figure);
    else if (figure == "ordering-demo")
        detail::reproduce_ordering(dir, out);
    else
        throw UnknownFigure("reproduce: unknown figure id '" + figure + "'");
    return 0;
}

// ---------------------------------------------------------------- front end

namespace detail {

/// Registers the flags shared by run/sweep/verify onto a subcommand.
inline void add_shared_options(CLI::App* app, ExperimentConfig& cfg) {
    app->add_option("--tensor", cfg.tensorPath, "tensor file to approximate");
    app->add_option("--generate", cfg.generateName,
                    "generator name: mohlenkamp, blambda, ordering, orthogonal-cp, "
                    "random-dense, synthetic4");
    app->add_option("--lambda", cfg.genLambda, "family parameter for blambda/ordering");
    app->add_option("--alpha2", cfg.alpha2, "ordering start coefficient, mode 2");
    app->add_option("--alpha3", cfg.alpha3, "ordering start coefficient, mode 3");
    app->add_option("--dim-n", cfg.genN, "mode dimension for blambda");
    app->add_option("--order-d", cfg.genD, "tensor order for blambda");
    app->add_option("--rank", cfg.genRank, "rank for orthogonal-cp");
    app->add_option("--dims", cfg.genDims, "dims for random-dense / orthogonal-cp")
        ->delimiter(',');
    app->add_option("--gen-seed", cfg.genSeed, "seed driving generator randomness");

    app->add_option("--init", cfg.initSpec, "initial guess: random, tau, or a file path");
    app->add_option("--init-tau", cfg.initTau, "tau for the (tau,1)x...x(tau,1) start")
        ->each([&cfg](const std::string&) { cfg.initSpec = "tau"; });
    app->add_option("--seed", cfg.seed, "seed for the random initial guess");

    app->add_option("--order", cfg.orderSpec, "mode update order, e.g. 1,3,2 (1-based)");
    app->add_option("--max-sweeps", cfg.maxSweeps, "sweep budget");
    app->add_option("--tol-grad", cfg.tolGrad, "gradient sup-norm stop (0 disables)");
    app->add_option("--tol-df", cfg.tolDeltaF, "relative per-sweep f change stop (0 disables)");
    app->add_flag("--rebalance", cfg.rebalance, "equalize factor norms after each sweep");
    app->add_option("--trace-every", cfg.traceEvery, "retain records every n-th sweep");

    app->add_option("--reference", cfg.referencePath, "reference tensor file for angles");
    app->add_option("--reference-term", cfg.referenceTerm,
                    "1-based CP term of the target as angle reference");

    app->add_option("--trace-out", cfg.traceOut, "trace CSV path");
    app->add_option("--report-out", cfg.reportOut, "rate report / summary path");
    app->add_option("--plot-out", cfg.plotOut, "plot script path");
    app->add_option("--tail-window", cfg.tailWindow, "ratios in the rate tail");
    app->add_option("--tan-floor", cfg.tanFloor,
                    "tangents below this are noise; ends the rate-estimation series");
    app->add_option("--jobs", cfg.jobs, "concurrent grid points for sweep");

    app->add_option("--config", cfg.configPath, "key=value config file; flags override");
}

/// Merges a key=value config file into an already-parsed subcommand by
/// feeding each value through the matching option object, so file values get
/// the same conversion and validation as flags.  Options the command line
/// already set keep their value.
inline void apply_config_file(CLI::App& sub, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open");

    auto trim = [](std::string s) {
        const auto notSpace = [](unsigned char c) { return !std::isspace(c); };
        s.erase(s.begin(), std::find_if(s.begin(), s.end(), notSpace));
        s.erase(std::find_if(s.rbegin(), s.rend(), notSpace).base(), s.end());
        return s;
    };

    std::string line;
    std::size_t lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;

        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError(path + ": line " + std::to_string(lineNo) +
                             ": expected key=value, got '" + line + "'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));

        CLI::Option* opt = sub.get_option_no_throw("--" + key);
        if (!opt || key == "config")
            throw ParseError(path + ": line " + std::to_string(lineNo) + ": unknown option '" +
                             key + "'");
        if (opt->count() > 0) continue; // the command line wins
        opt->add_result(value);
        opt->run_callback();
    }
}

} // namespace detail

/// Full command line driver.  Returns the process exit code.
inline int run_cli(int argc, const char* const* argv) {
    CLI::App app{"rank-one tensor approximation toolkit"};
    app.require_subcommand(1);

    ExperimentConfig cfg;

    CLI::App* run = app.add_subcommand("run", "solve one instance and trace it");
    detail::add_shared_options(run, cfg);

    CLI::App* sweep = app.add_subcommand("sweep", "solve a parameter grid");
    detail::add_shared_options(sweep, cfg);
    std::string sweepParam = "tau";
    std::vector<double> sweepValues;
    std::string sweepOutDir = "sweep-out";
    sweep->add_option("--param", sweepParam, "grid parameter: tau, lambda, or seed");
    sweep->add_option("--values", sweepValues, "grid values")->delimiter(',');
    sweep->add_option("--out-dir", sweepOutDir, "directory for per-point traces");

    CLI::App* verify = app.add_subcommand("verify", "oracle checks at a critical point");
    detail::add_shared_options(verify, cfg);
    std::string pointPath;
    verify->add_option("--point", pointPath, "rank-one cp file holding the point to certify");

    CLI::App* generate = app.add_subcommand("generate", "write a benchmark tensor file");
    detail::add_shared_options(generate, cfg);
    std::string genOut;
    generate->add_option("--out", genOut, "output tensor file");

    CLI::App* reproduce = app.add_subcommand("reproduce", "canned experiments");
    std::string figure;
    std::string reproduceDir = "figures";
    reproduce->add_option("--figure", figure,
                          "fig-tan | fig-q1 | fig-q2 | fig-blambda-02 | fig-blambda-05 | "
                          "ordering-demo")
        ->required();
    reproduce->add_option("--out-dir", reproduceDir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // app.exit prints the usage/help text but reports parser-specific
        // codes; the exit contract allows only 0 (help) or 1 (error).
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        for (CLI::App* sub : {run, sweep, verify, generate})
            if (sub->parsed() && !cfg.configPath.empty())
                detail::apply_config_file(*sub, cfg.configPath);

        if (run->parsed()) return cmd_run(cfg);
        if (sweep->parsed()) return cmd_sweep(cfg, sweepParam, sweepValues, sweepOutDir);
        if (verify->parsed()) return cmd_verify(cfg, pointPath);
        if (generate->parsed()) return cmd_generate(cfg, genOut);
        if (reproduce->parsed()) return cmd_reproduce(figure, reproduceDir);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

} // namespace r1als
