#include <catch_amalgamated.hpp>

#include "r1als/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <iostream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

using namespace r1als;
using Catch::Matchers::ContainsSubstring;

namespace {

const std::string kTraceHeader =
    "k,mu,f,norm_v,delta_f,identity_residual,grad_norm,factor_norm_mu,"
    "tan_angle_ref,q_ratio_ref";

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("r1als_cli_test_" + std::to_string(::getpid()));
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    [[nodiscard]] std::string file(const std::string& name) const {
        return (path / name).string();
    }
};

/// Invokes the full driver with captured stdout/stderr.
int runCli(std::initializer_list<std::string> args, std::string* outText = nullptr,
           std::string* errText = nullptr) {
    std::vector<std::string> store{"r1als"};
    store.insert(store.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    argv.reserve(store.size());
    for (const std::string& s : store) argv.push_back(s.c_str());

    std::ostringstream out, err;
    std::streambuf* oldOut = std::cout.rdbuf(out.rdbuf());
    std::streambuf* oldErr = std::cerr.rdbuf(err.rdbuf());
    const int code = run_cli(static_cast<int>(argv.size()), argv.data());
    std::cout.rdbuf(oldOut);
    std::cerr.rdbuf(oldErr);
    if (outText) *outText = out.str();
    if (errText) *errText = err.str();
    return code;
}

std::string readFile(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> splitLines(const std::string& s) {
    std::vector<std::string> lines;
    std::string cur;
    for (char c : s) {
        if (c == '\n') {
            lines.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) lines.push_back(cur);
    return lines;
}

std::vector<std::string> splitCsvRow(const std::string& row) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : row) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    cells.push_back(cur);
    return cells;
}

/// Number printed directly after `key` in a report-style text blob.
double valueAfter(const std::string& text, const std::string& key) {
    const std::size_t pos = text.find(key);
    REQUIRE(pos != std::string::npos);
    return std::strtod(text.c_str() + pos + key.size(), nullptr);
}

std::vector<double> allValuesAfter(const std::string& text, const std::string& key) {
    std::vector<double> vals;
    std::size_t pos = 0;
    while ((pos = text.find(key, pos)) != std::string::npos) {
        pos += key.size();
        vals.push_back(std::strtod(text.c_str() + pos, nullptr));
    }
    return vals;
}

/// Rank-one factors as a writable rank-one cp file: unit columns, the
/// overall scale carried by the single weight.
CPTensor rankOneToCp(const RankOneRep& p) {
    double weight = 1.0;
    std::vector<Matrix> factors;
    for (std::size_t mu = 0; mu < p.order(); ++mu) {
        const std::vector<double>& f = p.factor(mu);
        const double n = norm(f);
        weight *= n;
        Matrix col(f.size(), 1, 0.0);
        for (std::size_t i = 0; i < f.size(); ++i) col(i, 0) = f[i] / n;
        factors.push_back(std::move(col));
    }
    return CPTensor({weight}, std::move(factors));
}

} // namespace

TEST_CASE("generate writes benchmark tensors that read back", "[cli]") {
    TempDir tmp;

    SECTION("cp-structured generators serialize their structure") {
        ExperimentConfig cfg;
        cfg.generateName = "mohlenkamp";
        std::ostringstream out;
        const std::string path = tmp.file("moh.tns");
        REQUIRE(cmd_generate(cfg, path, out) == 0);
        REQUIRE_THAT(out.str(), ContainsSubstring("wrote " + path));

        const TensorFile back = read_tensor_file(path);
        REQUIRE(std::holds_alternative<CPTensor>(back));
        REQUIRE(std::get<CPTensor>(back).rank() == 2);
        REQUIRE(densify(back).values() ==
                std::vector<double>{2, 0, 0, 0, 0, 0, 0, 1});
    }

    SECTION("the order-4 benchmark stays in tucker form") {
        ExperimentConfig cfg;
        cfg.generateName = "synthetic4";
        std::ostringstream out;
        const std::string path = tmp.file("synth.tns");
        REQUIRE(cmd_generate(cfg, path, out) == 0);
        REQUIRE(std::holds_alternative<TuckerTensor>(read_tensor_file(path)));
    }

    SECTION("missing arguments and unknown generators are rejected") {
        ExperimentConfig cfg;
        std::ostringstream out;
        REQUIRE_THROWS_AS(cmd_generate(cfg, tmp.file("x.tns"), out), OutOfRange);
        cfg.generateName = "mohlenkamp";
        REQUIRE_THROWS_AS(cmd_generate(cfg, "", out), OutOfRange);
        cfg.generateName = "does-not-exist";
        REQUIRE_THROWS_AS(cmd_generate(cfg, tmp.file("x.tns"), out), OutOfRange);
    }
}

TEST_CASE("run drives a traced solve end to end", "[cli]") {
    TempDir tmp;
    const std::string trace = tmp.file("trace.csv");
    const std::string report = tmp.file("report.txt");
    const std::string plot = tmp.file("plot.gp");

    std::string out;
    const int code = runCli({"run", "--generate", "mohlenkamp", "--init-tau", "0.6",
                             "--reference-term", "1", "--tol-grad", "1e-12",
                             "--trace-out", trace, "--report-out", report,
                             "--plot-out", plot},
                            &out);
    REQUIRE(code == 0);
    REQUIRE_THAT(out, ContainsSubstring("termination grad-tolerance"));
    REQUIRE(std::abs(valueAfter(out, "final_f ") - (-0.4)) < 1e-9);
    REQUIRE(valueAfter(out, "sweeps ") >= 2.0);

    const std::vector<std::string> lines = splitLines(readFile(trace));
    REQUIRE(lines.size() >= 3);
    REQUIRE(lines[0] == kTraceHeader);
    REQUIRE_FALSE(splitCsvRow(lines[1])[8].empty()); // tangent to the reference term

    const std::string rep = readFile(report);
    REQUIRE_THAT(rep, ContainsSubstring("mode 1"));
    REQUIRE_THAT(rep, ContainsSubstring("q_limsup"));
    REQUIRE_THAT(rep, ContainsSubstring("classification"));

    const std::string gp = readFile(plot);
    REQUIRE_THAT(gp, ContainsSubstring("set logscale y"));
    REQUIRE_THAT(gp, ContainsSubstring(trace));

    SECTION("repeated invocations are byte-deterministic") {
        const std::string trace2 = tmp.file("trace2.csv");
        REQUIRE(runCli({"run", "--generate", "mohlenkamp", "--init-tau", "0.6",
                        "--reference-term", "1", "--tol-grad", "1e-12",
                        "--trace-out", trace2}) == 0);
        REQUIRE(readFile(trace2) == readFile(trace));
    }

    SECTION("without a reference the report explains what is missing") {
        const std::string report2 = tmp.file("report2.txt");
        REQUIRE(runCli({"run", "--generate", "mohlenkamp", "--init-tau", "0.6",
                        "--tol-grad", "1e-12", "--report-out", report2}) == 0);
        REQUIRE_THAT(readFile(report2),
                     ContainsSubstring("no per-mode tangent series"));
    }
}

TEST_CASE("run exits 2 when the sweep budget is exhausted", "[cli]") {
    // At the degenerate family parameter 1/2 convergence is sublinear, so a
    // 50-sweep budget cannot reach either tolerance.
    std::string out;
    const int code = runCli({"run", "--generate", "blambda", "--lambda", "0.5",
                             "--max-sweeps", "50"},
                            &out);
    REQUIRE(code == 2);
    REQUIRE_THAT(out, ContainsSubstring("termination max-sweeps"));
    REQUIRE_THAT(out, ContainsSubstring("sweeps 50"));
}

TEST_CASE("initial guesses come from tau form, files, or seeds", "[cli]") {
    TempDir tmp;

    SECTION("tau form requires every mode dimension equal to 2") {
        std::string err;
        const int code = runCli({"run", "--generate", "blambda", "--lambda", "0.2",
                                 "--dim-n", "3", "--init-tau", "0.4"},
                                nullptr, &err);
        REQUIRE(code == 1);
        REQUIRE_THAT(err, ContainsSubstring("error:"));
        REQUIRE_THAT(err, ContainsSubstring("mode dimension equal to 2"));
    }

    SECTION("a rank-one cp file seeds the iterate exactly") {
        const std::string moh = tmp.file("moh.tns");
        REQUIRE(runCli({"generate", "--generate", "mohlenkamp", "--out", moh}) == 0);
        const std::string point = tmp.file("point.tns");
        std::ofstream(point) << "cp 3 1\n2 2 2\n2\n1 0\n1 0\n1 0\n";

        // Starting at the exact heavy critical point, one sweep certifies
        // stationarity and the objective is already exact.
        std::string out;
        const int code = runCli({"run", "--tensor", moh, "--init", point}, &out);
        REQUIRE(code == 0);
        REQUIRE(valueAfter(out, "final_f ") == -0.4);
        REQUIRE(valueAfter(out, "sweeps ") == 1.0);
    }

    SECTION("an init file that is not rank one is rejected") {
        const std::string moh = tmp.file("moh.tns");
        REQUIRE(runCli({"generate", "--generate", "mohlenkamp", "--out", moh}) == 0);
        std::string err;
        REQUIRE(runCli({"run", "--tensor", moh, "--init", moh}, nullptr, &err) == 1);
        REQUIRE_THAT(err, ContainsSubstring("rank-one cp"));
    }

    SECTION("seeded random starts are reproducible") {
        const std::string a = tmp.file("a.csv");
        const std::string b = tmp.file("b.csv");
        const int codeA = runCli({"run", "--generate", "random-dense", "--dims", "3,3,3",
                                  "--gen-seed", "11", "--seed", "5", "--max-sweeps", "40",
                                  "--trace-out", a});
        const int codeB = runCli({"run", "--generate", "random-dense", "--dims", "3,3,3",
                                  "--gen-seed", "11", "--seed", "5", "--max-sweeps", "40",
                                  "--trace-out", b});
        REQUIRE(codeA == codeB);
        REQUIRE((codeA == 0 || codeA == 2));
        REQUIRE(readFile(a) == readFile(b));
    }
}

TEST_CASE("config files set defaults and flags override them", "[cli]") {
    TempDir tmp;
    const std::string ini = tmp.file("exp.ini");
    std::ofstream(ini) << "max-sweeps=7\ntol-grad=0\ntol-df=0\n";

    std::string out;
    REQUIRE(runCli({"run", "--generate", "mohlenkamp", "--init-tau", "0.4",
                    "--config", ini},
                   &out) == 2);
    REQUIRE_THAT(out, ContainsSubstring("sweeps 7"));

    out.clear();
    REQUIRE(runCli({"run", "--generate", "mohlenkamp", "--init-tau", "0.4",
                    "--config", ini, "--max-sweeps", "3"},
                   &out) == 2);
    REQUIRE_THAT(out, ContainsSubstring("sweeps 3"));

    SECTION("comments and blank lines are ignored") {
        const std::string commented = tmp.file("commented.ini");
        std::ofstream(commented) << "# sweep budget\n\nmax-sweeps=7  # inline note\n"
                                    "tol-grad=0\ntol-df=0\n";
        std::string runOut;
        REQUIRE(runCli({"run", "--generate", "mohlenkamp", "--init-tau", "0.4",
                        "--config", commented},
                       &runOut) == 2);
        REQUIRE_THAT(runOut, ContainsSubstring("sweeps 7"));
    }

    SECTION("config diagnostics name the file, line, and key") {
        std::string err;
        const std::string badKey = tmp.file("badkey.ini");
        std::ofstream(badKey) << "no-such-flag=1\n";
        REQUIRE(runCli({"run", "--generate", "mohlenkamp", "--init-tau", "0.4",
                        "--config", badKey},
                       nullptr, &err) == 1);
        REQUIRE_THAT(err, ContainsSubstring("unknown option 'no-such-flag'"));
        REQUIRE_THAT(err, ContainsSubstring("line 1"));

        const std::string badLine = tmp.file("badline.ini");
        std::ofstream(badLine) << "max-sweeps=7\nmax-sweeps 9\n";
        REQUIRE(runCli({"run", "--generate", "mohlenkamp", "--init-tau", "0.4",
                        "--config", badLine},
                       nullptr, &err) == 1);
        REQUIRE_THAT(err, ContainsSubstring("line 2"));
        REQUIRE_THAT(err, ContainsSubstring("expected key=value"));

        REQUIRE(runCli({"run", "--generate", "mohlenkamp", "--init-tau", "0.4",
                        "--config", tmp.file("missing.ini")},
                       nullptr, &err) == 1);
        REQUIRE_THAT(err, ContainsSubstring("cannot open"));
    }
}

TEST_CASE("mode order steers which limit a run reaches", "[cli]") {
    TempDir tmp;
    const OrderingInstance inst = gen_ordering_example(0.9, 2.0, 0.72);
    const std::string init = tmp.file("ordering_init.tns");
    write_tensor_file(init, TensorFile{rankOneToCp(inst.init)});

    auto finalF = [&](const char* order) {
        std::string out;
        const int code = runCli({"run", "--generate", "ordering", "--lambda", "0.9",
                                 "--init", init, "--order", order,
                                 "--tol-grad", "1e-12"},
                                &out);
        REQUIRE(code == 0);
        return valueAfter(out, "final_f ");
    };

    const double f123 = finalF("1,2,3");
    const double f132 = finalF("1,3,2");
    REQUIRE(std::abs(f123 - inst.fTerm1) < 1e-9); // heavier term
    REQUIRE(std::abs(f132 - inst.fTerm2) < 1e-9); // lighter term
    REQUIRE(std::abs(f132 - f123 - inst.gap) < 1e-9);

    SECTION("order indices are 1-based and must cover every mode") {
        std::string err;
        REQUIRE(runCli({"run", "--generate", "mohlenkamp", "--init-tau", "0.4",
                        "--order", "0,1,2"},
                       nullptr, &err) == 1);
        REQUIRE_THAT(err, ContainsSubstring("1-based"));
        REQUIRE(runCli({"run", "--generate", "mohlenkamp", "--init-tau", "0.4",
                        "--order", "1,2"},
                       nullptr, &err) == 1);
    }
}

TEST_CASE("sweep writes per-point traces and a summary grid", "[cli]") {
    TempDir tmp;

    SECTION("tau grid labels both basins") {
        const std::string dir = tmp.file("grid");
        std::string out;
        const int code = runCli({"sweep", "--param", "tau", "--values", "0.4,0.6",
                                 "--out-dir", dir, "--jobs", "2"},
                                &out);
        REQUIRE(code == 0);
        REQUIRE_THAT(out, ContainsSubstring("summary " + dir + "/summary.csv"));

        const std::vector<std::string> lines = splitLines(readFile(dir + "/summary.csv"));
        REQUIRE(lines.size() == 3);
        REQUIRE(lines[0] == "param,converged_to,final_f,q_limsup,classification,error");

        const std::vector<std::string> row1 = splitCsvRow(lines[1]);
        REQUIRE(row1.size() == 6);
        REQUIRE(row1[0] == "0.4");
        REQUIRE(row1[1] == "term2"); // below the split the light term wins
        REQUIRE(std::abs(std::strtod(row1[2].c_str(), nullptr) - (-0.1)) < 1e-9);
        REQUIRE_FALSE(row1[4].empty());
        REQUIRE(row1[5].empty());

        const std::vector<std::string> row2 = splitCsvRow(lines[2]);
        REQUIRE(row2[0] == "0.6");
        REQUIRE(row2[1] == "term1");
        REQUIRE(std::abs(std::strtod(row2[2].c_str(), nullptr) - (-0.4)) < 1e-9);

        for (const char* name : {"tau_0.4.csv", "tau_0.6.csv"}) {
            const std::vector<std::string> t = splitLines(readFile(dir + "/" + name));
            REQUIRE(t[0] == kTraceHeader);
            REQUIRE(t.size() >= 2);
        }
    }

    SECTION("a failing grid point becomes an error row, not a crash") {
        const std::string dir = tmp.file("grid_err");
        ExperimentConfig cfg;
        cfg.maxSweeps = 200;
        std::ostringstream out;
        REQUIRE(cmd_sweep(cfg, "lambda", {0.2, -1.0}, dir, out) == 0);

        const std::vector<std::string> lines = splitLines(readFile(dir + "/summary.csv"));
        REQUIRE(lines.size() == 3);

        const std::vector<std::string> good = splitCsvRow(lines[1]);
        REQUIRE(good[0] == "0.2");
        REQUIRE(good[1] == "alpha0"); // the symmetric point is the only attractor
        REQUIRE(good[5].empty());

        const std::vector<std::string> bad = splitCsvRow(lines[2]);
        REQUIRE(bad[0] == "-1");
        REQUIRE(bad[1].empty());
        REQUIRE_FALSE(bad[5].empty());
        REQUIRE(bad[5].find(',') == std::string::npos); // sanitized for csv

        REQUIRE(std::filesystem::exists(dir + "/lambda_0.2.csv"));
        REQUIRE_FALSE(std::filesystem::exists(dir + "/lambda_-1.csv"));
    }

    SECTION("bad grid parameters fail fast") {
        std::string err;
        REQUIRE(runCli({"sweep", "--param", "gamma", "--values", "1"}, nullptr, &err) == 1);
        REQUIRE_THAT(err, ContainsSubstring("tau, lambda, or seed"));
        REQUIRE(runCli({"sweep", "--param", "tau"}, nullptr, &err) == 1);
        REQUIRE_THAT(err, ContainsSubstring("empty grid"));
    }
}

TEST_CASE("verify certifies critical points", "[cli]") {
    TempDir tmp;
    ExperimentConfig cfg;
    cfg.generateName = "mohlenkamp";

    SECTION("the global minimizer passes with matching spectra") {
        const std::string point = tmp.file("global.tns");
        std::ofstream(point) << "cp 3 1\n2 2 2\n2\n1 0\n1 0\n1 0\n";
        std::ostringstream out;
        REQUIRE(cmd_verify(cfg, point, out) == 0);
        REQUIRE_THAT(out.str(), ContainsSubstring("stationarity_residual 0\n"));
        REQUIRE_THAT(out.str(), ContainsSubstring("pair 1,2 sigma 2 0 gap 2 matches_norm yes"));
        REQUIRE_THAT(out.str(), ContainsSubstring("all_pairs_match yes"));
        REQUIRE_THAT(out.str(), ContainsSubstring("energy_identity_residual 0\n"));
        REQUIRE_THAT(out.str(), ContainsSubstring("verify pass"));
        REQUIRE(valueAfter(out.str(), "finite_diff_deviation ") < 1e-6);
    }

    SECTION("the secondary axis point is also a certified critical point") {
        const std::string point = tmp.file("light.tns");
        std::ofstream(point) << "cp 3 1\n2 2 2\n1\n0 1\n0 1\n0 1\n";
        std::ostringstream out;
        REQUIRE(cmd_verify(cfg, point, out) == 0);
        REQUIRE_THAT(out.str(), ContainsSubstring("critical_value 1\n"));
        REQUIRE_THAT(out.str(), ContainsSubstring("pair 1,2 sigma 1 0 gap 1 matches_norm yes"));
        REQUIRE_THAT(out.str(), ContainsSubstring("verify pass"));
    }

    SECTION("a non-stationary point is reported, exit 1") {
        const std::string point = tmp.file("off.tns");
        std::ofstream(point) << "cp 3 1\n2 2 2\n1\n0.70710678118654752 0.70710678118654752\n"
                                "1 0\n1 0\n";
        std::ostringstream out;
        REQUIRE(cmd_verify(cfg, point, out) == 1);
        REQUIRE_THAT(out.str(), ContainsSubstring("not_stationary"));
    }

    SECTION("without a point file verify certifies a fresh solve") {
        cfg.initSpec = "tau";
        cfg.initTau = 0.6;
        cfg.tolGrad = 1e-12;
        std::ostringstream out;
        REQUIRE(cmd_verify(cfg, "", out) == 0);
        REQUIRE_THAT(out.str(), ContainsSubstring("all_pairs_match yes"));
        REQUIRE_THAT(out.str(), ContainsSubstring("verify pass"));
    }

    SECTION("a point file of the wrong rank is rejected") {
        const std::string moh = tmp.file("moh.tns");
        std::ostringstream gen;
        REQUIRE(cmd_generate(cfg, moh, gen) == 0);
        std::ostringstream out;
        REQUIRE_THROWS_AS(cmd_verify(cfg, moh, out), ParseError);
    }
}

TEST_CASE("reproduce emits canned experiment data", "[cli]") {
    TempDir tmp;

    SECTION("ordering demo shows the update-order bifurcation") {
        const std::string dir = tmp.file("ordering");
        std::ostringstream out;
        REQUIRE(cmd_reproduce("ordering-demo", dir, out) == 0);

        const OrderingInstance inst = gen_ordering_example(0.9, 2.0, 0.72);
        const std::vector<double> fs = allValuesAfter(out.str(), "final_f ");
        REQUIRE(fs.size() == 2);
        REQUIRE(std::abs(fs[0] - inst.fTerm1) < 1e-9);
        REQUIRE(std::abs(fs[1] - inst.fTerm2) < 1e-9);
        REQUIRE(fs[0] != fs[1]);
        REQUIRE(valueAfter(out.str(), "predicted_f_term1 ") == inst.fTerm1);
        REQUIRE(valueAfter(out.str(), "predicted_f_term2 ") == inst.fTerm2);
        REQUIRE(valueAfter(out.str(), "predicted_gap ") == inst.gap);
        REQUIRE(std::filesystem::exists(dir + "/ordering_123.csv"));
        REQUIRE(std::filesystem::exists(dir + "/ordering_132.csv"));
    }

    SECTION("the linear-rate family figure reports the predicted rate") {
        const std::string dir = tmp.file("blambda");
        std::ostringstream out;
        REQUIRE(cmd_reproduce("fig-blambda-02", dir, out) == 0);
        REQUIRE_THAT(out.str(), ContainsSubstring("classification Q-linear"));
        REQUIRE_THAT(out.str(),
                     ContainsSubstring("predicted_rate 0.17398181667894019"));
        const double q = valueAfter(out.str(), "q_limsup ");
        REQUIRE(q > 0.164);
        REQUIRE(q < 0.184);
        REQUIRE(std::filesystem::exists(dir + "/blambda_0.2.csv"));
        REQUIRE_THAT(readFile(dir + "/fig-blambda-02.gp"),
                     ContainsSubstring("using 1:10"));
    }

    SECTION("the tangent-decay figure runs its whole tau family") {
        const std::string dir = tmp.file("tan");
        std::ostringstream out;
        REQUIRE(cmd_reproduce("fig-tan", dir, out) == 0);
        const std::vector<double> fs = allValuesAfter(out.str(), "final_f ");
        REQUIRE(fs.size() == 3);
        for (double f : fs) REQUIRE(std::abs(f - (-0.1)) < 1e-9);
        for (const char* name : {"tau_0.4.csv", "tau_0.495.csv", "tau_0.4999.csv"})
            REQUIRE(std::filesystem::exists(dir + "/" + std::string(name)));
        REQUIRE_THAT(readFile(dir + "/fig-tan.gp"), ContainsSubstring("using 1:9"));
    }

    SECTION("unknown figure ids are rejected") {
        std::ostringstream out;
        REQUIRE_THROWS_AS(cmd_reproduce("fig-nope", tmp.file("x"), out), UnknownFigure);
        std::string err;
        REQUIRE(runCli({"reproduce", "--figure", "fig-nope"}, nullptr, &err) == 1);
        REQUIRE_THAT(err, ContainsSubstring("unknown figure"));
    }
}

TEST_CASE("driver rejects malformed invocations", "[cli]") {
    SECTION("subcommand structure is enforced by the parser") {
        REQUIRE(runCli({}) != 0);
        REQUIRE(runCli({"frobnicate"}) != 0);
        REQUIRE(runCli({"run", "--bogus"}) != 0);
        REQUIRE(runCli({"reproduce"}) != 0); // --figure is required
    }

    SECTION("tensor source must be exactly one of file or generator") {
        std::string err;
        REQUIRE(runCli({"run"}, nullptr, &err) == 1);
        REQUIRE_THAT(err, ContainsSubstring("exactly one tensor source"));
        REQUIRE(runCli({"run", "--tensor", "x.tns", "--generate", "mohlenkamp"},
                       nullptr, &err) == 1);
    }

    SECTION("reference flags are mutually exclusive and range checked") {
        std::string err;
        REQUIRE(runCli({"run", "--generate", "mohlenkamp", "--init-tau", "0.4",
                        "--reference", "r.tns", "--reference-term", "1"},
                       nullptr, &err) == 1);
        REQUIRE_THAT(err, ContainsSubstring("mutually exclusive"));
        REQUIRE(runCli({"run", "--generate", "mohlenkamp", "--init-tau", "0.4",
                        "--reference-term", "5"},
                       nullptr, &err) == 1);
        REQUIRE_THAT(err, ContainsSubstring("out of range"));
    }

    SECTION("plot output needs the trace it plots") {
        std::string err;
        REQUIRE(runCli({"run", "--generate", "mohlenkamp", "--init-tau", "0.4",
                        "--plot-out", "p.gp"},
                       nullptr, &err) == 1);
        REQUIRE_THAT(err, ContainsSubstring("--trace-out"));
    }
}

TEST_CASE("file-based references populate the angle columns", "[cli]") {
    TempDir tmp;
    const std::string moh = tmp.file("moh.tns");
    REQUIRE(runCli({"generate", "--generate", "mohlenkamp", "--out", moh}) == 0);
    const std::string ref = tmp.file("ref.tns");
    std::ofstream(ref) << "cp 3 1\n2 2 2\n2\n1 0\n1 0\n1 0\n";

    const std::string trace = tmp.file("trace.csv");
    const std::string report = tmp.file("report.txt");
    REQUIRE(runCli({"run", "--tensor", moh, "--init-tau", "0.6", "--tol-grad", "1e-12",
                    "--reference", ref, "--trace-out", trace, "--report-out", report}) == 0);

    const std::vector<std::string> lines = splitLines(readFile(trace));
    REQUIRE(lines.size() >= 3);
    for (std::size_t i = 1; i < lines.size(); ++i)
        REQUIRE_FALSE(splitCsvRow(lines[i])[8].empty());
    REQUIRE_THAT(readFile(report), ContainsSubstring("mode 1"));
}
