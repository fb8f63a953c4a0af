#pragma once

#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "r1als/diagnostics.hpp"
#include "r1als/oracles.hpp"
#include "r1als/solver.hpp"

namespace r1als {

/// Shortest round-trip-exact decimal form of a double.
[[nodiscard]] inline std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// Compact six-digit form for file names and labels.
[[nodiscard]] inline std::string format_param(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

// ---------------------------------------------------------------- tokenizer

namespace detail {

/// Whitespace tokenizer that remembers the source line of every token so
/// parse errors can point at the offending place.
class TokenReader {
public:
    TokenReader(std::istream& in, std::string name) : name_(std::move(name)) {
        std::string line;
        std::size_t lineNo = 0;
        while (std::getline(in, line)) {
            ++lineNo;
            std::size_t i = 0;
            while (i < line.size()) {
                while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
                std::size_t start = i;
                while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
                if (i > start) tokens_.emplace_back(line.substr(start, i - start), lineNo);
            }
        }
        lastLine_ = lineNo;
    }

    [[nodiscard]] bool exhausted() const { return pos_ >= tokens_.size(); }

    const std::string& next(const char* what) {
        if (exhausted())
            throw ParseError(name_ + ": unexpected end of file, expected " + std::string(what));
        return tokens_[pos_++].first;
    }

    [[nodiscard]] std::size_t currentLine() const {
        if (pos_ == 0) return 1;
        return tokens_[pos_ - 1].second;
    }

    /// Fails unless every token has been consumed.
    void expectEnd() const {
        if (!exhausted())
            throw ParseError(name_ + ": line " + std::to_string(tokens_[pos_].second) +
                             ": trailing content starting at '" + tokens_[pos_].first + "'");
    }

    std::size_t nextSize(const char* what) {
        const std::string& t = next(what);
        errno = 0;
        char* end = nullptr;
        const unsigned long long v = std::strtoull(t.c_str(), &end, 10);
        if (errno != 0 || end == t.c_str() || *end != '\0')
            throw ParseError(name_ + ": line " + std::to_string(currentLine()) + ": expected " +
                             std::string(what) + ", got '" + t + "'");
        return static_cast<std::size_t>(v);
    }

    double nextDouble(const char* what) {
        const std::string& t = next(what);
        errno = 0;
        char* end = nullptr;
        const double v = std::strtod(t.c_str(), &end);
        if (end == t.c_str() || *end != '\0' || !std::isfinite(v))
            throw ParseError(name_ + ": line " + std::to_string(currentLine()) + ": expected " +
                             std::string(what) + ", got '" + t + "'");
        return v;
    }

private:
    std::string name_;
    std::vector<std::pair<std::string, std::size_t>> tokens_;
    std::size_t pos_ = 0;
    std::size_t lastLine_ = 0;
};

inline void writeRow(std::ostream& out, const double* v, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        if (i) out << ' ';
        out << format_double(v[i]);
    }
    out << '\n';
}

} // namespace detail

// ---------------------------------------------------------------- tensor files

/// File layout, first line selects the representation:
///   dense <d>            dims line, then entries (last index fastest)
///   cp <d> <r>           dims line, weights line, then per mode an n_mu x r matrix
///   tucker <d>           dims line, core-dims line, core entries, then per mode
///                        an n_mu x t_mu matrix
/// All entries are whitespace separated; the reader rejects trailing content.
using TensorFile = std::variant<DenseTensor, CPTensor, TuckerTensor>;

inline void write_tensor(std::ostream& out, const DenseTensor& t) {
    out << "dense " << t.order() << '\n';
    for (std::size_t mu = 0; mu < t.order(); ++mu) out << (mu ? " " : "") << t.dim(mu);
    out << '\n';
    const std::size_t rowLen = t.dim(t.order() - 1);
    const auto& v = t.values();
    for (std::size_t off = 0; off < v.size(); off += rowLen)
        detail::writeRow(out, v.data() + off, rowLen);
}

inline void write_tensor(std::ostream& out, const CPTensor& t) {
    out << "cp " << t.order() << ' ' << t.rank() << '\n';
    for (std::size_t mu = 0; mu < t.order(); ++mu) out << (mu ? " " : "") << t.dims()[mu];
    out << '\n';
    detail::writeRow(out, t.weights().data(), t.rank());
    for (std::size_t mu = 0; mu < t.order(); ++mu) {
        const Matrix& f = t.factor(mu);
        for (std::size_t i = 0; i < f.rows(); ++i) {
            std::vector<double> row(f.cols());
            for (std::size_t j = 0; j < f.cols(); ++j) row[j] = f(i, j);
            detail::writeRow(out, row.data(), row.size());
        }
    }
}

inline void write_tensor(std::ostream& out, const TuckerTensor& t) {
    out << "tucker " << t.order() << '\n';
    for (std::size_t mu = 0; mu < t.order(); ++mu) out << (mu ? " " : "") << t.dims()[mu];
    out << '\n';
    for (std::size_t mu = 0; mu < t.order(); ++mu) out << (mu ? " " : "") << t.core().dim(mu);
    out << '\n';
    const std::size_t rowLen = t.core().dim(t.order() - 1);
    const auto& v = t.core().values();
    for (std::size_t off = 0; off < v.size(); off += rowLen)
        detail::writeRow(out, v.data() + off, rowLen);
    for (std::size_t mu = 0; mu < t.order(); ++mu) {
        const Matrix& f = t.factor(mu);
        for (std::size_t i = 0; i < f.rows(); ++i) {
            std::vector<double> row(f.cols());
            for (std::size_t j = 0; j < f.cols(); ++j) row[j] = f(i, j);
            detail::writeRow(out, row.data(), row.size());
        }
    }
}

inline void write_tensor(std::ostream& out, const TensorFile& t) {
    std::visit([&](const auto& x) { write_tensor(out, x); }, t);
}

[[nodiscard]] inline TensorFile read_tensor(std::istream& in,
                                            const std::string& name = "<stream>") {
    detail::TokenReader tok(in, name);
    const std::string kind = tok.next("representation tag");

    auto readDims = [&](std::size_t d) {
        std::vector<std::size_t> dims(d);
        for (std::size_t mu = 0; mu < d; ++mu) dims[mu] = tok.nextSize("mode dimension");
        return dims;
    };
    auto readMatrix = [&](std::size_t rows, std::size_t cols) {
        Matrix m(rows, cols, 0.0);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) m(i, j) = tok.nextDouble("matrix entry");
        return m;
    };

    if (kind == "dense") {
        const std::size_t d = tok.nextSize("order");
        const std::vector<std::size_t> dims = readDims(d);
        std::size_t total = 1;
        for (std::size_t n : dims) total *= n;
        std::vector<double> vals(total);
        for (double& x : vals) x = tok.nextDouble("tensor entry");
        tok.expectEnd();
        return DenseTensor(dims, std::move(vals));
    }
    if (kind == "cp") {
        const std::size_t d = tok.nextSize("order");
        const std::size_t r = tok.nextSize("rank");
        const std::vector<std::size_t> dims = readDims(d);
        std::vector<double> weights(r);
        for (double& w : weights) w = tok.nextDouble("weight");
        std::vector<Matrix> factors;
        for (std::size_t mu = 0; mu < d; ++mu) factors.push_back(readMatrix(dims[mu], r));
        tok.expectEnd();
        return CPTensor(std::move(weights), std::move(factors));
    }
    if (kind == "tucker") {
        const std::size_t d = tok.nextSize("order");
        const std::vector<std::size_t> dims = readDims(d);
        const std::vector<std::size_t> coreDims = readDims(d);
        std::size_t total = 1;
        for (std::size_t n : coreDims) total *= n;
        std::vector<double> core(total);
        for (double& x : core) x = tok.nextDouble("core entry");
        std::vector<Matrix> factors;
        for (std::size_t mu = 0; mu < d; ++mu)
            factors.push_back(readMatrix(dims[mu], coreDims[mu]));
        tok.expectEnd();
        return TuckerTensor(DenseTensor(coreDims, std::move(core)), std::move(factors));
    }
    throw ParseError(name + ": line 1: unknown representation tag '" + kind + "'");
}

/// Dense view of any representation.
[[nodiscard]] inline DenseTensor densify(const TensorFile& t) {
    if (const auto* d = std::get_if<DenseTensor>(&t)) return *d;
    if (const auto* c = std::get_if<CPTensor>(&t)) return cp_to_dense(*c);
    return tucker_to_dense(std::get<TuckerTensor>(t));
}

inline void write_tensor_file(const std::string& path, const TensorFile& t) {
    std::ofstream out(path);
    if (!out) throw ParseError(path + ": cannot open for writing");
    write_tensor(out, t);
    if (!out.good()) throw ParseError(path + ": write failed");
}

[[nodiscard]] inline TensorFile read_tensor_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open");
    return read_tensor(in, path);
}

// ---------------------------------------------------------------- trace csv

/// One row per retained micro step.  The two reference columns stay empty
/// when no reference was configured or the value is not finite.
inline void write_trace_csv(std::ostream& out, const SweepTrace& trace) {
    out << "k,mu,f,norm_v,delta_f,identity_residual,grad_norm,factor_norm_mu,"
           "tan_angle_ref,q_ratio_ref\n";
    auto cell = [&](double x) { return std::isfinite(x) ? format_double(x) : std::string(); };
    for (std::size_t i = 0; i < trace.records.size(); ++i) {
        const MicroStepRecord& r = trace.records[i];
        out << r.sweep << ',' << (r.mode + 1) << ',' << format_double(r.fAfter) << ','
            << format_double(r.normV) << ',' << format_double(r.fAfter - r.fBefore) << ','
            << format_double(r.identityResidual) << ',' << format_double(r.gradNorm) << ','
            << format_double(r.factorNorm) << ',' << cell(trace.tanAngle[i]) << ','
            << cell(trace.qRatioTensor[i]) << '\n';
    }
}

inline void write_trace_csv_file(const std::string& path, const SweepTrace& trace) {
    std::ofstream out(path);
    if (!out) throw ParseError(path + ": cannot open for writing");
    write_trace_csv(out, trace);
    if (!out.good()) throw ParseError(path + ": write failed");
}

// ---------------------------------------------------------------- reports

/// Key-value block per mode summarizing tangent decay.
inline void write_rate_report(std::ostream& out,
                              const std::vector<std::pair<std::size_t, RateEstimate>>& perMode) {
    for (const auto& [mode, est] : perMode) {
        out << "mode " << (mode + 1) << '\n';
        out << "  q_limsup " << format_double(est.qLimsup) << '\n';
        out << "  classification " << to_string(est.classification) << '\n';
        out << "  rho_hat " << format_double(est.rhoHat) << '\n';
        out << "  tail_window " << est.tailWindow << '\n';
        out << "  tail";
        for (double r : est.tail) out << ' ' << format_double(r);
        out << '\n';
    }
}

/// Human-readable certificate: one line per mode pair.
inline void write_certificate_report(std::ostream& out, const Certificate& cert) {
    out << "stationarity_residual " << format_double(cert.stationarity) << '\n';
    out << "critical_value " << format_double(cert.lambda) << '\n';
    out << "norm_v " << format_double(cert.vNorm) << '\n';
    for (const CertificatePair& p : cert.pairs) {
        out << "pair " << (p.nu + 1) << ',' << (p.mu + 1) << " sigma";
        for (double s : p.sigma) out << ' ' << format_double(s);
        out << " gap " << format_double(p.gap)
            << " matches_norm " << (p.matchesNorm ? "yes" : "no") << '\n';
    }
    out << "all_pairs_match " << (cert.allMatch ? "yes" : "no") << '\n';
}

/// Log-scale tangent-decay plot over one or more trace CSVs.
inline void write_gnuplot_script(std::ostream& out, const std::string& title,
                                 const std::vector<std::pair<std::string, std::string>>& files,
                                 std::size_t column = 9) {
    out << "set datafile separator ','\n";
    out << "set logscale y\n";
    out << "set xlabel 'sweep'\n";
    out << "set ylabel 'tangent to reference'\n";
    out << "set title '" << title << "'\n";
    out << "plot";
    bool first = true;
    for (const auto& [file, legend] : files) {
        out << (first ? " " : ", \\\n     ") << '\'' << file << "' using 1:" << column
            << " skip 1 with lines title '" << legend << '\'';
        first = false;
    }
    out << '\n';
}

} // namespace r1als
