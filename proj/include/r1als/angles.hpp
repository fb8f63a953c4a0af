#pragma once

#include <cmath>

#include "r1als/tensor.hpp"

namespace r1als {

/// Principal-coefficient split of v against the line spanned by ref:
/// c = <v, ref/||ref||> (signed), sNorm = ||v - c ref/||ref|| || computed as
/// sqrt(||v||^2 - c^2) without materializing any complement basis.
struct CoefficientSplit {
    double c;
    double sNorm;
};

[[nodiscard]] inline CoefficientSplit coefficient_split(const DenseTensor& v,
                                                        const DenseTensor& ref) {
    const double refNorm = norm(ref);
    if (refNorm == 0.0) throw DegenerateFactor("coefficient_split: zero reference");
    const double c = inner(v, ref) / refNorm;
    const double rest = inner(v, v) - c * c;
    return {c, std::sqrt(rest > 0.0 ? rest : 0.0)};
}

/// tan of the angle between v and the line spanned by ref.
[[nodiscard]] inline double tan_angle_tensor(const DenseTensor& v, const DenseTensor& ref) {
    const CoefficientSplit cs = coefficient_split(v, ref);
    if (cs.c == 0.0) throw OrthogonalToReference("tan_angle_tensor: iterate orthogonal to reference");
    return cs.sNorm / std::abs(cs.c);
}

/// Mode-space tangent between a factor vector and a reference direction.
/// The orthogonal part is formed explicitly (p - c rhat), which stays
/// accurate for angles far below sqrt(machine eps).
[[nodiscard]] inline double component_tan_angle(const std::vector<double>& p,
                                                const std::vector<double>& ref) {
    const double refNorm = norm(ref);
    if (refNorm == 0.0) throw DegenerateFactor("component_tan_angle: zero reference");
    const double c = inner(p, ref) / refNorm;
    if (c == 0.0) throw OrthogonalToReference("component_tan_angle: vector orthogonal to reference");
    double s2 = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double r = p[i] - c * ref[i] / refNorm;
        s2 += r * r;
    }
    return std::sqrt(s2) / std::abs(c);
}

/// One-step contraction factors of the (c, s) split across a micro step:
/// qs = sNorm(after)/sNorm(before), qc = |c(after)|/|c(before)|.
/// By construction tan(after) = (qs/qc) * tan(before) identically.
struct QComponents {
    double qs;
    double qc;
    double tanBefore;
    double tanAfter;
};

[[nodiscard]] inline QComponents q_components(const DenseTensor& before, const DenseTensor& after,
                                              const DenseTensor& ref) {
    const CoefficientSplit b = coefficient_split(before, ref);
    const CoefficientSplit a = coefficient_split(after, ref);
    if (b.c == 0.0 || a.c == 0.0)
        throw OrthogonalToReference("q_components: iterate orthogonal to reference");
    if (b.sNorm == 0.0) throw ZeroCoefficient("q_components: zero orthogonal part before step");
    return {a.sNorm / b.sNorm, std::abs(a.c) / std::abs(b.c),
            b.sNorm / std::abs(b.c), a.sNorm / std::abs(a.c)};
}

} // namespace r1als
