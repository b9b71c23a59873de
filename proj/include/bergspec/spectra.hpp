#pragma once

// Spectra of finite sections and the counting-function toolkit:
//   n(s; T) = #{n : s_n(T) > s},
//   ||T||_{S_{p,inf}} = sup_s s n(s;T)^{1/p},
//   sup / inf of s^p n(s;T) over a window of scales,
// and the exact product inequalities
//   n(s1 s2; AB) <= n(s1; A) + n(s2; B),   n(s; AB) <= n(s; ||A|| B).

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "banded_svd.hpp"
#include "errors.hpp"
#include "linalg.hpp"
#include "operator.hpp"

namespace bergspec {

enum class SpectrumKind { singular, eigen };

/// Which part of an eigenvalue sequence a counting query looks at.
enum class EigenPart { positive, negative };

namespace solver_ids {
inline constexpr const char* banded = "banded-givens-gk/1";
inline constexpr const char* dense_svd = "lapack-zgesdd/1";
inline constexpr const char* dense_hermitian_abs = "lapack-zheevd-abs/1";
inline constexpr const char* hermitian_dense = "lapack-zheevd/1";
inline constexpr const char* hermitian_banded = "lapack-zhbevd/1";
}  // namespace solver_ids

/// Multiple of machine epsilon times the largest value below which values
/// are reported but treated as numerically zero.
inline constexpr double noise_floor_factor = 1e3 * std::numeric_limits<double>::epsilon();

struct Spectrum {
    /// Singular: non-increasing, non-negative. Eigen: signed, descending.
    std::vector<double> values;
    std::size_t n = 0;
    SpectrumKind kind = SpectrumKind::singular;
    std::string source;
    std::string solver_id;

    double scale() const
    {
        double m = 0.0;
        for (double v : values)
            m = std::max(m, std::abs(v));
        return m;
    }

    double noise_floor() const { return noise_floor_factor * scale(); }

    bool below_noise_floor(std::size_t i) const { return std::abs(values[i]) <= noise_floor(); }

    /// Number of leading values above the noise floor (singular kind).
    std::size_t resolved_count() const
    {
        const double floor = noise_floor();
        std::size_t k = 0;
        while (k < values.size() && values[k] > floor)
            ++k;
        return k;
    }

    /// Positive (or, with EigenPart::negative, negated negative) eigenvalues as a
    /// non-increasing sequence of magnitudes. Singular spectra are returned as is.
    Spectrum part(EigenPart which) const
    {
        if (kind == SpectrumKind::singular)
            return *this;
        Spectrum out;
        out.n = n;
        out.kind = SpectrumKind::singular;
        out.source = source + (which == EigenPart::positive ? " [positive part]" : " [negative part]");
        out.solver_id = solver_id;
        if (which == EigenPart::positive) {
            for (double v : values)
                if (v > 0.0)
                    out.values.push_back(v);
        } else {
            for (auto it = values.rbegin(); it != values.rend(); ++it)
                if (*it < 0.0)
                    out.values.push_back(-*it);
        }
        return out;
    }

    Spectrum scaled(double c) const
    {
        Spectrum out = *this;
        const double a = std::abs(c);
        for (auto& v : out.values)
            v *= kind == SpectrumKind::singular ? a : c;
        if (kind == SpectrumKind::eigen && c < 0.0)
            std::reverse(out.values.begin(), out.values.end());
        return out;
    }
};

namespace detail {

inline void require_finite(const OperatorMatrix& a)
{
    if (!a.all_finite())
        throw input_error("matrix has non-finite entries");
}

inline Spectrum make_singular(std::vector<double> v, const OperatorMatrix& a, const char* solver)
{
    Spectrum s;
    s.values = std::move(v);
    s.n = a.size();
    s.kind = SpectrumKind::singular;
    s.source = a.provenance();
    s.solver_id = solver;
    return s;
}

}  // namespace detail

/// Dense reference path (bidiagonalisation + divide and conquer).
inline Spectrum singular_values_dense(const OperatorMatrix& a)
{
    detail::require_finite(a);
    return detail::make_singular(linalg::dense_singular_values(a), a, solver_ids::dense_svd);
}

/// Band-optimised path; requires banded storage.
inline Spectrum singular_values_banded(const OperatorMatrix& a)
{
    detail::require_finite(a);
    return detail::make_singular(banded::singular_values(a), a, solver_ids::banded);
}

/// All N singular values, non-increasing. Banded storage uses the band path;
/// certified-Hermitian dense storage uses |eigenvalues|; otherwise dense SVD.
inline Spectrum singular_values(const OperatorMatrix& a)
{
    detail::require_finite(a);
    if (a.is_banded())
        return singular_values_banded(a);
    if (a.hermitian()) {
        auto w = linalg::hermitian_eigenvalues(a);
        for (auto& v : w)
            v = std::abs(v);
        std::sort(w.begin(), w.end(), std::greater<>());
        return detail::make_singular(std::move(w), a, solver_ids::dense_hermitian_abs);
    }
    return singular_values_dense(a);
}

inline Spectrum hermitian_eigenvalues(const OperatorMatrix& a)
{
    detail::require_finite(a);
    if (!a.hermitian())
        throw input_error("hermitian_eigenvalues: matrix is not certified Hermitian");
    Spectrum s;
    s.values = linalg::hermitian_eigenvalues(a);
    s.n = a.size();
    s.kind = SpectrumKind::eigen;
    s.source = a.provenance();
    s.solver_id = a.is_banded() ? solver_ids::hermitian_banded : solver_ids::hermitian_dense;
    return s;
}

/// n(s; T) = #{n : s_n > s}; for eigen spectra the part flag selects lambda > s
/// or -lambda > s. O(log N).
inline std::size_t counting_function(const Spectrum& spec, double s, EigenPart part = EigenPart::positive)
{
    if (!(s > 0.0))
        throw domain_error("counting_function: s must be > 0");
    const auto& v = spec.values;
    if (spec.kind == SpectrumKind::singular || part == EigenPart::positive) {
        // values descending: first position with value <= s
        const auto it = std::partition_point(v.begin(), v.end(), [s](double x) { return x > s; });
        return static_cast<std::size_t>(it - v.begin());
    }
    const auto it = std::partition_point(v.rbegin(), v.rend(), [s](double x) { return -x > s; });
    return static_cast<std::size_t>(it - v.rbegin());
}

/// sup_{s>0} s n(s)^{1/p} = max_k s_k * #{values >= s_k}^{1/p}.
inline double weak_quasinorm(const Spectrum& spec, double p)
{
    if (!(p > 0.0))
        throw domain_error("weak_quasinorm: p must be > 0");
    const auto& v = spec.values;
    double best = 0.0;
    std::size_t k = 0;
    while (k < v.size()) {
        std::size_t last = k;
        while (last + 1 < v.size() && v[last + 1] == v[k])
            ++last;
        if (v[k] > 0.0)
            best = std::max(best, v[k] * std::pow(static_cast<double>(last + 1), 1.0 / p));
        k = last + 1;
    }
    return best;
}

struct WindowExtrema {
    double sup_value = 0.0;
    double inf_value = 0.0;
};

/// Exact sup and inf of s^p n(s) over s in [s_lo, s_hi]. On each interval between
/// consecutive distinct values s^p n(s) increases in s, so the extrema occur at the
/// window ends and the jump points (as left limits for the sup).
inline WindowExtrema finite_scale_functionals(const Spectrum& spec, double p, double s_lo, double s_hi)
{
    if (!(p > 0.0))
        throw domain_error("finite_scale_functionals: p must be > 0");
    if (!(s_lo > 0.0) || !(s_hi > s_lo))
        throw domain_error("finite_scale_functionals: window must satisfy 0 < s_lo < s_hi");
    const std::size_t resolved = spec.resolved_count();
    if (resolved == 0)
        throw experiment_error("finite_scale_functionals: spectrum has no resolvable values");
    // Below the noise floor the counts are not resolved by the computation.
    if (s_lo <= spec.noise_floor())
        throw experiment_error("finite_scale_functionals: window reaches the noise floor " +
                               std::to_string(spec.noise_floor()) + "; the truncation cannot probe that scale");
    if (s_hi > spec.values.front())
        throw domain_error("finite_scale_functionals: s_hi exceeds the largest value");

    auto f = [&](double s, std::size_t count) { return std::pow(s, p) * static_cast<double>(count); };
    WindowExtrema out;
    out.sup_value = std::max(f(s_lo, counting_function(spec, s_lo)), f(s_hi, counting_function(spec, s_hi)));
    out.inf_value = std::min(f(s_lo, counting_function(spec, s_lo)), f(s_hi, counting_function(spec, s_hi)));
    const auto& v = spec.values;
    for (std::size_t k = 0; k < resolved; ++k) {
        const double x = v[k];
        if (x <= s_lo || x > s_hi)
            continue;
        if (k > 0 && v[k - 1] == x)
            continue;
        const auto at = counting_function(spec, x);
        std::size_t upto = k;  // #{values >= x}
        while (upto < v.size() && v[upto] == x)
            ++upto;
        out.sup_value = std::max(out.sup_value, f(x, upto));
        out.inf_value = std::min(out.inf_value, f(x, at));
    }
    return out;
}

struct InequalityViolation {
    enum class Which { product_split, norm_factor } which;
    double s1 = 0.0;
    double s2 = 0.0;
    std::size_t lhs = 0;
    std::size_t rhs = 0;
};

struct InequalityReport {
    std::size_t checks = 0;
    std::vector<InequalityViolation> violations;
    bool ok() const { return violations.empty(); }
};

/// Hook for fault injection in tests; applied to every computed spectrum.
using SpectrumHook = std::function<void(Spectrum&)>;

/// Check n(s1 s2; AB) <= n(s1; A) + n(s2; B) and n(s; AB) <= n(s/||A||; B) at
/// every grid point (the second with s = s1 s2). A violation must exceed a
/// relative tie slack of 1e-12 in s to be reported.
inline InequalityReport check_product_counting_inequalities(const OperatorMatrix& a, const OperatorMatrix& b,
                                                            const std::vector<std::pair<double, double>>& grid,
                                                            const SpectrumHook& hook = {})
{
    if (a.size() != b.size())
        throw input_error("check_product_counting_inequalities: dimensions differ");
    constexpr double tie = 1e-12;
    auto sa = singular_values(a);
    auto sb = singular_values(b);
    auto sab = singular_values(linalg::multiply(a, b));
    if (hook) {
        hook(sa);
        hook(sb);
        hook(sab);
    }
    const double norm_a = sa.values.empty() ? 0.0 : sa.values.front();

    InequalityReport report;
    for (const auto& [s1, s2] : grid) {
        const double s = s1 * s2;
        const auto lhs = counting_function(sab, s * (1.0 + tie));
        const auto rhs6 = counting_function(sa, s1 * (1.0 - tie)) + counting_function(sb, s2 * (1.0 - tie));
        ++report.checks;
        if (lhs > rhs6)
            report.violations.push_back({InequalityViolation::Which::product_split, s1, s2, lhs, rhs6});
        std::size_t rhs7 = b.size();
        if (norm_a > 0.0)
            rhs7 = counting_function(sb, s * (1.0 - tie) / norm_a);
        else
            rhs7 = 0;
        ++report.checks;
        if (lhs > rhs7)
            report.violations.push_back({InequalityViolation::Which::norm_factor, s1, s2, lhs, rhs7});
    }
    return report;
}

}  // namespace bergspec
