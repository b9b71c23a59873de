#pragma once

// Predicted constants, power-law extraction, finite-section stability and the
// verification pipelines.
//
// For phi = (1-r)^gamma g:
//     s_n(T(phi)) ~ C n^{-gamma},  C = 2^{-gamma} Gamma(gamma+1) (int |g|^{1/gamma} dtheta/2pi)^gamma,
// and for a band matrix a_{j,j+m} ~ b_m j^{-gamma}:
//     s_n(A) ~ (int |b|^{1/gamma} dtheta/2pi)^gamma n^{-gamma}.
// Finite sections only reproduce the head of the spectrum, so every fit is
// confined to indices where doubling the truncation leaves the values put.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "errors.hpp"
#include "linalg.hpp"
#include "operator.hpp"
#include "spectra.hpp"
#include "special.hpp"
#include "symbols.hpp"

namespace bergspec {

enum class PredictionVariant { toeplitz, toeplitz_positive_part, toeplitz_negative_part, banded };

inline const char* to_string(PredictionVariant v)
{
    switch (v) {
    case PredictionVariant::toeplitz: return "toeplitz";
    case PredictionVariant::toeplitz_positive_part: return "toeplitz_positive_part";
    case PredictionVariant::toeplitz_negative_part: return "toeplitz_negative_part";
    case PredictionVariant::banded: return "banded";
    }
    return "unknown";
}

struct TheoremPrediction {
    double gamma = 1.0;
    double kappa_gamma = 0.0;
    double constant = 0.0;
    /// angular_power_integral at p = 1/gamma.
    double integral = 0.0;
    PredictionVariant variant = PredictionVariant::toeplitz;
};

/// C_gamma(phi), or C_gamma^+(phi) for PowerMode::positive_part.
inline TheoremPrediction predicted_constant(const BergmanSymbol& symbol, PowerMode mode = PowerMode::abs)
{
    symbol.validate();
    const double gamma = symbol.gamma;
    TheoremPrediction p;
    p.gamma = gamma;
    p.kappa_gamma = kappa(gamma);
    p.variant = mode == PowerMode::abs ? PredictionVariant::toeplitz : PredictionVariant::toeplitz_positive_part;
    p.integral = angular_power_integral(symbol.angular, 1.0 / gamma, mode);
    const double prefactor = std::exp(log_gamma(gamma + 1.0) - gamma * std::log(2.0));
    p.constant = p.integral > 0.0 ? prefactor * std::pow(p.integral, gamma) : 0.0;
    return p;
}

/// Constant for the negative eigenvalues: C^+ of the reflected symbol -g.
inline TheoremPrediction predicted_constant_negative_part(const BergmanSymbol& symbol)
{
    BergmanSymbol flipped = symbol;
    flipped.angular = symbol.angular.scaled(-1.0);
    auto p = predicted_constant(flipped, PowerMode::positive_part);
    p.variant = PredictionVariant::toeplitz_negative_part;
    return p;
}

/// (int |b|^{1/gamma} dtheta/2pi)^gamma; no Gamma prefactor.
inline TheoremPrediction predicted_constant_banded(const TrigPoly& b, double gamma)
{
    if (!std::isfinite(gamma) || gamma <= 0.0)
        throw domain_error("gamma must be > 0");
    TheoremPrediction p;
    p.gamma = gamma;
    p.kappa_gamma = kappa(gamma);
    p.variant = PredictionVariant::banded;
    p.integral = angular_power_integral(AngularSymbol(b), 1.0 / gamma, PowerMode::abs);
    p.constant = p.integral > 0.0 ? std::pow(p.integral, gamma) : 0.0;
    return p;
}

struct FitWindow {
    std::size_t lo = 1;
    std::size_t hi = 2;
};

enum class FitMode { fit_both, fixed_gamma };

struct PowerLawFit {
    FitMode mode = FitMode::fixed_gamma;
    double gamma_hat = 0.0;
    double c_hat = 0.0;
    FitWindow window;
    /// log s_n - (log C_hat - gamma_hat log n) per windowed index.
    std::vector<double> residuals;
    double residual_spread = 0.0;
};

/// Fit s_n ~ C n^{-gamma} over n in [lo, hi]. fit_both: least squares on
/// (log n, log s_n). fixed_gamma: C_hat = median of s_n n^gamma.
inline PowerLawFit estimate_power_law(const Spectrum& spec, FitWindow window, FitMode mode, double gamma = 0.0)
{
    if (window.lo < 1 || window.hi <= window.lo)
        throw experiment_error("estimate_power_law: window needs 1 <= n_lo < n_hi");
    if (window.hi >= spec.values.size())
        throw experiment_error("estimate_power_law: window exceeds the spectrum length");
    if (mode == FitMode::fixed_gamma && !(gamma > 0.0))
        throw domain_error("estimate_power_law: fixed_gamma mode needs gamma > 0");
    const double floor = spec.noise_floor();
    for (std::size_t n = window.lo; n <= window.hi; ++n)
        if (!(spec.values[n] > 0.0) || spec.values[n] <= floor)
            throw experiment_error("estimate_power_law: window contains values at or below the noise floor (n=" +
                                   std::to_string(n) + ")");

    PowerLawFit fit;
    fit.mode = mode;
    fit.window = window;
    const std::size_t count = window.hi - window.lo + 1;
    if (mode == FitMode::fit_both) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t n = window.lo; n <= window.hi; ++n) {
            const double x = std::log(static_cast<double>(n));
            const double y = std::log(spec.values[n]);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        const double mx = sx / count, my = sy / count;
        const double var = sxx / count - mx * mx;
        const double slope = (sxy / count - mx * my) / var;
        fit.gamma_hat = -slope;
        fit.c_hat = std::exp(my - slope * mx);
    } else {
        std::vector<double> scaled;
        scaled.reserve(count);
        for (std::size_t n = window.lo; n <= window.hi; ++n)
            scaled.push_back(spec.values[n] * std::pow(static_cast<double>(n), gamma));
        std::sort(scaled.begin(), scaled.end());
        const std::size_t mid = count / 2;
        fit.c_hat = count % 2 == 1 ? scaled[mid] : 0.5 * (scaled[mid - 1] + scaled[mid]);
        fit.gamma_hat = gamma;
    }
    double lo_r = 0.0, hi_r = 0.0;
    for (std::size_t n = window.lo; n <= window.hi; ++n) {
        const double r = std::log(spec.values[n]) -
                         (std::log(fit.c_hat) - fit.gamma_hat * std::log(static_cast<double>(n)));
        fit.residuals.push_back(r);
        lo_r = n == window.lo ? r : std::min(lo_r, r);
        hi_r = n == window.lo ? r : std::max(hi_r, r);
    }
    fit.residual_spread = hi_r - lo_r;
    return fit;
}

/// Which sequence of a matrix a recipe measures.
enum class Quantity { singular, positive_eigen, negative_eigen };

struct ComputeBudget {
    std::size_t max_dense_n = 6000;
    std::size_t max_bytes = std::size_t{2} << 30;
};

/// Builds the size-N finite section of some operator and names the sequence to extract.
struct SpectrumRecipe {
    std::function<OperatorMatrix(std::size_t, const BuildOptions&)> build;
    Quantity quantity = Quantity::singular;
    /// True when build() produces dense storage (checked against max_dense_n).
    bool dense = true;
    std::string description;
};

inline Spectrum compute_spectrum(const SpectrumRecipe& recipe, std::size_t n, const ComputeBudget& budget = {})
{
    if (recipe.dense && n > budget.max_dense_n)
        throw capacity_error("dense truncation N=" + std::to_string(n) + " exceeds the budget of " +
                             std::to_string(budget.max_dense_n) + "; use a smaller N");
    BuildOptions opts;
    opts.max_bytes = budget.max_bytes;
    const auto a = recipe.build(n, opts);
    switch (recipe.quantity) {
    case Quantity::singular: return singular_values(a);
    case Quantity::positive_eigen: return hermitian_eigenvalues(a).part(EigenPart::positive);
    case Quantity::negative_eigen: return hermitian_eigenvalues(a).part(EigenPart::negative);
    }
    throw input_error("unknown quantity");
}

inline SpectrumRecipe bergman_recipe(const BergmanSymbol& symbol, Quantity q = Quantity::singular)
{
    SpectrumRecipe r;
    r.build = [symbol](std::size_t n, const BuildOptions& o) { return build_bergman_toeplitz(symbol, n, o); };
    r.quantity = q;
    r.dense = !symbol.angular.is_trig_poly();
    r.description = "bergman";
    return r;
}

inline SpectrumRecipe banded_recipe(const TrigPoly& b, double gamma, Quantity q = Quantity::singular)
{
    SpectrumRecipe r;
    r.build = [b, gamma](std::size_t n, const BuildOptions& o) { return build_banded(b, gamma, n, {}, o).matrix; };
    r.quantity = q;
    r.dense = false;
    r.description = "banded";
    return r;
}

struct StabilityResult {
    /// Largest index with |s_n(N) - s_n(N')| <= tol s_n(N') for all n <= n_max.
    std::size_t n_max = 0;
    std::size_t coarse_n = 0;
    std::size_t fine_n = 0;
    Spectrum coarse;
    Spectrum fine;
};

/// Compare two already computed spectra.
inline std::size_t stable_prefix(const Spectrum& coarse, const Spectrum& fine, double tol)
{
    const std::size_t limit = std::min({coarse.resolved_count(), fine.resolved_count(), coarse.values.size(),
                                        fine.values.size()});
    std::size_t k = 0;
    while (k < limit && std::abs(coarse.values[k] - fine.values[k]) <= tol * fine.values[k])
        ++k;
    if (k == 0)
        throw experiment_error("truncation_stability: no resolvable stable values");
    return k - 1;
}

/// Build at coarse_n and fine_n (> coarse_n) and return the stable index bound.
inline StabilityResult truncation_stability(const SpectrumRecipe& recipe, std::size_t coarse_n, std::size_t fine_n,
                                            double tol, const ComputeBudget& budget = {})
{
    if (!(tol > 0.0))
        throw domain_error("truncation_stability: tol must be > 0");
    if (coarse_n == 0 || fine_n <= coarse_n)
        throw domain_error("truncation_stability: need 0 < N < N'");
    if (recipe.dense && fine_n > budget.max_dense_n)
        throw capacity_error("truncation_stability: N'=" + std::to_string(fine_n) +
                             " exceeds the dense budget; advise a smaller N (at most " +
                             std::to_string(budget.max_dense_n / 2) + ")");
    StabilityResult r;
    r.coarse_n = coarse_n;
    r.fine_n = fine_n;
    r.coarse = compute_spectrum(recipe, coarse_n, budget);
    r.fine = compute_spectrum(recipe, fine_n, budget);
    r.n_max = stable_prefix(r.coarse, r.fine, tol);
    return r;
}

/// Stability between N and 2N.
inline StabilityResult truncation_stability(const SpectrumRecipe& recipe, std::size_t n, double tol,
                                            const ComputeBudget& budget = {})
{
    return truncation_stability(recipe, n, 2 * n, tol, budget);
}

struct VerificationOptions {
    double tolerance = 0.10;
    double stability_tolerance = 0.01;
    /// Fit window as fractions of n_max (default [n_max/4, n_max/2]).
    double window_lo_fraction = 0.25;
    double window_hi_fraction = 0.5;
    /// Explicit window overriding the fractions; must sit inside [1, n_max].
    std::optional<FitWindow> window;
    ComputeBudget budget;
};

struct AsymptoticsReport {
    double gamma = 1.0;
    double kappa_gamma = 0.0;
    double predicted_c = 0.0;
    double fitted_c = 0.0;
    /// Exponent from a free log-log fit over the same window.
    double fitted_gamma = 0.0;
    FitWindow window;
    std::size_t n_max_stable = 0;
    std::size_t truncation = 0;
    double relative_deviation = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    std::string variant;
    std::string solver_id;
    std::string failure_reason;
    double residual_spread = 0.0;
    std::map<std::string, double> timings;
};

namespace detail {

using clock = std::chrono::steady_clock;

inline double seconds_since(clock::time_point t0)
{
    return std::chrono::duration<double>(clock::now() - t0).count();
}

inline FitWindow choose_window(std::size_t n_max, const VerificationOptions& o)
{
    FitWindow w;
    if (o.window) {
        w = *o.window;
        if (w.hi > n_max)
            throw experiment_error("fit window [" + std::to_string(w.lo) + ", " + std::to_string(w.hi) +
                                   "] does not fit inside the stable range [1, " + std::to_string(n_max) + "]");
    } else {
        w.lo = std::max<std::size_t>(1, static_cast<std::size_t>(o.window_lo_fraction * static_cast<double>(n_max)));
        w.hi = static_cast<std::size_t>(o.window_hi_fraction * static_cast<double>(n_max));
    }
    if (w.lo < 1 || w.hi <= w.lo)
        throw experiment_error("stable range [1, " + std::to_string(n_max) + "] is too short for a fit window");
    return w;
}

}  // namespace detail

/// Source of spectra for the verification pipeline (direct computation or a cache).
using SpectrumProvider = std::function<Spectrum(std::size_t)>;

/// spectrum at N/2 and N -> stable prefix -> fixed-gamma fit -> compare.
inline AsymptoticsReport run_verification(const SpectrumProvider& spectrum_at, const TheoremPrediction& pred,
                                          std::size_t n, const VerificationOptions& o = {})
{
    using detail::clock;
    using detail::seconds_since;
    AsymptoticsReport rep;
    rep.gamma = pred.gamma;
    rep.kappa_gamma = pred.kappa_gamma;
    rep.predicted_c = pred.constant;
    rep.variant = to_string(pred.variant);
    rep.tolerance = o.tolerance;
    rep.truncation = n;
    if (n < 4)
        throw domain_error("verification needs N >= 4");
    if (!(o.stability_tolerance > 0.0) || !(o.tolerance > 0.0))
        throw domain_error("verification tolerances must be > 0");
    auto t0 = clock::now();
    const auto coarse = spectrum_at((n + 1) / 2);
    const auto fine = spectrum_at(n);
    rep.timings["spectra"] = seconds_since(t0);
    rep.solver_id = fine.solver_id;
    rep.n_max_stable = stable_prefix(coarse, fine, o.stability_tolerance);

    t0 = clock::now();
    try {
        rep.window = detail::choose_window(rep.n_max_stable, o);
        const auto fixed = estimate_power_law(fine, rep.window, FitMode::fixed_gamma, pred.gamma);
        const auto free = estimate_power_law(fine, rep.window, FitMode::fit_both);
        rep.fitted_c = fixed.c_hat;
        rep.fitted_gamma = free.gamma_hat;
        rep.residual_spread = fixed.residual_spread;
    } catch (const experiment_error& e) {
        rep.failure_reason = e.what();
        rep.pass = false;
        rep.timings["fit"] = seconds_since(t0);
        return rep;
    }
    rep.timings["fit"] = seconds_since(t0);
    if (pred.constant > 0.0) {
        rep.relative_deviation = std::abs(rep.fitted_c - pred.constant) / pred.constant;
        rep.pass = rep.relative_deviation <= o.tolerance;
    } else {
        rep.relative_deviation = std::abs(rep.fitted_c);
        rep.pass = false;
        rep.failure_reason = "predicted constant is zero";
    }
    if (!rep.pass && rep.failure_reason.empty())
        rep.failure_reason = "relative deviation above tolerance";
    return rep;
}

namespace detail {

inline AsymptoticsReport verify(const SpectrumRecipe& recipe, const TheoremPrediction& pred, std::size_t n,
                                const VerificationOptions& o)
{
    if (recipe.dense && n > o.budget.max_dense_n)
        throw capacity_error("truncation N=" + std::to_string(n) + " exceeds the dense budget of " +
                             std::to_string(o.budget.max_dense_n));
    return run_verification([&](std::size_t size) { return compute_spectrum(recipe, size, o.budget); }, pred, n, o);
}

}  // namespace detail

/// Singular-value (abs), positive-eigenvalue or negative-eigenvalue check of a Toeplitz symbol.
inline AsymptoticsReport run_theorem1_verification(const BergmanSymbol& symbol, std::size_t n,
                                                   const VerificationOptions& opts = {},
                                                   PredictionVariant variant = PredictionVariant::toeplitz)
{
    symbol.validate();
    switch (variant) {
    case PredictionVariant::toeplitz:
        return detail::verify(bergman_recipe(symbol), predicted_constant(symbol), n, opts);
    case PredictionVariant::toeplitz_positive_part:
        return detail::verify(bergman_recipe(symbol, Quantity::positive_eigen),
                              predicted_constant(symbol, PowerMode::positive_part), n, opts);
    case PredictionVariant::toeplitz_negative_part:
        return detail::verify(bergman_recipe(symbol, Quantity::negative_eigen),
                              predicted_constant_negative_part(symbol), n, opts);
    case PredictionVariant::banded: break;
    }
    throw input_error("run_theorem1_verification: banded variant belongs to run_theorem2_verification");
}

inline AsymptoticsReport run_theorem2_verification(const TrigPoly& b, double gamma, std::size_t n,
                                                   const VerificationOptions& opts = {})
{
    return detail::verify(banded_recipe(b, gamma), predicted_constant_banded(b, gamma), n, opts);
}

struct OrthogonalityOptions {
    double stability_tolerance = 0.01;
    ComputeBudget budget;
};

struct OrthogonalityReport {
    double gamma = 1.0;
    std::size_t truncation = 0;
    bool zero_product = false;
    std::size_t n_max_stable = 0;
    std::size_t resolved = 0;
    FitWindow window;
    double decay_exponent = 0.0;
    /// The spectrum reached the noise floor inside the truncation, so the
    /// fitted exponent is a lower bound.
    bool exponent_is_lower_bound = false;
    /// s_n n^{2 gamma} over the last decade [n_hi/10, n_hi] of the stable window.
    FitWindow trend_window;
    std::vector<double> trend;
    bool trend_decreasing = false;
    Spectrum spectrum;
};

/// Singular values of T(g1) T(g2)^* for step symbols on disjoint arcs.
inline OrthogonalityReport orthogonality_experiment(const StepSymbol& g1, const StepSymbol& g2, double gamma,
                                                    std::size_t n, const OrthogonalityOptions& o = {})
{
    for (std::size_t i = 0; i < g1.arcs().size(); ++i)
        for (std::size_t j = 0; j < g2.arcs().size(); ++j)
            if (StepSymbol::overlap(g1.arcs()[i], g2.arcs()[j]) > 1e-12)
                throw input_error("orthogonality_experiment: arc " + std::to_string(i) + " of the first symbol overlaps arc " +
                                  std::to_string(j) + " of the second");
    if (n < 4)
        throw domain_error("orthogonality_experiment: N must be >= 4");
    const BergmanSymbol s1{gamma, g1, std::nullopt};
    const BergmanSymbol s2{gamma, g2, std::nullopt};
    s1.validate();

    // The factors are built at twice the size so that the inner sum of the
    // product is not cut at N; otherwise the boundary error of the two finite
    // sections swamps the rapidly decaying product values.
    SpectrumRecipe recipe;
    recipe.build = [s1, s2](std::size_t size, const BuildOptions& opts) {
        return linalg::multiply_leading_adjoint(build_bergman_toeplitz(s1, 2 * size, opts),
                                                build_bergman_toeplitz(s2, 2 * size, opts), size);
    };
    recipe.dense = true;
    recipe.description = "product";

    OrthogonalityReport rep;
    rep.gamma = gamma;
    rep.truncation = n;
    if (2 * n > o.budget.max_dense_n)
        throw capacity_error("orthogonality_experiment: factors of size 2N=" + std::to_string(2 * n) +
                             " exceed the dense budget; use N <= " + std::to_string(o.budget.max_dense_n / 2));
    const auto fine = compute_spectrum(recipe, n, o.budget);
    rep.spectrum = fine;
    if (fine.scale() == 0.0) {
        rep.zero_product = true;
        return rep;
    }
    const auto coarse = compute_spectrum(recipe, (n + 1) / 2, o.budget);
    rep.n_max_stable = stable_prefix(coarse, fine, o.stability_tolerance);
    rep.resolved = fine.resolved_count();
    rep.exponent_is_lower_bound = rep.resolved < fine.values.size();

    const std::size_t top = std::min(rep.n_max_stable, rep.resolved - 1);
    rep.window.lo = std::max<std::size_t>(1, top / 4);
    rep.window.hi = std::max<std::size_t>(rep.window.lo + 1, top / 2);
    if (rep.window.hi > top)
        throw experiment_error("orthogonality_experiment: stable range too short to fit a decay exponent");
    rep.decay_exponent = estimate_power_law(fine, rep.window, FitMode::fit_both).gamma_hat;

    rep.trend_window.lo = std::max<std::size_t>(1, top / 10);
    rep.trend_window.hi = top;
    rep.trend_decreasing = true;
    for (std::size_t k = rep.trend_window.lo; k <= rep.trend_window.hi; ++k) {
        rep.trend.push_back(fine.values[k] * std::pow(static_cast<double>(k), 2.0 * gamma));
        if (rep.trend.size() > 1 && !(rep.trend.back() < rep.trend[rep.trend.size() - 2]))
            rep.trend_decreasing = false;
    }
    return rep;
}

struct AdditivityRow {
    double s = 0.0;
    std::size_t count_sum_operator = 0;   // n(s; T(g))
    std::size_t count_direct_sum = 0;     // sum_l n(s; c_l T(1_{delta_l}))
    double ratio = 0.0;                   // first / second
    double scaled_single_arc = 0.0;       // s^{1/gamma} n(s; T(1_delta))
};

struct AdditivityReport {
    double gamma = 1.0;
    std::size_t arcs = 1;
    std::size_t truncation = 0;
    double predicted_single_arc = 0.0;  // kappa_gamma / L
    double smallest_stable_s = 0.0;
    std::vector<AdditivityRow> rows;
    /// Row evaluated at smallest_stable_s.
    AdditivityRow at_smallest;
    double single_arc_deviation = 0.0;
    double ratio_deviation = 0.0;
};

struct AdditivityOptions {
    double stability_tolerance = 0.01;
    /// Explicit s values; when empty a log-spaced grid of grid_points is used.
    std::vector<double> s_grid;
    std::size_t grid_points = 12;
    /// Start of the base arc delta = [offset, offset + 2pi/L).
    double offset = 0.0;
    ComputeBudget budget;
};

/// Compare n(s; T(sum c_l 1_{delta_l})) with sum_l n(s; c_l T(1_{delta_l})) for L
/// equal arcs delta_l = e^{2 pi i l / L} delta.
inline AdditivityReport additivity_experiment(const std::vector<complex>& coeffs, double gamma, std::size_t n,
                                              const AdditivityOptions& o = {})
{
    if (coeffs.empty())
        throw domain_error("additivity_experiment: need at least one arc");
    if (n < 4)
        throw domain_error("additivity_experiment: N must be >= 4");
    const std::size_t arcs = coeffs.size();
    const double width = two_pi / static_cast<double>(arcs);

    std::vector<Arc> pieces;
    std::vector<BergmanSymbol> singles;
    for (std::size_t l = 0; l < arcs; ++l) {
        const double start = o.offset + static_cast<double>(l) * width;
        if (coeffs[l] != complex{0.0})
            pieces.push_back(Arc{start, width, coeffs[l]});
        singles.push_back({gamma, StepSymbol({Arc{start, width, 1.0}}), std::nullopt});
    }
    const BergmanSymbol total{gamma, StepSymbol(pieces), std::nullopt};
    total.validate();

    AdditivityReport rep;
    rep.gamma = gamma;
    rep.arcs = arcs;
    rep.truncation = n;
    rep.predicted_single_arc = kappa(gamma) / static_cast<double>(arcs);

    const std::size_t coarse = (n + 1) / 2;
    const auto total_stab = truncation_stability(bergman_recipe(total), coarse, n, o.stability_tolerance, o.budget);
    // Scale below which each spectrum stops being reliable.
    double s_min = total_stab.fine.values[total_stab.n_max];
    std::vector<Spectrum> single_spectra;
    for (std::size_t l = 0; l < arcs; ++l) {
        const auto st = truncation_stability(bergman_recipe(singles[l]), coarse, n, o.stability_tolerance, o.budget);
        const double c = std::abs(coeffs[l]);
        if (c > 0.0)
            s_min = std::max(s_min, c * st.fine.values[st.n_max]);
        s_min = std::max(s_min, st.fine.values[st.n_max]);
        single_spectra.push_back(st.fine);
    }
    rep.smallest_stable_s = s_min;

    auto row_at = [&](double s) {
        AdditivityRow row;
        row.s = s;
        row.count_sum_operator = counting_function(total_stab.fine, s);
        for (std::size_t l = 0; l < arcs; ++l) {
            const double c = std::abs(coeffs[l]);
            // n(s; c T) = n(s/|c|; T)
            if (c > 0.0)
                row.count_direct_sum += counting_function(single_spectra[l], s / c);
        }
        row.ratio = row.count_direct_sum > 0
                        ? static_cast<double>(row.count_sum_operator) / static_cast<double>(row.count_direct_sum)
                        : 0.0;
        row.scaled_single_arc = std::pow(s, 1.0 / gamma) * static_cast<double>(counting_function(single_spectra[0], s));
        return row;
    };

    std::vector<double> grid = o.s_grid;
    if (grid.empty()) {
        const double s_top = total_stab.fine.values[std::min<std::size_t>(10, total_stab.n_max)];
        const std::size_t k = std::max<std::size_t>(2, o.grid_points);
        for (std::size_t i = 0; i < k; ++i)
            grid.push_back(s_top * std::pow(s_min / s_top, static_cast<double>(i) / static_cast<double>(k - 1)));
    }
    for (double s : grid) {
        if (!(s > 0.0))
            throw domain_error("additivity_experiment: grid values must be > 0");
        rep.rows.push_back(row_at(s));
    }
    rep.at_smallest = row_at(s_min);
    rep.single_arc_deviation =
        std::abs(rep.at_smallest.scaled_single_arc - rep.predicted_single_arc) / rep.predicted_single_arc;
    rep.ratio_deviation = std::abs(rep.at_smallest.ratio - 1.0);
    return rep;
}

struct BoundCheck {
    double bound = 0.0;     // 2 kappa_gamma g0^{1/gamma}
    double worst = 0.0;     // max of s^{1/gamma} n(s) over the stable range
    bool holds = false;
};

/// Finite-scale form of Delta_{1/gamma}(T(g)) <= 2 kappa_gamma |g0|^{1/gamma} for |g| <= g0:
/// the maximum of s^{1/gamma} n(s; T(g)) over the stable range must stay below
/// the bound times (1 + slack).
inline BoundCheck check_crude_upper_bound(const BergmanSymbol& symbol, double g0, std::size_t n, double slack = 0.1,
                                          double stability_tolerance = 0.01, const ComputeBudget& budget = {})
{
    const auto stab = truncation_stability(bergman_recipe(symbol), (n + 1) / 2, n, stability_tolerance, budget);
    BoundCheck out;
    out.bound = 2.0 * kappa(symbol.gamma) * std::pow(std::abs(g0), 1.0 / symbol.gamma);
    const auto& v = stab.fine.values;
    for (std::size_t k = 0; k <= stab.n_max; ++k) {
        // left limit at s = v[k]: #{values >= v[k]} >= k+1
        out.worst = std::max(out.worst, std::pow(v[k], 1.0 / symbol.gamma) * static_cast<double>(k + 1));
    }
    out.holds = out.worst <= out.bound * (1.0 + slack);
    return out;
}

}  // namespace bergspec
