// Acceptance run: one PASS/FAIL line per criterion; exit status 1 if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <bergspec/asymptotics.hpp>
#include <bergspec/properties.hpp>

using namespace bergspec;
using std::numbers::pi;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

int failures = 0;

void criterion(int id, const char* title, const std::function<Outcome()>& body)
{
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!o.pass)
        ++failures;
    std::printf("%s criterion %d: %s -- %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, title, o.detail.c_str(), secs);
    std::fflush(stdout);
}

/// Spectra memoized by N so that the N/2 run reuses the spectrum computed for N.
SpectrumProvider memoized(SpectrumRecipe recipe)
{
    auto memo = std::make_shared<std::map<std::size_t, Spectrum>>();
    return [recipe, memo](std::size_t n) {
        auto it = memo->find(n);
        if (it == memo->end())
            it = memo->emplace(n, compute_spectrum(recipe, n)).first;
        return it->second;
    };
}

// Independent oracle: integral of |g|^p over the circle with user-supplied breakpoints.
double circle_mean(const std::function<double(double)>& f, std::vector<double> breaks)
{
    using boost::math::quadrature::gauss_kronrod;
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
        total += gauss_kronrod<double, 61>::integrate(f, breaks[i], breaks[i + 1], 15, 1e-15);
    return total / (2.0 * pi);
}

Outcome radial()
{
    const std::size_t n = 2000;
    const auto s = singular_values(build_bergman_toeplitz({1.0, TrigPoly::constant(1.0), std::nullopt}, n));
    double worst = 0.0, lo = INFINITY, hi = -INFINITY;
    for (std::size_t k = 0; k < n; ++k)
        worst = std::max(worst, std::abs(s.values[k] - 1.0 / (2.0 * k + 3.0)));
    for (std::size_t k = 500; k <= 1000; ++k) {
        lo = std::min(lo, s.values[k] * k);
        hi = std::max(hi, s.values[k] * k);
    }
    return {worst <= 1e-12 && lo >= 0.497 && hi <= 0.5,
            fmt("max |s_n - 1/(2n+3)| = %.2e, s_n n in [%.5f, %.5f] for n in [500, 1000]", worst, lo, hi)};
}

Outcome half_circle()
{
    const BergmanSymbol g{1.0, StepSymbol({StepSymbol::arc(0.0, pi, 1.0)}), std::nullopt};
    const auto pred = predicted_constant(g);
    const auto provider = memoized(bergman_recipe(g));
    const auto big = run_verification(provider, pred, 3000);
    const auto small = run_verification(provider, pred, 1500);
    const bool ok = std::abs(pred.constant - 0.25) < 1e-10 && big.pass &&
                    big.relative_deviation <= small.relative_deviation;
    return {ok, fmt("C = %.6f, C_hat(3000) = %.6f (dev %.4f, window [%zu, %zu], n_max %zu), dev(1500) = %.4f",
                    pred.constant, big.fitted_c, big.relative_deviation, big.window.lo, big.window.hi,
                    big.n_max_stable, small.relative_deviation)};
}

Outcome trig_poly()
{
    const BergmanSymbol g{1.0, TrigPoly({1.0, 1.0, 1.0}), std::nullopt};
    const double closed = 0.5 * (1.0 / 3.0 + 2.0 * std::sqrt(3.0) / pi);
    const double oracle =
        0.5 * circle_mean([](double t) { return std::abs(1.0 + 2.0 * std::cos(t)); },
                          {0.0, 2.0 * pi / 3.0, 4.0 * pi / 3.0, 2.0 * pi});
    const auto pred = predicted_constant(g);
    const bool confirmed = std::abs(pred.constant - oracle) <= 1e-10 && std::abs(oracle - closed) <= 1e-10;
    if (!confirmed)
        return {false, fmt("constant %.15f not confirmed by oracle %.15f", pred.constant, oracle)};
    const auto rep = run_theorem1_verification(g, 4000);
    return {rep.pass, fmt("C = %.6f (oracle agrees to %.1e), C_hat = %.6f, dev %.4f, solver %s", pred.constant,
                          std::abs(pred.constant - oracle), rep.fitted_c, rep.relative_deviation,
                          rep.solver_id.c_str())};
}

Outcome banded_matrix()
{
    const TrigPoly b({1.0, 1.0, 1.0});
    const std::size_t n = 4000;
    const auto rep = run_theorem2_verification(b, 1.0, n);
    const double expected = 1.0 / 3.0 + 2.0 * std::sqrt(3.0) / pi;
    // j |D_{j,k}| maximized over the band and over dyadic blocks of j inside the stable range.
    const auto d = rescaled_toeplitz_minus_banded(1.0, b, n);
    std::vector<double> block_max;
    for (std::size_t lo = 8; 2 * lo <= rep.n_max_stable + 1; lo *= 2) {
        double m = 0.0;
        for (std::size_t j = lo; j < 2 * lo; ++j)
            for (std::size_t k = j > 0 ? j - 1 : 0; k <= std::min(n - 1, j + 1); ++k)
                m = std::max(m, static_cast<double>(j) * std::abs(d(j, k)));
        block_max.push_back(m);
    }
    bool decreasing = block_max.size() >= 3;
    for (std::size_t i = 1; i < block_max.size(); ++i)
        decreasing = decreasing && block_max[i] < block_max[i - 1];
    return {rep.pass && decreasing && std::abs(rep.predicted_c - expected) < 1e-10,
            fmt("C = %.6f, C_hat = %.6f, dev %.4f; j|D| block maxima %.3e -> %.3e over %zu blocks (%s)",
                rep.predicted_c, rep.fitted_c, rep.relative_deviation, block_max.front(), block_max.back(),
                block_max.size(), decreasing ? "decreasing" : "not decreasing")};
}

Outcome positive_part()
{
    const BergmanSymbol g{1.0, TrigPoly({0.5, 0.0, 0.5}), std::nullopt};
    VerificationOptions o;
    o.tolerance = 0.15;
    const auto pos = run_theorem1_verification(g, 4000, o, PredictionVariant::toeplitz_positive_part);
    const auto neg = run_theorem1_verification(g, 4000, o, PredictionVariant::toeplitz_negative_part);
    const double expected = 0.5 / pi;
    const double sym = std::abs(neg.fitted_c - pos.fitted_c) / pos.fitted_c;
    const bool ok = std::abs(pos.predicted_c - expected) < 1e-10 && std::abs(neg.predicted_c - expected) < 1e-10 &&
                    pos.pass && neg.pass && sym <= 0.02;
    return {ok, fmt("C+ = %.6f, C_hat+ = %.6f (dev %.4f), C_hat- = %.6f (dev %.4f), |C_hat- - C_hat+|/C_hat+ = %.2e",
                    pos.predicted_c, pos.fitted_c, pos.relative_deviation, neg.fitted_c, neg.relative_deviation, sym)};
}

Outcome orthogonality()
{
    const auto sep = orthogonality_experiment(StepSymbol({StepSymbol::arc(0.0, pi / 2, 1.0)}),
                                              StepSymbol({StepSymbol::arc(pi, 1.5 * pi, 1.0)}), 1.0, 1500);
    const auto touch = orthogonality_experiment(StepSymbol({StepSymbol::arc(0.0, pi, 1.0)}),
                                                StepSymbol({StepSymbol::arc(pi, 2.0 * pi, 1.0)}), 1.0, 1500);
    const bool ok = sep.decay_exponent >= 4.0 && touch.trend_decreasing && touch.trend.size() >= 2;
    return {ok, fmt("separated: exponent %.2f over [%zu, %zu]%s; touching: s_n n^2 over [%zu, %zu] %s (%.3e -> %.3e)",
                    sep.decay_exponent, sep.window.lo, sep.window.hi,
                    sep.exponent_is_lower_bound ? " (lower bound, noise floor reached)" : "", touch.trend_window.lo,
                    touch.trend_window.hi, touch.trend_decreasing ? "strictly decreasing" : "not decreasing",
                    touch.trend.front(), touch.trend.back())};
}

Outcome additivity()
{
    const auto rep = additivity_experiment({1.0, -1.0, 2.0, 0.5}, 1.0, 2000);
    const bool ok = rep.single_arc_deviation <= 0.1 && rep.ratio_deviation <= 0.1;
    return {ok, fmt("at s = %.4e: s n(s; T(1_delta)) = %.5f vs %.5f (dev %.4f); n(s; T(g)) = %zu vs sum %zu "
                    "(dev %.4f)",
                    rep.smallest_stable_s, rep.at_smallest.scaled_single_arc, rep.predicted_single_arc,
                    rep.single_arc_deviation, rep.at_smallest.count_sum_operator, rep.at_smallest.count_direct_sum,
                    rep.ratio_deviation)};
}

Outcome inequalities()
{
    std::size_t checks = 0, violations = 0;
    for (std::uint64_t t = 0; t < 100; ++t) {
        auto rng = detail::stream(2024, 1, 50, t);
        const auto a = detail::random_matrix(rng, 50);
        const auto b = detail::random_matrix(rng, 50);
        const auto sa = singular_values(a), sb = singular_values(b);
        std::vector<std::pair<double, double>> grid;
        for (int g = 0; g < 20; ++g)
            grid.emplace_back(detail::midpoint_scale(rng, sa), detail::midpoint_scale(rng, sb));
        const auto r = check_product_counting_inequalities(a, b, grid);
        checks += r.checks;
        violations += r.violations.size();
    }
    return {violations == 0, fmt("%zu checks over 100 pairs x 20 grid points, %zu violations", checks, violations)};
}

Outcome oracle_equivalence()
{
    std::mt19937_64 rng(99);
    std::normal_distribution<double> normal;
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
        const std::size_t n = std::uniform_int_distribution<std::size_t>(20, 500)(rng);
        const int m = std::uniform_int_distribution<int>(0, 6)(rng);
        auto a = OperatorMatrix::banded(n, m);
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = j >= static_cast<std::size_t>(m) ? j - m : 0; k < std::min(n, j + m + 1); ++k)
                a.at(j, k) = complex{normal(rng), normal(rng)} * std::pow(j + 1.0, -0.5 * (t % 3));
        const auto sb = singular_values_banded(a), sd = singular_values_dense(a);
        const double norm = sd.values.front();
        for (std::size_t i = 0; i < n; ++i)
            worst = std::max(worst, std::abs(sb.values[i] - sd.values[i]) / norm);
    }
    return {worst <= 1e-10, fmt("max |s_banded - s_dense| / ||A|| = %.2e over 20 matrices", worst)};
}

}  // namespace

int main()
{
    criterion(1, "radial exactness", radial);
    criterion(2, "half-circle step symbol", half_circle);
    criterion(3, "trigonometric polynomial symbol", trig_poly);
    criterion(4, "banded matrix with power-decaying diagonals", banded_matrix);
    criterion(5, "positive and negative eigenvalues of cos", positive_part);
    criterion(6, "asymptotic orthogonality", orthogonality);
    criterion(7, "additivity over four arcs", additivity);
    criterion(8, "product counting inequalities", inequalities);
    criterion(9, "banded vs dense singular values", oracle_equivalence);
    std::printf("%d of 9 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
