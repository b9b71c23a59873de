#include <cmath>
#include <fstream>
#include <numbers>

#include <gtest/gtest.h>

#include <bergspec/asymptotics.hpp>
#include <json.hpp>

using namespace bergspec;
using std::numbers::pi;

namespace {

BergmanSymbol radial(double gamma = 1.0) { return {gamma, TrigPoly::constant(1.0), std::nullopt}; }

BergmanSymbol arc_symbol(double a, double b, complex v = 1.0, double gamma = 1.0)
{
    return {gamma, StepSymbol({StepSymbol::arc(a, b, v)}), std::nullopt};
}

Spectrum make(std::vector<double> v)
{
    Spectrum s;
    s.values = std::move(v);
    s.n = s.values.size();
    return s;
}

}  // namespace

TEST(PredictedConstant, ClosedForms)
{
    EXPECT_NEAR(predicted_constant(radial()).constant, 0.5, 1e-12);
    EXPECT_NEAR(predicted_constant(arc_symbol(0.0, pi)).constant, 0.25, 1e-10);
    const double trig = 1.0 / 3.0 + 2.0 * std::sqrt(3.0) / pi;
    EXPECT_NEAR(predicted_constant({1.0, TrigPoly({1.0, 1.0, 1.0}), std::nullopt}).constant, 0.5 * trig, 1e-10);
    EXPECT_NEAR(predicted_constant_banded(TrigPoly({1.0, 1.0, 1.0}), 1.0).constant, trig, 1e-10);
    EXPECT_EQ(predicted_constant({1.0, TrigPoly::constant(0.0), std::nullopt}).constant, 0.0);
    // gamma = 2 on the constant symbol: 2^{-2} Gamma(3) = 1/2
    EXPECT_NEAR(predicted_constant(radial(2.0)).constant, 0.5, 1e-12);
    EXPECT_NEAR(predicted_constant(radial(2.0)).kappa_gamma, 0.5 * std::sqrt(2.0), 1e-14);
}

TEST(PredictedConstant, PositiveAndNegativeParts)
{
    const BergmanSymbol c{1.0, TrigPoly({0.5, 0.0, 0.5}), std::nullopt};
    EXPECT_NEAR(predicted_constant(c, PowerMode::positive_part).constant, 1.0 / (2.0 * pi), 1e-10);
    EXPECT_NEAR(predicted_constant_negative_part(c).constant, 1.0 / (2.0 * pi), 1e-10);
    EXPECT_NEAR(predicted_constant(c).constant, 1.0 / pi, 1e-10);
    // a non-negative symbol has no negative part
    EXPECT_EQ(predicted_constant_negative_part(arc_symbol(0.0, 1.0)).constant, 0.0);
    EXPECT_THROW(predicted_constant(radial(0.0)), domain_error);
    EXPECT_THROW(predicted_constant_banded(TrigPoly::constant(1.0), -1.0), domain_error);
}

TEST(PredictedConstant, ScalingCovariance)
{
    for (double gamma : {0.5, 1.0, 2.5})
        for (complex c : {complex{2.0, 0.0}, complex{0.0, -0.3}, complex{-1.5, 1.5}}) {
            BergmanSymbol s{gamma, StepSymbol({StepSymbol::arc(0.2, 1.9, complex{1, 1}),
                                               StepSymbol::arc(2.5, 5.0, -0.5)}), std::nullopt};
            BergmanSymbol t = s;
            t.angular = s.angular.scaled(c);
            EXPECT_NEAR(predicted_constant(t).constant, std::abs(c) * predicted_constant(s).constant,
                        1e-10 * predicted_constant(t).constant);
        }
}

TEST(PredictedConstant, RotationInvarianceAndMonotonicity)
{
    const BergmanSymbol s{1.5, TrigPoly({complex{0.2, 0.1}, 1.0, complex{0.0, 0.7}}), std::nullopt};
    for (double alpha : {0.3, 2.0, -4.0}) {
        BergmanSymbol r = s;
        r.angular = s.angular.rotated(alpha);
        EXPECT_NEAR(predicted_constant(r).constant, predicted_constant(s).constant, 1e-10);
    }
    // |g1| <= |g2| pointwise
    double last = 0.0;
    for (double len : {0.5, 1.0, 2.0, 4.0, 6.0}) {
        const double c = predicted_constant(arc_symbol(1.0, 1.0 + len, 1.0, 0.7)).constant;
        EXPECT_GT(c, last);
        last = c;
    }
}

TEST(PredictedConstant, IndicatorIdentity)
{
    for (double gamma : {0.5, 1.0, 3.0})
        for (double len : {0.1, 1.0, pi, 5.0}) {
            const double lhs = predicted_constant(arc_symbol(0.4, 0.4 + len, 1.0, gamma)).constant;
            const double rhs = predicted_constant(radial(gamma)).constant * std::pow(len / (2.0 * pi), gamma);
            EXPECT_NEAR(lhs, rhs, 1e-10 * rhs);
        }
}

TEST(EstimatePowerLaw, ExactPowerLaw)
{
    std::vector<double> v(300);
    v[0] = 1.0;
    for (std::size_t n = 1; n < v.size(); ++n)
        v[n] = 0.7 * std::pow(static_cast<double>(n), -1.5);
    const auto both = estimate_power_law(make(v), {10, 200}, FitMode::fit_both);
    EXPECT_NEAR(both.gamma_hat, 1.5, 1e-12);
    EXPECT_NEAR(both.c_hat, 0.7, 1e-12);
    const auto fixed = estimate_power_law(make(v), {10, 200}, FitMode::fixed_gamma, 1.5);
    EXPECT_NEAR(fixed.c_hat, 0.7, 1e-14);
    EXPECT_LT(fixed.residual_spread, 1e-13);
}

TEST(EstimatePowerLaw, RadialSequence)
{
    std::vector<double> v(2000);
    for (std::size_t n = 0; n < v.size(); ++n)
        v[n] = 1.0 / (2.0 * n + 3.0);
    const auto fit = estimate_power_law(make(v), {500, 1000}, FitMode::fixed_gamma, 1.0);
    EXPECT_GE(fit.c_hat, 0.4985);
    EXPECT_LE(fit.c_hat, 0.5);
}

TEST(EstimatePowerLaw, ConstantSpectrum)
{
    const auto fit = estimate_power_law(make(std::vector<double>(50, 0.3)), {5, 40}, FitMode::fit_both);
    EXPECT_NEAR(fit.gamma_hat, 0.0, 1e-13);
    EXPECT_NEAR(fit.c_hat, 0.3, 1e-13);
}

TEST(EstimatePowerLaw, Errors)
{
    const auto s = make({1.0, 0.5, 0.25, 0.125, 1e-18, 0.0});
    EXPECT_THROW(estimate_power_law(s, {0, 2}, FitMode::fit_both), experiment_error);
    EXPECT_THROW(estimate_power_law(s, {2, 2}, FitMode::fit_both), experiment_error);
    EXPECT_THROW(estimate_power_law(s, {1, 6}, FitMode::fit_both), experiment_error);
    EXPECT_THROW(estimate_power_law(s, {2, 4}, FitMode::fit_both), experiment_error);
    EXPECT_THROW(estimate_power_law(s, {1, 3}, FitMode::fixed_gamma, 0.0), domain_error);
    EXPECT_NO_THROW(estimate_power_law(s, {1, 3}, FitMode::fit_both));
}

TEST(Stability, StablePrefixOnSyntheticSpectra)
{
    EXPECT_EQ(stable_prefix(make({1.0, 0.5, 0.3}), make({1.0, 0.5, 0.3, 0.1}), 1e-3), 2u);
    EXPECT_EQ(stable_prefix(make({1.0, 0.5, 0.2}), make({1.0, 0.5, 0.3, 0.1}), 1e-3), 1u);
    EXPECT_THROW(stable_prefix(make({0.5}), make({1.0}), 1e-3), experiment_error);
}

TEST(Stability, RadialIsFullyStable)
{
    const auto r = truncation_stability(bergman_recipe(radial()), 300, 1e-2);
    EXPECT_EQ(r.n_max, 299u);
    EXPECT_EQ(r.fine_n, 600u);
}

TEST(Stability, ZeroSymbolHasNothingToResolve)
{
    EXPECT_THROW(truncation_stability(bergman_recipe({1.0, TrigPoly::constant(0.0), std::nullopt}), 50, 1e-2),
                 experiment_error);
}

TEST(Stability, DenseBudgetIsEnforced)
{
    ComputeBudget tiny;
    tiny.max_dense_n = 100;
    EXPECT_THROW(truncation_stability(bergman_recipe(arc_symbol(0, 1)), 60, 120, 1e-2, tiny), capacity_error);
}

TEST(Stability, HalfCircleStablePrefixMatchesGolden)
{
    std::ifstream in(std::string(BERGSPEC_GOLDEN_DIR) + "/half_circle_stability.json");
    ASSERT_TRUE(in) << "golden file missing";
    const auto golden = nlohmann::json::parse(in);
    const std::size_t n = golden.at("N");
    const auto r = truncation_stability(bergman_recipe(arc_symbol(0.0, pi)), n, golden.at("tolerance").get<double>());
    RecordProperty("n_max", static_cast<int>(r.n_max));
    EXPECT_GT(r.n_max, n / 4);
    // Exact agreement is not required across LAPACK builds; a few indices of slack.
    EXPECT_NEAR(static_cast<double>(r.n_max), golden.at("n_max").get<double>(), 5.0);
}

TEST(Verification, RadialSmallTruncation)
{
    VerificationOptions o;
    o.tolerance = 0.02;
    const auto rep = run_theorem1_verification(radial(), 400, o);
    EXPECT_TRUE(rep.pass) << rep.failure_reason;
    EXPECT_EQ(rep.n_max_stable, 199u);
    EXPECT_NEAR(rep.fitted_gamma, 1.0, 0.05);
    EXPECT_EQ(rep.variant, "toeplitz");
}

TEST(Verification, ZeroPredictionFailsWithReason)
{
    // A vanishing prediction cannot be confirmed by any fit.
    const auto rep = run_verification([](std::size_t n) { return make(std::vector<double>(n, 1.0)); },
                                      TheoremPrediction{}, 40);
    EXPECT_FALSE(rep.pass);
    EXPECT_FALSE(rep.failure_reason.empty());
}

TEST(Verification, TooShortStableRangeIsReported)
{
    VerificationOptions o;
    o.window = FitWindow{5, 500};
    const auto rep = run_theorem1_verification(radial(), 100, o);
    EXPECT_FALSE(rep.pass);
    EXPECT_NE(rep.failure_reason.find("stable range"), std::string::npos);
}

TEST(Orthogonality, ZeroProductAndOverlap)
{
    const StepSymbol g1({StepSymbol::arc(0.0, 1.0, 1.0)});
    const StepSymbol zero({StepSymbol::arc(2.0, 3.0, 0.0)});
    EXPECT_TRUE(orthogonality_experiment(g1, zero, 1.0, 40).zero_product);
    const StepSymbol g2({StepSymbol::arc(0.5, 2.0, 1.0)});
    EXPECT_THROW(orthogonality_experiment(g1, g2, 1.0, 40), input_error);
    OrthogonalityOptions tiny;
    tiny.budget.max_dense_n = 100;
    EXPECT_THROW(orthogonality_experiment(g1, StepSymbol({StepSymbol::arc(3.0, 4.0, 1.0)}), 1.0, 60, tiny),
                 capacity_error);
}

TEST(Orthogonality, SeparatedArcsDecayFast)
{
    const StepSymbol g1({StepSymbol::arc(0.0, pi / 2, 1.0)});
    const StepSymbol g2({StepSymbol::arc(pi, 1.5 * pi, 1.0)});
    const auto rep = orthogonality_experiment(g1, g2, 1.0, 400);
    EXPECT_FALSE(rep.zero_product);
    EXPECT_GT(rep.decay_exponent, 2.0);
}

TEST(Additivity, SingleArcIsTrivial)
{
    const auto rep = additivity_experiment({complex{1.0}}, 1.0, 200);
    for (const auto& row : rep.rows)
        EXPECT_EQ(row.count_sum_operator, row.count_direct_sum);
    EXPECT_EQ(rep.ratio_deviation, 0.0);
    EXPECT_NEAR(rep.predicted_single_arc, 0.5, 1e-15);
}

TEST(Additivity, TwoHalvesOfTheRadialSymbol)
{
    const auto rep = additivity_experiment({complex{1.0}, complex{1.0}}, 1.0, 600);
    EXPECT_NEAR(rep.predicted_single_arc, 0.25, 1e-15);
    EXPECT_LT(rep.ratio_deviation, 0.1);
    EXPECT_LT(rep.single_arc_deviation, 0.1);
    EXPECT_THROW(additivity_experiment({}, 1.0, 100), domain_error);
}

TEST(CrudeBound, HoldsForTheTrueSupremumAndFailsBelowIt)
{
    const auto s = arc_symbol(0.0, pi);
    const auto ok = check_crude_upper_bound(s, 1.0, 300);
    EXPECT_TRUE(ok.holds);
    EXPECT_NEAR(ok.bound, 1.0, 1e-14);
    EXPECT_FALSE(check_crude_upper_bound(s, 0.1, 300).holds);
}
