#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include <bergspec/quadrature.hpp>

using namespace bergspec;

TEST(Quadrature, PolynomialsAreExact)
{
    const auto r = quad::integrate([](double x) { return 3 * x * x + 1; }, 0.0, 2.0);
    EXPECT_NEAR(r.value, 10.0, 1e-13);
}

TEST(Quadrature, SmoothPeriodic)
{
    const auto r = quad::integrate([](double x) { return std::exp(std::cos(x)); }, 0.0, 2 * std::numbers::pi);
    // 2 pi I_0(1)
    EXPECT_NEAR(r.value, 2 * std::numbers::pi * std::cyl_bessel_i(0.0, 1.0), 1e-12);
}

TEST(Quadrature, KinkAtBreakpoint)
{
    const std::vector<double> breaks = {-1.0, 0.3, 1.0};
    const auto r = quad::integrate([](double x) { return std::abs(x - 0.3); }, breaks);
    EXPECT_NEAR(r.value, 0.5 * 1.3 * 1.3 + 0.5 * 0.7 * 0.7, 1e-14);
}

TEST(Quadrature, EndpointSingularityConvergesAdaptively)
{
    const auto r = quad::integrate([](double x) { return std::sqrt(x); }, 0.0, 1.0);
    EXPECT_NEAR(r.value, 2.0 / 3.0, 1e-11);
}

TEST(Quadrature, ReportsFailureWithAchievedError)
{
    quad::Options o;
    o.abs_tol = 1e-15;
    o.max_panels = 3;
    try {
        quad::integrate([](double x) { return std::sin(1.0 / (x + 1e-3)); }, 0.0, 1.0, o);
        FAIL() << "expected quadrature_error";
    } catch (const quadrature_error& e) {
        EXPECT_GT(e.achieved(), 0.0);
    }
}
