#pragma once

// Gamma-function helpers in log space.
//
// Every predicted constant and every Bergman matrix entry goes through
// ln Gamma. The entries need B(n+2, gamma+1) for n up to ~10^6, where the
// direct Gamma quotient over/underflows and plain lgamma differences lose
// about log10(n ln n) digits to cancellation; log_gamma_difference() keeps
// the large terms out of the subtraction.

#include <cmath>
#include <string>
#include <utility>

#include "errors.hpp"

namespace bergspec {

inline double log_gamma(double x)
{
    if (!std::isfinite(x) || x <= 0.0)
        throw domain_error("log_gamma: argument must be finite and positive, got " + std::to_string(x));
    int sign = 0;
    // lgamma_r leaves the global signgam alone.
    return ::lgamma_r(x, &sign);
}

namespace detail {

// Tail of Stirling's series, ln Gamma(x) - [(x - 1/2) ln x - x + ln(2 pi)/2].
// Truncation error is below 1e-20 for x >= 30.
inline double stirling_tail(double x)
{
    const double r = 1.0 / x;
    const double r2 = r * r;
    return r * (1.0 / 12.0 +
                r2 * (-1.0 / 360.0 +
                      r2 * (1.0 / 1260.0 +
                            r2 * (-1.0 / 1680.0 +
                                  r2 * (1.0 / 1188.0 +
                                        r2 * (-691.0 / 360360.0 + r2 * (1.0 / 156.0)))))));
}

}  // namespace detail

/// ln Gamma(x) - ln Gamma(x + a) for x > 0, a >= 0, accurate in absolute terms
/// even when both logarithms are of order 10^7.
inline double log_gamma_difference(double x, double a)
{
    if (!std::isfinite(x) || x <= 0.0)
        throw domain_error("log_gamma_difference: x must be finite and positive");
    if (!std::isfinite(a) || a < 0.0)
        throw domain_error("log_gamma_difference: a must be finite and non-negative");
    if (a == 0.0)
        return 0.0;
    if (x < 30.0)
        return log_gamma(x) - log_gamma(x + a);
    // (x - 1/2) ln x - x - [(x + a - 1/2) ln(x + a) - x - a]
    //   = -(x - 1/2) log1p(a/x) - a ln(x + a) + a
    return -(x - 0.5) * std::log1p(a / x) - a * std::log(x + a) + a +
           detail::stirling_tail(x) - detail::stirling_tail(x + a);
}

inline double log_beta(double a, double b)
{
    if (!(a > 0.0) || !(b > 0.0))
        throw domain_error("log_beta: arguments must be positive");
    // Put the larger argument in the role of x so the difference stays well conditioned.
    if (a < b)
        std::swap(a, b);
    return log_gamma(b) + log_gamma_difference(a, b);
}

/// Radial moment  int_0^1 r^{n+1} (1-r)^gamma dr = B(n+2, gamma+1).
inline double radial_moment(long long n, double gamma)
{
    if (n < 0)
        throw domain_error("radial_moment: n must be non-negative");
    if (!std::isfinite(gamma) || gamma <= 0.0)
        throw domain_error("radial_moment: gamma must be finite and positive");
    const double x = static_cast<double>(n) + 2.0;
    return std::exp(log_gamma(gamma + 1.0) + log_gamma_difference(x, gamma + 1.0));
}

/// kappa_gamma = Gamma(gamma+1)^{1/gamma} / 2, the limit of s^{1/gamma} n(s) for the radial symbol.
inline double kappa(double gamma)
{
    if (!std::isfinite(gamma) || gamma <= 0.0)
        throw domain_error("kappa: gamma must be finite and positive");
    return 0.5 * std::exp(log_gamma(gamma + 1.0) / gamma);
}

}  // namespace bergspec
