#pragma once

// Symbols phi(r e^{i theta}) = (1 - r)^gamma * g(e^{i theta}) and the exact
// scalar ingredients they feed into: Fourier coefficients of the angular
// factor g and the power integrals  int |g|^p dtheta/2pi.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "errors.hpp"
#include "quadrature.hpp"
#include "special.hpp"

namespace bergspec {

using complex = std::complex<double>;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Reduce an angle to [0, 2 pi).
inline double wrap_angle(double theta)
{
    double t = std::fmod(theta, two_pi);
    if (t < 0.0)
        t += two_pi;
    if (t >= two_pi)
        t = 0.0;
    return t;
}

/// Trigonometric polynomial  sum_{|m| <= M} b_m e^{i m theta}.
class TrigPoly {
public:
    TrigPoly() : coeffs_{complex{0.0}} {}

    /// coeffs lists b_{-M}, ..., b_M; its size must be odd.
    explicit TrigPoly(std::vector<complex> coeffs) : coeffs_(std::move(coeffs))
    {
        if (coeffs_.empty() || coeffs_.size() % 2 == 0)
            throw input_error("TrigPoly: coefficient list must have odd length 2M+1");
        for (const auto& c : coeffs_)
            if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
                throw input_error("TrigPoly: coefficients must be finite");
    }

    static TrigPoly constant(complex c) { return TrigPoly({c}); }

    /// Single Fourier mode c e^{i m theta}.
    static TrigPoly mode(int m, complex c)
    {
        const int band = std::abs(m);
        std::vector<complex> v(2 * band + 1, complex{0.0});
        v[m + band] = c;
        return TrigPoly(std::move(v));
    }

    int bandwidth() const { return static_cast<int>(coeffs_.size() / 2); }
    const std::vector<complex>& coefficients() const { return coeffs_; }

    complex coeff(long long m) const
    {
        const long long band = bandwidth();
        if (m < -band || m > band)
            return {0.0, 0.0};
        return coeffs_[static_cast<std::size_t>(m + band)];
    }

    complex operator()(double theta) const
    {
        complex sum{0.0};
        const int band = bandwidth();
        for (int m = -band; m <= band; ++m)
            sum += coeffs_[m + band] * std::polar(1.0, m * theta);
        return sum;
    }

    /// True when b_{-m} = conj(b_m), i.e. the function is real valued.
    bool is_real(double tol = 1e-12) const
    {
        const int band = bandwidth();
        for (int m = 0; m <= band; ++m)
            if (std::abs(coeff(-m) - std::conj(coeff(m))) > tol)
                return false;
        return true;
    }

    /// g(theta - alpha): b_m -> b_m e^{-i m alpha}.
    TrigPoly rotated(double alpha) const
    {
        auto v = coeffs_;
        const int band = bandwidth();
        for (int m = -band; m <= band; ++m)
            v[m + band] *= std::polar(1.0, -m * alpha);
        return TrigPoly(std::move(v));
    }

    TrigPoly scaled(complex c) const
    {
        auto v = coeffs_;
        for (auto& x : v)
            x *= c;
        return TrigPoly(std::move(v));
    }

private:
    std::vector<complex> coeffs_;
};

/// Half-open arc [start, start + length) on the circle carrying a constant value.
struct Arc {
    double start = 0.0;
    double length = 0.0;
    complex value{0.0};

    double end() const { return start + length; }
};

/// Step function  sum_l c_l 1_{delta_l}  over pairwise disjoint arcs.
class StepSymbol {
public:
    StepSymbol() = default;

    explicit StepSymbol(std::vector<Arc> arcs) : arcs_(std::move(arcs))
    {
        for (auto& a : arcs_) {
            if (!std::isfinite(a.start) || !std::isfinite(a.length))
                throw input_error("StepSymbol: arc endpoints must be finite");
            if (!(a.length > 0.0) || a.length > two_pi * (1.0 + 1e-15))
                throw input_error("StepSymbol: arc length must lie in (0, 2pi]");
            a.length = std::min(a.length, two_pi);
            a.start = wrap_angle(a.start);
        }
        if (auto clash = first_overlap(arcs_))
            throw input_error("StepSymbol: arcs " + std::to_string(clash->first) + " and " +
                              std::to_string(clash->second) + " overlap");
    }

    /// Arc given by its endpoints theta1 < theta2 (radians).
    static Arc arc(double theta1, double theta2, complex value)
    {
        return Arc{theta1, theta2 - theta1, value};
    }

    /// Length of the overlap of two arcs, accounting for wrap-around.
    static double overlap(const Arc& x, const Arc& y)
    {
        double total = 0.0;
        for (int k = -1; k <= 1; ++k) {
            const double lo = std::max(x.start, y.start + k * two_pi);
            const double hi = std::min(x.end(), y.end() + k * two_pi);
            total += std::max(0.0, hi - lo);
        }
        return total;
    }

    /// Index pair of the first two arcs whose overlap exceeds measure-zero slack.
    static std::optional<std::pair<std::size_t, std::size_t>> first_overlap(const std::vector<Arc>& arcs)
    {
        for (std::size_t i = 0; i < arcs.size(); ++i)
            for (std::size_t j = i + 1; j < arcs.size(); ++j)
                if (overlap(arcs[i], arcs[j]) > 1e-12)
                    return std::pair{i, j};
        return std::nullopt;
    }

    const std::vector<Arc>& arcs() const { return arcs_; }

    complex operator()(double theta) const
    {
        const double t = wrap_angle(theta);
        for (const auto& a : arcs_) {
            double rel = t - a.start;
            if (rel < 0.0)
                rel += two_pi;
            if (rel < a.length)
                return a.value;
        }
        return {0.0, 0.0};
    }

    complex coeff(long long m) const
    {
        complex sum{0.0};
        if (m == 0) {
            for (const auto& a : arcs_)
                sum += a.value * a.length;
            return sum / two_pi;
        }
        const double dm = static_cast<double>(m);
        for (const auto& a : arcs_) {
            // (e^{-i m t1} - e^{-i m t2}) / (2 pi i m), written so that short arcs
            // do not cancel: e^{-i m t1} (1 - e^{-i m L}) = e^{-i m t1} 2i sin(mL/2) e^{-i m L/2}.
            const double half = 0.5 * dm * a.length;
            const complex factor = 2.0 * std::sin(half) * std::polar(1.0, -dm * a.start - half);
            sum += a.value * factor / dm;
        }
        return sum / two_pi;
    }

    bool is_real(double tol = 1e-12) const
    {
        return std::all_of(arcs_.begin(), arcs_.end(),
                           [tol](const Arc& a) { return std::abs(a.value.imag()) <= tol; });
    }

    StepSymbol rotated(double alpha) const
    {
        auto v = arcs_;
        for (auto& a : v)
            a.start += alpha;
        return StepSymbol(std::move(v));
    }

    StepSymbol scaled(complex c) const
    {
        auto v = arcs_;
        for (auto& a : v)
            a.value *= c;
        return StepSymbol(std::move(v));
    }

private:
    std::vector<Arc> arcs_;
};

/// K samples g(2 pi k / K). Interpreted as the zero-order-hold step function
/// whose k-th cell is centred on the k-th sample, so every operation on it is
/// exact for that reconstruction. Its Fourier coefficients are the discrete
/// Fourier sum times sinc(pi m / K); for a smooth g the deviation from the true
/// coefficient is bounded by |m| sup|g'| 2 pi / K plus the aliasing tail
/// sum_{p != 0} |g_hat(m + pK)|.
class SampledSymbol {
public:
    explicit SampledSymbol(std::vector<complex> samples) : samples_(std::move(samples))
    {
        if (samples_.empty())
            throw input_error("SampledSymbol: at least one sample is required");
        for (const auto& c : samples_)
            if (!std::isfinite(c.real()) || !std::isfinite(c.imag()))
                throw input_error("SampledSymbol: samples must be finite");
    }

    const std::vector<complex>& samples() const { return samples_; }

    StepSymbol to_step() const
    {
        const double h = two_pi / static_cast<double>(samples_.size());
        std::vector<Arc> arcs;
        arcs.reserve(samples_.size());
        for (std::size_t k = 0; k < samples_.size(); ++k)
            arcs.push_back(Arc{static_cast<double>(k) * h - 0.5 * h, h, samples_[k]});
        return StepSymbol(std::move(arcs));
    }

private:
    std::vector<complex> samples_;
};

enum class PowerMode { abs, positive_part };

/// Boundary factor g of a symbol.
class AngularSymbol {
public:
    using Variant = std::variant<TrigPoly, StepSymbol, SampledSymbol>;

    AngularSymbol() : v_(TrigPoly{}) {}
    AngularSymbol(TrigPoly p) : v_(std::move(p)) {}
    AngularSymbol(StepSymbol s) : v_(std::move(s)) {}
    AngularSymbol(SampledSymbol s) : v_(std::move(s)) {}

    const Variant& variant() const { return v_; }
    bool is_trig_poly() const { return std::holds_alternative<TrigPoly>(v_); }
    bool is_step() const { return std::holds_alternative<StepSymbol>(v_); }
    bool is_sampled() const { return std::holds_alternative<SampledSymbol>(v_); }

    const TrigPoly& trig_poly() const { return std::get<TrigPoly>(v_); }
    const StepSymbol& step() const { return std::get<StepSymbol>(v_); }

    /// Step representation for Step and Sampled variants.
    StepSymbol as_step() const
    {
        if (auto* s = std::get_if<StepSymbol>(&v_))
            return *s;
        if (auto* s = std::get_if<SampledSymbol>(&v_))
            return s->to_step();
        throw input_error("AngularSymbol: a trigonometric polynomial has no step representation");
    }

    complex operator()(double theta) const
    {
        return std::visit(
            [&](const auto& s) -> complex {
                if constexpr (std::is_same_v<std::decay_t<decltype(s)>, SampledSymbol>)
                    return s.to_step()(theta);
                else
                    return s(theta);
            },
            v_);
    }

    bool is_real(double tol = 1e-12) const
    {
        if (auto* p = std::get_if<TrigPoly>(&v_))
            return p->is_real(tol);
        return as_step().is_real(tol);
    }

    AngularSymbol rotated(double alpha) const
    {
        if (auto* p = std::get_if<TrigPoly>(&v_))
            return p->rotated(alpha);
        return as_step().rotated(alpha);
    }

    AngularSymbol scaled(complex c) const
    {
        if (auto* p = std::get_if<TrigPoly>(&v_))
            return p->scaled(c);
        if (auto* s = std::get_if<SampledSymbol>(&v_)) {
            auto v = s->samples();
            for (auto& x : v)
                x *= c;
            return SampledSymbol(std::move(v));
        }
        return step().scaled(c);
    }

    /// Bandwidth M for trigonometric polynomials, nullopt otherwise.
    std::optional<int> bandwidth() const
    {
        if (auto* p = std::get_if<TrigPoly>(&v_))
            return p->bandwidth();
        return std::nullopt;
    }

private:
    Variant v_;
};

/// Radial perturbation eps * (1 - r)^gamma * 1_{r < a}; it is supported away
/// from the boundary, so it never changes the leading spectral asymptotics.
struct RadialPerturbation {
    double epsilon = 0.0;
    double inner_radius = 0.5;
};

struct BergmanSymbol {
    double gamma = 1.0;
    AngularSymbol angular;
    std::optional<RadialPerturbation> perturbation;

    void validate() const
    {
        if (!std::isfinite(gamma) || gamma <= 0.0)
            throw domain_error("gamma must be > 0");
        if (perturbation) {
            if (!(perturbation->epsilon >= 0.0) || !std::isfinite(perturbation->epsilon))
                throw domain_error("radial perturbation epsilon must be >= 0");
            if (!(perturbation->inner_radius > 0.0 && perturbation->inner_radius < 1.0))
                throw domain_error("radial perturbation radius must lie in (0, 1)");
        }
    }
};

/// Fourier coefficient (1/2pi) int g(theta) e^{-i m theta} dtheta.
inline complex fourier_coeff(const AngularSymbol& g, long long m)
{
    if (g.is_trig_poly())
        return g.trig_poly().coeff(m);
    return g.as_step().coeff(m);
}

struct PowerIntegralOptions {
    double abs_tol = 1e-12;
    double real_tol = 1e-12;
};

namespace detail {

inline double power_of(complex value, double p, PowerMode mode)
{
    const double base = mode == PowerMode::abs ? std::abs(value) : std::max(value.real(), 0.0);
    return base > 0.0 ? std::pow(base, p) : 0.0;
}

/// Zeros of Re g on [0, 2pi], located by sign changes on a grid and refined by bisection.
inline std::vector<double> real_part_zeros(const TrigPoly& g)
{
    const int grid = std::max(256, 32 * (2 * g.bandwidth() + 1));
    const double h = two_pi / grid;
    std::vector<double> zeros;
    auto re = [&](double t) { return g(t).real(); };
    double a = 0.0;
    double fa = re(a);
    for (int i = 1; i <= grid; ++i) {
        const double b = i * h;
        const double fb = re(b);
        if (fa == 0.0) {
            zeros.push_back(a);
        } else if (fa * fb < 0.0) {
            double lo = a, hi = b, flo = fa;
            for (int it = 0; it < 200 && hi - lo > 4e-16 * two_pi; ++it) {
                const double mid = 0.5 * (lo + hi);
                const double fm = re(mid);
                if ((fm < 0.0) == (flo < 0.0)) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            zeros.push_back(0.5 * (lo + hi));
        }
        a = b;
        fa = fb;
    }
    return zeros;
}

}  // namespace detail

/// int_0^{2pi} |g|^p dtheta/2pi  (or (g^+)^p for PowerMode::positive_part).
inline double angular_power_integral(const AngularSymbol& g, double p, PowerMode mode,
                                     const PowerIntegralOptions& opts = {})
{
    if (!std::isfinite(p) || p <= 0.0)
        throw domain_error("angular_power_integral: p must be > 0");
    if (mode == PowerMode::positive_part && !g.is_real(opts.real_tol))
        throw input_error("angular_power_integral: positive part requires a real-valued symbol");

    if (!g.is_trig_poly()) {
        const StepSymbol step = g.as_step();
        double sum = 0.0;
        for (const auto& a : step.arcs())
            sum += detail::power_of(a.value, p, mode) * a.length;
        return sum / two_pi;
    }

    const auto& poly = g.trig_poly();
    std::vector<double> breaks{0.0};
    for (double z : detail::real_part_zeros(poly))
        if (z > breaks.back())
            breaks.push_back(z);
    if (breaks.back() < two_pi)
        breaks.push_back(two_pi);
    auto integrand = [&](double t) { return detail::power_of(poly(t), p, mode); };
    const auto r = quad::integrate(integrand, std::span<const double>(breaks),
                                   quad::Options{opts.abs_tol * two_pi, 200000});
    return r.value / two_pi;
}

}  // namespace bergspec
