#pragma once

// Globally adaptive Gauss-Kronrod (7/15) quadrature on a list of breakpoints.
//
// The interval with the largest error estimate is bisected until the summed
// estimate drops below the absolute tolerance. Callers split the range at
// known kinks (zeros of the integrand's argument) so every panel is smooth
// or has at worst an endpoint singularity.

#include <algorithm>
#include <cmath>
#include <queue>
#include <span>
#include <vector>

#include "errors.hpp"

namespace bergspec::quad {

struct Result {
    double value = 0.0;
    double error = 0.0;
    int panels = 0;
};

struct Options {
    double abs_tol = 1e-12;
    int max_panels = 20000;
};

namespace detail {

struct Panel {
    double a, b, value, error;
    bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel gauss_kronrod_15(const F& f, double a, double b)
{
    static constexpr double xgk[8] = {
        0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
        0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
        0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
        0.207784955007898467600689403773245, 0.0};
    static constexpr double wgk[8] = {
        0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
        0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
        0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
        0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
    static constexpr double wg[4] = {
        0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
        0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(center);
    double kronrod = wgk[7] * fc;
    double gauss = wg[3] * fc;
    for (int i = 0; i < 7; ++i) {
        const double dx = half * xgk[i];
        const double pair = f(center - dx) + f(center + dx);
        kronrod += wgk[i] * pair;
        if (i % 2 == 1)
            gauss += wg[i / 2] * pair;
    }
    kronrod *= half;
    gauss *= half;
    const double err = std::abs(kronrod - gauss);
    return {a, b, kronrod, err};
}

}  // namespace detail

/// Integrate f over [breaks.front(), breaks.back()], treating every interior
/// breakpoint as a panel boundary. Throws quadrature_error on non-convergence.
template <class F>
Result integrate(const F& f, std::span<const double> breaks, const Options& opts = {})
{
    if (breaks.size() < 2)
        return {};
    std::priority_queue<detail::Panel> heap;
    double total = 0.0;
    double total_err = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        if (!(breaks[i + 1] > breaks[i]))
            continue;
        auto p = detail::gauss_kronrod_15(f, breaks[i], breaks[i + 1]);
        total += p.value;
        total_err += p.error;
        heap.push(p);
    }
    int panels = static_cast<int>(heap.size());
    while (total_err > opts.abs_tol && !heap.empty()) {
        if (panels >= opts.max_panels)
            throw quadrature_error("adaptive quadrature did not reach tolerance", total_err);
        auto worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) {
            // Panel cannot be split further in double precision.
            throw quadrature_error("adaptive quadrature hit floating-point resolution", total_err);
        }
        auto left = detail::gauss_kronrod_15(f, worst.a, mid);
        auto right = detail::gauss_kronrod_15(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++panels;
    }
    // Re-sum to shed the drift of the incremental updates.
    double value = 0.0, err = 0.0;
    while (!heap.empty()) {
        value += heap.top().value;
        err += heap.top().error;
        heap.pop();
    }
    return {value, err, panels};
}

template <class F>
Result integrate(const F& f, double a, double b, const Options& opts = {})
{
    const double ends[2] = {a, b};
    return integrate(f, std::span<const double>(ends, 2), opts);
}

}  // namespace bergspec::quad
