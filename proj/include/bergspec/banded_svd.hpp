#pragma once

// Singular values of a complex band matrix without forming it densely.
//
//  1. Left Givens rotations annihilate the lower band (QR of a band matrix);
//     the triangular factor has upper half-width 2M.
//  2. Each out-of-bidiagonal entry of a row is annihilated by a right
//     rotation; the resulting subdiagonal bulge is removed by a left rotation,
//     which pushes a fill-in 2M+1 places right of the diagonal one block
//     further down. The chase runs off the bottom of the matrix.
//  3. A diagonal unitary scaling makes the bidiagonal real and non-negative.
//  4. Implicit-shift Golub-Kahan QR sweeps on the bidiagonal.
//
// Work is O(N^2 M) for the reduction and O(N^2) for the sweeps; storage is
// O(N M).

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <vector>

#include "errors.hpp"
#include "operator.hpp"

namespace bergspec::banded {

namespace detail {

/// Band workspace holding columns j-lower .. j+upper of every row j.
class Workspace {
public:
    Workspace(std::size_t n, int lower, int upper)
        : n_(n), lower_(lower), upper_(upper), width_(lower + upper + 1),
          data_(n * static_cast<std::size_t>(lower + upper + 1), complex{0.0})
    {
    }

    std::size_t size() const { return n_; }
    int lower() const { return lower_; }
    int upper() const { return upper_; }

    complex& operator()(std::size_t j, std::size_t k)
    {
        return data_[j * width_ + static_cast<std::size_t>(static_cast<long long>(k) - static_cast<long long>(j) + lower_)];
    }

private:
    std::size_t n_;
    int lower_, upper_;
    std::size_t width_;
    std::vector<complex> data_;
};

/// Rotation [c s; -conj(s) c] mapping (a, b) to (r, 0).
struct Rotation {
    double c = 1.0;
    complex s{0.0};
};

inline Rotation make_rotation(complex a, complex b)
{
    const double abs_b = std::abs(b);
    if (abs_b == 0.0)
        return {1.0, complex{0.0}};
    const double abs_a = std::abs(a);
    if (abs_a == 0.0)
        return {0.0, std::conj(b) / abs_b};
    const double r = std::hypot(abs_a, abs_b);
    return {abs_a / r, (a / abs_a) * std::conj(b) / r};
}

/// Rows p, q <- G [row p; row q] over columns [k0, k1].
inline void rotate_rows(Workspace& w, std::size_t p, std::size_t q, const Rotation& g, std::size_t k0, std::size_t k1)
{
    for (std::size_t k = k0; k <= k1; ++k) {
        const complex x = w(p, k);
        const complex y = w(q, k);
        w(p, k) = g.c * x + g.s * y;
        w(q, k) = -std::conj(g.s) * x + g.c * y;
    }
}

/// Columns p, q <- [col p, col q] G^H over rows [r0, r1], where G maps the
/// row vector (w(row, p), w(row, q)) to (r, 0) from the right.
inline void rotate_cols(Workspace& w, std::size_t p, std::size_t q, const Rotation& g, std::size_t r0, std::size_t r1)
{
    // With G = [c s; -conj(s) c] built from (conj a, conj b), the right
    // multiplication by G^H acts on the row (a, b) as (conj of) G on (conj a, conj b).
    for (std::size_t r = r0; r <= r1; ++r) {
        const complex x = w(r, p);
        const complex y = w(r, q);
        w(r, p) = g.c * x + std::conj(g.s) * y;
        w(r, q) = -g.s * x + g.c * y;
    }
}

}  // namespace detail

/// Singular values of a real upper bidiagonal matrix (diagonal d, superdiagonal e),
/// returned in descending order. Overwrites its arguments.
inline std::vector<double> bidiagonal_singular_values(std::vector<double> d, std::vector<double> e)
{
    const std::size_t n = d.size();
    if (n == 0)
        return {};
    if (e.size() + 1 != n)
        throw input_error("bidiagonal_singular_values: superdiagonal must have N-1 entries");

    constexpr double eps = std::numeric_limits<double>::epsilon();
    constexpr double safe_min = std::numeric_limits<double>::min();
    double anorm = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        anorm = std::max(anorm, std::abs(d[i]) + (i + 1 < n ? std::abs(e[i]) : 0.0));
    const double zero_diag = eps * anorm;

    auto negligible = [&](std::size_t i) {
        return std::abs(e[i]) <= eps * (std::abs(d[i]) + std::abs(d[i + 1])) || std::abs(e[i]) <= safe_min;
    };

    // Chase e[i] along row i with left rotations when d[i] == 0, i < hi.
    auto chase_row = [&](std::size_t i, std::size_t hi) {
        double f = e[i];
        e[i] = 0.0;
        for (std::size_t j = i + 1; j <= hi && f != 0.0; ++j) {
            const double r = std::hypot(d[j], f);
            const double c = d[j] / r, s = f / r;
            d[j] = r;
            if (j < hi) {
                f = -s * e[j];
                e[j] *= c;
            }
        }
    };
    // Chase e[hi-1] up column hi with right rotations when d[hi] == 0.
    auto chase_col = [&](std::size_t lo, std::size_t hi) {
        double f = e[hi - 1];
        e[hi - 1] = 0.0;
        for (std::size_t j = hi; j-- > lo && f != 0.0;) {
            const double r = std::hypot(d[j], f);
            const double c = d[j] / r, s = f / r;
            d[j] = r;
            if (j > lo) {
                f = -s * e[j - 1];
                e[j - 1] *= c;
            }
        }
    };

    auto golub_kahan_step = [&](std::size_t lo, std::size_t hi) {
        const double dm = d[hi - 1], dn = d[hi], em = e[hi - 1];
        const double el = hi - 1 > lo ? e[hi - 2] : 0.0;
        const double t11 = dm * dm + el * el;
        const double t12 = dm * em;
        const double t22 = dn * dn + em * em;
        const double delta = 0.5 * (t11 - t22);
        double mu = t22;
        if (t12 != 0.0) {
            const double denom = delta + std::copysign(std::hypot(delta, t12), delta);
            mu = t22 - t12 * t12 / denom;
        }
        double y = d[lo] * d[lo] - mu;
        double z = d[lo] * e[lo];
        for (std::size_t k = lo; k < hi; ++k) {
            // Right rotation on columns k, k+1.
            double r = std::hypot(y, z);
            double c = r == 0.0 ? 1.0 : y / r;
            double s = r == 0.0 ? 0.0 : z / r;
            if (k > lo)
                e[k - 1] = r;
            const double dk = c * d[k] + s * e[k];
            const double ek = -s * d[k] + c * e[k];
            const double bulge = s * d[k + 1];
            d[k + 1] *= c;
            // Left rotation on rows k, k+1.
            r = std::hypot(dk, bulge);
            c = r == 0.0 ? 1.0 : dk / r;
            s = r == 0.0 ? 0.0 : bulge / r;
            d[k] = r;
            const double new_e = c * ek + s * d[k + 1];
            d[k + 1] = -s * ek + c * d[k + 1];
            if (k + 1 < hi) {
                y = new_e;
                z = s * e[k + 1];
                e[k + 1] *= c;
            } else {
                e[k] = new_e;
            }
        }
    };

    const std::size_t max_steps = 30 * n * n + 100;
    std::size_t steps = 0;
    std::size_t hi = n - 1;
    while (hi > 0) {
        if (negligible(hi - 1)) {
            e[hi - 1] = 0.0;
            --hi;
            continue;
        }
        std::size_t lo = hi - 1;
        while (lo > 0 && !negligible(lo - 1))
            --lo;
        if (lo > 0)
            e[lo - 1] = 0.0;

        bool split = false;
        for (std::size_t i = lo; i <= hi; ++i) {
            if (std::abs(d[i]) <= zero_diag) {
                d[i] = 0.0;
                if (i < hi)
                    chase_row(i, hi);
                else
                    chase_col(lo, hi);
                split = true;
                break;
            }
        }
        if (split)
            continue;
        golub_kahan_step(lo, hi);
        if (++steps > max_steps)
            throw solver_error("bidiagonal QR did not converge");
    }

    for (auto& v : d)
        v = std::abs(v);
    std::sort(d.begin(), d.end(), std::greater<>());
    return d;
}

/// Singular values of a banded OperatorMatrix, descending.
inline std::vector<double> singular_values(const OperatorMatrix& a)
{
    if (!a.is_banded())
        throw input_error("banded::singular_values: matrix has dense storage");
    const std::size_t n = a.size();
    if (n == 0)
        return {};
    const int m = a.bandwidth();
    const int k_tri = 2 * m;  // upper half-width after the QR phase
    detail::Workspace w(n, std::max(m, 1), k_tri + 1);
    a.for_each_stored([&](std::size_t j, std::size_t k, complex v) { w(j, k) = v; });
    const auto last = n - 1;
    auto clamp_col = [&](std::size_t k) { return std::min(last, k); };

    // Phase 1: annihilate the lower band column by column, bottom up.
    for (std::size_t c = 0; c < n; ++c) {
        const std::size_t bottom = clamp_col(c + static_cast<std::size_t>(m));
        for (std::size_t i = bottom; i > c; --i) {
            const complex below = w(i, c);
            if (below == complex{0.0})
                continue;
            const auto g = detail::make_rotation(w(i - 1, c), below);
            detail::rotate_rows(w, i - 1, i, g, c, clamp_col(i - 1 + static_cast<std::size_t>(k_tri) + 1));
            w(i, c) = 0.0;
        }
    }

    // Phase 2: reduce the upper band (half-width 2M) to bidiagonal form.
    const auto upper = static_cast<std::size_t>(k_tri);
    for (std::size_t i = 0; i + 2 < n + 0 && upper >= 2; ++i) {
        const std::size_t reach = std::min(upper, last - i);
        for (std::size_t dist = reach; dist >= 2; --dist) {
            std::size_t row = i;
            std::size_t col = i + dist;
            while (true) {
                const complex target = w(row, col);
                if (target == complex{0.0})
                    break;
                // Right rotation on columns (col-1, col) zeroing w(row, col).
                const auto g = detail::make_rotation(std::conj(w(row, col - 1)), std::conj(target));
                const std::size_t r0 = col > upper + 1 ? col - upper - 1 : 0;
                detail::rotate_cols(w, col - 1, col, g, std::max(r0, row), col);
                w(row, col) = 0.0;
                // Left rotation on rows (col-1, col) removing the bulge w(col, col-1).
                const complex bulge = w(col, col - 1);
                if (bulge != complex{0.0}) {
                    const auto h = detail::make_rotation(w(col - 1, col - 1), bulge);
                    detail::rotate_rows(w, col - 1, col, h, col - 1, clamp_col(col + upper));
                    w(col, col - 1) = 0.0;
                }
                const std::size_t next_col = col + upper;  // fill at (col-1, col-1+upper+1)
                if (next_col > last)
                    break;
                row = col - 1;
                col = next_col;
            }
        }
    }

    // Phase 3: real non-negative bidiagonal via diagonal unitary scaling.
    std::vector<double> d(n), e(n > 0 ? n - 1 : 0);
    complex carry{1.0};  // phase applied to the current column
    for (std::size_t i = 0; i < n; ++i) {
        const complex di = w(i, i) * carry;
        d[i] = std::abs(di);
        const complex row_phase = d[i] > 0.0 ? std::conj(di) / d[i] : complex{1.0};
        if (i + 1 < n) {
            const complex ei = w(i, i + 1) * row_phase;
            e[i] = std::abs(ei);
            carry = e[i] > 0.0 ? std::conj(ei) / e[i] : complex{1.0};
        }
    }
    return bidiagonal_singular_values(std::move(d), std::move(e));
}

}  // namespace bergspec::banded
