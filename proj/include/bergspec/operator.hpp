#pragma once

// Finite sections of Bergman-space Toeplitz operators and of banded matrices
// with power-decaying diagonals.
//
// Basis: e_k = sqrt(k+1) z^k, orthonormal for the normalised area measure.
// For phi = (1-r)^gamma g(e^{i theta}),
//
//     t_{j,k} = 2 sqrt((j+1)(k+1)) B(j+k+2, gamma+1) g_hat(k-j),
//
// so a trigonometric polynomial of degree M yields a band of half-width M.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <boost/math/special_functions/beta.hpp>

#include "errors.hpp"
#include "special.hpp"
#include "symbols.hpp"

namespace bergspec {

enum class Storage { banded, dense };

/// N x N matrix with either dense row-major storage or a band of half-width M
/// stored as N rows of 2M+1 entries (column k = j - M + slot).
class OperatorMatrix {
public:
    OperatorMatrix() = default;

    static OperatorMatrix dense(std::size_t n)
    {
        OperatorMatrix a;
        a.n_ = n;
        a.band_ = -1;
        a.data_.assign(n * n, complex{0.0});
        return a;
    }

    static OperatorMatrix banded(std::size_t n, int bandwidth)
    {
        if (bandwidth < 0)
            throw input_error("OperatorMatrix: bandwidth must be non-negative");
        OperatorMatrix a;
        a.n_ = n;
        a.band_ = bandwidth;
        a.data_.assign(n * (2 * static_cast<std::size_t>(bandwidth) + 1), complex{0.0});
        return a;
    }

    std::size_t size() const { return n_; }
    Storage storage() const { return band_ < 0 ? Storage::dense : Storage::banded; }
    bool is_banded() const { return band_ >= 0; }
    /// Half-width M of the band; -1 for dense storage.
    int bandwidth() const { return band_; }

    bool in_band(std::size_t j, std::size_t k) const
    {
        if (band_ < 0)
            return true;
        const long long d = static_cast<long long>(k) - static_cast<long long>(j);
        return d >= -band_ && d <= band_;
    }

    complex operator()(std::size_t j, std::size_t k) const
    {
        if (band_ < 0)
            return data_[j * n_ + k];
        if (!in_band(j, k))
            return {0.0, 0.0};
        return data_[slot(j, k)];
    }

    /// Writable reference; (j, k) must lie inside the stored pattern.
    complex& at(std::size_t j, std::size_t k)
    {
        if (j >= n_ || k >= n_ || !in_band(j, k))
            throw input_error("OperatorMatrix: entry outside the stored pattern");
        return band_ < 0 ? data_[j * n_ + k] : data_[slot(j, k)];
    }

    /// Raw storage (row-major dense or row-major band rows).
    std::span<const complex> raw() const { return data_; }
    std::span<complex> raw() { return data_; }

    const std::string& provenance() const { return provenance_; }
    void set_provenance(std::string p) { provenance_ = std::move(p); }

    bool hermitian() const { return hermitian_; }

    /// Certify the Hermitian flag: max|t_jk - conj(t_kj)| <= 1e-12 max|t|.
    bool certify_hermitian(double rel_tol = 1e-12)
    {
        const double scale = max_abs();
        double worst = 0.0;
        for_each_stored([&](std::size_t j, std::size_t k, complex v) {
            worst = std::max(worst, std::abs(v - std::conj((*this)(k, j))));
        });
        hermitian_ = worst <= rel_tol * scale;
        return hermitian_;
    }

    double max_abs() const
    {
        double m = 0.0;
        for (const auto& v : data_)
            m = std::max(m, std::abs(v));
        return m;
    }

    double frobenius_norm() const
    {
        double s = 0.0;
        for (const auto& v : data_)
            s += std::norm(v);
        return std::sqrt(s);
    }

    bool all_finite() const
    {
        return std::all_of(data_.begin(), data_.end(), [](const complex& v) {
            return std::isfinite(v.real()) && std::isfinite(v.imag());
        });
    }

    /// Visit every stored (j, k, value) with 0 <= j, k < N in row-major order.
    template <class F>
    void for_each_stored(F&& f) const
    {
        if (band_ < 0) {
            for (std::size_t j = 0; j < n_; ++j)
                for (std::size_t k = 0; k < n_; ++k)
                    f(j, k, data_[j * n_ + k]);
            return;
        }
        for (std::size_t j = 0; j < n_; ++j) {
            const std::size_t lo = j > static_cast<std::size_t>(band_) ? j - band_ : 0;
            const std::size_t hi = std::min(n_ - 1, j + band_);
            for (std::size_t k = lo; k <= hi; ++k)
                f(j, k, data_[slot(j, k)]);
        }
    }

    OperatorMatrix to_dense() const
    {
        auto d = dense(n_);
        for_each_stored([&](std::size_t j, std::size_t k, complex v) { d.data_[j * n_ + k] = v; });
        d.provenance_ = provenance_;
        d.hermitian_ = hermitian_;
        return d;
    }

    /// Conjugate transpose, same storage kind.
    OperatorMatrix adjoint() const
    {
        OperatorMatrix r = band_ < 0 ? dense(n_) : banded(n_, band_);
        for_each_stored([&](std::size_t j, std::size_t k, complex v) { r.at(k, j) = std::conj(v); });
        r.provenance_ = "adjoint(" + provenance_ + ")";
        r.hermitian_ = hermitian_;
        return r;
    }

    OperatorMatrix scaled(complex c) const
    {
        OperatorMatrix r = *this;
        for (auto& v : r.data_)
            v *= c;
        r.hermitian_ = hermitian_ && c.imag() == 0.0;
        return r;
    }

private:
    std::size_t slot(std::size_t j, std::size_t k) const
    {
        return j * (2 * static_cast<std::size_t>(band_) + 1) +
               static_cast<std::size_t>(static_cast<long long>(k) - static_cast<long long>(j) + band_);
    }

    std::size_t n_ = 0;
    int band_ = -1;
    std::vector<complex> data_;
    std::string provenance_;
    bool hermitian_ = false;
};

/// Linear combination alpha*A + beta*B of two matrices of equal size.
/// The result is banded when both inputs are banded.
inline OperatorMatrix combine(complex alpha, const OperatorMatrix& a, complex beta, const OperatorMatrix& b)
{
    if (a.size() != b.size())
        throw input_error("combine: matrix sizes differ");
    OperatorMatrix r = (a.is_banded() && b.is_banded())
                           ? OperatorMatrix::banded(a.size(), std::max(a.bandwidth(), b.bandwidth()))
                           : OperatorMatrix::dense(a.size());
    a.for_each_stored([&](std::size_t j, std::size_t k, complex v) { r.at(j, k) += alpha * v; });
    b.for_each_stored([&](std::size_t j, std::size_t k, complex v) { r.at(j, k) += beta * v; });
    r.set_provenance("combine(" + a.provenance() + ", " + b.provenance() + ")");
    return r;
}

struct BuildOptions {
    /// Memory ceiling for the matrix payload.
    std::size_t max_bytes = std::size_t{2} << 30;
    /// Build a Step/Sampled symbol with banded storage truncated at this
    /// half-width instead of dense storage. Unset keeps exact dense storage.
    std::optional<int> band_truncation;
};

namespace detail {

inline void check_capacity(std::size_t n, long long band, std::size_t max_bytes)
{
    const long double row = band < 0 ? static_cast<long double>(n) : static_cast<long double>(2 * band + 1);
    const long double bytes = row * static_cast<long double>(n) * sizeof(complex);
    if (bytes > static_cast<long double>(max_bytes))
        throw capacity_error("matrix of size " + std::to_string(n) + " needs " +
                             std::to_string(static_cast<double>(bytes) / (1 << 20)) +
                             " MiB, above the budget of " + std::to_string(max_bytes >> 20) + " MiB");
}

/// 2 sqrt((j+1)(k+1)) B(j+k+2, gamma+1) as a function of (j, k).
class EntryWeights {
public:
    EntryWeights(std::size_t n, double gamma) : moments_(n == 0 ? 0 : 2 * n - 1)
    {
        for (std::size_t s = 0; s < moments_.size(); ++s)
            moments_[s] = radial_moment(static_cast<long long>(s), gamma);
    }

    double operator()(std::size_t j, std::size_t k) const
    {
        return 2.0 * std::sqrt(static_cast<double>(j + 1) * static_cast<double>(k + 1)) * moments_[j + k];
    }

private:
    std::vector<double> moments_;
};

inline std::string describe(const BergmanSymbol& s)
{
    std::string kind = s.angular.is_trig_poly() ? "trigpoly" : s.angular.is_step() ? "step" : "sampled";
    return "bergman(gamma=" + std::to_string(s.gamma) + ", " + kind + ")";
}

}  // namespace detail

/// Finite section of T(phi) for phi = (1-r)^gamma g + optional radial perturbation.
inline OperatorMatrix build_bergman_toeplitz(const BergmanSymbol& symbol, std::size_t n,
                                             const BuildOptions& opts = {})
{
    symbol.validate();
    if (n == 0)
        throw domain_error("build_bergman_toeplitz: N must be >= 1");

    const auto& g = symbol.angular;
    long long band = -1;
    if (auto m = g.bandwidth())
        band = *m;
    else if (opts.band_truncation)
        band = *opts.band_truncation;
    if (band >= 0)
        band = std::min<long long>(band, static_cast<long long>(n) - 1);
    detail::check_capacity(n, band, opts.max_bytes);

    const detail::EntryWeights weight(n, symbol.gamma);
    // g_hat(m) for m in [-(N-1), N-1], or just the band.
    const long long reach = band >= 0 ? band : static_cast<long long>(n) - 1;
    std::vector<complex> ghat(2 * reach + 1);
    if (g.is_trig_poly()) {
        for (long long m = -reach; m <= reach; ++m)
            ghat[m + reach] = g.trig_poly().coeff(m);
    } else {
        const auto step = g.as_step();
        for (long long m = -reach; m <= reach; ++m)
            ghat[m + reach] = step.coeff(m);
    }

    OperatorMatrix a = band >= 0 ? OperatorMatrix::banded(n, static_cast<int>(band)) : OperatorMatrix::dense(n);
    for (std::size_t j = 0; j < n; ++j) {
        const auto width = static_cast<std::size_t>(std::max<long long>(band, 0));
        const std::size_t lo = band >= 0 && j > width ? j - width : 0;
        const std::size_t hi = band >= 0 ? std::min(n - 1, j + width) : n - 1;
        for (std::size_t k = lo; k <= hi; ++k) {
            const long long m = static_cast<long long>(k) - static_cast<long long>(j);
            a.at(j, k) = weight(j, k) * ghat[m + reach];
        }
    }

    if (symbol.perturbation && symbol.perturbation->epsilon > 0.0) {
        // eps (1-r)^gamma 1_{r<a} is radial: it only touches the diagonal,
        // with 2(j+1) eps int_0^a r^{2j+1} (1-r)^gamma dr.
        const double eps = symbol.perturbation->epsilon;
        const double rad = symbol.perturbation->inner_radius;
        for (std::size_t j = 0; j < n; ++j) {
            const double p = 2.0 * static_cast<double>(j) + 2.0;
            const double partial = boost::math::beta(p, symbol.gamma + 1.0, rad);
            if (partial == 0.0)
                break;
            a.at(j, j) += 2.0 * static_cast<double>(j + 1) * eps * partial;
        }
    }

    a.set_provenance(detail::describe(symbol) + ", N=" + std::to_string(n));
    a.certify_hermitian();
    return a;
}

struct BandedBuild {
    OperatorMatrix matrix;
    /// Set when a perturbation sequence was longer than N and got truncated.
    bool perturbation_truncated = false;
};

/// a_{j,j+m} = b_m (j+1)^{-gamma} + perturbation_m(j) for |m| <= M.
/// perturbations, when given, is indexed like b (m = -M..M), each a sequence in j.
inline BandedBuild build_banded(const TrigPoly& b, double gamma, std::size_t n,
                                const std::vector<std::vector<complex>>& perturbations = {},
                                const BuildOptions& opts = {})
{
    if (!std::isfinite(gamma) || gamma <= 0.0)
        throw domain_error("build_banded: gamma must be > 0");
    if (n == 0)
        throw domain_error("build_banded: N must be >= 1");
    const int band_m = b.bandwidth();
    if (!perturbations.empty() && perturbations.size() != b.coefficients().size())
        throw input_error("build_banded: need one perturbation sequence per band coefficient");
    const int band = static_cast<int>(std::min<long long>(band_m, static_cast<long long>(n) - 1));
    detail::check_capacity(n, band, opts.max_bytes);

    BandedBuild out{OperatorMatrix::banded(n, band), false};
    for (std::size_t j = 0; j < n; ++j) {
        const double decay = std::pow(static_cast<double>(j + 1), -gamma);
        for (int m = -band; m <= band; ++m) {
            const long long k = static_cast<long long>(j) + m;
            if (k < 0 || k >= static_cast<long long>(n))
                continue;
            complex v = b.coeff(m) * decay;
            if (!perturbations.empty()) {
                const auto& seq = perturbations[m + band_m];
                if (j < seq.size())
                    v += seq[j];
            }
            out.matrix.at(j, static_cast<std::size_t>(k)) = v;
        }
    }
    for (const auto& seq : perturbations)
        if (seq.size() > n)
            out.perturbation_truncated = true;
    out.matrix.set_provenance("banded(gamma=" + std::to_string(gamma) + ", M=" + std::to_string(band_m) +
                              "), N=" + std::to_string(n));
    out.matrix.certify_hermitian();
    return out;
}

/// A' = 2^gamma Gamma(gamma+1)^{-1} T_N - A_N for a trigonometric-polynomial symbol b.
inline OperatorMatrix rescaled_toeplitz_minus_banded(double gamma, const TrigPoly& b, std::size_t n)
{
    BergmanSymbol sym{gamma, AngularSymbol(b), std::nullopt};
    const auto t = build_bergman_toeplitz(sym, n);
    const auto a = build_banded(b, gamma, n).matrix;
    const double scale = std::exp(gamma * std::log(2.0) - log_gamma(gamma + 1.0));
    auto diff = combine(scale, t, -1.0, a);
    diff.set_provenance("rescaled_toeplitz_minus_banded(gamma=" + std::to_string(gamma) + "), N=" +
                        std::to_string(n));
    return diff;
}

}  // namespace bergspec
