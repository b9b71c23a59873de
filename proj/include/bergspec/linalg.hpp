#pragma once

// Thin wrappers over LAPACK/BLAS for the dense reference path.
//
// Storage is row-major; LAPACK is called in column-major mode on the same
// buffer, i.e. on the transpose. Singular values of A^T equal those of A, and
// the eigenvalues of the transpose of a Hermitian matrix (its conjugate) are
// the same real numbers, so no copy-transpose is needed.

#include <algorithm>
#include <complex>
#include <functional>
#include <string>
#include <vector>

#include <cblas.h>
#include <lapacke.h>

#include "errors.hpp"
#include "operator.hpp"

namespace bergspec::linalg {

namespace detail {

inline lapack_complex_double* as_lapack(complex* p) { return reinterpret_cast<lapack_complex_double*>(p); }

inline void check_info(lapack_int info, const char* routine)
{
    if (info < 0)
        throw solver_error(std::string(routine) + ": illegal argument " + std::to_string(-info));
    if (info > 0)
        throw solver_error(std::string(routine) + ": failed to converge (info=" + std::to_string(info) + ")");
}

}  // namespace detail

/// All singular values of a dense complex matrix (divide and conquer), descending.
inline std::vector<double> dense_singular_values(const OperatorMatrix& a)
{
    auto work = a.is_banded() ? a.to_dense() : a;
    const auto n = static_cast<lapack_int>(work.size());
    std::vector<double> s(work.size());
    if (n == 0)
        return s;
    const lapack_int info = LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'N', n, n, detail::as_lapack(work.raw().data()), n,
                                           s.data(), nullptr, 1, nullptr, 1);
    detail::check_info(info, "zgesdd");
    std::sort(s.begin(), s.end(), std::greater<>());
    return s;
}

/// All eigenvalues of a Hermitian matrix, descending. Banded input goes to the
/// band solver, dense input to the dense divide-and-conquer solver.
inline std::vector<double> hermitian_eigenvalues(const OperatorMatrix& a)
{
    const auto n = static_cast<lapack_int>(a.size());
    std::vector<double> w(a.size());
    if (n == 0)
        return w;
    if (a.is_banded()) {
        const lapack_int kd = a.bandwidth();
        const lapack_int ldab = kd + 1;
        // Column-major upper band storage: ab[kd + i - j + j*ldab] = A(i, j), i <= j.
        std::vector<complex> ab(static_cast<std::size_t>(ldab) * a.size(), complex{0.0});
        for (lapack_int j = 0; j < n; ++j)
            for (lapack_int i = std::max<lapack_int>(0, j - kd); i <= j; ++i)
                ab[static_cast<std::size_t>(kd + i - j) + static_cast<std::size_t>(j) * ldab] = a(i, j);
        const lapack_int info = LAPACKE_zhbevd(LAPACK_COL_MAJOR, 'N', 'U', n, kd, detail::as_lapack(ab.data()), ldab,
                                               w.data(), nullptr, 1);
        detail::check_info(info, "zhbevd");
    } else {
        auto work = a;
        const lapack_int info =
            LAPACKE_zheevd(LAPACK_COL_MAJOR, 'N', 'U', n, detail::as_lapack(work.raw().data()), n, w.data());
        detail::check_info(info, "zheevd");
    }
    std::sort(w.begin(), w.end(), std::greater<>());
    return w;
}

/// Dense product A * op(B), op = identity or conjugate transpose.
inline OperatorMatrix multiply(const OperatorMatrix& a, const OperatorMatrix& b, bool adjoint_b = false)
{
    if (a.size() != b.size())
        throw input_error("multiply: matrix sizes differ");
    const auto da = a.is_banded() ? a.to_dense() : a;
    const auto db = b.is_banded() ? b.to_dense() : b;
    auto c = OperatorMatrix::dense(a.size());
    const auto n = static_cast<int>(a.size());
    const complex one{1.0}, zero{0.0};
    cblas_zgemm(CblasRowMajor, CblasNoTrans, adjoint_b ? CblasConjTrans : CblasNoTrans, n, n, n, &one,
                da.raw().data(), n, db.raw().data(), n, &zero, c.raw().data(), n);
    c.set_provenance("(" + a.provenance() + ") * " + (adjoint_b ? "adjoint(" : "(") + b.provenance() + ")");
    return c;
}

/// Leading rows x rows block of A * B^*, i.e. the product over the full inner
/// dimension of A and B restricted to the first `rows` rows of each factor.
inline OperatorMatrix multiply_leading_adjoint(const OperatorMatrix& a, const OperatorMatrix& b, std::size_t rows)
{
    if (a.size() != b.size())
        throw input_error("multiply_leading_adjoint: matrix sizes differ");
    if (rows > a.size())
        throw input_error("multiply_leading_adjoint: rows exceed the matrix size");
    const auto da = a.is_banded() ? a.to_dense() : a;
    const auto db = b.is_banded() ? b.to_dense() : b;
    auto c = OperatorMatrix::dense(rows);
    const auto m = static_cast<int>(rows);
    const auto inner = static_cast<int>(a.size());
    const complex one{1.0}, zero{0.0};
    cblas_zgemm(CblasRowMajor, CblasNoTrans, CblasConjTrans, m, m, inner, &one, da.raw().data(), inner,
                db.raw().data(), inner, &zero, c.raw().data(), m);
    c.set_provenance("leading " + std::to_string(rows) + " of (" + a.provenance() + ") * adjoint(" + b.provenance() +
                     ")");
    return c;
}

}  // namespace bergspec::linalg
