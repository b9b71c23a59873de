#pragma once

// Matrix export.
//
//   CSV:    header "j,k,re,im", one line per stored entry, row-major.
//   Binary: "BGSP" | u32 version | u64 N | i64 bandwidth (-1 = dense) |
//           payload of (re, im) float64 pairs, row-major. Dense payload is
//           N*N pairs; banded payload is N rows of 2M+1 pairs, slot s of
//           row j holding column j - M + s (zero where that column is outside
//           [0, N)). All integers and floats little-endian.

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <string>

#include "errors.hpp"
#include "operator.hpp"

namespace bergspec::io {

static_assert(std::endian::native == std::endian::little, "binary matrix format assumes a little-endian host");

inline constexpr char matrix_magic[4] = {'B', 'G', 'S', 'P'};
inline constexpr std::uint32_t matrix_format_version = 1;

inline void write_matrix_csv(std::ostream& os, const OperatorMatrix& a)
{
    os << "j,k,re,im\n";
    os << std::setprecision(17);
    a.for_each_stored([&](std::size_t j, std::size_t k, complex v) {
        os << j << ',' << k << ',' << v.real() << ',' << v.imag() << '\n';
    });
}

namespace detail {

template <class T>
void put(std::ostream& os, T v)
{
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    os.write(buf, sizeof(T));
}

template <class T>
T get(std::istream& is)
{
    char buf[sizeof(T)];
    if (!is.read(buf, sizeof(T)))
        throw input_error("binary matrix: unexpected end of stream");
    T v;
    std::memcpy(&v, buf, sizeof(T));
    return v;
}

}  // namespace detail

inline void write_matrix_binary(std::ostream& os, const OperatorMatrix& a)
{
    os.write(matrix_magic, 4);
    detail::put<std::uint32_t>(os, matrix_format_version);
    detail::put<std::uint64_t>(os, a.size());
    detail::put<std::int64_t>(os, a.bandwidth());
    for (const auto& v : a.raw()) {
        detail::put<double>(os, v.real());
        detail::put<double>(os, v.imag());
    }
}

inline OperatorMatrix read_matrix_binary(std::istream& is)
{
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, matrix_magic, 4) != 0)
        throw input_error("binary matrix: bad magic bytes");
    const auto version = detail::get<std::uint32_t>(is);
    if (version != matrix_format_version)
        throw input_error("binary matrix: unsupported version " + std::to_string(version));
    const auto n = detail::get<std::uint64_t>(is);
    const auto band = detail::get<std::int64_t>(is);
    if (band < -1)
        throw input_error("binary matrix: invalid bandwidth");
    auto a = band < 0 ? OperatorMatrix::dense(n) : OperatorMatrix::banded(n, static_cast<int>(band));
    for (auto& v : a.raw()) {
        const double re = detail::get<double>(is);
        const double im = detail::get<double>(is);
        v = {re, im};
    }
    a.certify_hermitian();
    return a;
}

inline void save_matrix(const std::string& path, const OperatorMatrix& a, bool binary)
{
    std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
    if (!os)
        throw input_error("cannot open " + path + " for writing");
    if (binary)
        write_matrix_binary(os, a);
    else
        write_matrix_csv(os, a);
}

}  // namespace bergspec::io
