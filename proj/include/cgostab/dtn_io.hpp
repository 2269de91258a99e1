#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <string>

#include "cgostab/forward.hpp"

namespace cgostab {

// Binary layout, little-endian:
//   8 bytes  magic "CGODTN1\0"
//   int32    n_radial, n_angular
//   float64  radius
//   n_angular^2 pairs of float64 (re, im): the DtN matrix, row-major.
// The grid is rebuilt from the three numbers.

namespace detail {

template <class T>
void put_le(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get_le(std::istream& in) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) throw Error("dtn cache: truncated file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

inline constexpr char kDtnMagic[8] = {'C', 'G', 'O', 'D', 'T', 'N', '1', '\0'};

}  // namespace detail

inline void write_dtn_binary(const std::string& path, const DtnMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("dtn cache: cannot write " + path);
  out.write(detail::kDtnMagic, 8);
  detail::put_le<std::int32_t>(out, m.grid().n_radial());
  detail::put_le<std::int32_t>(out, m.grid().n_angular());
  detail::put_le<double>(out, m.grid().radius());
  for (cplx c : m.matrix_entries()) {
    detail::put_le<double>(out, c.real());
    detail::put_le<double>(out, c.imag());
  }
  if (!out) throw Error("dtn cache: write failed for " + path);
}

inline DtnMatrix read_dtn_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("dtn cache: cannot open " + path);
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, detail::kDtnMagic, 8) != 0) throw Error("dtn cache: bad magic in " + path);
  const int nr = detail::get_le<std::int32_t>(in);
  const int na = detail::get_le<std::int32_t>(in);
  const double radius = detail::get_le<double>(in);
  auto grid = build_disk_grid(radius, nr, na);
  std::vector<cplx> entries(static_cast<std::size_t>(na) * na);
  for (auto& c : entries) {
    const double re = detail::get_le<double>(in);
    const double im = detail::get_le<double>(in);
    c = {re, im};
  }
  return DtnMatrix(grid, std::move(entries));
}

/// Boundary nodes and quadrature weights, one row per node.
inline void write_dtn_nodes_csv(const std::string& path, const DiskGrid& g) {
  std::ofstream out(path);
  if (!out) throw Error("dtn cache: cannot write " + path);
  out << "# cgo-stab v1 forward\n"
      << "index,theta,x,y,weight\n"
      << std::setprecision(17);
  for (int j = 0; j < g.n_angular(); ++j) {
    const cplx z = g.boundary_nodes()[j];
    out << j << ',' << g.theta(j) << ',' << z.real() << ',' << z.imag() << ',' << g.boundary_weights()[j] << '\n';
  }
}

}  // namespace cgostab
