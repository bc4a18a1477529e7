// SPDX-License-Identifier: Apache-2.0
#include "hbf/matrix_io.hpp"

#include <array>
#include <bit>
#include <fstream>
#include <istream>
#include <ostream>

namespace hbf {

void put_u32(std::ostream& out, std::uint32_t v) {
  std::array<char, 4> b{};
  for (int i = 0; i < 4; ++i) b[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b.data(), 4);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b.data(), 8);
}

void put_f64(std::ostream& out, double v) { put_u64(out, std::bit_cast<std::uint64_t>(v)); }

std::uint32_t get_u32(std::istream& in) {
  std::array<unsigned char, 4> b{};
  in.read(reinterpret_cast<char*>(b.data()), 4);
  if (in.gcount() != 4) throw IntegrityError("truncated binary stream");
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
  return v;
}

std::uint64_t get_u64(std::istream& in) {
  std::array<unsigned char, 8> b{};
  in.read(reinterpret_cast<char*>(b.data()), 8);
  if (in.gcount() != 8) throw IntegrityError("truncated binary stream");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
  return v;
}

double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

void write_matrix(std::ostream& out, const CMatrix& m) {
  put_u32(out, kMatrixMagic);
  put_u32(out, kMatrixVersion);
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      put_f64(out, m(r, c).real());
      put_f64(out, m(r, c).imag());
    }
  }
}

std::optional<CMatrix> read_matrix(std::istream& in) {
  if (in.peek() == std::char_traits<char>::eof()) return std::nullopt;
  if (get_u32(in) != kMatrixMagic) throw IntegrityError("bad matrix magic");
  if (get_u32(in) != kMatrixVersion) throw IntegrityError("unsupported matrix format version");
  const auto rows = get_u32(in);
  const auto cols = get_u32(in);
  CMatrix m(rows, cols);
  for (std::uint32_t c = 0; c < cols; ++c) {
    for (std::uint32_t r = 0; r < rows; ++r) {
      double re = get_f64(in);
      double im = get_f64(in);
      m(r, c) = Complex(re, im);
    }
  }
  return m;
}

void save_matrices(const std::filesystem::path& path, const std::vector<CMatrix>& ms) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IntegrityError("cannot write " + path.string());
  for (const auto& m : ms) write_matrix(out, m);
}

std::vector<CMatrix> load_matrices(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IntegrityError("cannot read " + path.string());
  std::vector<CMatrix> out;
  while (auto m = read_matrix(in)) out.push_back(std::move(*m));
  return out;
}

}  // namespace hbf
