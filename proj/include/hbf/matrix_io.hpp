// SPDX-License-Identifier: Apache-2.0
//
// Binary complex-matrix format: a 16-byte header (magic "HBFM", format
// version, rows, cols as little-endian uint32) followed by rows*cols entries
// in column-major order, each an interleaved (re, im) pair of little-endian
// IEEE-754 doubles. Files may hold any number of consecutive matrices.
#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "hbf/model_core.hpp"

namespace hbf {

inline constexpr std::uint32_t kMatrixMagic = 0x4d464248;  // "HBFM" little-endian
inline constexpr std::uint32_t kMatrixVersion = 1;

void write_matrix(std::ostream& out, const CMatrix& m);
/// Returns nullopt at a clean end of stream; throws IntegrityError on a bad header.
std::optional<CMatrix> read_matrix(std::istream& in);

void save_matrices(const std::filesystem::path& path, const std::vector<CMatrix>& ms);
std::vector<CMatrix> load_matrices(const std::filesystem::path& path);

// Little-endian primitives shared by the other binary formats.
void put_u32(std::ostream& out, std::uint32_t v);
void put_u64(std::ostream& out, std::uint64_t v);
void put_f64(std::ostream& out, double v);
std::uint32_t get_u32(std::istream& in);
std::uint64_t get_u64(std::istream& in);
double get_f64(std::istream& in);

}  // namespace hbf
