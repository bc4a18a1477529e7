// SPDX-License-Identifier: Apache-2.0
//
// Shared configuration, complex-matrix aliases, the quaternary phase
// alphabet, precoder containers and the complex pseudoinverse.
#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hbf/errors.hpp"

namespace hbf {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

/// Reciprocal condition number below which a matrix is treated as singular.
inline constexpr double kSingularRcond = 1e-12;

struct SystemConfig {
  int n_t = 16;
  int n_rf = 4;
  int n_u = 2;
  int k_ss = 8;
  double noise_power_dbw = -130.0;
  double p_max = 1.0;
  /// RSSI quantization bits; empty means full precision.
  std::optional<int> n_b;
  std::uint64_t seed = 1;

  /// Noise power sigma^2 in linear units (W).
  double sigma2() const;
  /// Throws InvalidArgument when an invariant is broken.
  void validate() const;
};

/// 2-bit phase alphabet {1, -1, i, -i}; the enumerator value is the code.
enum class QuaternaryPhase : std::uint8_t { kPlusOne = 0, kMinusOne = 1, kPlusI = 2, kMinusI = 3 };

Complex to_complex(QuaternaryPhase q);
std::uint8_t encode(QuaternaryPhase q);
QuaternaryPhase decode(std::uint8_t code);
/// Nearest alphabet symbol to arg(z); ties resolve toward the lower code.
QuaternaryPhase quantize_phase(Complex z);

/// N_T x N_RF matrix with entries in {1, -1, i, -i}, stored as column-major codes.
class AnalogPrecoder {
 public:
  AnalogPrecoder() = default;
  AnalogPrecoder(int n_t, int n_rf, std::vector<std::uint8_t> codes);

  /// Exact inverse of matrix(); throws InvalidArgument when an entry is off-alphabet.
  static AnalogPrecoder from_matrix(const CMatrix& a);

  int n_t() const { return n_t_; }
  int n_rf() const { return n_rf_; }
  std::span<const std::uint8_t> codes() const { return codes_; }
  const CMatrix& matrix() const { return matrix_; }
  QuaternaryPhase at(int row, int col) const;

  friend bool operator==(const AnalogPrecoder& a, const AnalogPrecoder& b) {
    return a.n_t_ == b.n_t_ && a.n_rf_ == b.n_rf_ && a.codes_ == b.codes_;
  }

 private:
  int n_t_ = 0;
  int n_rf_ = 0;
  std::vector<std::uint8_t> codes_;
  CMatrix matrix_;
};

/// Baseband precoder W (N_RF x N_U).
struct DigitalPrecoder {
  CMatrix w;
};

/// Unconstrained precoder U (N_T x N_U).
struct FullyDigitalPrecoder {
  CMatrix u;
};

/// Ordered list of distinct analog precoders.
class Codebook {
 public:
  static constexpr std::size_t kMaxSize = 1000;

  Codebook() = default;
  explicit Codebook(std::vector<AnalogPrecoder> codewords);

  /// Appends unless an identical codeword exists; returns whether it was added.
  bool add(AnalogPrecoder a);
  void remove(std::size_t index);
  bool contains(const AnalogPrecoder& a) const;

  std::size_t size() const { return codewords_.size(); }
  bool empty() const { return codewords_.empty(); }
  const AnalogPrecoder& operator[](std::size_t i) const { return codewords_[i]; }
  const std::vector<AnalogPrecoder>& codewords() const { return codewords_; }

  int n_t() const;
  int n_rf() const;

 private:
  std::vector<AnalogPrecoder> codewords_;
};

/// Moore-Penrose pseudoinverse (m^H m)^{-1} m^H of a full-column-rank matrix.
/// `codeword_index` only decorates the error message.
CMatrix complex_pinv(const CMatrix& m, std::optional<std::size_t> codeword_index = std::nullopt);

/// Same result as complex_pinv, computed with real-valued inverses and products
/// only: Phi = m^H m, Phi^{-1} = C + iD with
///   C = (Re Phi + Im Phi Re Phi^{-1} Im Phi)^{-1},  D = -Re Phi^{-1} Im Phi C,
/// and the final product formed on the [Re -Im; Im Re] block embedding.
/// Requires Re Phi to be non-singular.
CMatrix complex_pinv_real_decomposed(const CMatrix& m,
                                     std::optional<std::size_t> codeword_index = std::nullopt);

/// Moore-Penrose pseudoinverse of a matrix of any rank (complete orthogonal
/// decomposition); equals complex_pinv when m has full column rank.
CMatrix min_norm_pinv(const CMatrix& m);

/// complex_pinv_real_decomposed, falling back to complex_pinv when only the
/// real block is singular and to min_norm_pinv for rank-deficient codewords.
/// `rank_deficient` (if non-null) reports whether the last fallback was used.
CMatrix codeword_pinv(const CMatrix& m, std::optional<std::size_t> codeword_index = std::nullopt,
                      bool* rank_deficient = nullptr);

/// Scales every column of w so that ||a w_u|| = 1. Zero effective beams throw.
DigitalPrecoder normalize_hybrid(const AnalogPrecoder& a, const DigitalPrecoder& w);

/// Like normalize_hybrid but leaves all-zero columns (inactive users) at zero.
DigitalPrecoder normalize_hybrid_active(const AnalogPrecoder& a, const DigitalPrecoder& w);

/// Unit-norm columns; all-zero columns stay zero.
FullyDigitalPrecoder normalize_columns(const FullyDigitalPrecoder& u);

/// Reciprocal 1-norm condition estimate of a square matrix (0 when singular).
double rcond(const RMatrix& m);
double rcond(const CMatrix& m);

}  // namespace hbf
