// SPDX-License-Identifier: Apache-2.0
#include "hbf/model_core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace hbf {

double SystemConfig::sigma2() const { return std::pow(10.0, noise_power_dbw / 10.0); }

void SystemConfig::validate() const {
  auto fail = [](const std::string& what) { throw InvalidArgument("system config: " + what); };
  if (n_t < 1) fail("n_t must be >= 1");
  if (n_rf < 1 || n_rf > n_t) fail("n_rf must satisfy 1 <= n_rf <= n_t");
  if (n_u < 1 || n_u > n_rf) fail("n_u must satisfy 1 <= n_u <= n_rf");
  if (k_ss < 1) fail("k_ss must be >= 1");
  if (n_b && *n_b < 1) fail("n_b must be >= 1 or full");
  if (!(p_max > 0.0)) fail("p_max must be positive");
  if (!std::isfinite(noise_power_dbw)) fail("noise_power_dbw must be finite");
}

Complex to_complex(QuaternaryPhase q) {
  switch (q) {
    case QuaternaryPhase::kPlusOne: return {1.0, 0.0};
    case QuaternaryPhase::kMinusOne: return {-1.0, 0.0};
    case QuaternaryPhase::kPlusI: return {0.0, 1.0};
    case QuaternaryPhase::kMinusI: return {0.0, -1.0};
  }
  return {1.0, 0.0};
}

std::uint8_t encode(QuaternaryPhase q) { return static_cast<std::uint8_t>(q); }

QuaternaryPhase decode(std::uint8_t code) {
  if (code > 3) throw InvalidArgument("quaternary code out of range: " + std::to_string(code));
  return static_cast<QuaternaryPhase>(code);
}

QuaternaryPhase quantize_phase(Complex z) {
  // Candidates in code order; strict comparison keeps the lower code on ties.
  double best = -std::numeric_limits<double>::infinity();
  QuaternaryPhase out = QuaternaryPhase::kPlusOne;
  for (std::uint8_t c = 0; c < 4; ++c) {
    auto q = static_cast<QuaternaryPhase>(c);
    double score = std::real(z * std::conj(to_complex(q)));
    if (score > best + 1e-15 * std::abs(z)) {
      best = score;
      out = q;
    }
  }
  return out;
}

AnalogPrecoder::AnalogPrecoder(int n_t, int n_rf, std::vector<std::uint8_t> codes)
    : n_t_(n_t), n_rf_(n_rf), codes_(std::move(codes)), matrix_(n_t, n_rf) {
  if (n_t < 1 || n_rf < 1) throw ShapeError("analog precoder needs positive dimensions");
  if (codes_.size() != static_cast<std::size_t>(n_t) * static_cast<std::size_t>(n_rf)) {
    throw ShapeError("analog precoder code count does not match N_T x N_RF");
  }
  for (int c = 0; c < n_rf; ++c) {
    for (int r = 0; r < n_t; ++r) {
      matrix_(r, c) = to_complex(decode(codes_[static_cast<std::size_t>(c) * n_t + r]));
    }
  }
}

AnalogPrecoder AnalogPrecoder::from_matrix(const CMatrix& a) {
  std::vector<std::uint8_t> codes(static_cast<std::size_t>(a.size()));
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
      Complex z = a(r, c);
      auto q = quantize_phase(z);
      if (std::abs(z - to_complex(q)) > 1e-12) {
        throw InvalidArgument("analog precoder entry is not in {1,-1,i,-i}");
      }
      codes[static_cast<std::size_t>(c * a.rows() + r)] = encode(q);
    }
  }
  return AnalogPrecoder(static_cast<int>(a.rows()), static_cast<int>(a.cols()), std::move(codes));
}

QuaternaryPhase AnalogPrecoder::at(int row, int col) const {
  return decode(codes_[static_cast<std::size_t>(col) * n_t_ + row]);
}

Codebook::Codebook(std::vector<AnalogPrecoder> codewords) {
  for (auto& a : codewords) {
    if (!add(std::move(a))) throw InvalidArgument("codebook contains duplicate codewords");
  }
}

bool Codebook::add(AnalogPrecoder a) {
  if (!codewords_.empty() && (a.n_t() != n_t() || a.n_rf() != n_rf())) {
    throw ShapeError("codeword dimensions differ from the codebook");
  }
  if (contains(a)) return false;
  if (codewords_.size() >= kMaxSize) throw InvalidArgument("codebook is full");
  codewords_.push_back(std::move(a));
  return true;
}

void Codebook::remove(std::size_t index) {
  if (index >= codewords_.size()) throw InvalidArgument("codeword index out of range");
  codewords_.erase(codewords_.begin() + static_cast<std::ptrdiff_t>(index));
}

bool Codebook::contains(const AnalogPrecoder& a) const {
  return std::find(codewords_.begin(), codewords_.end(), a) != codewords_.end();
}

int Codebook::n_t() const { return codewords_.empty() ? 0 : codewords_.front().n_t(); }
int Codebook::n_rf() const { return codewords_.empty() ? 0 : codewords_.front().n_rf(); }

double rcond(const RMatrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0) return 0.0;
  Eigen::PartialPivLU<RMatrix> lu(m);
  double r = lu.rcond();
  return std::isfinite(r) ? r : 0.0;
}

double rcond(const CMatrix& m) {
  if (m.rows() != m.cols() || m.rows() == 0) return 0.0;
  Eigen::PartialPivLU<CMatrix> lu(m);
  double r = lu.rcond();
  return std::isfinite(r) ? r : 0.0;
}

namespace {

std::string codeword_suffix(std::optional<std::size_t> idx) {
  if (!idx) return {};
  return " (codeword " + std::to_string(*idx) + ")";
}

}  // namespace

CMatrix complex_pinv(const CMatrix& m, std::optional<std::size_t> codeword_index) {
  if (m.cols() > m.rows()) {
    throw SingularMatrixError("pseudoinverse needs full column rank; matrix is wide" +
                              codeword_suffix(codeword_index));
  }
  CMatrix gram = m.adjoint() * m;
  Eigen::PartialPivLU<CMatrix> lu(gram);
  double rc = lu.rcond();
  if (!(rc >= kSingularRcond)) {
    std::ostringstream os;
    os << "rank-deficient matrix in pseudoinverse, rcond=" << rc << codeword_suffix(codeword_index);
    throw SingularMatrixError(os.str());
  }
  return lu.solve(m.adjoint());
}

CMatrix complex_pinv_real_decomposed(const CMatrix& m, std::optional<std::size_t> codeword_index) {
  if (m.cols() > m.rows()) {
    throw SingularMatrixError("pseudoinverse needs full column rank; matrix is wide" +
                              codeword_suffix(codeword_index));
  }
  const Eigen::Index n = m.cols();
  const Eigen::Index rows = m.rows();
  const RMatrix mr = m.real();
  const RMatrix mi = m.imag();

  // Phi = m^H m = (mr^T mr + mi^T mi) + i (mr^T mi - mi^T mr)
  const RMatrix phi_re = mr.transpose() * mr + mi.transpose() * mi;
  const RMatrix phi_im = mr.transpose() * mi - mi.transpose() * mr;

  Eigen::PartialPivLU<RMatrix> re_lu(phi_re);
  double rc = re_lu.rcond();
  if (!(rc >= kSingularRcond)) {
    std::ostringstream os;
    os << "Re[m^H m] is singular (rcond=" << rc << ")" << codeword_suffix(codeword_index)
       << "; fall back to complex_pinv";
    throw SingularMatrixError(os.str());
  }
  const RMatrix re_inv_im = re_lu.solve(phi_im);
  const RMatrix schur = phi_re + phi_im * re_inv_im;
  Eigen::PartialPivLU<RMatrix> schur_lu(schur);
  rc = schur_lu.rcond();
  if (!(rc >= kSingularRcond)) {
    throw SingularMatrixError("rank-deficient matrix in pseudoinverse" +
                              codeword_suffix(codeword_index));
  }
  const RMatrix c = schur_lu.inverse();
  const RMatrix d = -re_inv_im * c;

  // [C -D; D C] [P -Q; Q P] with m^H = P + iQ, P = mr^T, Q = -mi^T.
  RMatrix inv_block(2 * n, 2 * n);
  inv_block << c, -d, d, c;
  RMatrix adj_block(2 * n, 2 * rows);
  const RMatrix p = mr.transpose();
  const RMatrix q = -mi.transpose();
  adj_block << p, -q, q, p;
  const RMatrix prod = inv_block * adj_block;

  CMatrix out(n, rows);
  out.real() = prod.topLeftCorner(n, rows);
  out.imag() = prod.bottomLeftCorner(n, rows);
  return out;
}

CMatrix min_norm_pinv(const CMatrix& m) {
  Eigen::CompleteOrthogonalDecomposition<CMatrix> cod(m);
  cod.setThreshold(1e-10);
  return cod.pseudoInverse();
}

CMatrix codeword_pinv(const CMatrix& m, std::optional<std::size_t> codeword_index, bool* rank_deficient) {
  if (rank_deficient) *rank_deficient = false;
  try {
    return complex_pinv_real_decomposed(m, codeword_index);
  } catch (const SingularMatrixError&) {
  }
  try {
    return complex_pinv(m, codeword_index);
  } catch (const SingularMatrixError&) {
  }
  if (rank_deficient) *rank_deficient = true;
  return min_norm_pinv(m);
}

DigitalPrecoder normalize_hybrid(const AnalogPrecoder& a, const DigitalPrecoder& w) {
  if (w.w.rows() != a.n_rf()) throw ShapeError("digital precoder rows must equal N_RF");
  DigitalPrecoder out{w.w};
  const CMatrix eff = a.matrix() * w.w;
  for (Eigen::Index u = 0; u < eff.cols(); ++u) {
    double nrm = eff.col(u).norm();
    if (!(nrm > 0.0) || !std::isfinite(nrm)) {
      throw DegenerateBeamError("zero effective beam for user " + std::to_string(u));
    }
    out.w.col(u) /= nrm;
  }
  return out;
}

DigitalPrecoder normalize_hybrid_active(const AnalogPrecoder& a, const DigitalPrecoder& w) {
  if (w.w.rows() != a.n_rf()) throw ShapeError("digital precoder rows must equal N_RF");
  DigitalPrecoder out{w.w};
  const CMatrix eff = a.matrix() * w.w;
  for (Eigen::Index u = 0; u < eff.cols(); ++u) {
    if (w.w.col(u).squaredNorm() == 0.0) continue;
    double nrm = eff.col(u).norm();
    if (!(nrm > 0.0) || !std::isfinite(nrm)) {
      throw DegenerateBeamError("zero effective beam for user " + std::to_string(u));
    }
    out.w.col(u) /= nrm;
  }
  return out;
}

FullyDigitalPrecoder normalize_columns(const FullyDigitalPrecoder& u) {
  FullyDigitalPrecoder out{u.u};
  for (Eigen::Index c = 0; c < out.u.cols(); ++c) {
    double nrm = out.u.col(c).norm();
    if (nrm > 0.0) out.u.col(c) /= nrm;
  }
  return out;
}

}  // namespace hbf
