// SPDX-License-Identifier: Apache-2.0
//
// Unsupervised sum-rate losses with hand-derived reverse-mode gradients, and
// a central finite-difference checker.
//
// Complex gradients follow the convention g = df/dRe(z) + i df/dIm(z), so a
// linear map z = M x pulls back as g_x = M^H g_z.
#pragma once

#include <functional>
#include <span>
#include <vector>

#include "hbf/model_core.hpp"

namespace hbf::nn {

/// Codeword matrices and their pseudoinverses, computed once per codebook.
struct CodebookCache {
  std::vector<CMatrix> a;     // N_T x N_RF
  std::vector<CMatrix> pinv;  // N_RF x N_T
  std::vector<bool> rank_deficient;

  /// Pseudoinverses via codeword_pinv (real-decomposed first).
  static CodebookCache build(const Codebook& cb);
  std::size_t size() const { return a.size(); }
};

/// Sum-rate of precoder v on channel h; when grad is non-null it receives
/// d(sum-rate)/dv.
double sum_rate_with_grad(const CMatrix& h, const CMatrix& v, double sigma2, CMatrix* grad);

/// v = y / ||y|| per column. Returns v and writes the column norms.
CMatrix normalize_cols(const CMatrix& y, RVector& norms);
/// Pulls a gradient on v = y/||y|| back to y.
CMatrix normalize_cols_backward(const CMatrix& v, const RVector& norms, const CMatrix& grad_v);

struct LossResult {
  double total = 0.0;
  double fdp = 0.0;  // L_FDP part (fully-digital variant)
  double ap = 0.0;   // expected-rate part over the codebook
  RMatrix d_logits;
  RMatrix d_regression;
};

/// Batch mean of -sum_l p_l R(A_l, W_l) where W_l is the regression output
/// (N_RF x N_U) normalized so ||A_l w_u|| = 1 for that codeword.
LossResult loss_hbf(const RMatrix& logits, const RMatrix& regression, std::span<const CMatrix> h,
                    const CodebookCache& cb, double sigma2);

struct AfpLossOptions {
  bool include_fdp = true;
  bool include_ap = true;
  /// Whether the codebook term also trains the fully-digital output through
  /// W_l = A_l^+ U (otherwise it only reaches the classifier logits).
  bool ap_grad_to_fdp = true;
};

/// Batch mean of L_FDP + L_AP with U the unit-column regression output
/// (N_T x N_U), L_FDP = -R(U), L_AP = -sum_l p_l R(A_l, A_l^+ U) using the
/// per-codeword normalization ||A_l w_u|| = 1.
LossResult loss_afp(const RMatrix& logits, const RMatrix& regression, std::span<const CMatrix> h,
                    const CodebookCache& cb, double sigma2, const AfpLossOptions& opts = {});

/// Central differences with the given step.
RVector numeric_gradient(const std::function<double(const RVector&)>& f, const RVector& point,
                         double step = 1e-5);
/// max_i |a_i - n_i| / max(|a_i|, |n_i|, floor).
double max_relative_error(const RVector& analytic, const RVector& numeric, double floor = 1e-6);

}  // namespace hbf::nn
