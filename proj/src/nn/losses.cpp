// SPDX-License-Identifier: Apache-2.0
#include "hbf/nn/losses.hpp"

#include <cmath>
#include <numbers>

#include "hbf/nn/layers.hpp"
#include "hbf/nn/network.hpp"

namespace hbf::nn {

CodebookCache CodebookCache::build(const Codebook& cb) {
  CodebookCache c;
  for (std::size_t l = 0; l < cb.size(); ++l) {
    c.a.push_back(cb[l].matrix());
    bool deficient = false;
    c.pinv.push_back(codeword_pinv(cb[l].matrix(), l, &deficient));
    c.rank_deficient.push_back(deficient);
  }
  return c;
}

double sum_rate_with_grad(const CMatrix& h, const CMatrix& v, double sigma2, CMatrix* grad) {
  const CMatrix g = h.adjoint() * v;  // g(u, j) = h_u^H v_j
  const RMatrix pw = g.cwiseAbs2();
  const Eigen::Index n_u = h.cols();
  double rate = 0.0;
  RMatrix coef(n_u, v.cols());
  for (Eigen::Index u = 0; u < n_u; ++u) {
    const double total = pw.row(u).sum() + sigma2;
    const double interference = total - pw(u, u);
    rate += std::log2(total / interference);
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
      coef(u, j) = (1.0 / total - (j == u ? 0.0 : 1.0 / interference)) / std::numbers::ln2;
    }
  }
  if (grad) {
    const CMatrix grad_g = (2.0 * coef).cast<Complex>().cwiseProduct(g);
    *grad = h * grad_g;
  }
  return rate;
}

CMatrix normalize_cols(const CMatrix& y, RVector& norms) {
  norms = y.colwise().norm().transpose();
  CMatrix v = y;
  for (Eigen::Index c = 0; c < y.cols(); ++c) {
    if (!(norms(c) > 0.0)) {
      throw DegenerateBeamError("zero precoder column " + std::to_string(c) + " cannot be normalized");
    }
    v.col(c) /= norms(c);
  }
  return v;
}

CMatrix normalize_cols_backward(const CMatrix& v, const RVector& norms, const CMatrix& grad_v) {
  CMatrix g(v.rows(), v.cols());
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    const double radial = std::real(v.col(c).dot(grad_v.col(c)));
    g.col(c) = (grad_v.col(c) - v.col(c) * radial) / norms(c);
  }
  return g;
}

namespace {

void check_batch(const RMatrix& logits, const RMatrix& regression, std::span<const CMatrix> h,
                 const CodebookCache& cb) {
  if (logits.cols() != regression.cols() || static_cast<std::size_t>(logits.cols()) != h.size()) {
    throw ShapeError("loss batch sizes disagree");
  }
  if (static_cast<std::size_t>(logits.rows()) != cb.size()) {
    throw ShapeError("classifier width does not match the codebook size");
  }
  if (h.empty()) throw ShapeError("loss needs a non-empty batch");
}

// Expected-rate term for one sample: returns sum_l p_l R_l and fills rates.
// grad_u (if non-null) accumulates -d/dU of the term scaled by `scale`.
double expected_term(const CMatrix& h, const CodebookCache& cb, const CMatrix& pre,
                     const Eigen::Ref<const RVector>& p, double sigma2, bool use_pinv,
                     RVector& rates, CMatrix* grad_pre, double scale) {
  const std::size_t l_count = cb.size();
  rates.resize(static_cast<Eigen::Index>(l_count));
  double expected = 0.0;
  RVector norms;
  CMatrix gv;
  for (std::size_t l = 0; l < l_count; ++l) {
    const CMatrix w = use_pinv ? CMatrix(cb.pinv[l] * pre) : pre;
    const CMatrix y = cb.a[l] * w;
    const CMatrix v = normalize_cols(y, norms);
    const double r = sum_rate_with_grad(h, v, sigma2, grad_pre ? &gv : nullptr);
    rates(static_cast<Eigen::Index>(l)) = r;
    const double pl = p(static_cast<Eigen::Index>(l));
    expected += pl * r;
    if (grad_pre) {
      CMatrix gw = cb.a[l].adjoint() * normalize_cols_backward(v, norms, gv);
      if (use_pinv) gw = cb.pinv[l].adjoint() * gw;
      *grad_pre -= (scale * pl) * gw;
    }
  }
  return expected;
}

}  // namespace

LossResult loss_hbf(const RMatrix& logits, const RMatrix& regression, std::span<const CMatrix> h,
                    const CodebookCache& cb, double sigma2) {
  check_batch(logits, regression, h, cb);
  const Eigen::Index batch = logits.cols();
  const int n_rf = static_cast<int>(cb.a.front().cols());
  const int n_u = static_cast<int>(h.front().cols());
  const double scale = 1.0 / static_cast<double>(batch);
  const RMatrix p = softmax(logits);
  LossResult out;
  out.d_logits.resize(logits.rows(), batch);
  out.d_regression.resize(regression.rows(), batch);
  RVector rates;
  for (Eigen::Index j = 0; j < batch; ++j) {
    const CMatrix w = unpack_regression(regression, j, n_rf, n_u);
    CMatrix gw = CMatrix::Zero(w.rows(), w.cols());
    const double expected =
        expected_term(h[static_cast<std::size_t>(j)], cb, w, p.col(j), sigma2, false, rates, &gw, scale);
    out.ap -= scale * expected;
    out.d_logits.col(j) = -scale * p.col(j).cwiseProduct(rates - RVector::Constant(rates.size(), expected));
    out.d_regression.col(j) = pack_regression(gw);
  }
  out.total = out.ap;
  return out;
}

LossResult loss_afp(const RMatrix& logits, const RMatrix& regression, std::span<const CMatrix> h,
                    const CodebookCache& cb, double sigma2, const AfpLossOptions& opts) {
  check_batch(logits, regression, h, cb);
  const Eigen::Index batch = logits.cols();
  const int n_t = static_cast<int>(cb.a.front().rows());
  const int n_u = static_cast<int>(h.front().cols());
  const double scale = 1.0 / static_cast<double>(batch);
  const RMatrix p = softmax(logits);
  LossResult out;
  out.d_logits = RMatrix::Zero(logits.rows(), batch);
  out.d_regression.resize(regression.rows(), batch);
  RVector rates;
  RVector norms;
  CMatrix gu;
  for (Eigen::Index j = 0; j < batch; ++j) {
    const CMatrix& hj = h[static_cast<std::size_t>(j)];
    const CMatrix x = unpack_regression(regression, j, n_t, n_u);
    const CMatrix u = normalize_cols(x, norms);
    CMatrix grad_u = CMatrix::Zero(u.rows(), u.cols());
    if (opts.include_fdp) {
      const double r = sum_rate_with_grad(hj, u, sigma2, &gu);
      out.fdp -= scale * r;
      grad_u -= scale * gu;
    }
    if (opts.include_ap) {
      const double expected = expected_term(hj, cb, u, p.col(j), sigma2, true, rates,
                                            opts.ap_grad_to_fdp ? &grad_u : nullptr, scale);
      out.ap -= scale * expected;
      out.d_logits.col(j) =
          -scale * p.col(j).cwiseProduct(rates - RVector::Constant(rates.size(), expected));
    }
    out.d_regression.col(j) = pack_regression(normalize_cols_backward(u, norms, grad_u));
  }
  out.total = out.fdp + out.ap;
  return out;
}

RVector numeric_gradient(const std::function<double(const RVector&)>& f, const RVector& point,
                         double step) {
  RVector g(point.size());
  RVector x = point;
  for (Eigen::Index i = 0; i < point.size(); ++i) {
    const double orig = x(i);
    x(i) = orig + step;
    const double fp = f(x);
    x(i) = orig - step;
    const double fm = f(x);
    x(i) = orig;
    g(i) = (fp - fm) / (2.0 * step);
  }
  return g;
}

double max_relative_error(const RVector& analytic, const RVector& numeric, double floor) {
  if (analytic.size() != numeric.size()) throw ShapeError("gradient sizes differ");
  double worst = 0.0;
  for (Eigen::Index i = 0; i < analytic.size(); ++i) {
    const double a = analytic(i);
    const double n = numeric(i);
    if (!std::isfinite(a) || !std::isfinite(n)) return std::numeric_limits<double>::infinity();
    const double denom = std::max({std::abs(a), std::abs(n), floor});
    worst = std::max(worst, std::abs(a - n) / denom);
  }
  return worst;
}

}  // namespace hbf::nn
