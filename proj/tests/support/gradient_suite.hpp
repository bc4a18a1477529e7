// SPDX-License-Identifier: Apache-2.0
//
// Central finite-difference checks for every layer, the three losses and the
// assembled network. Each check draws one random point from `seed` and
// returns the worst relative error over all checked coordinates.
#pragma once

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "hbf/nn/layers.hpp"
#include "hbf/nn/losses.hpp"
#include "hbf/nn/network.hpp"

namespace hbf::testing {

inline constexpr double kFdStep = 1e-5;
inline constexpr double kFdFloor = 1e-6;

inline double rel_err(double a, double n) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), kFdFloor});
}

inline RMatrix random_real(Eigen::Index r, Eigen::Index c, Rng& rng) {
  RMatrix m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = rng.normal();
  return m;
}

// Worst error of d f / d m against the analytic matrix, perturbing m in place.
inline double fd_compare(RMatrix& m, const RMatrix& analytic, const std::function<double()>& f) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const double orig = m.data()[i];
    m.data()[i] = orig + kFdStep;
    const double fp = f();
    m.data()[i] = orig - kFdStep;
    const double fm = f();
    m.data()[i] = orig;
    worst = std::max(worst, rel_err(analytic.data()[i], (fp - fm) / (2.0 * kFdStep)));
  }
  return worst;
}

// Vector-output form: differences the outputs element-wise before weighting,
// so outputs a coordinate does not touch cancel exactly. The relative floor is
// raised to 1e4 times a rounding bound of the difference quotient,
// 16 eps sum |w y| / step (16 roundings along the layer chain), so a
// coordinate whose true derivative is zero passes when its quotient is roundoff.
inline double fd_compare(RMatrix& m, const RMatrix& analytic, const std::function<RMatrix()>& y,
                         const RMatrix& weights) {
  constexpr double kEps = std::numeric_limits<double>::epsilon();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const double orig = m.data()[i];
    m.data()[i] = orig + kFdStep;
    const RMatrix yp = y();
    m.data()[i] = orig - kFdStep;
    const RMatrix ym = y();
    m.data()[i] = orig;
    const double n = ((yp - ym).array() * weights.array()).sum() / (2.0 * kFdStep);
    const double rounding =
        16.0 * kEps * ((yp.cwiseAbs() + ym.cwiseAbs()).array() * weights.cwiseAbs().array()).sum() / (2.0 * kFdStep);
    const double a = analytic.data()[i];
    const double denom = std::max({std::abs(a), std::abs(n), kFdFloor, 1e4 * rounding});
    worst = std::max(worst, std::abs(a - n) / denom);
  }
  return worst;
}

inline double weighted(const RMatrix& y, const RMatrix& r) { return (y.array() * r.array()).sum(); }

inline double check_linear(std::uint64_t seed) {
  Rng rng(seed);
  nn::Linear lin(5, 4, rng);
  RMatrix x = random_real(5, 3, rng);
  RMatrix r = random_real(4, 3, rng);
  lin.forward(x);
  lin.dw_.setZero();
  lin.db_.setZero();
  RMatrix dx = lin.backward(r);
  RMatrix dw = lin.dw_, db = lin.db_;
  auto f = [&] { return weighted(lin.forward(x), r); };
  return std::max({fd_compare(x, dx, f), fd_compare(lin.w_, dw, f), fd_compare(lin.b_, db, f)});
}

inline double check_batchnorm(std::uint64_t seed) {
  Rng rng(seed);
  nn::BatchNorm1d bn(4, 1e-5, 0.1);
  bn.update_running_ = false;
  bn.gamma_ = random_real(4, 1, rng);
  bn.beta_ = random_real(4, 1, rng);
  RMatrix x = random_real(4, 6, rng);
  RMatrix r = random_real(4, 6, rng);
  bn.forward(x, true);
  bn.dgamma_.setZero();
  bn.dbeta_.setZero();
  RMatrix dx = bn.backward(r);
  RMatrix dg = bn.dgamma_, db = bn.dbeta_;
  auto f = [&] { return weighted(bn.forward(x, true), r); };
  double train = std::max({fd_compare(x, dx, f), fd_compare(bn.gamma_, dg, f), fd_compare(bn.beta_, db, f)});
  // Eval mode is affine in x.
  bn.running_mean_ = random_real(4, 1, rng);
  bn.running_var_ = random_real(4, 1, rng).cwiseAbs().array() + 0.5;
  bn.forward(x, false);
  RMatrix dxe = bn.backward(r);
  auto fe = [&] { return weighted(bn.forward(x, false), r); };
  return std::max(train, fd_compare(x, dxe, fe));
}

inline double check_leaky_relu(std::uint64_t seed) {
  Rng rng(seed);
  nn::LeakyRelu act(0.01);
  RMatrix x = random_real(5, 4, rng);
  // Keep clear of the kink by more than the step.
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (std::abs(x.data()[i]) < 1e-3) x.data()[i] = 1e-2;
  RMatrix r = random_real(5, 4, rng);
  act.forward(x);
  RMatrix dx = act.backward(r);
  auto f = [&] { return weighted(act.forward(x), r); };
  return fd_compare(x, dx, f);
}

inline double check_dropout(std::uint64_t seed) {
  Rng rng(seed);
  nn::Dropout drop(0.8);
  RMatrix x = random_real(6, 4, rng);
  RMatrix r = random_real(6, 4, rng);
  const std::uint64_t mask_seed = seed * 7 + 1;
  auto fwd = [&] {
    Rng m(mask_seed);
    return drop.forward(x, true, &m);
  };
  fwd();
  RMatrix dx = drop.backward(r);
  auto f = [&] { return weighted(fwd(), r); };
  return fd_compare(x, dx, f);
}

inline double check_conv1d(std::uint64_t seed) {
  Rng rng(seed);
  nn::Conv1d conv(2, 3, 5, rng);
  RMatrix x = random_real(10, 3, rng);
  RMatrix r = random_real(15, 3, rng);
  conv.forward(x);
  conv.dw_.setZero();
  conv.db_.setZero();
  RMatrix dx = conv.backward(r);
  RMatrix dw = conv.dw_, db = conv.db_;
  auto f = [&] { return weighted(conv.forward(x), r); };
  return std::max({fd_compare(x, dx, f), fd_compare(conv.w_, dw, f), fd_compare(conv.b_, db, f)});
}

// Softmax through a weighted sum: d/dz sum r p = p (r - p.r).
inline double check_softmax(std::uint64_t seed) {
  Rng rng(seed);
  RMatrix z = random_real(5, 3, rng);
  RMatrix r = random_real(5, 3, rng);
  RMatrix p = nn::softmax(z);
  RMatrix dz(5, 3);
  for (Eigen::Index j = 0; j < 3; ++j) {
    double e = p.col(j).dot(r.col(j));
    dz.col(j) = p.col(j).cwiseProduct(r.col(j) - RVector::Constant(5, e));
  }
  auto f = [&] { return weighted(nn::softmax(z), r); };
  return fd_compare(z, dz, f);
}

struct LossFixture {
  std::vector<CMatrix> h;
  nn::CodebookCache cache;
  RMatrix logits;
  RMatrix regression;
  double sigma2 = 0.5;
};

inline LossFixture make_loss_fixture(std::uint64_t seed, bool hybrid_head) {
  Rng rng(seed);
  const int n_t = 4, n_rf = 2, n_u = 2, l = 3, batch = 3;
  LossFixture fx;
  for (int j = 0; j < batch; ++j) {
    CMatrix h(n_t, n_u);
    for (int c = 0; c < n_u; ++c)
      for (int r = 0; r < n_t; ++r) h(r, c) = Complex(rng.normal(), rng.normal());
    fx.h.push_back(h);
  }
  Codebook cb;
  while (cb.size() < static_cast<std::size_t>(l)) {
    std::vector<std::uint8_t> codes(static_cast<std::size_t>(n_t * n_rf));
    for (auto& c : codes) c = static_cast<std::uint8_t>(rng.uniform_int(0, 3));
    AnalogPrecoder a(n_t, n_rf, codes);
    Eigen::JacobiSVD<CMatrix> svd(a.matrix());
    if (svd.singularValues()(n_rf - 1) < 0.3) continue;
    cb.add(a);
  }
  fx.cache = nn::CodebookCache::build(cb);
  fx.logits = random_real(l, batch, rng);
  fx.regression = random_real(2 * n_u * (hybrid_head ? n_rf : n_t), batch, rng);
  return fx;
}

enum class LossKind { kHbf, kFdp, kAp, kAfp };

inline nn::LossResult eval_loss(const LossFixture& fx, LossKind kind) {
  switch (kind) {
    case LossKind::kHbf: return nn::loss_hbf(fx.logits, fx.regression, fx.h, fx.cache, fx.sigma2);
    case LossKind::kFdp:
      return nn::loss_afp(fx.logits, fx.regression, fx.h, fx.cache, fx.sigma2, {true, false, true});
    case LossKind::kAp:
      return nn::loss_afp(fx.logits, fx.regression, fx.h, fx.cache, fx.sigma2, {false, true, true});
    case LossKind::kAfp: return nn::loss_afp(fx.logits, fx.regression, fx.h, fx.cache, fx.sigma2);
  }
  return {};
}

inline double check_loss(std::uint64_t seed, LossKind kind) {
  LossFixture fx = make_loss_fixture(seed, kind == LossKind::kHbf);
  nn::LossResult res = eval_loss(fx, kind);
  auto f = [&] { return eval_loss(fx, kind).total; };
  return std::max(fd_compare(fx.logits, res.d_logits, f), fd_compare(fx.regression, res.d_regression, f));
}

// Whole network in train mode with a fixed dropout mask and frozen running
// statistics; checks the input gradient and every parameter.
inline double check_network(std::uint64_t seed, nn::Variant variant, bool conv) {
  nn::NetworkSpec spec;
  spec.variant = variant;
  spec.n_t = 4;
  spec.n_rf = 2;
  spec.n_u = 2;
  spec.k = 3;
  spec.classes = 3;
  spec.trunk_widths = {6, 5};
  spec.keep_prob = 0.9;
  spec.use_conv = conv;
  spec.conv_channels = 2;
  nn::Network net(spec, seed);
  net.set_running_updates(false);
  Rng rng(seed + 1000);
  RMatrix x = random_real(spec.input_width(), 4, rng);
  RMatrix r1 = random_real(spec.classes, 4, rng);
  RMatrix r2 = random_real(spec.regression_width(), 4, rng);
  const std::uint64_t mask_seed = seed + 2000;
  auto fwd = [&] {
    Rng m(mask_seed);
    return net.forward(x, true, &m);
  };
  fwd();
  net.zero_grad();
  RMatrix dx = net.backward(r1, r2);
  RMatrix weights(r1.rows() + r2.rows(), r1.cols());
  weights << r1, r2;
  auto y = [&] {
    auto out = fwd();
    RMatrix stacked(weights.rows(), weights.cols());
    stacked << out.logits, out.regression;
    return stacked;
  };
  double worst = fd_compare(x, dx, y, weights);
  for (auto& p : net.params()) {
    RMatrix g = *p.grad;
    worst = std::max(worst, fd_compare(*p.value, g, y, weights));
  }
  return worst;
}

struct GradientCheck {
  std::string name;
  std::function<double(std::uint64_t)> run;
};

inline std::vector<GradientCheck> gradient_checks() {
  using nn::Variant;
  return {
      {"linear", check_linear},
      {"batchnorm", check_batchnorm},
      {"leaky_relu", check_leaky_relu},
      {"dropout", check_dropout},
      {"conv1d", check_conv1d},
      {"softmax", check_softmax},
      {"loss_hbf", [](std::uint64_t s) { return check_loss(s, LossKind::kHbf); }},
      {"loss_fdp", [](std::uint64_t s) { return check_loss(s, LossKind::kFdp); }},
      {"loss_ap", [](std::uint64_t s) { return check_loss(s, LossKind::kAp); }},
      {"loss_afp", [](std::uint64_t s) { return check_loss(s, LossKind::kAfp); }},
      {"network_hbf", [](std::uint64_t s) { return check_network(s, Variant::kHbfNet, false); }},
      {"network_afp_conv", [](std::uint64_t s) { return check_network(s, Variant::kAfpNet, true); }},
  };
}

}  // namespace hbf::testing
