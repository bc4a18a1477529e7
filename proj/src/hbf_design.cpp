// SPDX-License-Identifier: Apache-2.0
#include "hbf/hbf_design.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hbf/fdp_design.hpp"
#include "hbf/rate_metrics.hpp"

namespace hbf {

namespace {

// conj(symbol) * z for the quaternary alphabet, without multiplications.
inline Complex conj_rotate(std::uint8_t code, Complex z) {
  switch (code) {
    case 0: return z;
    case 1: return -z;
    case 2: return {z.imag(), -z.real()};  // -i z
    default: return {-z.imag(), z.real()};  // i z
  }
}

void require_signal(const CMatrix& h) {
  if (h.squaredNorm() == 0.0 || !std::isfinite(h.squaredNorm())) {
    throw NoCapacityError("channel is zero; no analog precoder has capacity");
  }
}

}  // namespace

CapacityEvaluator::CapacityEvaluator(const CMatrix& h, int n_rf, double rho)
    : h_(h), n_rf_(n_rf), rho_(rho), virt_(n_rf, h.cols()) {}

double CapacityEvaluator::operator()(std::span<const std::uint8_t> codes) {
  const Eigen::Index n_t = h_.rows();
  for (Eigen::Index u = 0; u < h_.cols(); ++u) {
    for (int r = 0; r < n_rf_; ++r) {
      const std::uint8_t* col = codes.data() + static_cast<std::ptrdiff_t>(r) * n_t;
      Complex acc{0.0, 0.0};
      for (Eigen::Index n = 0; n < n_t; ++n) acc += conj_rotate(col[n], h_(n, u));
      virt_(r, u) = acc;
    }
  }
  eig_ = gram_eigenvalues(virt_);
  bool any = std::any_of(eig_.begin(), eig_.end(), [](double b) { return b > 0.0; });
  if (!any) return 0.0;
  return waterfill_capacity(eig_, rho_).capacity;
}

HybridSolution hybrid_for_analog(const CMatrix& h, const AnalogPrecoder& a, double sigma2) {
  const CMatrix virt = effective_channel(h, a);
  FdpResult fdp = fdp_enumerate(virt, sigma2);
  HybridSolution out{a, normalize_hybrid_active(a, DigitalPrecoder{fdp.precoder.u}), 0.0};
  out.sum_rate = sum_rate_hybrid(h, out.a, out.w, sigma2);
  return out;
}

HshoResult hsho_design(const CMatrix& h, double sigma2, int n_rf, const GaParams& params, Rng& rng) {
  require_signal(h);
  if (n_rf < h.cols()) throw ShapeError("hybrid design needs N_RF >= N_U");
  const int n_t = static_cast<int>(h.rows());
  CapacityEvaluator eval(h, n_rf, 1.0 / sigma2);
  GaResult ga = ga_optimize([&](std::span<const std::uint8_t> g) { return eval(g); }, n_t * n_rf,
                            params, rng);
  AnalogPrecoder a(n_t, n_rf, ga.best);
  HybridSolution hs = hybrid_for_analog(h, a, sigma2);
  HshoResult out;
  static_cast<HybridSolution&>(out) = std::move(hs);
  out.capacity = ga.best_fitness;
  out.history = std::move(ga.history);
  return out;
}

ExhaustiveResult exhaustive_ap_search(const CMatrix& h, double sigma2, int n_rf) {
  require_signal(h);
  const int n_t = static_cast<int>(h.rows());
  const int len = n_t * n_rf;
  if (len > 10) {
    throw InvalidArgument("exhaustive analog search limited to 4^(N_T N_RF) <= 2^20 candidates");
  }
  const std::uint64_t total = 1ull << (2 * len);
  CapacityEvaluator eval(h, n_rf, 1.0 / sigma2);
  std::vector<std::uint8_t> codes(static_cast<std::size_t>(len));
  std::vector<std::uint8_t> best_codes;
  double best = -1.0;
  for (std::uint64_t idx = 0; idx < total; ++idx) {
    std::uint64_t v = idx;
    for (int i = 0; i < len; ++i, v >>= 2) codes[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v & 3);
    double c = eval(codes);
    if (c > best) {
      best = c;
      best_codes = codes;
    }
  }
  return {AnalogPrecoder(n_t, n_rf, best_codes), best, static_cast<std::size_t>(total)};
}

OmpResult omp_hybrid(const CMatrix& h, const FullyDigitalPrecoder& u_opt, const Codebook& cb,
                     double sigma2) {
  if (cb.empty()) throw InvalidArgument("OMP needs a non-empty codebook");
  OmpResult out;
  double best = std::numeric_limits<double>::infinity();
  CMatrix best_w;
  for (std::size_t l = 0; l < cb.size(); ++l) {
    const CMatrix pinv = codeword_pinv(cb[l].matrix(), l);
    CMatrix w = pinv * u_opt.u;
    double residual = (u_opt.u - cb[l].matrix() * w).norm();
    out.residuals.push_back(residual);
    if (residual < best) {
      best = residual;
      out.index = l;
      best_w = std::move(w);
    }
  }
  out.a = cb[out.index];
  out.w = normalize_hybrid_active(out.a, DigitalPrecoder{best_w});
  out.sum_rate = sum_rate_hybrid(h, out.a, out.w, sigma2);
  return out;
}

HybridSolution pzf_hybrid(const CMatrix& h, double sigma2, int n_rf) {
  const auto n_u = static_cast<int>(h.cols());
  const auto n_t = static_cast<int>(h.rows());
  if (n_u > n_rf) throw InvalidArgument("phased ZF needs N_U <= N_RF");
  std::vector<int> strongest(static_cast<std::size_t>(n_u));
  std::iota(strongest.begin(), strongest.end(), 0);
  std::stable_sort(strongest.begin(), strongest.end(),
                   [&](int a, int b) { return h.col(a).squaredNorm() > h.col(b).squaredNorm(); });

  std::vector<std::uint8_t> codes(static_cast<std::size_t>(n_t) * static_cast<std::size_t>(n_rf));
  for (int r = 0; r < n_rf; ++r) {
    int user = r < n_u ? r : strongest[static_cast<std::size_t>((r - n_u) % n_u)];
    for (int n = 0; n < n_t; ++n) {
      codes[static_cast<std::size_t>(r) * n_t + n] = encode(quantize_phase(h(n, user)));
    }
  }
  AnalogPrecoder a(n_t, n_rf, std::move(codes));
  const CMatrix virt = effective_channel(h, a);
  CMatrix w;
  try {
    w = zf_precoder(virt, sigma2).u;
  } catch (const SingularMatrixError&) {
    // Users sharing a quantized phase pattern collapse the virtual channel;
    // fall back to the minimum-norm least-squares inverse.
    w = virt.adjoint().completeOrthogonalDecomposition().pseudoInverse();
  }
  HybridSolution out{a, normalize_hybrid_active(a, DigitalPrecoder{w}), 0.0};
  out.sum_rate = sum_rate_hybrid(h, out.a, out.w, sigma2);
  return out;
}

}  // namespace hbf
