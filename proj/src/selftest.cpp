// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <functional>
#include <ostream>

#include "hbf/channel_gen.hpp"
#include "hbf/experiment.hpp"
#include "hbf/fdp_design.hpp"
#include "hbf/hbf_design.hpp"
#include "hbf/nn/losses.hpp"
#include "hbf/rate_metrics.hpp"

namespace hbf {

namespace {

CMatrix random_cmatrix(int r, int c, Rng& rng) {
  CMatrix m(r, c);
  for (int j = 0; j < c; ++j) {
    for (int i = 0; i < r; ++i) m(i, j) = Complex(rng.normal(), rng.normal());
  }
  return m;
}

AnalogPrecoder random_ap(int n_t, int n_rf, Rng& rng) {
  std::vector<std::uint8_t> codes(static_cast<std::size_t>(n_t * n_rf));
  for (auto& c : codes) c = static_cast<std::uint8_t>(rng.uniform_int(0, 3));
  return AnalogPrecoder(n_t, n_rf, std::move(codes));
}

bool check_pinv(Rng& rng) {
  for (int t = 0; t < 20; ++t) {
    const CMatrix m = random_cmatrix(12, 4, rng);
    const CMatrix a = complex_pinv(m);
    const CMatrix b = complex_pinv_real_decomposed(m);
    if ((a - b).norm() > 1e-9 * a.norm()) return false;
    if ((a * m - CMatrix::Identity(4, 4)).norm() > 1e-9) return false;
  }
  return true;
}

bool check_waterfill() {
  const WaterfillResult w = waterfill_capacity({2.0, 0.5}, 1.0);
  double total = 0.0;
  for (double a : w.allocations) total += a;
  return std::abs(w.capacity - std::log2(3.0)) < 1e-9 && std::abs(total - 1.0) < 1e-9;
}

bool check_virtual_identity(Rng& rng) {
  for (int t = 0; t < 50; ++t) {
    const CMatrix h = random_cmatrix(8, 2, rng);
    const AnalogPrecoder a = random_ap(8, 3, rng);
    const DigitalPrecoder w{random_cmatrix(3, 2, rng)};
    const CMatrix virt = effective_channel(h, a);
    for (int u = 0; u < 2; ++u) {
      const double s1 = sinr_hybrid(h, a, w, 0.3, u);
      const double s2 = sinr_precoder(virt, w.w, 0.3, u);
      if (std::abs(s1 - s2) > 1e-12 * std::max(1.0, std::abs(s1))) return false;
    }
  }
  return true;
}

bool check_dominance(Rng& rng) {
  const SystemConfig cfg;
  const ScenarioArea area = ScenarioArea::extended();
  const ArrayGeometry geom = ArrayGeometry::for_antennas(cfg.n_t);
  for (int t = 0; t < 5; ++t) {
    const CMatrix h = generate_channel(cfg, area, geom, sample_user_set(area, cfg.n_u, rng)).h;
    const double fdp = fdp_enumerate(h, cfg.sigma2()).sum_rate;
    const double zf = sum_rate_fdp(h, zf_precoder(h, cfg.sigma2()), cfg.sigma2());
    if (fdp < zf - 1e-9) return false;
  }
  return true;
}

bool check_loss_gradient(Rng& rng) {
  std::vector<AnalogPrecoder> cws;
  for (int l = 0; l < 3; ++l) cws.push_back(random_ap(6, 2, rng));
  const nn::CodebookCache cache = nn::CodebookCache::build(Codebook(cws));
  std::vector<CMatrix> h{random_cmatrix(6, 2, rng), random_cmatrix(6, 2, rng)};
  RMatrix logits(3, 2);
  RMatrix reg(24, 2);
  for (Eigen::Index i = 0; i < logits.size(); ++i) logits.data()[i] = rng.normal();
  for (Eigen::Index i = 0; i < reg.size(); ++i) reg.data()[i] = rng.normal();
  const nn::LossResult lr = nn::loss_afp(logits, reg, h, cache, 0.5);
  const RVector point = Eigen::Map<const RVector>(reg.data(), reg.size());
  auto f = [&](const RVector& x) {
    RMatrix r = Eigen::Map<const RMatrix>(x.data(), reg.rows(), reg.cols());
    return nn::loss_afp(logits, r, h, cache, 0.5).total;
  };
  const RVector analytic = Eigen::Map<const RVector>(lr.d_regression.data(), lr.d_regression.size());
  return nn::max_relative_error(analytic, nn::numeric_gradient(f, point)) < 1e-4;
}

bool check_feedback_bits() {
  return rssi_feedback_bits(32, 4, 8) == 1024 && csi_feedback_bits(128, 4, 4) == 4096;
}

}  // namespace

int run_selftest(std::ostream& log) {
  Rng rng = Rng::stream(2024, "selftest");
  const std::vector<std::pair<const char*, std::function<bool()>>> checks = {
      {"pseudoinverse real decomposition", [&] { return check_pinv(rng); }},
      {"waterfilling two-mode case", check_waterfill},
      {"hybrid/virtual-channel SINR identity", [&] { return check_virtual_identity(rng); }},
      {"FDP enumeration dominates ZF", [&] { return check_dominance(rng); }},
      {"AFP loss gradient", [&] { return check_loss_gradient(rng); }},
      {"feedback-bit accounting", check_feedback_bits},
  };
  int failures = 0;
  for (const auto& [name, fn] : checks) {
    bool ok = false;
    try {
      ok = fn();
    } catch (const std::exception& e) {
      log << "  error: " << e.what() << '\n';
    }
    log << (ok ? "PASS " : "FAIL ") << name << '\n';
    if (!ok) ++failures;
  }
  return failures;
}

}  // namespace hbf
