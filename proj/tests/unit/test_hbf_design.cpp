// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"
#include "hbf/channel_gen.hpp"
#include "hbf/fdp_design.hpp"
#include "hbf/hbf_design.hpp"
#include "hbf/rate_metrics.hpp"

using namespace hbf;

namespace {

CMatrix random_complex(int rows, int cols, Rng& rng) {
  CMatrix m(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) m(r, c) = Complex(rng.normal(), rng.normal());
  return m;
}

AnalogPrecoder random_analog(int n_t, int n_rf, Rng& rng) {
  std::vector<std::uint8_t> codes(static_cast<std::size_t>(n_t * n_rf));
  for (auto& c : codes) c = static_cast<std::uint8_t>(rng.uniform_int(0, 3));
  return AnalogPrecoder(n_t, n_rf, codes);
}

// Oracle: enumerate every analog matrix through the public complex API.
double brute_force_capacity(const CMatrix& h, double sigma2, int n_rf) {
  const int n_t = static_cast<int>(h.rows());
  const int len = n_t * n_rf;
  double best = -1.0;
  std::vector<std::uint8_t> codes(static_cast<std::size_t>(len));
  for (std::uint64_t idx = 0; idx < (1ull << (2 * len)); ++idx) {
    std::uint64_t v = idx;
    for (int i = 0; i < len; ++i, v >>= 2) codes[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(v & 3);
    AnalogPrecoder a(n_t, n_rf, codes);
    CMatrix virt = a.matrix().adjoint() * h;
    if (virt.squaredNorm() == 0.0) continue;
    best = std::max(best, virtual_capacity(h, a, 1.0 / sigma2));
  }
  return best;
}

}  // namespace

TEST_CASE("GA solves a separable toy objective") {
  Rng rng(51);
  auto fit = [](std::span<const std::uint8_t> g) {
    double s = 0;
    for (auto c : g) s += (c == 2);
    return s;
  };
  auto p = GaParams::with_population(60, 4);
  auto r = ga_optimize(fit, 20, p, rng);
  CHECK(r.best_fitness == 20.0);
  CHECK(r.history.front().generation == 0);
  for (std::size_t i = 1; i < r.history.size(); ++i) CHECK(r.history[i].best >= r.history[i - 1].best);
}

TEST_CASE("GA is deterministic for a seed") {
  auto fit = [](std::span<const std::uint8_t> g) {
    double s = 0;
    for (std::size_t i = 0; i < g.size(); ++i) s += g[i] * (i % 3 == 0 ? 1.0 : -0.5);
    return s;
  };
  auto p = GaParams::with_population(30, 4);
  Rng a(7), b(7);
  auto ra = ga_optimize(fit, 12, p, a);
  auto rb = ga_optimize(fit, 12, p, b);
  CHECK(ra.best == rb.best);
  CHECK(ra.history.size() == rb.history.size());
}

TEST_CASE("GA parameter validation") {
  GaParams p = GaParams::defaults(16, 4);
  CHECK(p.population == 6400);
  CHECK(p.elites == 320);
  CHECK(p.max_generations == 320);
  p.elites = p.population + 1;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
}

TEST_CASE("capacity evaluator matches the complex route") {
  Rng rng(52);
  for (int t = 0; t < 100; ++t) {
    CMatrix h = random_complex(8, 2, rng);
    auto a = random_analog(8, 3, rng);
    CapacityEvaluator eval(h, 3, 4.0);
    CHECK(eval(a.codes()) == doctest::Approx(virtual_capacity(h, a, 4.0)).epsilon(1e-12));
  }
}

TEST_CASE("exhaustive search equals brute force") {
  Rng rng(53);
  for (int t = 0; t < 5; ++t) {
    CMatrix h = random_complex(2, 2, rng);
    auto ex = exhaustive_ap_search(h, 0.5, 2);
    CHECK(ex.candidates == 256);
    CHECK(ex.capacity == doctest::Approx(brute_force_capacity(h, 0.5, 2)).epsilon(1e-12));
    CHECK(virtual_capacity(h, ex.a, 2.0) == doctest::Approx(ex.capacity).epsilon(1e-12));
  }
  CHECK_THROWS_AS(exhaustive_ap_search(random_complex(8, 2, rng), 1.0, 2), InvalidArgument);
}

TEST_CASE("GA reaches the exhaustive optimum on a small array") {
  Rng rng(54);
  int good = 0;
  for (int seed = 0; seed < 4; ++seed) {
    CMatrix h = random_complex(4, 2, rng);
    auto ex = exhaustive_ap_search(h, 0.1, 2);
    Rng ga_rng(static_cast<std::uint64_t>(seed));
    auto hs = hsho_design(h, 0.1, 2, GaParams::defaults(4, 2), ga_rng);
    CHECK(hs.capacity <= ex.capacity + 1e-9);
    if (hs.capacity >= 0.95 * ex.capacity) ++good;
  }
  CHECK(good >= 3);
}

TEST_CASE("HSHO never beats fully-digital enumeration") {
  SystemConfig cfg;
  auto area = ScenarioArea::extended();
  auto g = ArrayGeometry::for_antennas(cfg.n_t);
  Rng rng(55);
  for (int i = 0; i < 10; ++i) {
    auto h = generate_channel(cfg, area, g, sample_user_set(area, cfg.n_u, rng)).h;
    Rng ga(static_cast<std::uint64_t>(i));
    auto hs = hsho_design(h, cfg.sigma2(), cfg.n_rf, GaParams::with_population(60, cfg.n_t), ga);
    CHECK(hs.sum_rate <= fdp_enumerate(h, cfg.sigma2()).sum_rate + 1e-9);
    for (int u = 0; u < cfg.n_u; ++u) {
      double nrm = (hs.a.matrix() * hs.w.w.col(u)).norm();
      CHECK((nrm == doctest::Approx(1.0) || nrm == 0.0));
    }
  }
}

TEST_CASE("hybrid digital stage equals enumeration on the virtual channel") {
  Rng rng(56);
  CMatrix h = random_complex(8, 2, rng);
  auto a = random_analog(8, 4, rng);
  auto hs = hybrid_for_analog(h, a, 0.3);
  auto f = fdp_enumerate(effective_channel(h, a), 0.3);
  CHECK(hs.sum_rate == doctest::Approx(sum_rate_hybrid(h, a, hs.w, 0.3)));
  // Same directions up to the per-user rescaling.
  for (int u = 0; u < 2; ++u) {
    if (f.precoder.u.col(u).norm() == 0.0) continue;
    CVector x = f.precoder.u.col(u).normalized();
    CVector y = hs.w.w.col(u).normalized();
    CHECK(std::abs(std::abs(x.dot(y)) - 1.0) < 1e-10);
  }
}

TEST_CASE("zero channel has no capacity") {
  Rng rng(57);
  CHECK_THROWS_AS(hsho_design(CMatrix::Zero(4, 2), 1.0, 2, GaParams::with_population(10, 4), rng),
                  NoCapacityError);
}

TEST_CASE("OMP picks the minimum-residual codeword") {
  Rng rng(58);
  for (int t = 0; t < 20; ++t) {
    CMatrix h = random_complex(8, 2, rng);
    Codebook cb;
    for (int l = 0; l < 6; ++l) cb.add(random_analog(8, 3, rng));
    auto u = fdp_enumerate(h, 0.5).precoder;
    auto r = omp_hybrid(h, u, cb, 0.5);
    std::size_t best = 0;
    double best_res = 1e300;
    for (std::size_t l = 0; l < cb.size(); ++l) {
      CMatrix proj = cb[l].matrix() * complex_pinv(cb[l].matrix()) * u.u;
      double res = (u.u - proj).norm();
      CHECK(res == doctest::Approx(r.residuals[l]).epsilon(1e-9));
      if (res < best_res) {
        best_res = res;
        best = l;
      }
    }
    CHECK(r.index == best);
    CHECK(r.sum_rate <= fdp_enumerate(h, 0.5).sum_rate + 1e-9);
  }
  // Codeword spanning U exactly has zero residual.
  CMatrix h = random_complex(4, 1, rng);
  auto a = random_analog(4, 1, rng);
  FullyDigitalPrecoder u{a.matrix() / a.matrix().norm()};
  Codebook cb({random_analog(4, 1, rng), a});
  if (cb.size() == 2) {
    auto r = omp_hybrid(h, u, cb, 1.0);
    CHECK(r.residuals[1] < 1e-12);
  }
  CHECK_THROWS_AS(omp_hybrid(h, u, Codebook{}, 1.0), InvalidArgument);
}

TEST_CASE("phased ZF single-user formula") {
  Rng rng(59);
  for (int t = 0; t < 20; ++t) {
    CMatrix h = random_complex(8, 1, rng);
    auto r = pzf_hybrid(h, 0.7, 1);
    CVector a(8);
    for (int n = 0; n < 8; ++n) a(n) = to_complex(quantize_phase(h(n, 0)));
    double gain = std::norm(h.col(0).dot(a));
    CHECK(r.sum_rate == doctest::Approx(std::log2(1.0 + gain / (8 * 0.7))).epsilon(1e-10));
  }
}

TEST_CASE("phased ZF nulls interference on the virtual channel") {
  Rng rng(60);
  CMatrix h = random_complex(16, 2, rng);
  auto r = pzf_hybrid(h, 1.0, 4);
  CMatrix virt = effective_channel(h, r.a);
  CHECK(std::abs(virt.col(0).dot(r.w.w.col(1))) < 1e-9 * virt.norm());
  CHECK(std::abs(virt.col(1).dot(r.w.w.col(0))) < 1e-9 * virt.norm());
  CHECK_THROWS_AS(pzf_hybrid(random_complex(8, 3, rng), 1.0, 2), InvalidArgument);
}
