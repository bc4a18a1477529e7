// SPDX-License-Identifier: Apache-2.0
#include <filesystem>

#include "doctest.h"
#include "hbf/ss_rssi.hpp"
#include "support/micro_world.hpp"

using namespace hbf;

namespace {

SsBurst burst_from(const std::vector<std::uint8_t>& codes, int n_t, int k) {
  return SsBurst{AnalogPrecoder(n_t, k, codes), 1.0, 0};
}

}  // namespace

TEST_CASE("RSSI measurement adds the noise floor") {
  CVector h(2);
  h << Complex(1, 0), Complex(0, 1);
  auto b = burst_from({0, 0, 0, 2}, 2, 2);  // beams [1,1] and [1,i]
  auto r = measure_rssi(h, b, 0.25);
  CHECK(r.values[0] == doctest::Approx(std::norm(Complex(1, -1)) + 0.25));
  CHECK(r.values[1] == doctest::Approx(4.0 + 0.25));
  CHECK_THROWS_AS(measure_rssi(CVector::Ones(3), b, 1.0), ShapeError);
}

TEST_CASE("quantization grid") {
  RssiVector v{{0.0, 1.0, 0.5, 0.49, 1.0 / 6.0}, 1.0, std::nullopt};
  auto q = quantize_rssi(v, 2);
  CHECK(q.values[0] == 0.0);
  CHECK(q.values[1] == 1.0);
  CHECK(q.values[2] == doctest::Approx(2.0 / 3.0));  // 1.5 rounds away from zero
  CHECK(q.values[3] == doctest::Approx(1.0 / 3.0));
  CHECK(q.values[4] == doctest::Approx(1.0 / 3.0));  // 0.5 rounds up
  auto q1 = quantize_rssi(RssiVector{{0.4, 0.6}, 1.0, {}}, 1);
  CHECK(q1.values[0] == 0.0);
  CHECK(q1.values[1] == 1.0);
  CHECK_THROWS_AS(quantize_rssi(RssiVector{{1.2}, 1.0, {}}, 3), InvalidArgument);
  CHECK_THROWS_AS(quantize_rssi(RssiVector{{-0.1}, 1.0, {}}, 3), InvalidArgument);
}

TEST_CASE("quantization error bound") {
  Rng rng(61);
  for (int n_b = 1; n_b <= 12; ++n_b) {
    double step = 1.0 / (std::ldexp(1.0, n_b) - 1.0);
    for (int t = 0; t < 100; ++t) {
      double x = rng.uniform();
      auto q = quantize_rssi(RssiVector{{x}, 1.0, {}}, n_b);
      CHECK(std::abs(q.values[0] - x) <= 0.5 * step + 1e-15);
    }
  }
}

TEST_CASE("scaling clamps and counts") {
  std::vector<double> s{0.2, 3.0, 1.5};
  CHECK(scale_factor(s) == 3.0);
  std::size_t clamped = 0;
  auto r = scale_rssi(RssiVector{{1.5, 6.0, 3.0}, 1.0, {}}, 3.0, &clamped);
  CHECK(r.values[0] == 0.5);
  CHECK(r.values[1] == 1.0);
  CHECK(r.values[2] == 1.0);
  CHECK(clamped == 1);
  CHECK_THROWS_AS(scale_rssi(r, 0.0), InvalidArgument);
}

TEST_CASE("hand-computed entropies") {
  using V = std::vector<std::int64_t>;
  std::vector<V> two{{1}, {1}, {2}, {2}};
  CHECK(empirical_entropy(two) == doctest::Approx(1.0));
  std::vector<V> four{{1, 0}, {1, 1}, {2, 0}, {2, 1}};
  CHECK(empirical_entropy(four) == doctest::Approx(2.0));
  std::vector<V> skew{{0}, {0}, {0}, {1}};
  CHECK(empirical_entropy(skew) == doctest::Approx(-(0.75 * std::log2(0.75) + 0.25 * std::log2(0.25))));
  std::vector<V> one{{5}, {5}};
  CHECK(empirical_entropy(one) == 0.0);
  CHECK_THROWS_AS(empirical_entropy(std::vector<V>{}), InvalidArgument);
}

TEST_CASE("full-precision symbols separate distinct values") {
  RssiVector a{{0.1, 0.2}, 1.0, {}};
  RssiVector b{{0.1, std::nextafter(0.2, 1.0)}, 1.0, {}};
  CHECK(rssi_symbols(a) != rssi_symbols(b));
  RssiVector qa{{1.0 / 3.0}, 1.0, 2};
  CHECK(rssi_symbols(qa) == std::vector<std::int64_t>{1});
}

TEST_CASE("mutual information bounds") {
  auto w = testing::make_micro_world();
  Rng rng(62);
  for (int t = 0; t < 50; ++t) {
    auto b = random_burst(4, 3, rng);
    auto e = mutual_information_position_rssi(b, w.sample, w.cfg.sigma2(), 2);
    CHECK(e.mutual_information_bits >= 0.0);
    CHECK(e.mutual_information_bits <= std::min(e.entropy_position_bits, e.entropy_rssi_bits) + 1e-12);
    CHECK(e.mutual_information_bits <= std::log2(8.0) + 1e-12);
    CHECK(e.mutual_information_bits ==
          doctest::Approx(testing::oracle_mi(w.sample.channels, b.beams.matrix(), w.cfg.sigma2(), 2)));
  }
}

TEST_CASE("unique tuples give log2 of the support") {
  auto w = testing::make_micro_world();
  Rng rng(63);
  auto b = random_burst(4, 3, rng);
  auto e = mutual_information_position_rssi(b, w.sample, w.cfg.sigma2(), std::nullopt);
  CHECK(e.mutual_information_bits == doctest::Approx(3.0));
}

TEST_CASE("micro-world design reaches the exhaustive optimum") {
  auto w = testing::make_micro_world();
  auto oracle = testing::exhaustive_burst_oracle(w);
  CHECK(oracle.bursts == 45760);
  Rng rng(64);
  auto res = design_ss_bursts(w.cfg, w.sample, GaParams::with_population(200, 4), 2, rng);
  CHECK(res.info.mutual_information_bits <= oracle.best_mi + 1e-12);
  CHECK(res.info.mutual_information_bits == doctest::Approx(oracle.best_mi));
  if (oracle.best_mi > 3.0 - 1e-12) CHECK(res.info.mutual_information_bits == doctest::Approx(3.0));
  CHECK(res.burst.calibration_hash == w.sample.hash());
}

TEST_CASE("calibration sample is reproducible") {
  SystemConfig cfg;
  auto area = ScenarioArea::limited();
  auto g = ArrayGeometry::for_antennas(cfg.n_t);
  Rng r1(5), r2(5);
  auto a = draw_calibration_sample(cfg, area, g, 500, r1);
  auto b = draw_calibration_sample(cfg, area, g, 500, r2);
  CHECK(a.hash() == b.hash());
  std::size_t total = 0;
  for (auto c : a.counts) total += c;
  CHECK(total == 500);
  CHECK(a.channels.cols() == static_cast<Eigen::Index>(a.positions.size()));
}

TEST_CASE("burst CSV round trip") {
  Rng rng(65);
  auto b = random_burst(16, 8, rng);
  b.beta = 1.234567890123e-9;
  b.calibration_hash = 0xdeadbeefcafef00dULL;
  auto path = std::filesystem::temp_directory_path() / "hbf_test_burst.csv";
  save_burst_csv(path, b);
  auto c = load_burst_csv(path);
  CHECK(c.beams == b.beams);
  CHECK(c.beta == b.beta);
  CHECK(c.calibration_hash == b.calibration_hash);
  std::filesystem::remove(path);
}
