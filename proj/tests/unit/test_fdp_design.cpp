// SPDX-License-Identifier: Apache-2.0
#include <bit>

#include "doctest.h"
#include "hbf/channel_gen.hpp"
#include "hbf/fdp_design.hpp"
#include "hbf/rate_metrics.hpp"

using namespace hbf;

namespace {

CMatrix random_complex(int rows, int cols, Rng& rng) {
  CMatrix m(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) m(r, c) = Complex(rng.normal(), rng.normal());
  return m;
}

// Direct-inverse oracle of the regularized structure with unit active columns.
CMatrix oracle_candidate(const CMatrix& h, std::uint32_t mask, double s2) {
  const auto n = h.rows();
  const int k = std::popcount(mask);
  CMatrix reg = CMatrix::Identity(n, n);
  for (Eigen::Index i = 0; i < h.cols(); ++i)
    if (mask & (1u << i)) reg += (1.0 / k / s2) * h.col(i) * h.col(i).adjoint();
  CMatrix inv = reg.inverse();
  CMatrix out = CMatrix::Zero(n, h.cols());
  for (Eigen::Index i = 0; i < h.cols(); ++i)
    if (mask & (1u << i)) {
      CVector x = inv * h.col(i);
      out.col(i) = x / x.norm();
    }
  return out;
}

}  // namespace

TEST_CASE("single user reduces to the matched filter") {
  Rng rng(41);
  CMatrix h = random_complex(8, 1, rng);
  auto r = fdp_enumerate(h, 0.5);
  CHECK(r.sum_rate == doctest::Approx(std::log2(1.0 + h.squaredNorm() / 0.5)).epsilon(1e-12));
  CVector mf = h.col(0) / h.norm();
  CHECK(std::abs(std::abs(mf.dot(r.precoder.u.col(0))) - 1.0) < 1e-12);
}

TEST_CASE("enumeration order by size then lexicographic") {
  auto o = enumeration_order(3);
  std::vector<std::uint32_t> expect{0b001, 0b010, 0b100, 0b011, 0b101, 0b110, 0b111};
  CHECK(o == expect);
  CHECK(enumeration_order(4).size() == 15);
}

TEST_CASE("enumeration equals brute force over subsets") {
  Rng rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    int n_u = static_cast<int>(rng.uniform_int(1, 4));
    CMatrix h = random_complex(8, n_u, rng);
    double s2 = std::exp(rng.uniform(-3.0, 1.0));
    auto r = fdp_enumerate(h, s2);
    double best = -1.0;
    for (std::uint32_t m = 1; m < (1u << n_u); ++m) {
      CMatrix u = oracle_candidate(h, m, s2);
      best = std::max(best, sum_rate_precoder(h, u, s2));
      CHECK((fdp_candidate(h, m, s2).u - u).norm() < 1e-9);
    }
    CHECK(r.sum_rate == doctest::Approx(best).epsilon(1e-12));
    CHECK(r.candidate_rates.size() == (1u << n_u) - 1);
    for (int u = 0; u < n_u; ++u) {
      double nrm = r.precoder.u.col(u).norm();
      bool active = r.subset & (1u << u);
      CHECK(std::abs(nrm - (active ? 1.0 : 0.0)) < 1e-12);
    }
  }
}

TEST_CASE("fdp_from_params respects powers") {
  Rng rng(43);
  CMatrix h = random_complex(6, 3, rng);
  FdpCandidateParams p{{0.5, 0.25, 0.25}, {0.6, 0.4, 0.0}};
  auto u = fdp_from_params(h, p, 1.0);
  CHECK(u.u.col(0).squaredNorm() == doctest::Approx(0.6));
  CHECK(u.u.col(1).squaredNorm() == doctest::Approx(0.4));
  CHECK(u.u.col(2).norm() == 0.0);
  FdpCandidateParams bad{{0.5, 0.5, 0.5}, {1.0, 0.0, 0.0}};
  CHECK_THROWS_AS(fdp_from_params(h, bad, 1.0), InvalidArgument);
  CHECK_NOTHROW(fdp_from_params(h, bad, 1.0, ParamCheck::kRelaxedLambda));
  CHECK_THROWS_AS(fdp_from_params(h, p, 0.0), InvalidArgument);
}

TEST_CASE("zero forcing nulls cross-user terms") {
  Rng rng(44);
  for (int trial = 0; trial < 50; ++trial) {
    CMatrix h = random_complex(8, 3, rng);
    auto u = zf_precoder(h, 1.0);
    for (int i = 0; i < 3; ++i) {
      CHECK(u.u.col(i).norm() == doctest::Approx(1.0));
      for (int j = 0; j < 3; ++j)
        if (i != j) CHECK(std::abs(h.col(i).dot(u.u.col(j))) < 1e-9);
    }
  }
  CMatrix dep(4, 2);
  dep.col(0) << 1, 2, 3, 4;
  dep.col(1) = dep.col(0);
  CHECK_THROWS_AS(zf_precoder(dep, 1.0), SingularMatrixError);
}

TEST_CASE("enumeration dominates zero forcing on desk channels") {
  SystemConfig cfg;
  auto area = ScenarioArea::extended();
  auto g = ArrayGeometry::for_antennas(cfg.n_t);
  Rng rng(45);
  int wins = 0, n = 200;
  for (int i = 0; i < n; ++i) {
    auto h = generate_channel(cfg, area, g, sample_user_set(area, cfg.n_u, rng)).h;
    double f = fdp_enumerate(h, cfg.sigma2()).sum_rate;
    double z = sum_rate_fdp(h, zf_precoder(h, cfg.sigma2()), cfg.sigma2());
    if (f >= z - 1e-9) ++wins;
  }
  CHECK(wins >= 190);
}

TEST_CASE("user cap") {
  CHECK_THROWS_AS(fdp_enumerate(CMatrix::Ones(16, 13), 1.0), InvalidArgument);
}
