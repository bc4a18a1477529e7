// SPDX-License-Identifier: Apache-2.0
#include "hbf/rate_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace hbf {

namespace {

void check_shapes(const CMatrix& h, const CMatrix& v) {
  if (h.rows() != v.rows() || h.cols() != v.cols()) {
    throw ShapeError("precoder shape must match the channel (N_T x N_U)");
  }
}

double sinr_from_gains(const CMatrix& g, double sigma2, Eigen::Index u) {
  double signal = std::norm(g(u, u));
  double interference = 0.0;
  for (Eigen::Index j = 0; j < g.cols(); ++j) {
    if (j != u) interference += std::norm(g(u, j));
  }
  return signal / (interference + sigma2);
}

}  // namespace

double sinr_precoder(const CMatrix& h, const CMatrix& v, double sigma2, int u) {
  check_shapes(h, v);
  const CMatrix g = h.adjoint() * v;
  return sinr_from_gains(g, sigma2, u);
}

double sum_rate_precoder(const CMatrix& h, const CMatrix& v, double sigma2) {
  check_shapes(h, v);
  const CMatrix g = h.adjoint() * v;
  double rate = 0.0;
  for (Eigen::Index u = 0; u < g.rows(); ++u) rate += std::log2(1.0 + sinr_from_gains(g, sigma2, u));
  return rate;
}

double sinr_hybrid(const CMatrix& h, const AnalogPrecoder& a, const DigitalPrecoder& w,
                   double sigma2, int u) {
  return sinr_precoder(h, a.matrix() * w.w, sigma2, u);
}

double sum_rate_hybrid(const CMatrix& h, const AnalogPrecoder& a, const DigitalPrecoder& w,
                       double sigma2) {
  return sum_rate_precoder(h, a.matrix() * w.w, sigma2);
}

double sinr_fdp(const CMatrix& h, const FullyDigitalPrecoder& u, double sigma2, int user) {
  return sinr_precoder(h, u.u, sigma2, user);
}

double sum_rate_fdp(const CMatrix& h, const FullyDigitalPrecoder& u, double sigma2) {
  return sum_rate_precoder(h, u.u, sigma2);
}

CMatrix effective_channel(const CMatrix& h, const AnalogPrecoder& a) {
  if (h.rows() != a.n_t()) throw ShapeError("channel rows must equal N_T");
  return a.matrix().adjoint() * h;
}

std::vector<double> gram_eigenvalues(const CMatrix& h) {
  const CMatrix gram = h.adjoint() * h;
  std::vector<double> out;
  if (gram.rows() == 1) {
    out.push_back(std::max(gram(0, 0).real(), 0.0));
  } else if (gram.rows() == 2) {
    // Closed form for the 2x2 Hermitian case (the common N_U = 2 path).
    double a = gram(0, 0).real();
    double d = gram(1, 1).real();
    double b2 = std::norm(gram(0, 1));
    double mean = 0.5 * (a + d);
    double disc = std::sqrt(0.25 * (a - d) * (a - d) + b2);
    out = {std::max(mean + disc, 0.0), std::max(mean - disc, 0.0)};
  } else {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(gram, Eigen::EigenvaluesOnly);
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
      out.push_back(std::max(es.eigenvalues()(i), 0.0));
    }
  }
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

WaterfillResult waterfill_capacity(const std::vector<double>& eigenvalues, double rho) {
  if (!(rho > 0.0)) throw InvalidArgument("waterfilling needs rho > 0");
  WaterfillResult res;
  res.rho = rho;
  res.eigenvalues = eigenvalues;
  res.allocations.assign(eigenvalues.size(), 0.0);

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < eigenvalues.size(); ++i) {
    if (eigenvalues[i] < 0.0 || !std::isfinite(eigenvalues[i])) {
      throw InvalidArgument("waterfilling eigenvalues must be finite and >= 0");
    }
    if (eigenvalues[i] > 0.0) order.push_back(i);
  }
  if (order.empty()) throw NoCapacityError("all eigenvalues are zero; channel has no capacity");
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return eigenvalues[x] > eigenvalues[y]; });

  // Largest active set m whose level exceeds the weakest active floor 1/b_m.
  double mu = 0.0;
  std::size_t active = 0;
  double inv_sum = 0.0;
  for (std::size_t m = 1; m <= order.size(); ++m) {
    inv_sum += 1.0 / eigenvalues[order[m - 1]];
    double level = (rho + inv_sum) / static_cast<double>(m);
    if (level > 1.0 / eigenvalues[order[m - 1]]) {
      mu = level;
      active = m;
    } else {
      break;
    }
  }
  res.mu = mu;
  for (std::size_t m = 0; m < active; ++m) {
    std::size_t i = order[m];
    res.allocations[i] = mu - 1.0 / eigenvalues[i];
  }
  for (double b : eigenvalues) {
    if (b > 0.0) res.capacity += std::max(std::log2(mu * b), 0.0);
  }
  return res;
}

double virtual_capacity(const CMatrix& h, const AnalogPrecoder& a, double rho) {
  return waterfill_capacity(gram_eigenvalues(effective_channel(h, a)), rho).capacity;
}

}  // namespace hbf
