// SPDX-License-Identifier: Apache-2.0
#include "hbf/fdp_design.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "hbf/rate_metrics.hpp"

namespace hbf {

void FdpCandidateParams::validate() const {
  auto check = [](const std::vector<double>& v, const char* name) {
    double sum = 0.0;
    for (double x : v) {
      if (!(x >= 0.0)) throw InvalidArgument(std::string(name) + " entries must be >= 0");
      sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw InvalidArgument(std::string(name) + " must sum to 1");
  };
  if (lambda.size() != p.size()) throw ShapeError("lambda and p must have equal length");
  check(lambda, "lambda");
  check(p, "p");
}

FdpCandidateParams FdpCandidateParams::uniform_on(std::uint32_t mask, int n_u) {
  FdpCandidateParams out;
  out.lambda.assign(static_cast<std::size_t>(n_u), 0.0);
  out.p.assign(static_cast<std::size_t>(n_u), 0.0);
  const double share = 1.0 / std::popcount(mask);
  for (int u = 0; u < n_u; ++u) {
    if (mask & (1u << u)) {
      out.lambda[static_cast<std::size_t>(u)] = share;
      out.p[static_cast<std::size_t>(u)] = share;
    }
  }
  return out;
}

FullyDigitalPrecoder fdp_from_params(const CMatrix& h, const FdpCandidateParams& params,
                                     double sigma2, ParamCheck check) {
  const auto n_u = h.cols();
  if (static_cast<Eigen::Index>(params.p.size()) != n_u) {
    throw ShapeError("candidate parameters must have one entry per user");
  }
  if (check == ParamCheck::kStrict) {
    params.validate();
  } else {
    FdpCandidateParams probe = params;
    probe.lambda.assign(params.p.size(), 1.0 / static_cast<double>(params.p.size()));
    probe.validate();
    for (double l : params.lambda) {
      if (!(l >= 0.0)) throw InvalidArgument("lambda entries must be >= 0");
    }
  }
  if (!(sigma2 > 0.0)) throw InvalidArgument("sigma2 must be positive");

  CMatrix reg = CMatrix::Identity(h.rows(), h.rows());
  for (Eigen::Index i = 0; i < n_u; ++i) {
    double l = params.lambda[static_cast<std::size_t>(i)];
    if (l > 0.0) reg.noalias() += (l / sigma2) * h.col(i) * h.col(i).adjoint();
  }
  // Identity plus a PSD sum: always Hermitian positive definite.
  Eigen::LLT<CMatrix> llt(reg);
  FullyDigitalPrecoder out{CMatrix::Zero(h.rows(), n_u)};
  for (Eigen::Index u = 0; u < n_u; ++u) {
    double pu = params.p[static_cast<std::size_t>(u)];
    if (pu == 0.0) continue;
    CVector x = llt.solve(h.col(u));
    double nrm = x.norm();
    if (nrm > 0.0) out.u.col(u) = std::sqrt(pu) * x / nrm;
  }
  return out;
}

std::vector<std::uint32_t> enumeration_order(int n_u) {
  std::vector<std::uint32_t> masks;
  for (std::uint32_t m = 1; m < (1u << n_u); ++m) masks.push_back(m);
  // Lexicographic order of the sorted index lists equals ascending bit-reversed order.
  auto lex_key = [n_u](std::uint32_t m) {
    std::uint32_t r = 0;
    for (int b = 0; b < n_u; ++b) {
      if (m & (1u << b)) r |= 1u << (n_u - 1 - b);
    }
    return r;
  };
  std::stable_sort(masks.begin(), masks.end(), [&](std::uint32_t a, std::uint32_t b) {
    int pa = std::popcount(a);
    int pb = std::popcount(b);
    if (pa != pb) return pa < pb;
    return lex_key(a) > lex_key(b);
  });
  return masks;
}

FullyDigitalPrecoder fdp_candidate(const CMatrix& h, std::uint32_t mask, double sigma2) {
  const int n_u = static_cast<int>(h.cols());
  return normalize_columns(fdp_from_params(h, FdpCandidateParams::uniform_on(mask, n_u), sigma2));
}

FdpResult fdp_enumerate(const CMatrix& h, double sigma2) {
  const int n_u = static_cast<int>(h.cols());
  if (n_u < 1) throw ShapeError("channel has no users");
  if (n_u > kMaxEnumerationUsers) {
    throw InvalidArgument("fdp_enumerate supports at most " + std::to_string(kMaxEnumerationUsers) +
                          " users; sample a subset of user sets instead");
  }
  FdpResult res;
  res.sum_rate = -1.0;
  res.candidate_subsets = enumeration_order(n_u);
  for (std::uint32_t mask : res.candidate_subsets) {
    FullyDigitalPrecoder cand = fdp_candidate(h, mask, sigma2);
    double rate = sum_rate_fdp(h, cand, sigma2);
    res.candidate_rates.push_back(rate);
    if (rate > res.sum_rate) {
      res.sum_rate = rate;
      res.precoder = std::move(cand);
      res.subset = mask;
    }
  }
  return res;
}

FullyDigitalPrecoder zf_precoder(const CMatrix& h, double /*sigma2*/) {
  if (h.cols() > h.rows()) throw SingularMatrixError("zero forcing needs N_U <= N_T");
  const CMatrix gram = h.adjoint() * h;
  Eigen::PartialPivLU<CMatrix> lu(gram);
  if (!(lu.rcond() >= kSingularRcond)) {
    throw SingularMatrixError("channel is rank deficient; zero forcing undefined");
  }
  FullyDigitalPrecoder out{h * lu.inverse()};
  return normalize_columns(out);
}

}  // namespace hbf
