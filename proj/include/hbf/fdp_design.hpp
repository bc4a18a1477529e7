// SPDX-License-Identifier: Apache-2.0
//
// Near-optimal fully-digital precoding from the regularized-inverse structure
//   u_u = sqrt(p_u) x_u / ||x_u||,  x_u = (I + (1/sigma2) sum_i lambda_i h_i h_i^H)^{-1} h_u
// with the power/multiplier pair enumerated over user subsets, plus the
// zero-forcing baseline.
#pragma once

#include <cstdint>
#include <vector>

#include "hbf/model_core.hpp"

namespace hbf {

struct FdpCandidateParams {
  std::vector<double> lambda;
  std::vector<double> p;

  /// Non-negative entries summing to one (within 1e-12) for both vectors.
  void validate() const;
  /// Uniform weights 1/|S| on the users of `mask`, zero elsewhere.
  static FdpCandidateParams uniform_on(std::uint32_t mask, int n_u);
};

enum class ParamCheck { kStrict, kRelaxedLambda };

/// Columns satisfy ||u_u||^2 = p_u.
FullyDigitalPrecoder fdp_from_params(const CMatrix& h, const FdpCandidateParams& params,
                                     double sigma2, ParamCheck check = ParamCheck::kStrict);

inline constexpr int kMaxEnumerationUsers = 12;

struct FdpResult {
  /// Unit-norm columns for the selected users, zero columns for the rest.
  FullyDigitalPrecoder precoder;
  double sum_rate = 0.0;
  std::uint32_t subset = 0;
  /// Every evaluated candidate, in enumeration order.
  std::vector<std::uint32_t> candidate_subsets;
  std::vector<double> candidate_rates;
};

/// Non-empty user subsets ordered by size, then lexicographically by user index.
std::vector<std::uint32_t> enumeration_order(int n_u);

/// The candidate for `mask` with its active columns scaled to unit norm
/// (the per-user power convention used for every rate comparison).
FullyDigitalPrecoder fdp_candidate(const CMatrix& h, std::uint32_t mask, double sigma2);

/// Evaluates all 2^N_U - 1 subsets and keeps the best; ties keep the earlier
/// candidate in enumeration_order.
FdpResult fdp_enumerate(const CMatrix& h, double sigma2);

/// U = h (h^H h)^{-1}, columns renormalized to unit norm.
FullyDigitalPrecoder zf_precoder(const CMatrix& h, double sigma2);

}  // namespace hbf
