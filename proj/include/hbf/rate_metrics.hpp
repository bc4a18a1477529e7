// SPDX-License-Identifier: Apache-2.0
//
// SINR, sum-rate, virtual channel and waterfilling capacity.
#pragma once

#include <vector>

#include "hbf/model_core.hpp"

namespace hbf {

struct WaterfillResult {
  double mu = 0.0;
  double capacity = 0.0;
  std::vector<double> allocations;
  double rho = 0.0;
  std::vector<double> eigenvalues;
};

/// SINR of user u for an arbitrary N_T x N_U precoder V (columns v_j):
/// |h_u^H v_u|^2 / (sum_{j != u} |h_u^H v_j|^2 + sigma2).
double sinr_precoder(const CMatrix& h, const CMatrix& v, double sigma2, int u);
double sum_rate_precoder(const CMatrix& h, const CMatrix& v, double sigma2);

double sinr_hybrid(const CMatrix& h, const AnalogPrecoder& a, const DigitalPrecoder& w,
                   double sigma2, int u);
double sum_rate_hybrid(const CMatrix& h, const AnalogPrecoder& a, const DigitalPrecoder& w,
                       double sigma2);

double sinr_fdp(const CMatrix& h, const FullyDigitalPrecoder& u, double sigma2, int user);
double sum_rate_fdp(const CMatrix& h, const FullyDigitalPrecoder& u, double sigma2);

/// Virtual channel A^H h (N_RF x N_U): column u is the channel user u sees
/// through the analog stage, usable wherever a physical channel is expected.
CMatrix effective_channel(const CMatrix& h, const AnalogPrecoder& a);

/// Non-negative eigenvalues of h^H h, descending; these are the non-zero
/// eigenvalues of h h^H.
std::vector<double> gram_eigenvalues(const CMatrix& h);

/// Exact waterfilling by active-set scan: mu solves rho = sum max(mu - 1/b_i, 0),
/// capacity = sum max(log2(mu b_i), 0).
WaterfillResult waterfill_capacity(const std::vector<double>& eigenvalues, double rho);

/// Capacity of the virtual channel A^H h at SNR rho (the analog-design objective).
double virtual_capacity(const CMatrix& h, const AnalogPrecoder& a, double rho);

}  // namespace hbf
