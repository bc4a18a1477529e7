// SPDX-License-Identifier: Apache-2.0
//
// Multi-task network: shared trunk (optional convolution, then fully
// connected + batchnorm + leaky ReLU + dropout blocks) feeding an
// analog-precoder classifier head and a precoder regression head.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hbf/nn/layers.hpp"

namespace hbf::nn {

enum class Variant { kHbfNet, kAfpNet };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

struct NetworkSpec {
  Variant variant = Variant::kAfpNet;
  int n_t = 16;
  int n_rf = 4;
  int n_u = 2;
  int k = 8;
  int classes = 1;  // codebook size L
  std::vector<int> trunk_widths{512, 512};
  double leaky_slope = 0.01;
  double bn_eps = 1e-5;
  double bn_momentum = 0.1;
  double keep_prob = 0.95;
  bool use_conv = false;
  int conv_channels = 8;

  int input_width() const { return k * n_u; }
  /// 2 N_U N_RF for the hybrid variant, 2 N_U N_T for the fully-digital one.
  int regression_width() const;
  /// Rows of the complex matrix carried by the regression head.
  int regression_rows() const { return variant == Variant::kHbfNet ? n_rf : n_t; }
  void validate() const;
  /// Stable text form; its hash tags checkpoints.
  std::string describe() const;
};

struct HeadOutputs {
  RMatrix logits;      // L x B
  RMatrix p;           // softmax(logits)
  RMatrix regression;  // regression_width x B: real parts, then imaginary parts
};

class Network {
 public:
  Network() = default;
  Network(const NetworkSpec& spec, std::uint64_t init_seed);

  /// Inputs are (K N_U) x B, user-major: [user 0 bursts 0..K-1, user 1 ...].
  HeadOutputs forward(const RMatrix& x, bool train, Rng* dropout_rng = nullptr);
  /// Accumulates parameter gradients and returns d(loss)/d(input).
  /// Throws NumericalError naming the first layer whose gradient is not finite.
  RMatrix backward(const RMatrix& d_logits, const RMatrix& d_regression);

  void zero_grad();
  std::vector<ParamRef> params();
  /// Batchnorm running estimates, in a fixed order.
  std::vector<RMatrix*> buffers();
  const NetworkSpec& spec() const { return spec_; }
  /// Freezes or resumes running-statistic updates in every batchnorm layer.
  void set_running_updates(bool on);

 private:
  NetworkSpec spec_;
  std::optional<Conv1d> conv_;
  std::optional<LeakyRelu> conv_act_;
  std::vector<Linear> fc_;
  std::vector<BatchNorm1d> bn_;
  std::vector<LeakyRelu> act_;
  std::vector<Dropout> drop_;
  Linear cls_;
  Linear reg_;
};

/// Complex matrix (rows x cols) packed in column j of a regression output.
CMatrix unpack_regression(const RMatrix& reg, Eigen::Index j, int rows, int cols);
/// Inverse of unpack_regression, for a single column.
RVector pack_regression(const CMatrix& m);

/// argmax of a probability column; ties go to the lowest index.
std::size_t argmax_lowest(const Eigen::Ref<const RVector>& p);

}  // namespace hbf::nn
