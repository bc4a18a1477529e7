// SPDX-License-Identifier: Apache-2.0
//
// Layers of the feed-forward network. Activations are feature x batch
// matrices (one sample per column). Each layer caches what its backward pass
// needs during forward; backward accumulates parameter gradients.
#pragma once

#include <string>
#include <vector>

#include "hbf/model_core.hpp"
#include "hbf/rng.hpp"

namespace hbf::nn {

struct ParamRef {
  std::string name;
  RMatrix* value = nullptr;
  RMatrix* grad = nullptr;
  bool decay = false;  // weight decay applies to weights only
};

class Linear {
 public:
  Linear() = default;
  Linear(int in, int out, Rng& init);

  RMatrix forward(const RMatrix& x);
  RMatrix backward(const RMatrix& dy);
  void collect(const std::string& prefix, std::vector<ParamRef>& out);

  int in() const { return static_cast<int>(w_.cols()); }
  int out() const { return static_cast<int>(w_.rows()); }

  RMatrix w_, b_, dw_, db_;

 private:
  RMatrix x_;
};

class BatchNorm1d {
 public:
  BatchNorm1d() = default;
  BatchNorm1d(int features, double eps, double momentum);

  /// Train mode normalizes by batch statistics and updates the running
  /// estimates (unbiased variance); eval mode uses the running estimates.
  RMatrix forward(const RMatrix& x, bool train);
  RMatrix backward(const RMatrix& dy);
  void collect(const std::string& prefix, std::vector<ParamRef>& out);

  RMatrix gamma_, beta_, dgamma_, dbeta_;
  RMatrix running_mean_, running_var_;
  double eps_ = 1e-5;
  double momentum_ = 0.1;
  /// When false, train-mode forward leaves the running estimates untouched.
  bool update_running_ = true;

 private:
  bool train_ = false;
  RMatrix xhat_;
  RVector inv_std_;
};

class LeakyRelu {
 public:
  explicit LeakyRelu(double slope = 0.01) : slope_(slope) {}
  RMatrix forward(const RMatrix& x);
  /// Slope at exactly 0 is the negative-side slope.
  RMatrix backward(const RMatrix& dy) const;
  double slope() const { return slope_; }

 private:
  double slope_;
  RMatrix x_;
};

class Dropout {
 public:
  explicit Dropout(double keep = 0.95) : keep_(keep) {}
  /// Inverted dropout: kept units are scaled by 1/keep. Identity in eval mode.
  RMatrix forward(const RMatrix& x, bool train, Rng* rng);
  RMatrix backward(const RMatrix& dy) const;
  double keep() const { return keep_; }

 private:
  double keep_;
  bool active_ = false;
  RMatrix mask_;
};

/// 1-D convolution over a (channels x length) input flattened channel-major,
/// kernel 3, zero padding 1, output flattened the same way.
class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(int in_channels, int out_channels, int length, Rng& init);

  RMatrix forward(const RMatrix& x);
  RMatrix backward(const RMatrix& dy);
  void collect(const std::string& prefix, std::vector<ParamRef>& out);

  int in_channels() const { return in_ch_; }
  int out_channels() const { return out_ch_; }
  int length() const { return len_; }

  static constexpr int kKernel = 3;
  RMatrix w_, b_, dw_, db_;  // w_: out x (in * kernel), b_: out x 1

 private:
  int in_ch_ = 0;
  int out_ch_ = 0;
  int len_ = 0;
  RMatrix x_;
};

/// Column-wise softmax (numerically shifted).
RMatrix softmax(const RMatrix& logits);

}  // namespace hbf::nn
