// SPDX-License-Identifier: Apache-2.0
#include "hbf/nn/layers.hpp"

#include <cmath>

namespace hbf::nn {

namespace {

RMatrix uniform_init(int rows, int cols, double bound, Rng& rng) {
  RMatrix m(rows, cols);
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.uniform(-bound, bound);
  }
  return m;
}

}  // namespace

Linear::Linear(int in, int out, Rng& init) {
  if (in < 1 || out < 1) throw ShapeError("linear layer needs positive widths");
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  w_ = uniform_init(out, in, bound, init);
  b_ = uniform_init(out, 1, bound, init);
  dw_ = RMatrix::Zero(out, in);
  db_ = RMatrix::Zero(out, 1);
}

RMatrix Linear::forward(const RMatrix& x) {
  if (x.rows() != w_.cols()) throw ShapeError("linear layer input width mismatch");
  x_ = x;
  RMatrix y = w_ * x;
  y.colwise() += b_.col(0);
  return y;
}

RMatrix Linear::backward(const RMatrix& dy) {
  dw_.noalias() += dy * x_.transpose();
  db_ += dy.rowwise().sum();
  return w_.transpose() * dy;
}

void Linear::collect(const std::string& prefix, std::vector<ParamRef>& out) {
  out.push_back({prefix + ".weight", &w_, &dw_, true});
  out.push_back({prefix + ".bias", &b_, &db_, false});
}

BatchNorm1d::BatchNorm1d(int features, double eps, double momentum)
    : gamma_(RMatrix::Ones(features, 1)),
      beta_(RMatrix::Zero(features, 1)),
      dgamma_(RMatrix::Zero(features, 1)),
      dbeta_(RMatrix::Zero(features, 1)),
      running_mean_(RMatrix::Zero(features, 1)),
      running_var_(RMatrix::Ones(features, 1)),
      eps_(eps),
      momentum_(momentum) {}

RMatrix BatchNorm1d::forward(const RMatrix& x, bool train) {
  if (x.rows() != gamma_.rows()) throw ShapeError("batchnorm input width mismatch");
  train_ = train;
  const auto n = static_cast<double>(x.cols());
  RVector mean;
  RVector var;
  if (train) {
    if (x.cols() < 2) throw ShapeError("batchnorm in train mode needs a batch of at least 2");
    mean = x.rowwise().mean();
    var = (x.colwise() - mean).array().square().rowwise().sum() / n;
    if (update_running_) {
      running_mean_.col(0) = (1.0 - momentum_) * running_mean_.col(0) + momentum_ * mean;
      running_var_.col(0) =
          (1.0 - momentum_) * running_var_.col(0) + momentum_ * var * (n / (n - 1.0));
    }
  } else {
    mean = running_mean_.col(0);
    var = running_var_.col(0);
  }
  inv_std_ = (var.array() + eps_).rsqrt();
  xhat_ = (x.colwise() - mean).array().colwise() * inv_std_.array();
  RMatrix y = xhat_.array().colwise() * gamma_.col(0).array();
  y.colwise() += beta_.col(0);
  return y;
}

RMatrix BatchNorm1d::backward(const RMatrix& dy) {
  dgamma_.col(0) += (dy.array() * xhat_.array()).rowwise().sum().matrix();
  dbeta_.col(0) += dy.rowwise().sum();
  const RVector scale = gamma_.col(0).array() * inv_std_.array();
  if (!train_) return dy.array().colwise() * scale.array();
  const auto n = static_cast<double>(dy.cols());
  const RVector sum_dy = dy.rowwise().sum();
  const RVector sum_dy_xhat = (dy.array() * xhat_.array()).rowwise().sum();
  RMatrix dx = (dy * n).colwise() - sum_dy;
  dx.array() -= xhat_.array().colwise() * sum_dy_xhat.array();
  dx.array().colwise() *= scale.array() / n;
  return dx;
}

void BatchNorm1d::collect(const std::string& prefix, std::vector<ParamRef>& out) {
  out.push_back({prefix + ".gamma", &gamma_, &dgamma_, false});
  out.push_back({prefix + ".beta", &beta_, &dbeta_, false});
}

RMatrix LeakyRelu::forward(const RMatrix& x) {
  x_ = x;
  return x.unaryExpr([s = slope_](double v) { return v > 0.0 ? v : s * v; });
}

RMatrix LeakyRelu::backward(const RMatrix& dy) const {
  return dy.binaryExpr(x_, [s = slope_](double g, double v) { return v > 0.0 ? g : s * g; });
}

RMatrix Dropout::forward(const RMatrix& x, bool train, Rng* rng) {
  active_ = train && keep_ < 1.0;
  if (!active_) return x;
  if (!rng) throw InvalidArgument("train-mode dropout needs a random stream");
  mask_.resize(x.rows(), x.cols());
  const double scale = 1.0 / keep_;
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) mask_(i, j) = rng->uniform() < keep_ ? scale : 0.0;
  }
  return x.cwiseProduct(mask_);
}

RMatrix Dropout::backward(const RMatrix& dy) const {
  if (!active_) return dy;
  return dy.cwiseProduct(mask_);
}

Conv1d::Conv1d(int in_channels, int out_channels, int length, Rng& init)
    : in_ch_(in_channels), out_ch_(out_channels), len_(length) {
  if (in_channels < 1 || out_channels < 1 || length < 1) {
    throw ShapeError("convolution needs positive channels and length");
  }
  const double bound = 1.0 / std::sqrt(static_cast<double>(in_channels * kKernel));
  w_ = uniform_init(out_channels, in_channels * kKernel, bound, init);
  b_ = uniform_init(out_channels, 1, bound, init);
  dw_ = RMatrix::Zero(w_.rows(), w_.cols());
  db_ = RMatrix::Zero(out_channels, 1);
}

RMatrix Conv1d::forward(const RMatrix& x) {
  if (x.rows() != static_cast<Eigen::Index>(in_ch_) * len_) {
    throw ShapeError("convolution input width mismatch");
  }
  x_ = x;
  RMatrix y(static_cast<Eigen::Index>(out_ch_) * len_, x.cols());
  for (int co = 0; co < out_ch_; ++co) {
    for (int k = 0; k < len_; ++k) {
      auto row = y.row(static_cast<Eigen::Index>(co) * len_ + k);
      row.setConstant(b_(co, 0));
      for (int ci = 0; ci < in_ch_; ++ci) {
        for (int t = 0; t < kKernel; ++t) {
          const int src = k + t - 1;
          if (src < 0 || src >= len_) continue;
          row += w_(co, ci * kKernel + t) * x.row(static_cast<Eigen::Index>(ci) * len_ + src);
        }
      }
    }
  }
  return y;
}

RMatrix Conv1d::backward(const RMatrix& dy) {
  RMatrix dx = RMatrix::Zero(x_.rows(), x_.cols());
  for (int co = 0; co < out_ch_; ++co) {
    for (int k = 0; k < len_; ++k) {
      const auto g = dy.row(static_cast<Eigen::Index>(co) * len_ + k);
      db_(co, 0) += g.sum();
      for (int ci = 0; ci < in_ch_; ++ci) {
        for (int t = 0; t < kKernel; ++t) {
          const int src = k + t - 1;
          if (src < 0 || src >= len_) continue;
          const Eigen::Index xr = static_cast<Eigen::Index>(ci) * len_ + src;
          dw_(co, ci * kKernel + t) += g.dot(x_.row(xr));
          dx.row(xr) += w_(co, ci * kKernel + t) * g;
        }
      }
    }
  }
  return dx;
}

void Conv1d::collect(const std::string& prefix, std::vector<ParamRef>& out) {
  out.push_back({prefix + ".weight", &w_, &dw_, true});
  out.push_back({prefix + ".bias", &b_, &db_, false});
}

RMatrix softmax(const RMatrix& logits) {
  RMatrix p(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    const double m = logits.col(j).maxCoeff();
    p.col(j) = (logits.col(j).array() - m).exp();
    p.col(j) /= p.col(j).sum();
  }
  return p;
}

}  // namespace hbf::nn
