// SPDX-License-Identifier: Apache-2.0
#include "hbf/nn/network.hpp"

#include <sstream>

namespace hbf::nn {

namespace {

void check_finite(const RMatrix& m, const std::string& layer) {
  if (!m.allFinite()) throw NumericalError("non-finite gradient at layer " + layer);
}

}  // namespace

std::string to_string(Variant v) { return v == Variant::kHbfNet ? "hbf_net" : "afp_net"; }

Variant variant_from_string(const std::string& s) {
  if (s == "hbf_net") return Variant::kHbfNet;
  if (s == "afp_net") return Variant::kAfpNet;
  throw InvalidArgument("unknown network variant: " + s);
}

int NetworkSpec::regression_width() const { return 2 * n_u * regression_rows(); }

void NetworkSpec::validate() const {
  if (n_t < 1 || n_rf < 1 || n_u < 1 || k < 1) throw ShapeError("network dimensions must be positive");
  if (classes < 1) throw ShapeError("classifier head needs at least one codeword");
  if (trunk_widths.empty()) throw ShapeError("trunk needs at least one layer");
  for (int w : trunk_widths) {
    if (w < 1) throw ShapeError("trunk widths must be positive");
  }
  if (!(keep_prob > 0.0 && keep_prob <= 1.0)) throw InvalidArgument("keep probability must be in (0, 1]");
  if (!(bn_eps > 0.0)) throw InvalidArgument("batchnorm epsilon must be positive");
  if (use_conv && conv_channels < 1) throw ShapeError("convolution needs at least one channel");
}

std::string NetworkSpec::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << to_string(variant) << ";n_t=" << n_t << ";n_rf=" << n_rf << ";n_u=" << n_u << ";k=" << k
     << ";classes=" << classes << ";trunk=";
  for (int w : trunk_widths) os << w << ',';
  os << ";slope=" << leaky_slope << ";eps=" << bn_eps << ";momentum=" << bn_momentum
     << ";keep=" << keep_prob << ";conv=" << (use_conv ? conv_channels : 0);
  return os.str();
}

Network::Network(const NetworkSpec& spec, std::uint64_t init_seed) : spec_(spec) {
  spec.validate();
  Rng init = Rng::stream(init_seed, "nn.init");
  int width = spec.input_width();
  if (spec.use_conv) {
    conv_.emplace(spec.n_u, spec.conv_channels, spec.k, init);
    conv_act_.emplace(spec.leaky_slope);
    width = spec.conv_channels * spec.k;
  }
  for (int w : spec.trunk_widths) {
    fc_.emplace_back(width, w, init);
    bn_.emplace_back(w, spec.bn_eps, spec.bn_momentum);
    act_.emplace_back(spec.leaky_slope);
    drop_.emplace_back(spec.keep_prob);
    width = w;
  }
  cls_ = Linear(width, spec.classes, init);
  reg_ = Linear(width, spec.regression_width(), init);
}

HeadOutputs Network::forward(const RMatrix& x, bool train, Rng* dropout_rng) {
  if (x.rows() != spec_.input_width()) {
    throw ShapeError("network input width " + std::to_string(x.rows()) + " != K*N_U = " +
                     std::to_string(spec_.input_width()));
  }
  RMatrix z = x;
  if (conv_) z = conv_act_->forward(conv_->forward(z));
  for (std::size_t i = 0; i < fc_.size(); ++i) {
    z = drop_[i].forward(act_[i].forward(bn_[i].forward(fc_[i].forward(z), train)), train,
                         dropout_rng);
  }
  HeadOutputs out;
  out.logits = cls_.forward(z);
  out.p = softmax(out.logits);
  out.regression = reg_.forward(z);
  return out;
}

RMatrix Network::backward(const RMatrix& d_logits, const RMatrix& d_regression) {
  RMatrix g = cls_.backward(d_logits);
  check_finite(cls_.dw_, "classifier");
  g += reg_.backward(d_regression);
  check_finite(reg_.dw_, "regression");
  for (std::size_t ii = fc_.size(); ii-- > 0;) {
    const std::string name = "trunk." + std::to_string(ii);
    g = drop_[ii].backward(g);
    g = act_[ii].backward(g);
    g = bn_[ii].backward(g);
    check_finite(bn_[ii].dgamma_, name + ".bn");
    g = fc_[ii].backward(g);
    check_finite(fc_[ii].dw_, name + ".fc");
  }
  if (conv_) {
    g = conv_->backward(conv_act_->backward(g));
    check_finite(conv_->dw_, "conv");
  }
  return g;
}

void Network::zero_grad() {
  for (auto& p : params()) p.grad->setZero();
}

std::vector<ParamRef> Network::params() {
  std::vector<ParamRef> out;
  if (conv_) conv_->collect("conv", out);
  for (std::size_t i = 0; i < fc_.size(); ++i) {
    fc_[i].collect("trunk." + std::to_string(i) + ".fc", out);
    bn_[i].collect("trunk." + std::to_string(i) + ".bn", out);
  }
  cls_.collect("classifier", out);
  reg_.collect("regression", out);
  return out;
}

std::vector<RMatrix*> Network::buffers() {
  std::vector<RMatrix*> out;
  for (auto& bn : bn_) {
    out.push_back(&bn.running_mean_);
    out.push_back(&bn.running_var_);
  }
  return out;
}

void Network::set_running_updates(bool on) {
  for (auto& bn : bn_) bn.update_running_ = on;
}

CMatrix unpack_regression(const RMatrix& reg, Eigen::Index j, int rows, int cols) {
  const Eigen::Index n = static_cast<Eigen::Index>(rows) * cols;
  if (reg.rows() != 2 * n) throw ShapeError("regression output width mismatch");
  CMatrix m(rows, cols);
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) {
      const Eigen::Index i = static_cast<Eigen::Index>(c) * rows + r;
      m(r, c) = Complex(reg(i, j), reg(n + i, j));
    }
  }
  return m;
}

RVector pack_regression(const CMatrix& m) {
  const Eigen::Index n = m.size();
  RVector v(2 * n);
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      const Eigen::Index i = c * m.rows() + r;
      v(i) = m(r, c).real();
      v(n + i) = m(r, c).imag();
    }
  }
  return v;
}

std::size_t argmax_lowest(const Eigen::Ref<const RVector>& p) {
  std::size_t best = 0;
  for (Eigen::Index i = 1; i < p.size(); ++i) {
    if (p(i) > p(static_cast<Eigen::Index>(best))) best = static_cast<std::size_t>(i);
  }
  return best;
}

}  // namespace hbf::nn
