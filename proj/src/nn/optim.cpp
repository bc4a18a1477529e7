// SPDX-License-Identifier: Apache-2.0
#include "hbf/nn/optim.hpp"

#include <algorithm>
#include <cmath>

namespace hbf::nn {

void adam_step(AdamState& s, const std::vector<ParamRef>& params) {
  if (s.m.empty()) {
    for (const auto& p : params) {
      s.m.push_back(RMatrix::Zero(p.value->rows(), p.value->cols()));
      s.v.push_back(RMatrix::Zero(p.value->rows(), p.value->cols()));
    }
  }
  if (s.m.size() != params.size()) throw ShapeError("optimizer state does not match the parameters");
  ++s.step;
  const double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
  const double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const RMatrix& g = *params[i].grad;
    RMatrix& w = *params[i].value;
    if (g.rows() != s.m[i].rows() || g.cols() != s.m[i].cols()) {
      throw ShapeError("gradient shape differs from optimizer state for " + params[i].name);
    }
    s.m[i] = s.beta1 * s.m[i] + (1.0 - s.beta1) * g;
    s.v[i] = s.beta2 * s.v[i] + (1.0 - s.beta2) * g.cwiseAbs2();
    if (params[i].decay && s.weight_decay != 0.0) w *= 1.0 - s.lr * s.weight_decay;
    w.array() -= s.lr * (s.m[i].array() / bc1) / ((s.v[i].array() / bc2).sqrt() + s.eps);
  }
}

bool plateau_step(PlateauState& p, AdamState& adam, double epoch_loss) {
  if (epoch_loss < p.best - p.threshold * std::abs(p.best) || !std::isfinite(p.best)) {
    p.best = epoch_loss;
    p.bad_epochs = 0;
    return false;
  }
  if (++p.bad_epochs >= p.patience) {
    adam.lr = std::max(adam.lr * p.factor, p.min_lr);
    p.bad_epochs = 0;
    ++p.reductions;
    return true;
  }
  return false;
}

}  // namespace hbf::nn
