// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <limits>
#include <vector>

#include "hbf/nn/layers.hpp"

namespace hbf::nn {

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-6;  // decoupled; only on parameters flagged `decay`
  long step = 0;
  std::vector<RMatrix> m;
  std::vector<RMatrix> v;
};

/// One Adam update of every parameter from its accumulated gradient.
void adam_step(AdamState& state, const std::vector<ParamRef>& params);

struct PlateauState {
  double factor = 0.1;
  int patience = 3;
  double threshold = 1e-4;  // relative improvement required
  double min_lr = 0.0;
  double best = std::numeric_limits<double>::infinity();
  int bad_epochs = 0;
  int reductions = 0;
};

/// Records an epoch loss; after `patience` consecutive epochs without
/// improvement (loss < best - threshold |best|) multiplies the learning rate by
/// `factor`. Returns true when the rate was reduced.
bool plateau_step(PlateauState& plateau, AdamState& adam, double epoch_loss);

}  // namespace hbf::nn
