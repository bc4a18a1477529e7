// SPDX-License-Identifier: Apache-2.0
//
// Mini-batch training of the two network variants and the inference rule
// (argmax codeword plus normalized digital stage).
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "hbf/nn/losses.hpp"
#include "hbf/nn/network.hpp"
#include "hbf/nn/optim.hpp"

namespace hbf::nn {

/// Network inputs (K N_U x N) with the matching channels, used only by the loss.
struct TrainData {
  RMatrix inputs;
  std::vector<CMatrix> channels;

  std::size_t size() const { return channels.size(); }
  void validate() const;
  TrainData subset(std::span<const std::size_t> rows) const;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double lr = 0.0;
  double eval_sum_rate = std::numeric_limits<double>::quiet_NaN();
};

struct TrainConfig {
  int epochs = 30;
  int batch_size = 500;
  double lr = 1e-3;
  double weight_decay = 1e-6;
  double plateau_factor = 0.1;
  int plateau_patience = 3;
  bool shuffle = true;
  std::uint64_t seed = 1;
  AfpLossOptions afp;
  /// Optional held-out data whose mean predicted sum-rate is logged per epoch.
  const TrainData* eval = nullptr;
  std::function<void(const EpochLog&)> on_epoch;

  void validate() const;
};

struct TrainState {
  Network net;
  AdamState adam;
  PlateauState plateau;
  int epoch = 0;
  std::vector<EpochLog> history;
};

/// Trains from a freshly initialized network (init stream derived from cfg.seed).
TrainState train_network(const NetworkSpec& spec, const TrainData& data, const Codebook& cb,
                         double sigma2, const TrainConfig& cfg);
TrainState train_hbf_net(NetworkSpec spec, const TrainData& data, const Codebook& cb, double sigma2,
                         const TrainConfig& cfg);
TrainState train_afp_net(NetworkSpec spec, const TrainData& data, const Codebook& cb, double sigma2,
                         const TrainConfig& cfg);
/// Continues training an existing state for cfg.epochs more epochs.
void continue_training(TrainState& state, const TrainData& data, const Codebook& cb, double sigma2,
                       const TrainConfig& cfg);

struct Prediction {
  std::size_t index = 0;
  AnalogPrecoder a;
  DigitalPrecoder w;
};

/// Eval-mode forward; codeword = argmax p (lowest index on ties). The digital
/// stage is the regression output (hybrid variant) or A^+ U (fully-digital
/// variant), normalized so ||A w_u|| = 1.
std::vector<Prediction> predict_hbf(Network& net, const RMatrix& inputs, const Codebook& cb,
                                    const CodebookCache& cache);

/// Same regression output, codeword drawn uniformly at random.
std::vector<Prediction> predict_random_ap(Network& net, const RMatrix& inputs, const Codebook& cb,
                                          const CodebookCache& cache, Rng& rng);

/// Fully-digital output of the network (unit columns); fully-digital variant only.
std::vector<FullyDigitalPrecoder> predict_fdp(Network& net, const RMatrix& inputs);

std::vector<double> prediction_rates(const std::vector<Prediction>& preds,
                                     std::span<const CMatrix> channels, double sigma2);

void write_training_log(const std::filesystem::path& path, const std::vector<EpochLog>& history);

}  // namespace hbf::nn
