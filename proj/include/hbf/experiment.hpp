// SPDX-License-Identifier: Apache-2.0
//
// Command implementations behind the hbfkit CLI: artifact generation,
// training, evaluation against baselines, parameter sweeps and the selftest.
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hbf/config.hpp"
#include "hbf/dataset.hpp"
#include "hbf/nn/trainer.hpp"

namespace hbf {

/// Methods that need full CSI at the transmitter.
bool is_csi_method(const std::string& method);
bool is_known_method(const std::string& method);

/// K * N_U * N_b; full precision counts 32 bits per value.
std::uint64_t rssi_feedback_bits(int k, int n_u, std::optional<int> n_b);
/// N_T * N_U * 2 * bits (real and imaginary part per entry).
std::uint64_t csi_feedback_bits(int n_t, int n_u, int bits);

struct MethodResult {
  std::string method;
  double mean = 0.0;
  double std = 0.0;
  std::size_t n = 0;
  std::uint64_t feedback_bits = 0;
};

/// Header: method,mean,std,n,feedback_bits
void write_results_csv(const std::filesystem::path& path, const std::vector<MethodResult>& rows);

struct GenSummary {
  std::size_t n_core = 0;
  std::size_t n_dnn = 0;
  std::size_t codebook_size = 0;
  double mutual_information_bits = 0.0;
};

/// Builds both datasets under `out`. Refuses a non-empty directory unless `force`.
GenSummary cmd_gen(const ExperimentConfig& cfg, const std::filesystem::path& out, bool force,
                   std::ostream& log);

struct TrainRequest {
  nn::Variant variant = nn::Variant::kAfpNet;
  std::optional<int> epochs;
  bool deterministic = true;
};

struct TrainOutcome {
  std::filesystem::path checkpoint;
  std::filesystem::path log_csv;
  double test_sum_rate = 0.0;
  std::vector<nn::EpochLog> history;
};

std::filesystem::path checkpoint_path(const std::filesystem::path& data_dir, nn::Variant v);

/// Trains on the train split of the dataset under `data_dir`; writes
/// models/<variant>.ckpt, models/<variant>_log.csv and a sidecar recording the
/// dataset config hash.
TrainOutcome cmd_train(const std::filesystem::path& data_dir, const TrainRequest& req,
                       std::ostream& log);

struct EvalRequest {
  std::vector<std::string> methods;
  /// RSSI precision for the network inputs; empty keeps the stored RSSI.
  std::optional<std::optional<int>> n_b;
  std::optional<std::filesystem::path> results_csv;
};

/// Per-method mean and std of the sum-rate over the test split. Network
/// methods need a checkpoint trained on this dataset (DependencyError if
/// missing, IntegrityError if trained on another config).
std::vector<MethodResult> cmd_eval(const std::filesystem::path& data_dir, const EvalRequest& req,
                                   std::ostream& log);

struct SweepRow {
  std::string sweep_value;
  MethodResult result;
};

/// One evaluation per sweep value in `cfg.sweep`, each in its own
/// subdirectory; n_b points reuse one trained model with requantized inputs.
/// Writes sweep.csv (sweep_value,method,mean,std,n) and sweep.gp.
std::vector<SweepRow> cmd_sweep(const ExperimentConfig& cfg, const std::filesystem::path& out,
                                int jobs, bool force, std::ostream& log);

/// Fast invariant checks; returns the number of failures.
int run_selftest(std::ostream& log);

}  // namespace hbf
