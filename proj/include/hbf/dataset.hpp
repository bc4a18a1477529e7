// SPDX-License-Identifier: Apache-2.0
//
// Core dataset (channels, codebook labels, hybrid and fully-digital
// solutions), DNN dataset (RSSI feedback plus channels), split, and the
// on-disk layout with a hash manifest.
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hbf/channel_gen.hpp"
#include "hbf/codebook_builder.hpp"
#include "hbf/config.hpp"
#include "hbf/ss_rssi.hpp"

namespace hbf {

struct CoreRecord {
  std::uint64_t id = 0;  // record index under the configured seed
  ChannelRealization channel;
  std::size_t ap_index = 0;  // codebook label after pruning
  DigitalPrecoder dp;        // digital stage for that codeword
  double codebook_rate = 0.0;
  double hsho_rate = 0.0;  // per-record GA solution before codebook snapping
  FullyDigitalPrecoder fdp;
  double fdp_rate = 0.0;
};

struct CoreDataset {
  std::vector<CoreRecord> records;
  Codebook codebook;
  SsBurst burst;
  InfoEstimate ss_info;
  std::size_t step1_size = 0;
  double pre_prune_average = 0.0;
  double post_prune_average = 0.0;
};

struct DnnRecord {
  std::uint64_t id = 0;
  RMatrix rssi;  // N_U x K, scaled (and quantized unless full precision)
  ChannelRealization channel;
};

struct DnnDataset {
  std::vector<DnnRecord> records;
  std::optional<int> n_b;
  std::size_t clamped = 0;  // RSSI values clipped by the calibration scale
};

struct SplitSpec {
  double train_fraction = 0.85;
  std::uint64_t seed = 1;
  void validate() const;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

using ProgressFn = std::function<void(const std::string&)>;

/// Burst design on a calibration sample, per-record HSHO, codebook build
/// (append, relabel, prune) and the fully-digital benchmark per record.
CoreDataset build_core_dataset(const ExperimentConfig& cfg, std::size_t n_core,
                               const ProgressFn& progress = {});

/// n records of fresh user sets with their RSSI under `burst` at system.n_b.
DnnDataset build_dnn_dataset(const ExperimentConfig& cfg, const SsBurst& burst, std::size_t n);

/// Seeded permutation split; round(fraction n) records train, the rest test.
SplitIndices split(std::size_t n, const SplitSpec& spec);

/// Network inputs (K N_U x N), user-major, from the stored RSSI.
RMatrix rssi_inputs(const DnnDataset& d, std::span<const std::size_t> rows);
/// Same layout with RSSI recomputed from the stored channels at another precision.
RMatrix rssi_inputs_at(const DnnDataset& d, std::span<const std::size_t> rows, const SsBurst& burst,
                       double sigma2, std::optional<int> n_b, std::size_t* clamped = nullptr);
std::vector<CMatrix> channels_of(const DnnDataset& d, std::span<const std::size_t> rows);

struct DatasetBundle {
  CoreDataset core;
  DnnDataset dnn;
  ExperimentConfig config;
  std::string config_hash;
};

/// Writes every artifact under `dir` and a manifest.json listing SHA-256
/// hashes, sizes and the resolved config snapshot.
void write_dataset(const std::filesystem::path& dir, const DatasetBundle& bundle);
/// Verifies the manifest hashes first; throws IntegrityError on any mismatch.
DatasetBundle read_dataset(const std::filesystem::path& dir);
void verify_manifest(const std::filesystem::path& dir);

void write_positions_csv(const std::filesystem::path& path, const std::vector<std::uint64_t>& ids,
                         const std::vector<ChannelRealization>& channels);
std::vector<std::pair<std::uint64_t, std::vector<UserPosition>>> read_positions_csv(
    const std::filesystem::path& path);

}  // namespace hbf
