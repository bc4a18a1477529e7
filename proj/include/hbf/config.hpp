// SPDX-License-Identifier: Apache-2.0
//
// YAML experiment configuration. Only system.n_t, system.n_rf, system.n_u and
// system.k_ss are required; every other key falls back to a built-in default.
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hbf/channel_gen.hpp"
#include "hbf/codebook_builder.hpp"
#include "hbf/genetic.hpp"
#include "hbf/model_core.hpp"
#include "hbf/nn/network.hpp"
#include "hbf/nn/trainer.hpp"

namespace hbf {

/// Optional overrides on top of GaParams::with_population / defaults.
struct GaOverrides {
  std::optional<int> population;
  std::optional<int> elites;
  std::optional<double> crossover_fraction;
  std::optional<int> max_generations;
  std::optional<int> stall_generations;

  /// `chains` is N_RF for precoder design and K for burst design.
  GaParams resolve(int n_t, int chains) const;
};

struct DatasetConfig {
  std::size_t n_core = 500;
  std::size_t n_dnn = 20000;
  double train_fraction = 0.85;
  std::size_t calibration_samples = 10000;
  /// Quantization used inside the burst-design objective; empty means the
  /// deployment system.n_b.
  std::optional<int> ss_design_n_b;
  bool ss_design_full = false;  // true when ss_design_n_b was set to "full"
};

struct EvalConfig {
  std::vector<std::string> methods{"afp_net", "hbf_net", "hsho", "fdp", "zf", "pzf", "omp", "random_ap"};
  int csi_bits = 4;
  /// 0 evaluates HSHO on the whole test split; otherwise on its first entries.
  std::size_t hsho_limit = 0;
};

struct SweepConfig {
  std::string variable;  // noise_power, k_ss, n_b, n_u, n_t
  std::vector<std::string> values;
  std::vector<std::string> methods;
};

struct ExperimentConfig {
  SystemConfig system;
  std::string area = "extended";
  double antenna_spacing = 0.5;
  GaOverrides hsho_ga;
  GaOverrides ss_ga;
  CodebookBuildParams codebook;
  nn::NetworkSpec network;  // dimensions are filled from `system` at use
  nn::TrainConfig training;
  DatasetConfig dataset;
  EvalConfig eval;
  SweepConfig sweep;

  ScenarioArea scenario() const { return ScenarioArea::by_name(area); }
  ArrayGeometry geometry() const { return ArrayGeometry::for_antennas(system.n_t, antenna_spacing); }
  /// Network spec with dimensions synchronized to the system and codebook size.
  nn::NetworkSpec network_spec(nn::Variant v, std::size_t codebook_size) const;
  void validate() const;
};

/// Throws ConfigError naming the offending key (and line when known).
ExperimentConfig parse_config(const std::string& yaml_text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Canonical YAML of every resolved value (used for snapshots and hashes).
std::string dump_config(const ExperimentConfig& cfg);

/// "full" -> nullopt, otherwise a positive integer.
std::optional<int> parse_bits(const std::string& text);
std::string bits_to_string(std::optional<int> n_b);

}  // namespace hbf
