// SPDX-License-Identifier: Apache-2.0
//
// Elitist genetic algorithm over quaternary genomes (symbols 0..3).
#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "hbf/rng.hpp"

namespace hbf {

struct GaParams {
  int population = 100;           // N_c
  int elites = 5;                 // Psi
  double crossover_fraction = 0.8;  // zeta
  int max_generations = 200;
  int stall_generations = 30;

  void validate() const;
  /// N_c = 100 N_T N_RF, Psi = ceil(0.05 N_c), zeta = 0.8,
  /// max(200, 20 N_T) generations, 30 stall generations.
  static GaParams defaults(int n_t, int n_rf);
  /// Same ratios as defaults() for an explicit population size.
  static GaParams with_population(int population, int n_t);
};

using Genome = std::vector<std::uint8_t>;
using FitnessFn = std::function<double(std::span<const std::uint8_t>)>;

struct GaGeneration {
  int generation = 0;
  double best = 0.0;
  double mean = 0.0;
};

struct GaResult {
  Genome best;
  double best_fitness = 0.0;
  std::vector<GaGeneration> history;  // generation 0 is the random initial population
};

/// Each generation keeps the Psi elites, adds round(zeta N_c) uniform-crossover
/// children of size-2 tournament winners, and fills the rest with mutated
/// tournament winners (per-symbol rate 1/genome_len, replaced by one of the
/// other three symbols). Stops after max_generations or stall_generations
/// without strict improvement. Fitness must be deterministic.
GaResult ga_optimize(const FitnessFn& fitness, int genome_len, const GaParams& params, Rng& rng);

void write_ga_history_csv(const std::filesystem::path& path, const std::vector<GaGeneration>& history);

}  // namespace hbf
