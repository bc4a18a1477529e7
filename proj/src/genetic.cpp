// SPDX-License-Identifier: Apache-2.0
#include "hbf/genetic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "hbf/errors.hpp"

namespace hbf {

void GaParams::validate() const {
  if (population < 2) throw InvalidArgument("GA population must be >= 2");
  if (elites < 0 || elites >= population) throw InvalidArgument("GA needs 0 <= elites < population");
  if (!(crossover_fraction > 0.0 && crossover_fraction < 1.0)) {
    throw InvalidArgument("GA crossover fraction must lie in (0, 1)");
  }
  if (max_generations < 1) throw InvalidArgument("GA needs at least one generation");
  if (stall_generations < 1) throw InvalidArgument("GA stall limit must be >= 1");
}

GaParams GaParams::with_population(int population, int n_t) {
  GaParams p;
  p.population = population;
  p.elites = static_cast<int>(std::ceil(0.05 * population));
  p.crossover_fraction = 0.8;
  p.max_generations = std::max(200, 20 * n_t);
  p.stall_generations = 30;
  return p;
}

GaParams GaParams::defaults(int n_t, int n_rf) { return with_population(100 * n_t * n_rf, n_t); }

namespace {

std::string genome_string(std::span<const std::uint8_t> g) {
  std::string s;
  for (auto c : g) s.push_back(static_cast<char>('0' + c));
  return s;
}

double checked(const FitnessFn& f, std::span<const std::uint8_t> g) {
  double v = f(g);
  if (!std::isfinite(v)) {
    throw NumericalError("non-finite fitness for genome " + genome_string(g));
  }
  return v;
}

}  // namespace

GaResult ga_optimize(const FitnessFn& fitness, int genome_len, const GaParams& params, Rng& rng) {
  if (genome_len < 1) throw InvalidArgument("genome length must be >= 1");
  params.validate();
  const auto n_c = static_cast<std::size_t>(params.population);
  const auto len = static_cast<std::size_t>(genome_len);
  const auto n_elite = static_cast<std::size_t>(params.elites);
  const auto n_children =
      std::min(n_c - n_elite, static_cast<std::size_t>(std::lround(params.crossover_fraction * params.population)));
  const double mutation_rate = 1.0 / static_cast<double>(genome_len);

  std::vector<Genome> pop(n_c, Genome(len));
  std::vector<double> fit(n_c);
  for (std::size_t i = 0; i < n_c; ++i) {
    for (auto& s : pop[i]) s = static_cast<std::uint8_t>(rng.uniform_int(0, 3));
    fit[i] = checked(fitness, pop[i]);
  }

  GaResult res;
  auto record = [&](int gen) {
    std::size_t arg = static_cast<std::size_t>(std::max_element(fit.begin(), fit.end()) - fit.begin());
    if (res.history.empty() || fit[arg] > res.best_fitness) {
      res.best_fitness = fit[arg];
      res.best = pop[arg];
    }
    double mean = std::accumulate(fit.begin(), fit.end(), 0.0) / static_cast<double>(n_c);
    res.history.push_back({gen, res.best_fitness, mean});
  };
  record(0);

  auto tournament = [&]() -> std::size_t {
    auto a = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n_c) - 1));
    auto b = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n_c) - 1));
    if (fit[a] != fit[b]) return fit[a] > fit[b] ? a : b;
    return std::min(a, b);
  };

  std::vector<std::size_t> order(n_c);
  std::vector<Genome> next(n_c, Genome(len));
  std::vector<double> next_fit(n_c);
  int stall = 0;
  for (int gen = 1; gen <= params.max_generations; ++gen) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fit[a] > fit[b]; });

    std::size_t k = 0;
    for (; k < n_elite; ++k) {
      next[k] = pop[order[k]];
      next_fit[k] = fit[order[k]];
    }
    for (std::size_t c = 0; c < n_children; ++c, ++k) {
      const Genome& p1 = pop[tournament()];
      const Genome& p2 = pop[tournament()];
      for (std::size_t i = 0; i < len; ++i) next[k][i] = rng.uniform() < 0.5 ? p1[i] : p2[i];
    }
    for (; k < n_c; ++k) {
      next[k] = pop[tournament()];
      for (auto& s : next[k]) {
        if (rng.uniform() < mutation_rate) {
          s = static_cast<std::uint8_t>((s + rng.uniform_int(1, 3)) % 4);
        }
      }
    }
    for (std::size_t i = n_elite; i < n_c; ++i) next_fit[i] = checked(fitness, next[i]);
    std::swap(pop, next);
    std::swap(fit, next_fit);

    double before = res.best_fitness;
    record(gen);
    stall = res.best_fitness > before ? 0 : stall + 1;
    if (stall >= params.stall_generations) break;
  }
  return res;
}

void write_ga_history_csv(const std::filesystem::path& path, const std::vector<GaGeneration>& history) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << "generation,best,mean\n";
  out.precision(17);
  for (const auto& g : history) out << g.generation << ',' << g.best << ',' << g.mean << '\n';
}

}  // namespace hbf
