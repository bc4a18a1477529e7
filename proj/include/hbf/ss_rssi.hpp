// SPDX-License-Identifier: Apache-2.0
//
// Synchronization-signal bursts, RSSI measurement and linear quantization,
// plug-in entropy / mutual-information estimates, and GA burst design.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "hbf/channel_gen.hpp"
#include "hbf/genetic.hpp"
#include "hbf/model_core.hpp"

namespace hbf {

/// K analog beams (N_T x 1 each) stored as an N_T x K code matrix.
struct SsBurst {
  AnalogPrecoder beams;  // column k is A_SS^(k)
  double beta = 1.0;     // RSSI scaling factor recorded with the design
  std::uint64_t calibration_hash = 0;

  int k() const { return beams.n_rf(); }
  int n_t() const { return beams.n_t(); }
};

struct RssiVector {
  std::vector<double> values;
  double beta = 1.0;
  std::optional<int> n_b;  // empty: full precision
};

struct InfoEstimate {
  double entropy_position_bits = 0.0;
  double entropy_rssi_bits = 0.0;
  double joint_entropy_bits = 0.0;
  double mutual_information_bits = 0.0;
  std::size_t position_support = 0;
  std::size_t rssi_support = 0;
  std::size_t joint_support = 0;
};

/// alpha_k = |h_u^H a_k|^2 + sigma2 (unscaled, beta = 1).
RssiVector measure_rssi(const CVector& h_u, const SsBurst& ss, double sigma2);

/// round(v (2^N_b - 1)) / (2^N_b - 1), halves away from zero. Values outside
/// [0, 1] throw InvalidArgument.
RssiVector quantize_rssi(const RssiVector& scaled, int n_b);

/// beta = max over the sample.
double scale_factor(std::span<const double> rssi_values);

/// Divides by beta and clamps to [0, 1]; each clamped value increments *clamped.
RssiVector scale_rssi(const RssiVector& raw, double beta, std::size_t* clamped = nullptr);

/// Scale then quantize (pass-through when n_b is empty).
RssiVector rssi_feedback(const CVector& h_u, const SsBurst& ss, double sigma2,
                         std::optional<int> n_b, std::size_t* clamped = nullptr);

/// Plug-in entropy -sum p log2 p over observed tuple frequencies.
double empirical_entropy(std::span<const std::vector<std::int64_t>> samples);

/// Weighted single-user calibration sample: distinct positions with their
/// multiplicity in the drawn sample and their channel columns.
struct CalibrationSample {
  std::vector<UserPosition> positions;
  std::vector<std::size_t> counts;
  CMatrix channels;  // N_T x (distinct positions)
  std::size_t total = 0;

  std::uint64_t hash() const;
};

/// Draws `n` single-user records uniformly over the area's positions.
CalibrationSample draw_calibration_sample(const SystemConfig& cfg, const ScenarioArea& area,
                                          const ArrayGeometry& geom, std::size_t n, Rng& rng);

/// Discrete labels of a quantized (or full-precision) RSSI vector.
std::vector<std::int64_t> rssi_symbols(const RssiVector& r);

/// I = H(pos) + H(rssi) - H(pos, rssi) over the sample, with beta taken as the
/// sample maximum (recomputed per burst).
InfoEstimate mutual_information_position_rssi(const SsBurst& ss, const CalibrationSample& sample,
                                              double sigma2, std::optional<int> n_b);

/// Evaluated against an externally fixed beta (held-out evaluation).
InfoEstimate mutual_information_position_rssi(const SsBurst& ss, const CalibrationSample& sample,
                                              double sigma2, std::optional<int> n_b, double beta);

struct SsDesignResult {
  SsBurst burst;
  InfoEstimate info;
  std::vector<GaGeneration> history;
};

/// GA over K N_T quaternary symbols maximizing the position/RSSI mutual
/// information on a fixed calibration sample.
SsDesignResult design_ss_bursts(const SystemConfig& cfg, const CalibrationSample& sample,
                                const GaParams& ga, std::optional<int> design_n_b, Rng& rng);

/// Burst with uniformly random codes.
SsBurst random_burst(int n_t, int k, Rng& rng);

/// CSV: header "# beta=<v>,calibration_hash=<hex>,k=<K>,n_t=<N_T>", then K rows of N_T codes.
void save_burst_csv(const std::filesystem::path& path, const SsBurst& ss);
SsBurst load_burst_csv(const std::filesystem::path& path);

}  // namespace hbf
