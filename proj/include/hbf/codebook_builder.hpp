// SPDX-License-Identifier: Apache-2.0
//
// Analog codebook construction over a core set of channels: threshold append
// during per-record HSHO design, argmax relabeling, and least-used pruning down
// to a sum-rate retention floor.
#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "hbf/genetic.hpp"
#include "hbf/hbf_design.hpp"
#include "hbf/model_core.hpp"
#include "hbf/rng.hpp"

namespace hbf {

struct CodebookBuildParams {
  double xi = 1.005;         // append threshold
  std::size_t cap = 1000;    // maximum codebook size
  double retention = 0.995;  // pruning floor relative to the pre-pruning average

  void validate() const;
};

/// Per-record labels plus a (record, codeword) cache of the digital stage and
/// its sum-rate. Row r of `rates`/`dps` may be shorter than the codebook until
/// fill_cache() runs.
struct LabeledCore {
  std::vector<std::size_t> labels;
  std::vector<std::vector<double>> rates;
  std::vector<std::vector<DigitalPrecoder>> dps;

  std::size_t records() const { return labels.size(); }
  double rate(std::size_t record) const { return rates[record][labels[record]]; }
  double average_rate() const;
  /// Members per codeword for a codebook of size `l`.
  std::vector<std::size_t> usage(std::size_t l) const;
  /// True when every label is a (lowest-index) argmax of its cached row.
  bool argmax_consistent() const;
};

/// Computes the missing cache entries for every record against every codeword.
void fill_cache(const Codebook& cb, const std::vector<CMatrix>& channels, double sigma2,
                LabeledCore& core);

struct Step1Result {
  Codebook codebook;
  LabeledCore labeled;
  std::vector<bool> appended;  // per record: did its HSHO solution enter the codebook
  std::vector<double> hsho_rates;
};

/// Runs hsho_design per record in order. Its analog precoder is appended when
/// the codebook has room and R_hsho > xi * max_l R(A_l, W_l(n)) (max over an
/// empty codebook is 0); otherwise the record takes the best existing codeword.
/// Record n uses the GA stream derived from (seed, n). On return the cache is full.
Step1Result build_codebook_step1(const std::vector<CMatrix>& channels, double sigma2, int n_rf,
                                 const GaParams& ga, const CodebookBuildParams& params,
                                 std::uint64_t seed);

/// Assigns each record its argmax codeword (lowest index on ties), filling the
/// cache where needed.
LabeledCore reassign_labels(const Codebook& cb, const std::vector<CMatrix>& channels, double sigma2,
                            LabeledCore cache = {});

struct PruneResult {
  Codebook codebook;
  LabeledCore labeled;
  double initial_average = 0.0;
  double final_average = 0.0;
  std::vector<std::size_t> removed;  // original indices, in removal order
};

/// Repeatedly removes the least-used codeword (lowest index on ties) and remaps
/// its members to their best remaining codeword, as long as the resulting
/// average stays >= retention * initial. Labels are argmax-consistent on entry.
PruneResult prune_codebook(const Codebook& cb, const LabeledCore& labeled,
                           const CodebookBuildParams& params);

struct CodebookFile {
  Codebook codebook;
  CodebookBuildParams params;
  std::string core_hash;
};

/// Binary layout (little-endian): magic "HBFC", version, L, N_T, N_RF, xi, cap,
/// retention, core-hash length + bytes, then per codeword its column-major
/// 2-bit codes packed four per byte (first code in the low bits).
void save_codebook(const std::filesystem::path& path, const CodebookFile& file);
CodebookFile load_codebook(const std::filesystem::path& path);
/// One row per codeword: index followed by N_T*N_RF codes (column-major).
void export_codebook_csv(const std::filesystem::path& path, const Codebook& cb);

}  // namespace hbf
