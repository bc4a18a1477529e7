// SPDX-License-Identifier: Apache-2.0
//
// Hybrid precoder design: GA analog search with enumerated digital stage
// (HSHO), an exhaustive analog oracle for tiny arrays, and the OMP and
// phased-ZF baselines.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hbf/genetic.hpp"
#include "hbf/model_core.hpp"
#include "hbf/rng.hpp"

namespace hbf {

struct HybridSolution {
  AnalogPrecoder a;
  DigitalPrecoder w;
  double sum_rate = 0.0;
};

struct HshoResult : HybridSolution {
  double capacity = 0.0;  // analog-design objective of `a`
  std::vector<GaGeneration> history;
};

/// Evaluates the virtual-channel capacity of a code vector without building
/// the complex analog matrix. Holds scratch buffers; not thread-safe.
class CapacityEvaluator {
 public:
  CapacityEvaluator(const CMatrix& h, int n_rf, double rho);
  double operator()(std::span<const std::uint8_t> codes);

 private:
  const CMatrix& h_;
  int n_rf_;
  double rho_;
  CMatrix virt_;
  std::vector<double> eig_;
};

/// Digital stage for a fixed analog precoder: enumerated FDP on the virtual
/// channel A^H h, normalized so ||A w_u|| = 1 for active users.
HybridSolution hybrid_for_analog(const CMatrix& h, const AnalogPrecoder& a, double sigma2);

/// GA analog precoder maximizing the waterfill capacity of A^H h at rho = 1/sigma2,
/// followed by hybrid_for_analog.
HshoResult hsho_design(const CMatrix& h, double sigma2, int n_rf, const GaParams& params, Rng& rng);

struct ExhaustiveResult {
  AnalogPrecoder a;
  double capacity = 0.0;
  std::size_t candidates = 0;
};

inline constexpr std::uint64_t kMaxExhaustiveCandidates = 1u << 20;

/// True argmax of the analog-design objective; first maximizer in code order.
ExhaustiveResult exhaustive_ap_search(const CMatrix& h, double sigma2, int n_rf);

struct OmpResult : HybridSolution {
  std::size_t index = 0;
  std::vector<double> residuals;  // ||U - A A^+ U||_F per codeword
};

/// Selects the codeword whose column space best represents u_opt (lowest
/// residual, lowest index on ties) and sets W = A^+ u_opt.
OmpResult omp_hybrid(const CMatrix& h, const FullyDigitalPrecoder& u_opt, const Codebook& cb,
                     double sigma2);

/// Analog columns phase-matched (2-bit) to each user's channel, extra chains
/// reusing the strongest users; digital stage is ZF on the virtual channel
/// (minimum-norm least squares when that channel is rank deficient).
HybridSolution pzf_hybrid(const CMatrix& h, double sigma2, int n_rf);

}  // namespace hbf
