#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "lrtc/priors.hpp"
#include "lrtc/solver.hpp"
#include "lrtc/tensor.hpp"

namespace lrtc {

// Recipe for one synthetic problem instance.
struct SynthSpec {
  Index m = 0, n = 0, p = 0;
  Index true_rank = 1;
  Family family = Family::gaussian;
  // Gaussian: factor columns drawn from the prior covariances, white noise
  // scaled to this signal-to-noise ratio (infinity means noiseless).
  double snr_db = std::numeric_limits<double>::infinity();
  // Poisson: |N(0,1)| factors rescaled so the mean rate equals mean_level,
  // then counts drawn per cell.
  double mean_level = 100.0;
  std::uint64_t seed = 0;
};

struct SynthInstance {
  Tensor3 x_true;  // noiseless low-rank tensor (rates for poisson)
  Tensor3 z;       // observed data: x + noise, or counts
  FactorModel factors;
};

SynthInstance generate(const SynthSpec& spec, const PriorSet& priors);

struct MaskPair {
  Mask3 train;
  Mask3 test;
};

// Reserves floor(fraction * M*N*P) cells for evaluation, drawn uniformly
// without replacement, optionally plus one whole slice. Train and test
// partition the tensor: every cell lands in exactly one of the two.
struct SliceReservation {
  Mode mode;
  Index index;
};
MaskPair random_mask(Index m, Index n, Index p, double fraction, std::uint64_t seed,
                     std::optional<SliceReservation> reserve = std::nullopt);

// 10 log10( ||(est - z) o test||^2 / ||z o test||^2 ), floored at -300 dB on
// exact recovery.
double error_db(const Tensor3& estimate, const Tensor3& z, const Mask3& test);

struct EvalReport {
  double error_db = 0.0;
  Index effective_rank = 0;
  double mu = 0.0;
};

EvalReport evaluate_solve(const SolveReport& report, const Tensor3& z, const Mask3& test,
                          double mu);

// One aggregated sweep grid point (matches the sweep CSV schema).
struct SweepPoint {
  double mu = 0.0;
  double mean_error_db = 0.0;
  double mean_rank = 0.0;
  Index n_seeds = 0;
  // diagnostics, not serialized
  double worst_descent_violation = 0.0;  // max relative objective increase seen
  double max_estimate_norm = 0.0;        // max ||estimate||_F across seeds
};

// Runs cfg.family's solver at every mu in the grid, n_seeds initializations
// each (streams derived from (seed, grid index)), and averages error and rank
// per grid point.
std::vector<SweepPoint> sweep_mu(const Tensor3& z, const Mask3& train, const Mask3& test,
                                 const PriorSet& priors, const SolveConfig& cfg,
                                 const std::vector<double>& mu_grid, Index n_seeds,
                                 std::uint64_t seed);

std::vector<double> log_spaced(double lo, double hi, Index count);

}  // namespace lrtc
