#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "jointstab/dataset.hpp"
#include "jointstab/ensemble.hpp"
#include "jointstab/estimator.hpp"
#include "jointstab/riccati.hpp"
#include "jointstab/rng.hpp"

namespace jointstab {

struct AlgorithmConfig {
  int horizon = 0;      // T: total interaction steps
  int num_epochs = 0;   // k: feedback redraw count
  double sigma_g = 0.0;    // feedback entry standard deviation
  double sigma_eta = 0.0;  // dither standard deviation
  CostMatrices cost;
  FitOptions fit;
  std::uint64_t seed = 0;
  // Overrides the ensemble's process noise scale when set (0 gives the
  // noiseless variant used by recovery tests).
  std::optional<double> sigma_xi_override;
};

// Epoch boundaries tau_j = floor(j * T / k), j = 0..k.
struct EpochSchedule {
  std::vector<int> boundaries;

  int num_epochs() const { return static_cast<int>(boundaries.size()) - 1; }
  // Epoch index j with boundaries[j] <= t < boundaries[j+1].
  int epoch_of(int t) const;
};

// Throws std::invalid_argument unless 1 <= k <= T.
EpochSchedule epoch_boundaries(int T, int k);

// Random feedback matrix: du rows drawn i.i.d. N(0, sigma_g^2 I_dx).
FeedbackGain sample_feedback(double sigma_g, const Dimensions& dims,
                             RngStream& stream);

struct StabilizationOutcome {
  // Per-system synthesized gain; nullopt marks a failed Riccati solve.
  std::vector<std::optional<FeedbackGain>> gains;
  JointEstimate estimate;
  TrajectoryDataset dataset;
  std::vector<bool> per_system_stabilized;
  double fraction_stabilized = 0.0;
  // Diagnostics: closed-loop spectral radius per system (open-loop radius
  // where synthesis failed), plus excitation rank health of each system's
  // regressor Gram.
  std::vector<double> closed_loop_rho;
  std::vector<bool> synthesis_failed;
  std::vector<bool> gram_rank_deficient;
};

// Simulates every system from x_0 = 0 under the epoch-randomized control law
// u = K_j x + eta, one shared K_j per epoch across all systems, and returns
// the tagged regression dataset.
TrajectoryDataset collect_trajectories(const Ensemble& ensemble,
                                       const AlgorithmConfig& cfg);

// Riccati synthesis at each estimated parameter plus strict stability check
// against the true dynamics. DARE non-convergence marks the system
// unstabilized instead of failing the run.
void synthesize_gains(const Ensemble& ensemble,
                      const std::vector<DynamicsParameter>& estimates,
                      const CostMatrices& cost, StabilizationOutcome& out);

// Full epoch-randomized run: excite, collect, fit jointly, synthesize,
// evaluate. Deterministic given cfg.seed.
StabilizationOutcome run_algorithm1(const Ensemble& ensemble,
                                    const AlgorithmConfig& cfg);

// Per-system least-squares baseline on the SAME dataset (paired comparison).
StabilizationOutcome run_individual_baseline(const Ensemble& ensemble,
                                             const TrajectoryDataset& dataset,
                                             const AlgorithmConfig& cfg);

// Structured-text (JSON) dump of flags, spectral radii, and losses.
std::string serialize_outcome(const StabilizationOutcome& outcome);
void write_outcome_file(const StabilizationOutcome& outcome,
                        const std::string& path);

}  // namespace jointstab
