#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "jointstab/dataset.hpp"
#include "jointstab/dynamics.hpp"
#include "jointstab/shared_basis.hpp"

namespace jointstab {

struct FitOptions {
  int max_outer_iterations = 500;
  double loss_tolerance = 1e-12;  // relative improvement stopping threshold
  int restarts = 5;
  double ridge = 1e-10;  // regularizer on every least-squares Gram matrix
  std::uint64_t seed = 0;
};

struct JointEstimate {
  SharedBasisFactorization fitted;           // best (Gamma, omega) found
  std::vector<DynamicsParameter> per_system;  // fitted.compose(i), exactly
  double final_loss = 0.0;
  int iterations = 0;     // outer iterations of the winning restart
  int restarts_used = 0;
  // Loss after every half-step (weights update, then bases update) of the
  // winning restart; non-increasing by construction of the exact
  // alternating minimization.
  std::vector<double> loss_trace;
};

// Epoch-rescaled sum of squared one-step prediction errors:
//   sum_i sum_epochs [ 1/(||z_start||^2 v 1) * sum_t ||x_{t+1} - theta_i^T z_t||^2 ]
// with theta_i composed from the factorization. Evaluated residual by
// residual, so data generated noiselessly by the factorization scores 0.
double rescaled_loss(const TrajectoryDataset& data,
                     const SharedBasisFactorization& fact);

// Exact coordinate minimizer of the rescaled loss in the weights for fixed
// bases: m decoupled ridge least-squares problems in ell unknowns.
Eigen::MatrixXd als_step_weights(const TrajectoryDataset& data,
                                 const std::vector<Eigen::MatrixXd>& bases,
                                 double ridge = 1e-10);

// Exact coordinate minimizer in the bases for fixed weights. The loss is
// quadratic in the stacked basis entries; one Gram matrix of side
// ell*(dx+du) is shared by all dx state coordinates.
std::vector<Eigen::MatrixXd> als_step_bases(const TrajectoryDataset& data,
                                            const Eigen::MatrixXd& weights,
                                            double ridge = 1e-10);

// Alternating least squares over opts.restarts random initializations of the
// bases; returns the lowest-loss run (ties broken by restart index).
// Deterministic given opts.seed.
JointEstimate fit_joint(const TrajectoryDataset& data, int ell,
                        const FitOptions& opts);

// Per-system weighted least squares baseline, with the same epoch rescaling
// as the joint loss (disable with use_rescaling = false for the unweighted
// classic estimator).
DynamicsParameter fit_individual(const TrajectoryDataset& data, int system,
                                 double ridge = 1e-10,
                                 bool use_rescaling = true);

}  // namespace jointstab
