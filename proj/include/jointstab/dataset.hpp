#pragma once

#include <vector>

#include <Eigen/Dense>

namespace jointstab {

// One regression sample: regressor z_t = [x_t; u_t] and the next state.
struct Sample {
  int t = 0;
  int epoch = 0;  // 0-based epoch index
  Eigen::VectorXd z;
  Eigen::VectorXd x_next;
};

struct SystemTrajectory {
  std::vector<Sample> samples;  // ordered by t
  // ||z||^2 at each epoch's first time step; the loss divides an epoch's
  // residuals by max(this, 1) to balance exponentially growing trajectories.
  std::vector<double> epoch_start_norm_sq;
  bool saturated = false;
};

struct TrajectoryDataset {
  int dx = 0;
  int du = 0;
  int num_epochs = 0;
  std::vector<SystemTrajectory> systems;

  int num_systems() const { return static_cast<int>(systems.size()); }
  int regressor_dim() const { return dx + du; }
};

}  // namespace jointstab
