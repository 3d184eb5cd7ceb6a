#pragma once

#include <vector>

#include <Eigen/Dense>

#include "jointstab/dynamics.hpp"

namespace jointstab {

// Rank-ell factorization of a family of dynamics parameters: system i is the
// weighted sum of ell shared basis matrices, theta_i = sum_j weights(i,j) * bases[j].
struct SharedBasisFactorization {
  std::vector<Eigen::MatrixXd> bases;  // each (dx+du) x dx
  Eigen::MatrixXd weights;             // m x ell

  int num_bases() const { return static_cast<int>(bases.size()); }
  int num_systems() const { return static_cast<int>(weights.rows()); }

  DynamicsParameter compose(int system) const {
    return compose_dynamics(*this, system);
  }

  friend DynamicsParameter compose_dynamics(const SharedBasisFactorization& fact,
                                            int system);
};

// Weighted basis combination for one system. This is the single arithmetic
// path for composition; generation and estimation both call it so stored
// per-system parameters match their factorizations bit for bit.
DynamicsParameter compose_dynamics(const SharedBasisFactorization& fact,
                                   int system);

}  // namespace jointstab
