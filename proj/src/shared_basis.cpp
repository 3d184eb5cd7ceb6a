#include "jointstab/shared_basis.hpp"

#include <stdexcept>

namespace jointstab {

DynamicsParameter compose_dynamics(const SharedBasisFactorization& fact,
                                   int system) {
  if (system < 0 || system >= fact.num_systems()) {
    throw std::invalid_argument("compose_dynamics: system index out of range");
  }
  if (fact.bases.empty() || fact.weights.cols() != fact.num_bases()) {
    throw std::invalid_argument("compose_dynamics: weights/bases shape mismatch");
  }
  DynamicsParameter out;
  out.theta = Eigen::MatrixXd::Zero(fact.bases[0].rows(), fact.bases[0].cols());
  for (int j = 0; j < fact.num_bases(); ++j) {
    out.theta += fact.weights(system, j) * fact.bases[j];
  }
  return out;
}

}  // namespace jointstab
