#include "jointstab/dynamics.hpp"

#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "jointstab/errors.hpp"

namespace jointstab {

DynamicsParameter DynamicsParameter::from_state_space(const Eigen::MatrixXd& A,
                                                      const Eigen::MatrixXd& B) {
  if (A.rows() != A.cols() || B.rows() != A.rows()) {
    throw std::invalid_argument("from_state_space: A must be square and share rows with B");
  }
  const auto dx = A.rows();
  const auto du = B.cols();
  DynamicsParameter out;
  out.theta.resize(dx + du, dx);
  out.theta.topRows(dx) = A.transpose();
  out.theta.bottomRows(du) = B.transpose();
  return out;
}

StepResult step(const DynamicsParameter& theta, const Eigen::VectorXd& state,
                const Eigen::VectorXd& input, const Eigen::VectorXd& noise) {
  if (state.size() != theta.state_dim() || input.size() != theta.input_dim() ||
      noise.size() != theta.state_dim()) {
    throw std::invalid_argument("step: state/input/noise shapes inconsistent with theta");
  }
  Eigen::VectorXd z(state.size() + input.size());
  z << state, input;
  StepResult out;
  out.state = theta.theta.transpose() * z + noise;
  out.saturated = !(out.state.cwiseAbs().maxCoeff() <= kOverflowGuard);
  return out;
}

double spectral_radius(const Eigen::MatrixXd& M) {
  if (M.rows() != M.cols()) {
    throw std::invalid_argument("spectral_radius: matrix must be square");
  }
  if (M.rows() == 0) return 0.0;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(M, /*computeEigenvectors=*/false);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("spectral_radius: eigensolver failed to converge (norm " +
                         std::to_string(M.norm()) + ", size " +
                         std::to_string(M.rows()) + ")");
  }
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace jointstab
