#pragma once

#include <Eigen/Dense>

namespace jointstab {

// State components beyond this magnitude mark a trajectory as saturated.
inline constexpr double kOverflowGuard = 1e100;

// Stacked dynamics parameter theta of one linear system, shape
// (dx+du) x dx. The top dx rows are A transposed and the bottom du rows are
// B transposed, so theta^T [x; u] = A x + B u.
struct DynamicsParameter {
  Eigen::MatrixXd theta;

  int state_dim() const { return static_cast<int>(theta.cols()); }
  int input_dim() const {
    return static_cast<int>(theta.rows() - theta.cols());
  }

  Eigen::MatrixXd A() const { return theta.topRows(state_dim()).transpose(); }
  Eigen::MatrixXd B() const {
    return theta.bottomRows(input_dim()).transpose();
  }

  static DynamicsParameter from_state_space(const Eigen::MatrixXd& A,
                                            const Eigen::MatrixXd& B);
};

struct StepResult {
  Eigen::VectorXd state;
  bool saturated = false;  // some component exceeded kOverflowGuard
};

// One step of x' = A x + B u + noise, evaluated as theta^T [x; u] + noise so
// simulation and estimator predictions share an arithmetic path.
StepResult step(const DynamicsParameter& theta, const Eigen::VectorXd& state,
                const Eigen::VectorXd& input, const Eigen::VectorXd& noise);

// Max eigenvalue modulus of a square real matrix.
// Throws NumericalError if the eigensolver fails to converge.
double spectral_radius(const Eigen::MatrixXd& M);

}  // namespace jointstab
