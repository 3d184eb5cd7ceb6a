#pragma once

#include <optional>

#include <Eigen/Dense>

#include "jointstab/dynamics.hpp"

namespace jointstab {

// Quadratic cost weights. Construction verifies symmetry and positive
// definiteness through a Cholesky factorization.
struct CostMatrices {
  Eigen::MatrixXd Q;  // dx x dx
  Eigen::MatrixXd R;  // du x du

  CostMatrices(Eigen::MatrixXd q, Eigen::MatrixXd r);

  static CostMatrices identity(int dx, int du);
  // Q = I, R = r * I; the experiment grids sweep the scalar r.
  static CostMatrices scaled_identity(int dx, int du, double r);
};

struct RiccatiSolution {
  Eigen::MatrixXd P;   // symmetric PSD fixed point
  int iterations = 0;  // value-iteration steps used
};

struct FeedbackGain {
  Eigen::MatrixXd K;  // du x dx, control law u = K x
};

inline constexpr double kDareDefaultTol = 1e-10;
inline constexpr int kDareDefaultMaxIter = 10000;

// One application of the Riccati fixed-point map
//   P -> Q + A^T P A - A^T P B (B^T P B + R)^{-1} B^T P A.
Eigen::MatrixXd dare_rhs(const DynamicsParameter& theta,
                         const CostMatrices& cost, const Eigen::MatrixXd& P);

// Operator norm of P - dare_rhs(P).
double dare_residual(const DynamicsParameter& theta, const CostMatrices& cost,
                     const Eigen::MatrixXd& P);

// Value iteration from P0 = Q with per-step symmetrization, stopping when
// successive iterates differ by at most tol. Convergence is guaranteed for
// stabilizable (A, B) with Q positive definite; non-convergence is reported
// as NumericalError and is the operative "not stabilizable here" signal.
RiccatiSolution solve_dare(const DynamicsParameter& theta,
                           const CostMatrices& cost,
                           double tol = kDareDefaultTol,
                           int max_iter = kDareDefaultMaxIter);

// Same iteration, nullopt instead of a throw. Algorithm runs use this so a
// poor estimate downgrades one system to "not stabilized" without aborting.
std::optional<RiccatiSolution> try_solve_dare(const DynamicsParameter& theta,
                                              const CostMatrices& cost,
                                              double tol = kDareDefaultTol,
                                              int max_iter = kDareDefaultMaxIter);

// K = -(B^T P B + R)^{-1} B^T P A, solved through an LLT factorization.
FeedbackGain feedback_gain(const DynamicsParameter& theta,
                           const RiccatiSolution& solution,
                           const CostMatrices& cost);

// Strict closed-loop stability of the TRUE system under gain K:
// rho(A + B K) < 1.
bool is_stabilized(const DynamicsParameter& theta_true, const FeedbackGain& gain);

}  // namespace jointstab
