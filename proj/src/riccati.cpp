#include "jointstab/riccati.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "jointstab/errors.hpp"

namespace jointstab {

namespace {

bool is_symmetric_positive_definite(const Eigen::MatrixXd& M) {
  if (M.rows() != M.cols()) return false;
  if (!M.isApprox(M.transpose(), 1e-12)) return false;
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  return llt.info() == Eigen::Success;
}

// Iterates P <- rhs(P) from P0 = Q with per-step symmetrization. Returns the
// solution, or nullopt when the iteration diverges or the cap is reached.
std::optional<RiccatiSolution> value_iterate(const DynamicsParameter& theta,
                                             const CostMatrices& cost,
                                             double tol, int max_iter) {
  const Eigen::MatrixXd A = theta.A();
  const Eigen::MatrixXd B = theta.B();
  Eigen::MatrixXd P = cost.Q;
  for (int iter = 1; iter <= max_iter; ++iter) {
    const Eigen::MatrixXd PA = P * A;
    const Eigen::MatrixXd BtPA = B.transpose() * PA;
    const Eigen::MatrixXd M = B.transpose() * P * B + cost.R;
    Eigen::LLT<Eigen::MatrixXd> llt(M);
    if (llt.info() != Eigen::Success) return std::nullopt;
    Eigen::MatrixXd next = cost.Q + A.transpose() * PA - BtPA.transpose() * llt.solve(BtPA);
    next = 0.5 * (next + next.transpose()).eval();
    if (!next.allFinite() || next.norm() > kOverflowGuard) return std::nullopt;
    // Frobenius bounds the operator norm from above, so this stop rule is
    // at least as strict as the contract.
    if ((next - P).norm() <= tol) {
      return RiccatiSolution{std::move(next), iter};
    }
    P = std::move(next);
  }
  return std::nullopt;
}

}  // namespace

CostMatrices::CostMatrices(Eigen::MatrixXd q, Eigen::MatrixXd r)
    : Q(std::move(q)), R(std::move(r)) {
  if (!is_symmetric_positive_definite(Q)) {
    throw std::invalid_argument("CostMatrices: Q must be symmetric positive definite");
  }
  if (!is_symmetric_positive_definite(R)) {
    throw std::invalid_argument("CostMatrices: R must be symmetric positive definite");
  }
}

CostMatrices CostMatrices::identity(int dx, int du) {
  return CostMatrices(Eigen::MatrixXd::Identity(dx, dx),
                      Eigen::MatrixXd::Identity(du, du));
}

CostMatrices CostMatrices::scaled_identity(int dx, int du, double r) {
  if (!(r > 0.0)) {
    throw std::invalid_argument("CostMatrices: r must be positive");
  }
  return CostMatrices(Eigen::MatrixXd::Identity(dx, dx),
                      r * Eigen::MatrixXd::Identity(du, du));
}

Eigen::MatrixXd dare_rhs(const DynamicsParameter& theta,
                         const CostMatrices& cost, const Eigen::MatrixXd& P) {
  const Eigen::MatrixXd A = theta.A();
  const Eigen::MatrixXd B = theta.B();
  const Eigen::MatrixXd BtPA = B.transpose() * P * A;
  const Eigen::MatrixXd M = B.transpose() * P * B + cost.R;
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("dare_rhs: B^T P B + R is not positive definite");
  }
  return cost.Q + A.transpose() * P * A - BtPA.transpose() * llt.solve(BtPA);
}

double dare_residual(const DynamicsParameter& theta, const CostMatrices& cost,
                     const Eigen::MatrixXd& P) {
  const Eigen::MatrixXd diff = P - dare_rhs(theta, cost, P);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
      0.5 * (diff + diff.transpose()), Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

RiccatiSolution solve_dare(const DynamicsParameter& theta,
                           const CostMatrices& cost, double tol, int max_iter) {
  if (!(tol > 0.0) || max_iter < 1) {
    throw std::invalid_argument("solve_dare: need tol > 0 and max_iter >= 1");
  }
  auto solution = value_iterate(theta, cost, tol, max_iter);
  if (!solution) {
    throw NumericalError("solve_dare: no convergence within " +
                         std::to_string(max_iter) +
                         " iterations; (A, B) may not be stabilizable");
  }
  return *std::move(solution);
}

std::optional<RiccatiSolution> try_solve_dare(const DynamicsParameter& theta,
                                              const CostMatrices& cost,
                                              double tol, int max_iter) {
  if (!(tol > 0.0) || max_iter < 1) {
    throw std::invalid_argument("try_solve_dare: need tol > 0 and max_iter >= 1");
  }
  return value_iterate(theta, cost, tol, max_iter);
}

FeedbackGain feedback_gain(const DynamicsParameter& theta,
                           const RiccatiSolution& solution,
                           const CostMatrices& cost) {
  const Eigen::MatrixXd B = theta.B();
  const Eigen::MatrixXd M = B.transpose() * solution.P * B + cost.R;
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("feedback_gain: B^T P B + R is numerically singular");
  }
  return FeedbackGain{-llt.solve(B.transpose() * solution.P * theta.A())};
}

bool is_stabilized(const DynamicsParameter& theta_true, const FeedbackGain& gain) {
  return spectral_radius(theta_true.A() + theta_true.B() * gain.K) < 1.0;
}

}  // namespace jointstab
