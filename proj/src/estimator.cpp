#include "jointstab/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include "jointstab/errors.hpp"
#include "jointstab/rng.hpp"

namespace jointstab {

namespace {

double epoch_denominator(const SystemTrajectory& traj, int epoch) {
  if (epoch < 0 || epoch >= static_cast<int>(traj.epoch_start_norm_sq.size())) {
    throw std::invalid_argument("dataset: sample epoch has no recorded start norm");
  }
  return std::max(traj.epoch_start_norm_sq[epoch], 1.0);
}

// Weighted second-moment summaries per system. The rescaled loss is exactly
//   sum_i [ s[i] - 2 tr(theta_i^T C[i]) + tr(theta_i^T Z[i] theta_i) ],
// so both coordinate substeps reduce to small normal-equation solves that
// never revisit raw samples.
struct SuffStats {
  std::vector<Eigen::MatrixXd> Z;  // sum w * z z^T,      (dz x dz)
  std::vector<Eigen::MatrixXd> C;  // sum w * z x_next^T, (dz x dx)
  std::vector<double> s;           // sum w * ||x_next||^2
};

SuffStats compute_stats(const TrajectoryDataset& data, bool use_rescaling) {
  const int dz = data.regressor_dim();
  SuffStats stats;
  stats.Z.assign(data.num_systems(), Eigen::MatrixXd::Zero(dz, dz));
  stats.C.assign(data.num_systems(), Eigen::MatrixXd::Zero(dz, data.dx));
  stats.s.assign(data.num_systems(), 0.0);
  for (int i = 0; i < data.num_systems(); ++i) {
    for (const Sample& sample : data.systems[i].samples) {
      const double w =
          use_rescaling ? 1.0 / epoch_denominator(data.systems[i], sample.epoch) : 1.0;
      stats.Z[i].noalias() += w * sample.z * sample.z.transpose();
      stats.C[i].noalias() += w * sample.z * sample.x_next.transpose();
      stats.s[i] += w * sample.x_next.squaredNorm();
    }
  }
  return stats;
}

// Solves (G + ridge I) X = Rhs with a singularity check when ridge is zero.
Eigen::MatrixXd solve_normal_equations(const Eigen::MatrixXd& gram,
                                       const Eigen::MatrixXd& rhs, double ridge,
                                       const char* context) {
  Eigen::MatrixXd G = gram;
  if (ridge > 0.0) G.diagonal().array() += ridge;
  if (ridge == 0.0) {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(G);
    if (!lu.isInvertible()) {
      throw NumericalError(std::string(context) +
                           ": singular Gram matrix with ridge = 0");
    }
    return lu.solve(rhs);
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(G);
  if (ldlt.info() != Eigen::Success) {
    throw NumericalError(std::string(context) + ": Gram factorization failed");
  }
  return ldlt.solve(rhs);
}

Eigen::MatrixXd weights_from_stats(const SuffStats& stats,
                                   const std::vector<Eigen::MatrixXd>& bases,
                                   double ridge) {
  const int ell = static_cast<int>(bases.size());
  const int m = static_cast<int>(stats.Z.size());
  Eigen::MatrixXd weights(m, ell);
  std::vector<Eigen::MatrixXd> ZGamma(ell);
  for (int i = 0; i < m; ++i) {
    for (int b = 0; b < ell; ++b) ZGamma[b].noalias() = stats.Z[i] * bases[b];
    Eigen::MatrixXd gram(ell, ell);
    Eigen::VectorXd rhs(ell);
    for (int b = 0; b < ell; ++b) {
      for (int c = 0; c <= b; ++c) {
        gram(b, c) = gram(c, b) = bases[c].cwiseProduct(ZGamma[b]).sum();
      }
      rhs[b] = bases[b].cwiseProduct(stats.C[i]).sum();
    }
    weights.row(i) =
        solve_normal_equations(gram, rhs, ridge, "als_step_weights").transpose();
  }
  return weights;
}

std::vector<Eigen::MatrixXd> bases_from_stats(const SuffStats& stats,
                                              const Eigen::MatrixXd& weights,
                                              int dz, int dx, double ridge) {
  const int ell = static_cast<int>(weights.cols());
  const int m = static_cast<int>(weights.rows());
  const int n = ell * dz;  // stacked basis column length
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, dx);
  for (int i = 0; i < m; ++i) {
    for (int b = 0; b < ell; ++b) {
      const double wb = weights(i, b);
      if (wb == 0.0) continue;
      rhs.middleRows(b * dz, dz).noalias() += wb * stats.C[i];
      for (int c = 0; c <= b; ++c) {
        gram.block(b * dz, c * dz, dz, dz).noalias() +=
            (wb * weights(i, c)) * stats.Z[i];
      }
    }
  }
  for (int b = 0; b < ell; ++b) {
    for (int c = b + 1; c < ell; ++c) {
      gram.block(b * dz, c * dz, dz, dz) =
          gram.block(c * dz, b * dz, dz, dz).transpose();
    }
  }
  const Eigen::MatrixXd stacked =
      solve_normal_equations(gram, rhs, ridge, "als_step_bases");
  std::vector<Eigen::MatrixXd> bases(ell);
  for (int b = 0; b < ell; ++b) bases[b] = stacked.middleRows(b * dz, dz);
  return bases;
}

void check_nonempty(const TrajectoryDataset& data) {
  if (data.num_systems() == 0) {
    throw std::invalid_argument("dataset has no systems");
  }
  for (const auto& traj : data.systems) {
    if (traj.samples.empty()) {
      throw std::invalid_argument("dataset: every system needs at least one sample");
    }
  }
}

}  // namespace

double rescaled_loss(const TrajectoryDataset& data,
                     const SharedBasisFactorization& fact) {
  check_nonempty(data);
  double total = 0.0;
  for (int i = 0; i < data.num_systems(); ++i) {
    const Eigen::MatrixXd theta_t = fact.compose(i).theta.transpose();
    for (const Sample& sample : data.systems[i].samples) {
      const double denom = epoch_denominator(data.systems[i], sample.epoch);
      total += (sample.x_next - theta_t * sample.z).squaredNorm() / denom;
    }
  }
  return total;
}

Eigen::MatrixXd als_step_weights(const TrajectoryDataset& data,
                                 const std::vector<Eigen::MatrixXd>& bases,
                                 double ridge) {
  check_nonempty(data);
  for (const auto& basis : bases) {
    if (!basis.allFinite()) {
      throw std::invalid_argument("als_step_weights: bases must be finite");
    }
  }
  return weights_from_stats(compute_stats(data, true), bases, ridge);
}

std::vector<Eigen::MatrixXd> als_step_bases(const TrajectoryDataset& data,
                                            const Eigen::MatrixXd& weights,
                                            double ridge) {
  check_nonempty(data);
  if (!weights.allFinite()) {
    throw std::invalid_argument("als_step_bases: weights must be finite");
  }
  return bases_from_stats(compute_stats(data, true), weights,
                          data.regressor_dim(), data.dx, ridge);
}

JointEstimate fit_joint(const TrajectoryDataset& data, int ell,
                        const FitOptions& opts) {
  check_nonempty(data);
  if (ell < 1) throw std::invalid_argument("fit_joint: ell must be >= 1");
  if (opts.restarts < 1) throw std::invalid_argument("fit_joint: restarts must be >= 1");
  if (opts.ridge < 0.0) throw std::invalid_argument("fit_joint: ridge must be >= 0");

  const int dz = data.regressor_dim();
  const SuffStats stats = compute_stats(data, true);
  const double init_scale = 1.0 / std::sqrt(static_cast<double>(dz));

  JointEstimate best;
  best.final_loss = std::numeric_limits<double>::infinity();
  best.restarts_used = opts.restarts;

  for (int restart = 0; restart < opts.restarts; ++restart) {
    RngStream init_stream(opts.seed, StreamPurpose::kFitInit, restart);
    SharedBasisFactorization fact;
    fact.bases.reserve(ell);
    for (int b = 0; b < ell; ++b) {
      fact.bases.push_back(init_scale * init_stream.normal_matrix(dz, data.dx));
    }

    std::vector<double> trace;
    fact.weights = weights_from_stats(stats, fact.bases, opts.ridge);
    double loss = rescaled_loss(data, fact);
    trace.push_back(loss);

    int outer = 0;
    double prev = loss;
    for (outer = 1; outer <= opts.max_outer_iterations; ++outer) {
      fact.bases = bases_from_stats(stats, fact.weights, dz, data.dx, opts.ridge);
      trace.push_back(rescaled_loss(data, fact));
      fact.weights = weights_from_stats(stats, fact.bases, opts.ridge);
      loss = rescaled_loss(data, fact);
      trace.push_back(loss);
      if (prev - loss <=
          opts.loss_tolerance * std::max(prev, std::numeric_limits<double>::min())) {
        break;
      }
      prev = loss;
    }

    if (loss < best.final_loss) {
      best.fitted = std::move(fact);
      best.final_loss = loss;
      best.iterations = std::min(outer, opts.max_outer_iterations);
      best.loss_trace = std::move(trace);
    }
  }

  best.per_system.reserve(data.num_systems());
  for (int i = 0; i < data.num_systems(); ++i) {
    best.per_system.push_back(best.fitted.compose(i));
  }
  return best;
}

DynamicsParameter fit_individual(const TrajectoryDataset& data, int system,
                                 double ridge, bool use_rescaling) {
  check_nonempty(data);
  if (system < 0 || system >= data.num_systems()) {
    throw std::invalid_argument("fit_individual: system index out of range");
  }
  const int dz = data.regressor_dim();
  Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(dz, dz);
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(dz, data.dx);
  for (const Sample& sample : data.systems[system].samples) {
    const double w =
        use_rescaling ? 1.0 / epoch_denominator(data.systems[system], sample.epoch) : 1.0;
    Z.noalias() += w * sample.z * sample.z.transpose();
    C.noalias() += w * sample.z * sample.x_next.transpose();
  }
  return DynamicsParameter{solve_normal_equations(Z, C, ridge, "fit_individual")};
}

}  // namespace jointstab
