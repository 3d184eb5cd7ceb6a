#include "jointstab/algorithm.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <Eigen/LU>

#include "jointstab/errors.hpp"

namespace jointstab {

int EpochSchedule::epoch_of(int t) const {
  if (t < 0 || boundaries.empty() || t >= boundaries.back()) {
    throw std::invalid_argument("epoch_of: time outside schedule");
  }
  const auto it = std::upper_bound(boundaries.begin(), boundaries.end(), t);
  return static_cast<int>(it - boundaries.begin()) - 1;
}

EpochSchedule epoch_boundaries(int T, int k) {
  if (k < 1 || k > T) {
    throw std::invalid_argument("epoch_boundaries: need 1 <= k <= T");
  }
  EpochSchedule schedule;
  schedule.boundaries.resize(k + 1);
  for (int j = 0; j <= k; ++j) {
    schedule.boundaries[j] =
        static_cast<int>(static_cast<long long>(j) * T / k);
  }
  return schedule;
}

FeedbackGain sample_feedback(double sigma_g, const Dimensions& dims,
                             RngStream& stream) {
  if (sigma_g < 0.0) {
    throw std::invalid_argument("sample_feedback: sigma_g must be nonnegative");
  }
  // du rows, each an independent N(0, sigma_g^2 I_dx) draw.
  return FeedbackGain{sigma_g * stream.normal_matrix(dims.du, dims.dx)};
}

namespace {

void validate_config(const Ensemble& ensemble, const AlgorithmConfig& cfg) {
  if (cfg.num_epochs < 1 || cfg.horizon < cfg.num_epochs) {
    throw std::invalid_argument("AlgorithmConfig: need 1 <= k <= T");
  }
  if (cfg.sigma_g < 0.0 || cfg.sigma_eta < 0.0) {
    throw std::invalid_argument("AlgorithmConfig: noise scales must be nonnegative");
  }
  if (cfg.cost.Q.rows() != ensemble.dims.dx || cfg.cost.R.rows() != ensemble.dims.du) {
    throw std::invalid_argument("AlgorithmConfig: cost matrices do not match dims");
  }
  if (cfg.sigma_xi_override && *cfg.sigma_xi_override < 0.0) {
    throw std::invalid_argument("AlgorithmConfig: sigma_xi override must be nonnegative");
  }
}

}  // namespace

TrajectoryDataset collect_trajectories(const Ensemble& ensemble,
                                       const AlgorithmConfig& cfg) {
  validate_config(ensemble, cfg);
  const Dimensions& dims = ensemble.dims;
  const double sigma_xi = cfg.sigma_xi_override.value_or(ensemble.sigma_xi);
  const EpochSchedule schedule = epoch_boundaries(cfg.horizon, cfg.num_epochs);

  TrajectoryDataset data;
  data.dx = dims.dx;
  data.du = dims.du;
  data.num_epochs = cfg.num_epochs;
  data.systems.resize(dims.m);
  for (auto& traj : data.systems) {
    traj.samples.reserve(cfg.horizon);
    traj.epoch_start_norm_sq.assign(cfg.num_epochs, 0.0);
  }

  std::vector<Eigen::VectorXd> states(dims.m, Eigen::VectorXd::Zero(dims.dx));
  for (int j = 0; j < cfg.num_epochs; ++j) {
    // One random feedback per epoch, shared by every system.
    RngStream feedback_stream(cfg.seed, StreamPurpose::kFeedback, j);
    const FeedbackGain K = sample_feedback(cfg.sigma_g, dims, feedback_stream);
    for (int t = schedule.boundaries[j]; t < schedule.boundaries[j + 1]; ++t) {
      for (int i = 0; i < dims.m; ++i) {
        RngStream dither_stream(cfg.seed, StreamPurpose::kDither, i, t);
        RngStream noise_stream(cfg.seed, StreamPurpose::kNoise, i, t);
        const Eigen::VectorXd dither =
            cfg.sigma_eta * dither_stream.normal_vector(dims.du);
        const Eigen::VectorXd input = K.K * states[i] + dither;
        const Eigen::VectorXd noise =
            sigma_xi * noise_stream.normal_vector(dims.dx);

        Sample sample;
        sample.t = t;
        sample.epoch = j;
        sample.z.resize(dims.dx + dims.du);
        sample.z << states[i], input;
        if (t == schedule.boundaries[j]) {
          data.systems[i].epoch_start_norm_sq[j] = sample.z.squaredNorm();
        }
        const StepResult result = step(ensemble.systems[i], states[i], input, noise);
        if (result.saturated) data.systems[i].saturated = true;
        sample.x_next = result.state;
        states[i] = result.state;
        data.systems[i].samples.push_back(std::move(sample));
      }
    }
  }
  return data;
}

void synthesize_gains(const Ensemble& ensemble,
                      const std::vector<DynamicsParameter>& estimates,
                      const CostMatrices& cost, StabilizationOutcome& out) {
  const int m = ensemble.dims.m;
  if (static_cast<int>(estimates.size()) != m) {
    throw std::invalid_argument("synthesize_gains: estimate count != m");
  }
  out.gains.assign(m, std::nullopt);
  out.per_system_stabilized.assign(m, false);
  out.closed_loop_rho.assign(m, 0.0);
  out.synthesis_failed.assign(m, false);
  int stabilized_count = 0;
  for (int i = 0; i < m; ++i) {
    const auto solution = try_solve_dare(estimates[i], cost);
    if (!solution) {
      // A non-stabilizable (or too poor) estimate counts as a failure for
      // this system only; the run stays total.
      out.synthesis_failed[i] = true;
      out.closed_loop_rho[i] = spectral_radius(ensemble.systems[i].A());
      continue;
    }
    FeedbackGain gain = feedback_gain(estimates[i], *solution, cost);
    const double rho = spectral_radius(ensemble.systems[i].A() +
                                       ensemble.systems[i].B() * gain.K);
    out.closed_loop_rho[i] = rho;
    out.per_system_stabilized[i] = rho < 1.0;
    out.gains[i] = std::move(gain);
    if (out.per_system_stabilized[i]) ++stabilized_count;
  }
  out.fraction_stabilized = static_cast<double>(stabilized_count) / m;
}

namespace {

// Excitation health: full column rank of the per-system regressor Gram is
// necessary for the least-squares substeps to be well posed without ridge.
std::vector<bool> gram_rank_flags(const TrajectoryDataset& data) {
  std::vector<bool> flags(data.num_systems(), false);
  const int dz = data.regressor_dim();
  for (int i = 0; i < data.num_systems(); ++i) {
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(dz, dz);
    for (const Sample& sample : data.systems[i].samples) {
      gram.noalias() += sample.z * sample.z.transpose();
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(gram);
    flags[i] = !lu.isInvertible();
  }
  return flags;
}

double individual_rescaled_residual(const TrajectoryDataset& data, int i,
                                    const DynamicsParameter& theta) {
  const Eigen::MatrixXd theta_t = theta.theta.transpose();
  double total = 0.0;
  for (const Sample& sample : data.systems[i].samples) {
    const double denom =
        std::max(data.systems[i].epoch_start_norm_sq[sample.epoch], 1.0);
    total += (sample.x_next - theta_t * sample.z).squaredNorm() / denom;
  }
  return total;
}

}  // namespace

StabilizationOutcome run_algorithm1(const Ensemble& ensemble,
                                    const AlgorithmConfig& cfg) {
  StabilizationOutcome out;
  out.dataset = collect_trajectories(ensemble, cfg);

  FitOptions fit = cfg.fit;
  fit.seed = cfg.seed;
  out.estimate = fit_joint(out.dataset, ensemble.dims.ell, fit);

  synthesize_gains(ensemble, out.estimate.per_system, cfg.cost, out);
  out.gram_rank_deficient = gram_rank_flags(out.dataset);
  return out;
}

StabilizationOutcome run_individual_baseline(const Ensemble& ensemble,
                                             const TrajectoryDataset& dataset,
                                             const AlgorithmConfig& cfg) {
  validate_config(ensemble, cfg);
  if (dataset.num_systems() != ensemble.dims.m) {
    throw std::invalid_argument("run_individual_baseline: dataset/ensemble mismatch");
  }
  StabilizationOutcome out;
  out.dataset = dataset;

  out.estimate.restarts_used = 0;
  out.estimate.iterations = 0;
  out.estimate.final_loss = 0.0;
  out.estimate.per_system.reserve(ensemble.dims.m);
  for (int i = 0; i < ensemble.dims.m; ++i) {
    DynamicsParameter theta = fit_individual(dataset, i, cfg.fit.ridge);
    out.estimate.final_loss += individual_rescaled_residual(dataset, i, theta);
    out.estimate.per_system.push_back(std::move(theta));
  }

  synthesize_gains(ensemble, out.estimate.per_system, cfg.cost, out);
  out.gram_rank_deficient = gram_rank_flags(out.dataset);
  return out;
}

namespace {

std::string fmt_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string serialize_outcome(const StabilizationOutcome& outcome) {
  const int m = static_cast<int>(outcome.per_system_stabilized.size());
  std::string out;
  out += "{\n";
  out += "  \"fraction_stabilized\": " + fmt_real(outcome.fraction_stabilized) + ",\n";
  out += "  \"final_loss\": " + fmt_real(outcome.estimate.final_loss) + ",\n";
  out += "  \"systems\": [\n";
  for (int i = 0; i < m; ++i) {
    out += "    {\"stabilized\": ";
    out += outcome.per_system_stabilized[i] ? "true" : "false";
    out += ", \"synthesis_failed\": ";
    out += outcome.synthesis_failed[i] ? "true" : "false";
    out += ", \"closed_loop_rho\": " + fmt_real(outcome.closed_loop_rho[i]);
    out += ", \"saturated\": ";
    out += outcome.dataset.systems[i].saturated ? "true" : "false";
    out += ", \"gram_rank_deficient\": ";
    out += (i < static_cast<int>(outcome.gram_rank_deficient.size()) &&
            outcome.gram_rank_deficient[i])
               ? "true"
               : "false";
    out += "}";
    out += (i + 1 < m) ? ",\n" : "\n";
  }
  out += "  ]\n";
  out += "}\n";
  return out;
}

void write_outcome_file(const StabilizationOutcome& outcome,
                        const std::string& path) {
  std::ofstream file(path);
  if (!file) throw IoError("cannot open for writing: " + path);
  file << serialize_outcome(outcome);
  if (!file) throw IoError("write failed: " + path);
}

}  // namespace jointstab
