#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "jointstab/dimensions.hpp"
#include "jointstab/dynamics.hpp"
#include "jointstab/shared_basis.hpp"

namespace jointstab {

// Ground-truth family of linear systems drawn from the shared-basis model.
// Invariants maintained by generate_ensemble:
//   * systems[i] == truth.compose(i) bit for bit,
//   * rho(A_i) lies in [rho_min, rho_max] for every i,
//   * every (A_i, B_i) is stabilizable, witnessed by a converged Riccati
//     solve at the truth.
struct Ensemble {
  Dimensions dims;
  SharedBasisFactorization truth;
  std::vector<DynamicsParameter> systems;
  double sigma_xi = 0.0;  // process noise standard deviation
  double rho_min = 0.0;
  double rho_max = 0.0;
  std::uint64_t seed = 0;
};

// Draws basis entries N(0, 1/(dx+du)) and weight rows N(0, 1/ell), composes
// the family, then rescales each weight row so the open-loop spectral radius
// hits a uniform target inside [rho_min, rho_max]; resamples until every
// system passes the stabilizability witness.
//
// Deterministic given seed. Throws std::invalid_argument for bad
// preconditions (rho_min < 1, rho_min > rho_max, sigma_xi <= 0) and
// GenerationError when the retry budget is exhausted.
Ensemble generate_ensemble(const Dimensions& dims, double rho_min,
                           double rho_max, double sigma_xi,
                           std::uint64_t seed);

// Structured-text (JSON) round trip. Reals carry 17 significant digits so a
// parse of the emitted document reproduces the ensemble exactly.
std::string serialize_ensemble(const Ensemble& ensemble);
Ensemble deserialize_ensemble(const std::string& text);

void write_ensemble_file(const Ensemble& ensemble, const std::string& path);
Ensemble read_ensemble_file(const std::string& path);

}  // namespace jointstab
