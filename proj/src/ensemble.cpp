#include "jointstab/ensemble.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "jointstab/errors.hpp"
#include "jointstab/riccati.hpp"
#include "jointstab/rng.hpp"

namespace jointstab {

void validate(const Dimensions& dims) {
  if (dims.m <= 0 || dims.dx <= 0 || dims.du <= 0 || dims.ell <= 0) {
    throw std::invalid_argument("Dimensions: m, dx, du, ell must all be positive");
  }
  if (dims.ell > dims.m) {
    std::cerr << "warning: ell = " << dims.ell << " exceeds m = " << dims.m
              << "; basis sharing is vacuous\n";
  }
}

namespace {

constexpr int kGenerationRetryBudget = 1000;

// Spectral-radius targets are drawn fractionally inside the band so the
// recomputed radius of the rescaled system stays in [rho_min, rho_max]
// despite eigensolver rounding.
double draw_band_target(double rho_min, double rho_max, RngStream& stream) {
  const double width = rho_max - rho_min;
  if (width == 0.0) return rho_min;
  const double margin = 1e-9 * width;
  return rho_min + margin + stream.next_double() * (width - 2.0 * margin);
}

}  // namespace

Ensemble generate_ensemble(const Dimensions& dims, double rho_min,
                           double rho_max, double sigma_xi,
                           std::uint64_t seed) {
  validate(dims);
  if (!(rho_min >= 1.0) || !(rho_min <= rho_max)) {
    throw std::invalid_argument("generate_ensemble: need 1 <= rho_min <= rho_max");
  }
  if (!(sigma_xi > 0.0)) {
    throw std::invalid_argument("generate_ensemble: sigma_xi must be positive");
  }

  const int dz = dims.regressor_dim();
  const double basis_scale = 1.0 / std::sqrt(static_cast<double>(dz));
  const double weight_scale = 1.0 / std::sqrt(static_cast<double>(dims.ell));
  const CostMatrices witness_cost = CostMatrices::identity(dims.dx, dims.du);

  for (int attempt = 1; attempt <= kGenerationRetryBudget; ++attempt) {
    RngStream basis_stream(seed, StreamPurpose::kEnsemble, attempt, 0);
    RngStream weight_stream(seed, StreamPurpose::kEnsemble, attempt, 1);
    RngStream target_stream(seed, StreamPurpose::kEnsemble, attempt, 2);

    SharedBasisFactorization fact;
    fact.bases.reserve(dims.ell);
    for (int j = 0; j < dims.ell; ++j) {
      fact.bases.push_back(basis_scale * basis_stream.normal_matrix(dz, dims.dx));
    }
    fact.weights = weight_scale * weight_stream.normal_matrix(dims.m, dims.ell);

    // Rescale each weight row so rho(A_i) hits a uniform draw inside the
    // band. Scaling a row of the weight matrix rescales theta_i linearly,
    // so the shared-basis representation stays exact.
    bool degenerate = false;
    for (int i = 0; i < dims.m; ++i) {
      const double rho = spectral_radius(fact.compose(i).A());
      if (!(rho > 1e-12)) {
        degenerate = true;
        break;
      }
      const double target = draw_band_target(rho_min, rho_max, target_stream);
      fact.weights.row(i) *= target / rho;
    }
    if (degenerate) continue;

    Ensemble ensemble;
    ensemble.dims = dims;
    ensemble.truth = fact;
    ensemble.sigma_xi = sigma_xi;
    ensemble.rho_min = rho_min;
    ensemble.rho_max = rho_max;
    ensemble.seed = seed;
    ensemble.systems.reserve(dims.m);

    bool accepted = true;
    for (int i = 0; i < dims.m; ++i) {
      DynamicsParameter theta = fact.compose(i);
      const double rho = spectral_radius(theta.A());
      if (rho < rho_min - 1e-9 || rho > rho_max + 1e-9) {
        accepted = false;
        break;
      }
      // Stabilizability witness: the Riccati iteration converges at the
      // truth exactly when (A_i, B_i) is stabilizable.
      if (!try_solve_dare(theta, witness_cost)) {
        accepted = false;
        break;
      }
      ensemble.systems.push_back(std::move(theta));
    }
    if (accepted) return ensemble;
  }

  throw GenerationError(
      "generate_ensemble: could not satisfy spectral band and stabilizability",
      kGenerationRetryBudget);
}

namespace {

std::string fmt_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void append_flat_row_major(std::string& out, const Eigen::MatrixXd& m) {
  out += '[';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (r != 0 || c != 0) out += ',';
      out += fmt_real(m(r, c));
    }
  }
  out += ']';
}

}  // namespace

std::string serialize_ensemble(const Ensemble& ensemble) {
  std::string out;
  out += "{\n";
  out += "  \"dims\": {\"m\": " + std::to_string(ensemble.dims.m) +
         ", \"dx\": " + std::to_string(ensemble.dims.dx) +
         ", \"du\": " + std::to_string(ensemble.dims.du) +
         ", \"ell\": " + std::to_string(ensemble.dims.ell) + "},\n";
  out += "  \"sigma_xi\": " + fmt_real(ensemble.sigma_xi) + ",\n";
  out += "  \"bases\": [\n";
  for (int j = 0; j < ensemble.truth.num_bases(); ++j) {
    out += "    ";
    append_flat_row_major(out, ensemble.truth.bases[j]);
    out += (j + 1 < ensemble.truth.num_bases()) ? ",\n" : "\n";
  }
  out += "  ],\n";
  out += "  \"weights\": [\n";
  for (Eigen::Index i = 0; i < ensemble.truth.weights.rows(); ++i) {
    out += "    ";
    append_flat_row_major(out, ensemble.truth.weights.row(i));
    out += (i + 1 < ensemble.truth.weights.rows()) ? ",\n" : "\n";
  }
  out += "  ],\n";
  out += "  \"rho_band\": [" + fmt_real(ensemble.rho_min) + ", " +
         fmt_real(ensemble.rho_max) + "],\n";
  out += "  \"seed\": " + std::to_string(ensemble.seed) + "\n";
  out += "}\n";
  return out;
}

Ensemble deserialize_ensemble(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("ensemble parse error: ") + e.what());
  }
  try {
    Ensemble ensemble;
    const auto& dims = doc.at("dims");
    ensemble.dims = Dimensions{dims.at("m").get<int>(), dims.at("dx").get<int>(),
                               dims.at("du").get<int>(), dims.at("ell").get<int>()};
    validate(ensemble.dims);
    ensemble.sigma_xi = doc.at("sigma_xi").get<double>();
    ensemble.rho_min = doc.at("rho_band").at(0).get<double>();
    ensemble.rho_max = doc.at("rho_band").at(1).get<double>();
    ensemble.seed = doc.at("seed").get<std::uint64_t>();

    const int dz = ensemble.dims.regressor_dim();
    for (const auto& flat : doc.at("bases")) {
      if (static_cast<int>(flat.size()) != dz * ensemble.dims.dx) {
        throw IoError("ensemble parse error: basis entry count mismatch");
      }
      Eigen::MatrixXd basis(dz, ensemble.dims.dx);
      int idx = 0;
      for (int r = 0; r < dz; ++r)
        for (int c = 0; c < ensemble.dims.dx; ++c)
          basis(r, c) = flat.at(idx++).get<double>();
      ensemble.truth.bases.push_back(std::move(basis));
    }
    if (ensemble.truth.num_bases() != ensemble.dims.ell) {
      throw IoError("ensemble parse error: expected ell basis matrices");
    }

    const auto& rows = doc.at("weights");
    ensemble.truth.weights.resize(ensemble.dims.m, ensemble.dims.ell);
    if (static_cast<int>(rows.size()) != ensemble.dims.m) {
      throw IoError("ensemble parse error: expected m weight rows");
    }
    for (int i = 0; i < ensemble.dims.m; ++i) {
      if (static_cast<int>(rows.at(i).size()) != ensemble.dims.ell) {
        throw IoError("ensemble parse error: weight row length != ell");
      }
      for (int j = 0; j < ensemble.dims.ell; ++j) {
        ensemble.truth.weights(i, j) = rows.at(i).at(j).get<double>();
      }
    }

    ensemble.systems.reserve(ensemble.dims.m);
    for (int i = 0; i < ensemble.dims.m; ++i) {
      ensemble.systems.push_back(ensemble.truth.compose(i));
    }
    return ensemble;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("ensemble parse error: ") + e.what());
  }
}

void write_ensemble_file(const Ensemble& ensemble, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << serialize_ensemble(ensemble);
  if (!out) throw IoError("write failed: " + path);
}

Ensemble read_ensemble_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_ensemble(buf.str());
}

}  // namespace jointstab
