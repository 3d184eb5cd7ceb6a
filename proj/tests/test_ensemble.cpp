#include <doctest.h>

#include <cstring>
#include <vector>

#include "jointstab/ensemble.hpp"
#include "jointstab/errors.hpp"
#include "jointstab/rng.hpp"

using namespace jointstab;

namespace {

bool bit_identical(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

}  // namespace

TEST_CASE("compose_dynamics: identity combination returns the basis") {
  SharedBasisFactorization fact;
  fact.bases.push_back(Eigen::MatrixXd::Random(5, 3));
  fact.weights = Eigen::MatrixXd::Constant(1, 1, 1.0);
  CHECK(bit_identical(compose_dynamics(fact, 0).theta, fact.bases[0]));
}

TEST_CASE("compose_dynamics: opposite weights on equal bases cancel") {
  SharedBasisFactorization fact;
  const Eigen::MatrixXd W = Eigen::MatrixXd::Random(4, 2);
  fact.bases = {W, W};
  fact.weights.resize(1, 2);
  fact.weights << 1.0, -1.0;
  CHECK(compose_dynamics(fact, 0).theta.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("compose_dynamics matches an entrywise hand sum") {
  RngStream stream(5, StreamPurpose::kEnsemble);
  SharedBasisFactorization fact;
  fact.bases = {stream.normal_matrix(3, 2), stream.normal_matrix(3, 2)};
  fact.weights.resize(1, 2);
  fact.weights << 0.5, 2.0;
  const Eigen::MatrixXd composed = compose_dynamics(fact, 0).theta;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 2; ++c) {
      const double expected = 0.5 * fact.bases[0](r, c) + 2.0 * fact.bases[1](r, c);
      CHECK(composed(r, c) == doctest::Approx(expected).epsilon(1e-15));
    }
  }
}

TEST_CASE("compose_dynamics rejects out-of-range indices") {
  SharedBasisFactorization fact;
  fact.bases.push_back(Eigen::MatrixXd::Zero(2, 1));
  fact.weights = Eigen::MatrixXd::Ones(1, 1);
  CHECK_THROWS_AS(compose_dynamics(fact, -1), std::invalid_argument);
  CHECK_THROWS_AS(compose_dynamics(fact, 1), std::invalid_argument);
}

TEST_CASE("step: identity transition keeps the state") {
  DynamicsParameter theta = DynamicsParameter::from_state_space(
      Eigen::MatrixXd::Identity(3, 3), Eigen::MatrixXd::Zero(3, 2));
  const Eigen::VectorXd x = Eigen::VectorXd::Random(3);
  const auto result = step(theta, x, Eigen::VectorXd::Random(2), Eigen::VectorXd::Zero(3));
  CHECK((result.state - x).cwiseAbs().maxCoeff() < 1e-15);
  CHECK_FALSE(result.saturated);
}

TEST_CASE("step: pure input map passes the input through") {
  DynamicsParameter theta = DynamicsParameter::from_state_space(
      Eigen::MatrixXd::Zero(3, 3), Eigen::MatrixXd::Identity(3, 3));
  const Eigen::VectorXd u = Eigen::VectorXd::Random(3);
  const auto result = step(theta, Eigen::VectorXd::Random(3), u, Eigen::VectorXd::Zero(3));
  CHECK((result.state - u).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("step matches a naive triple-loop oracle") {
  RngStream stream(17, StreamPurpose::kNoise);
  const Eigen::MatrixXd A = stream.normal_matrix(4, 4);
  const Eigen::MatrixXd B = stream.normal_matrix(4, 2);
  const Eigen::VectorXd x = stream.normal_vector(4);
  const Eigen::VectorXd u = stream.normal_vector(2);
  const Eigen::VectorXd xi = stream.normal_vector(4);
  const auto result = step(DynamicsParameter::from_state_space(A, B), x, u, xi);
  for (int r = 0; r < 4; ++r) {
    double expected = xi[r];
    for (int c = 0; c < 4; ++c) expected += A(r, c) * x[c];
    for (int c = 0; c < 2; ++c) expected += B(r, c) * u[c];
    CHECK(result.state[r] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("step flags saturation beyond the overflow guard") {
  DynamicsParameter theta = DynamicsParameter::from_state_space(
      Eigen::MatrixXd::Identity(1, 1) * 2.0, Eigen::MatrixXd::Zero(1, 1));
  const auto result = step(theta, Eigen::VectorXd::Constant(1, 0.9e100),
                           Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1));
  CHECK(result.saturated);
}

TEST_CASE("spectral_radius: closed forms") {
  CHECK(spectral_radius(Eigen::MatrixXd::Identity(4, 4)) == doctest::Approx(1.0));
  Eigen::MatrixXd nilpotent(2, 2);
  nilpotent << 0, 1, 0, 0;
  CHECK(spectral_radius(nilpotent) == doctest::Approx(0.0));
  Eigen::MatrixXd swap(2, 2);
  swap << 0, 2, 2, 0;
  CHECK(spectral_radius(swap) == doctest::Approx(2.0));
}

TEST_CASE("spectral_radius is similarity invariant") {
  RngStream stream(23, StreamPurpose::kEnsemble);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd M = stream.normal_matrix(6, 6);
    // Well-conditioned similarity: identity plus a small random part.
    const Eigen::MatrixXd S =
        Eigen::MatrixXd::Identity(6, 6) + 0.1 * stream.normal_matrix(6, 6);
    const Eigen::MatrixXd transformed = S * M * S.inverse();
    CHECK(spectral_radius(transformed) ==
          doctest::Approx(spectral_radius(M)).epsilon(1e-8));
  }
}

TEST_CASE("generate_ensemble: scalar system lands in the band") {
  const Ensemble ensemble = generate_ensemble({1, 1, 1, 1}, 1.2, 1.5, 1.0, 99);
  const double a = ensemble.systems[0].A()(0, 0);
  CHECK(std::abs(a) >= 1.2);
  CHECK(std::abs(a) <= 1.5);
  CHECK(ensemble.systems[0].B()(0, 0) != 0.0);
}

TEST_CASE("generate_ensemble: full-scale defaults satisfy all invariants") {
  const Dimensions dims{100, 10, 6, 5};
  const Ensemble ensemble = generate_ensemble(dims, 1.2, 1.5, 2.0, 7);
  REQUIRE(static_cast<int>(ensemble.systems.size()) == 100);
  for (int i = 0; i < dims.m; ++i) {
    // Composition consistency: stored parameters are the composed ones.
    CHECK(bit_identical(ensemble.systems[i].theta, ensemble.truth.compose(i).theta));
    const double rho = spectral_radius(ensemble.systems[i].A());
    CHECK(rho >= 1.2);
    CHECK(rho <= 1.5);
  }
}

TEST_CASE("generate_ensemble is deterministic") {
  const Dimensions dims{8, 4, 2, 2};
  const Ensemble a = generate_ensemble(dims, 1.2, 1.5, 2.0, 31);
  const Ensemble b = generate_ensemble(dims, 1.2, 1.5, 2.0, 31);
  CHECK(bit_identical(a.truth.weights, b.truth.weights));
  for (int j = 0; j < dims.ell; ++j) {
    CHECK(bit_identical(a.truth.bases[j], b.truth.bases[j]));
  }
  CHECK(serialize_ensemble(a) == serialize_ensemble(b));
  const Ensemble c = generate_ensemble(dims, 1.2, 1.5, 2.0, 32);
  CHECK_FALSE(bit_identical(a.truth.weights, c.truth.weights));
}

TEST_CASE("generate_ensemble rejects bad parameters") {
  CHECK_THROWS_AS(generate_ensemble({1, 1, 1, 1}, 0.5, 1.5, 1.0, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(generate_ensemble({1, 1, 1, 1}, 1.5, 1.2, 1.0, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(generate_ensemble({1, 1, 1, 1}, 1.2, 1.5, 0.0, 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(generate_ensemble({0, 1, 1, 1}, 1.2, 1.5, 1.0, 0),
                  std::invalid_argument);
}

TEST_CASE("open-loop simulation grows from a generic start") {
  const Ensemble ensemble = generate_ensemble({3, 5, 2, 2}, 1.2, 1.5, 2.0, 55);
  RngStream stream(1, StreamPurpose::kNoise);
  for (int i = 0; i < 3; ++i) {
    const auto& theta = ensemble.systems[i];
    bool grew = false;
    for (int trial = 0; trial < 10 && !grew; ++trial) {
      Eigen::VectorXd x = stream.normal_vector(5);
      const double x0_norm = x.norm();
      for (int t = 0; t < 30; ++t) {
        x = step(theta, x, Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(5)).state;
      }
      grew = x.norm() > 10.0 * x0_norm;
    }
    CHECK(grew);
  }
}

TEST_CASE("ensemble serialization round-trips exactly") {
  const Ensemble original = generate_ensemble({4, 3, 2, 2}, 1.2, 1.5, 2.0, 12);
  const std::string text = serialize_ensemble(original);
  const Ensemble parsed = deserialize_ensemble(text);
  CHECK(parsed.dims.m == original.dims.m);
  CHECK(parsed.dims.dx == original.dims.dx);
  CHECK(parsed.dims.du == original.dims.du);
  CHECK(parsed.dims.ell == original.dims.ell);
  CHECK(parsed.sigma_xi == original.sigma_xi);
  CHECK(parsed.rho_min == original.rho_min);
  CHECK(parsed.rho_max == original.rho_max);
  CHECK(parsed.seed == original.seed);
  CHECK(bit_identical(parsed.truth.weights, original.truth.weights));
  for (int j = 0; j < original.dims.ell; ++j) {
    CHECK(bit_identical(parsed.truth.bases[j], original.truth.bases[j]));
  }
  for (int i = 0; i < original.dims.m; ++i) {
    CHECK(bit_identical(parsed.systems[i].theta, original.systems[i].theta));
  }
  CHECK(serialize_ensemble(parsed) == text);
}

TEST_CASE("deserialize_ensemble rejects malformed documents") {
  CHECK_THROWS_AS(deserialize_ensemble("not json"), IoError);
  CHECK_THROWS_AS(deserialize_ensemble("{}"), IoError);
  CHECK_THROWS_AS(
      deserialize_ensemble(R"({"dims":{"m":1,"dx":1,"du":1,"ell":1},
        "sigma_xi":1.0,"bases":[[1.0]],"weights":[[1.0]],
        "rho_band":[1.2,1.5],"seed":0})"),
      IoError);  // basis entry count mismatch: needs (dx+du)*dx = 2
}
