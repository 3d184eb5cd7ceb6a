#pragma once

#include <cmath>
#include <cstdint>

#include <Eigen/Dense>

namespace jointstab {

// Random draws are organized into independent streams keyed by
// (master seed, purpose, index a, index b). Per-epoch feedback matrices use
// the epoch as index, per-step draws (dither, process noise) use
// (system, time). Changing the horizon or the epoch count therefore never
// perturbs draws of unrelated streams, which keeps sweep configurations
// paired sample-by-sample.
enum class StreamPurpose : std::uint64_t {
  kEnsemble = 1,
  kFeedback = 2,
  kDither = 3,
  kNoise = 4,
  kFitInit = 5,
  kSeedDerivation = 6,
};

namespace detail {

// SplitMix64 finalizer (Steele, Lea, Flood 2014).
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_key(std::uint64_t seed, std::uint64_t word) {
  std::uint64_t s = seed ^ (word + 0x9E3779B97F4A7C15ULL);
  return splitmix64(s);
}

}  // namespace detail

// Counter-based stream: the key is hashed into an initial state and draws
// advance a SplitMix64 sequence. Cheap to construct, so call sites key a
// fresh stream per (purpose, system, time) rather than sharing one.
class RngStream {
 public:
  RngStream(std::uint64_t master, StreamPurpose purpose, std::uint64_t a = 0,
            std::uint64_t b = 0) {
    std::uint64_t s = detail::mix_key(master, static_cast<std::uint64_t>(purpose));
    s = detail::mix_key(s, a);
    state_ = detail::mix_key(s, b);
  }

  std::uint64_t next_u64() { return detail::splitmix64(state_); }

  // Uniform on [0, 1), 53 random mantissa bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller. Two uniforms per draw; no cached
  // second value, so the draw sequence is a pure function of the counter.
  double next_normal() {
    const double u1 =
        (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  Eigen::VectorXd normal_vector(int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = next_normal();
    return v;
  }

  // Entries drawn row-major.
  Eigen::MatrixXd normal_matrix(int rows, int cols) {
    Eigen::MatrixXd m(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) m(r, c) = next_normal();
    return m;
  }

 private:
  std::uint64_t state_;
};

// Stable 64-bit seed for a sub-computation (e.g. the per-seed-index run of a
// sweep), derived so that unrelated salts give independent seeds.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t salt_a,
                                 std::uint64_t salt_b = 0) {
  return RngStream(master, StreamPurpose::kSeedDerivation, salt_a, salt_b).next_u64();
}

}  // namespace jointstab
