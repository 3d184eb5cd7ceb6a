#pragma once

namespace jointstab {

// Problem sizes shared by every module. Field names follow the on-disk
// schema: m systems, dx states, du inputs, ell shared bases.
struct Dimensions {
  int m = 0;
  int dx = 0;
  int du = 0;
  int ell = 0;

  int regressor_dim() const { return dx + du; }
};

// Throws std::invalid_argument unless all fields are strictly positive.
// ell > m makes the sharing vacuous; that is legal but logged to stderr.
void validate(const Dimensions& dims);

}  // namespace jointstab
