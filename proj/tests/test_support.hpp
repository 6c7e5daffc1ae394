#pragma once

// Seeded generators and small helpers shared by the test binaries.

#include <random>
#include <vector>

#include "catspin/catspin.hpp"

namespace catspin::testing {

inline constexpr double kPi = std::numbers::pi;

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline double uniform(std::mt19937_64& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline int uniform_int(std::mt19937_64& g, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(g);
}

inline Axis random_axis(std::mt19937_64& g, bool allow_z = true) {
  return static_cast<Axis>(uniform_int(g, 0, allow_z ? 2 : 1));
}

// Rotations only: keeps a CSS a CSS.
inline std::vector<Rotate> random_rotations(std::mt19937_64& g, int count) {
  std::vector<Rotate> out;
  for (int i = 0; i < count; ++i) {
    out.push_back({random_axis(g), uniform(g, -2.0 * kPi, 2.0 * kPi)});
  }
  return out;
}

inline Pulse random_pulse(std::mt19937_64& g) {
  switch (uniform_int(g, 0, 2)) {
    case 0: return Rotate{random_axis(g), uniform(g, -2.0 * kPi, 2.0 * kPi)};
    case 1: return Squeeze{uniform(g, 0.0, 0.5 * kPi), uniform_int(g, 0, 1) ? 1 : -1};
    default: return DarkPhase{uniform(g, 0.05, 1.0), uniform_int(g, 0, 1) ? 1 : -1};
  }
}

inline SpinState random_state(EnsembleDims dims, std::mt19937_64& g) {
  std::normal_distribution<double> n01;
  Eigen::VectorXcd a(dims.dim());
  for (int k = 0; k < dims.dim(); ++k) a[k] = cplx(n01(g), n01(g));
  a /= a.norm();
  return {dims, a};
}

inline double expect(const SpinState& s, const Eigen::MatrixXcd& op) {
  return (s.amps.adjoint() * op * s.amps)(0, 0).real();
}

// <J_x^2 + J_y^2 + J_z^2> via the tridiagonal products.
inline double total_spin(const SpinState& s, const OperatorSet& ops) {
  const auto x = ops.apply_jx(s.amps);
  const auto y = ops.apply_jy(s.amps);
  const auto z = ops.apply_jz(s.amps);
  return x.squaredNorm() + y.squaredNorm() + z.squaredNorm();
}

inline double max_abs_diff(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

inline std::vector<double> linspace(double lo, double hi, int count) {
  std::vector<double> v(count);
  for (int i = 0; i < count; ++i) {
    v[i] = count == 1 ? lo : lo + (hi - lo) * i / (count - 1);
  }
  return v;
}

// Overlap <Phi(theta, phi)|psi>.
inline cplx css_overlap(const SpinState& s, double theta, double phi) {
  const auto c = css_state(s.dims, theta, phi);
  return c.amps.dot(s.amps);
}

}  // namespace catspin::testing
