#pragma once

// Brute-force reference: evolve the full 2^N product space of N spin-1/2
// atoms with dense collective operators and a Pade matrix exponential per
// pulse, then project onto the symmetric subspace. Shares no numerics with
// the Dicke-basis path beyond the pulse list itself.

#include <unsupported/Eigen/MatrixFunctions>

#include <bit>
#include <cmath>
#include <optional>

#include "catspin/protocol.hpp"

namespace catspin {

inline constexpr int kOracleMaxAtoms = 4;

struct ProductOperators {
  Eigen::MatrixXcd jx, jy, jz;
};

// Basis state s: bit i set means atom i is in the upper level.
inline ProductOperators product_operators(int n_atoms) {
  const int dim = 1 << n_atoms;
  ProductOperators o{Eigen::MatrixXcd::Zero(dim, dim),
                     Eigen::MatrixXcd::Zero(dim, dim),
                     Eigen::MatrixXcd::Zero(dim, dim)};
  const cplx i(0.0, 1.0);
  for (int s = 0; s < dim; ++s) {
    for (int a = 0; a < n_atoms; ++a) {
      const int bit = 1 << a;
      const bool up = (s & bit) != 0;
      const int t = s ^ bit;
      // sigma_x / 2 flips; sigma_y / 2 flips with <up|.|down> = -i/2.
      o.jx(t, s) += 0.5;
      o.jy(t, s) += up ? 0.5 * i : -0.5 * i;
      o.jz(s, s) += up ? 0.5 : -0.5;
    }
  }
  return o;
}

struct OracleResult {
  Eigen::VectorXcd dicke_amps;
  // Norm of the component outside the symmetric subspace.
  double leakage;
};

inline OracleResult oracle_run(const ProtocolSpec& spec, int n_atoms,
                               double phi,
                               std::optional<double> mu_override = std::nullopt) {
  if (n_atoms < 1 || n_atoms > kOracleMaxAtoms) {
    throw DimensionError("product-space oracle supports 1 <= N <= " +
                         std::to_string(kOracleMaxAtoms));
  }
  spec.validate();
  const auto ops = product_operators(n_atoms);
  const int dim = 1 << n_atoms;
  const cplx i(0.0, 1.0);
  const Eigen::MatrixXcd jz2 = ops.jz * ops.jz;

  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(dim);
  psi[0] = 1.0;
  for (const auto& pulse : spec.pulses) {
    Eigen::MatrixXcd gen;
    if (const auto* r = std::get_if<Rotate>(&pulse)) {
      const Eigen::MatrixXcd& j =
          r->axis == Axis::X ? ops.jx : (r->axis == Axis::Y ? ops.jy : ops.jz);
      gen = -i * r->angle * j;
    } else if (const auto* q = std::get_if<Squeeze>(&pulse)) {
      const double mu = mu_override.value_or(q->mu);
      gen = i * (q->sign * mu) * jz2;
    } else {
      const auto& d = std::get<DarkPhase>(pulse);
      gen = -i * (d.sign * d.fraction * phi) * ops.jz;
    }
    const Eigen::MatrixXcd u = gen.exp();
    psi = u * psi;
  }

  OracleResult out{Eigen::VectorXcd::Zero(n_atoms + 1), 0.0};
  for (int s = 0; s < dim; ++s) {
    out.dicke_amps[std::popcount(static_cast<unsigned>(s))] += psi[s];
  }
  for (int n = 0; n <= n_atoms; ++n) {
    const double c = std::exp(std::lgamma(n_atoms + 1.0) - std::lgamma(n + 1.0) -
                              std::lgamma(n_atoms - n + 1.0));
    out.dicke_amps[n] /= std::sqrt(c);
  }
  Eigen::VectorXcd residual = psi;
  for (int s = 0; s < dim; ++s) {
    const int n = std::popcount(static_cast<unsigned>(s));
    const double c = std::exp(std::lgamma(n_atoms + 1.0) - std::lgamma(n + 1.0) -
                              std::lgamma(n_atoms - n + 1.0));
    residual[s] -= out.dicke_amps[n] / std::sqrt(c);
  }
  out.leakage = residual.norm();
  return out;
}

}  // namespace catspin
