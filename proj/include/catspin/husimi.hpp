#pragma once

// Husimi Q function on the Bloch sphere: Q(theta, phi) = |<Phi(theta,phi)|psi>|^2
// with Phi the coherent spin state pointing along (theta, phi).

#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "catspin/dicke.hpp"
#include "catspin/parallel.hpp"

namespace catspin {

struct SphereGrid {
  std::vector<double> thetas;
  std::vector<double> phis;

  std::size_t n_theta() const { return thetas.size(); }
  std::size_t n_phi() const { return phis.size(); }

  void validate() const {
    auto check = [](const std::vector<double>& v, double lo, double hi, bool hi_open,
                    const char* what) {
      if (v.size() < 2) throw DomainError(std::string(what) + " axis needs >= 2 points");
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i]) || v[i] < lo || v[i] > hi || (hi_open && v[i] >= hi)) {
          throw DomainError(std::string(what) + " axis value out of range");
        }
        if (i > 0 && !(v[i] > v[i - 1])) {
          throw DomainError(std::string(what) + " axis must be strictly increasing");
        }
      }
    };
    check(thetas, 0.0, std::numbers::pi, false, "theta");
    check(phis, 0.0, 2.0 * std::numbers::pi, true, "phi");
  }
};

// thetas: n_theta points spanning [0, pi] inclusive.
// phis:   n_phi points 2 pi j / n_phi, periodic (2 pi itself excluded).
inline SphereGrid make_grid(int n_theta = 181, int n_phi = 361) {
  if (n_theta < 2 || n_phi < 2) throw DomainError("grid sizes must be >= 2");
  SphereGrid g;
  g.thetas.resize(n_theta);
  g.phis.resize(n_phi);
  for (int i = 0; i < n_theta; ++i) {
    g.thetas[i] = i == n_theta - 1 ? std::numbers::pi
                                   : std::numbers::pi * i / (n_theta - 1);
  }
  for (int j = 0; j < n_phi; ++j) g.phis[j] = 2.0 * std::numbers::pi * j / n_phi;
  return g;
}

struct QpdField {
  SphereGrid grid;
  int n_atoms = 0;
  std::vector<double> values;  // row-major, theta outer

  double at(std::size_t it, std::size_t ip) const {
    return values[it * grid.n_phi() + ip];
  }
};

namespace detail {

// sqrt(C(N,k)) cos^{N-k}(t/2) sin^k(t/2) for k = 0..N, in the log domain.
inline std::vector<double> css_magnitudes(int n, double theta) {
  const double c = std::cos(0.5 * theta);
  const double s = std::sin(0.5 * theta);
  const double inf = std::numeric_limits<double>::infinity();
  const double log_c = c > 0.0 ? std::log(c) : -inf;
  const double log_s = s > 0.0 ? std::log(s) : -inf;
  const double lg_n = std::lgamma(n + 1.0);
  std::vector<double> out(n + 1);
  for (int k = 0; k <= n; ++k) {
    double v = 0.5 * (lg_n - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
    if (n - k > 0) v += (n - k) * log_c;
    if (k > 0) v += k * log_s;
    out[k] = std::exp(v);
  }
  return out;
}

// One theta row: Q(phi) = |sum_k c_k e^{-i k phi}|^2 with
// c_k = b_k(theta) psi_{N-k}; Horner in z = e^{-i phi}.
inline void qpd_row(const SpinState& s, double theta,
                    const std::vector<double>& phis, double* out) {
  const int n = s.dims.n_atoms();
  const auto b = css_magnitudes(n, theta);
  std::vector<cplx> coef(n + 1);
  for (int k = 0; k <= n; ++k) coef[k] = b[k] * s.amps[n - k];
  for (std::size_t j = 0; j < phis.size(); ++j) {
    const cplx z = std::polar(1.0, -phis[j]);
    cplx acc = coef[n];
    for (int k = n - 1; k >= 0; --k) acc = acc * z + coef[k];
    out[j] = std::norm(acc);
  }
}

}  // namespace detail

inline double evaluate_qpd_point(const SpinState& s, double theta, double phi) {
  if (!std::isfinite(theta) || !std::isfinite(phi)) {
    throw DomainError("QPD angles must be finite");
  }
  double q = 0.0;
  detail::qpd_row(s, theta, {phi}, &q);
  return q;
}

inline QpdField qpd_field(const SpinState& s, const SphereGrid& grid,
                          int threads = 1) {
  grid.validate();
  QpdField f{grid, s.dims.n_atoms(),
             std::vector<double>(grid.n_theta() * grid.n_phi())};
  parallel_for(grid.n_theta(), threads, [&](std::size_t it) {
    detail::qpd_row(s, grid.thetas[it], grid.phis, &f.values[it * grid.n_phi()]);
  });
  return f;
}

// (N+1)/(4 pi) * integral of Q over the sphere; 1 for any normalized state.
// Trapezoid in theta (sin theta vanishes at both ends), rectangle rule in phi
// on the periodic grid.
inline double normalization_quadrature(const QpdField& f) {
  const auto& g = f.grid;
  const double d_phi = 2.0 * std::numbers::pi / g.n_phi();
  double total = 0.0;
  for (std::size_t it = 0; it < g.n_theta(); ++it) {
    const double lo = it > 0 ? g.thetas[it - 1] : g.thetas[it];
    const double hi = it + 1 < g.n_theta() ? g.thetas[it + 1] : g.thetas[it];
    const double weight = 0.5 * (hi - lo) * std::sin(g.thetas[it]);
    double row = 0.0;
    for (std::size_t ip = 0; ip < g.n_phi(); ++ip) row += f.at(it, ip);
    total += weight * row * d_phi;
  }
  return (f.n_atoms + 1) / (4.0 * std::numbers::pi) * total;
}

}  // namespace catspin
