#pragma once

// Collective-spin Hilbert space of N two-level atoms restricted to the
// permutation-symmetric (Dicke) manifold, and the three elementary unitaries
// used by every interferometer/clock sequence: rotations, one-axis twisting
// and the dark-zone phase.
//
// Basis convention: amplitude index k <-> |E_k>, the Dicke state with k atoms
// in the upper level, which is the J_z eigenstate with eigenvalue m = k - N/2.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <variant>

#include "catspin/errors.hpp"

namespace catspin {

using cplx = std::complex<double>;

// Largest supported ensemble. The x/y rotation cache is a dense (N+1)^2 real
// eigenvector matrix; at the cap that is ~128 MB and the one-time
// factorization takes on the order of a minute.
inline constexpr int kMaxAtoms = 4000;

class EnsembleDims {
 public:
  explicit EnsembleDims(int n_atoms) : n_(n_atoms) {
    if (n_atoms < 1 || n_atoms > kMaxAtoms) {
      throw DimensionError("ensemble size N=" + std::to_string(n_atoms) +
                           " outside [1, " + std::to_string(kMaxAtoms) + "]");
    }
  }

  int n_atoms() const { return n_; }
  int dim() const { return n_ + 1; }
  double j() const { return 0.5 * n_; }
  // J_z eigenvalue of basis index k. Exact: (2k - N) / 2 is representable.
  double m_of(int k) const { return 0.5 * (2 * k - n_); }

  friend bool operator==(const EnsembleDims&, const EnsembleDims&) = default;

 private:
  int n_;
};

struct SpinState {
  EnsembleDims dims;
  Eigen::VectorXcd amps;

  SpinState(EnsembleDims d, Eigen::VectorXcd a) : dims(d), amps(std::move(a)) {
    if (amps.size() != dims.dim()) {
      throw DimensionError("amplitude vector length " +
                           std::to_string(amps.size()) + " != N+1 = " +
                           std::to_string(dims.dim()));
    }
  }

  double norm() const { return amps.norm(); }
  double population(int k) const { return std::norm(amps[k]); }
};

// |E_k>; k = 0 is |-z> (all atoms down), k = N is |+z>.
inline SpinState basis_state(EnsembleDims dims, int k) {
  if (k < 0 || k > dims.n_atoms()) {
    throw DimensionError("basis index " + std::to_string(k) +
                         " outside [0, N]");
  }
  Eigen::VectorXcd a = Eigen::VectorXcd::Zero(dims.dim());
  a[k] = 1.0;
  return {dims, std::move(a)};
}

enum class Axis { X, Y, Z };

inline char axis_name(Axis a) {
  switch (a) {
    case Axis::X: return 'x';
    case Axis::Y: return 'y';
    case Axis::Z: return 'z';
  }
  return '?';
}

// Cached Dicke-basis representation of J_x, J_y, J_z, J_z^2.
//
// J_x is real symmetric tridiagonal with <E_{k+1}|J_x|E_k> = A_{J,m}/2,
// A_{J,m} = sqrt((J-m)(J+m+1)) = sqrt((N-k)(k+1)). J_y shares the same
// magnitudes with phases -i (raising) / +i (lowering). Matrices are held in
// tridiagonal form; dense copies are produced on request.
//
// J_x = V diag(lambda) V^T is factorized once. J_y is not factorized
// separately: J_y = D J_x D^dagger with D = exp(-i pi/2 J_z), so its
// eigenvectors are D V.
//
// Immutable after construction; safe to share across threads.
class OperatorSet {
 public:
  explicit OperatorSet(EnsembleDims dims) : dims_(dims) {
    const int n = dims.n_atoms();
    const int dim = dims.dim();
    jz_.resize(dim);
    jz_sq_.resize(dim);
    for (int k = 0; k < dim; ++k) {
      const double m = dims.m_of(k);
      jz_[k] = m;
      jz_sq_[k] = m * m;
    }
    off_.resize(n);
    for (int k = 0; k < n; ++k) {
      off_[k] = 0.5 * std::sqrt(static_cast<double>(n - k) * (k + 1));
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver;
    solver.computeFromTridiagonal(Eigen::VectorXd::Zero(dim), off_,
                                  Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) {
      throw Error("J_x eigendecomposition failed for N=" + std::to_string(n));
    }
    // The spectrum of J_x is exactly {-J, ..., J}; replace the computed values
    // with the exact ones once they are confirmed to match.
    eigenvalues_ = solver.eigenvalues();
    for (int k = 0; k < dim; ++k) {
      const double exact = dims.m_of(k);
      if (std::abs(eigenvalues_[k] - exact) > 1e-8 * std::max(1.0, dims.j())) {
        throw Error("J_x spectrum deviates from {-J..J} at index " +
                    std::to_string(k));
      }
      eigenvalues_[k] = exact;
    }
    eigenvectors_ = solver.eigenvectors();

    y_frame_.resize(dim);
    for (int k = 0; k < dim; ++k) {
      y_frame_[k] = std::polar(1.0, -0.5 * std::numbers::pi * jz_[k]);
    }
  }

  const EnsembleDims& dims() const { return dims_; }
  const Eigen::VectorXd& jz_diagonal() const { return jz_; }
  const Eigen::VectorXd& jz_sq_diagonal() const { return jz_sq_; }
  // A_{J,m}/2 for m = -J .. J-1 (index k couples |E_k> and |E_{k+1}>).
  const Eigen::VectorXd& ladder_half() const { return off_; }
  const Eigen::VectorXd& jx_eigenvalues() const { return eigenvalues_; }
  const Eigen::MatrixXd& jx_eigenvectors() const { return eigenvectors_; }
  // Diagonal of exp(-i pi/2 J_z); eigenvectors of J_y are y_frame() .* V.
  const Eigen::VectorXcd& y_frame() const { return y_frame_; }

  Eigen::MatrixXcd jx_dense() const {
    const int dim = dims_.dim();
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
    for (int k = 0; k + 1 < dim; ++k) {
      m(k + 1, k) = off_[k];
      m(k, k + 1) = off_[k];
    }
    return m;
  }

  Eigen::MatrixXcd jy_dense() const {
    const int dim = dims_.dim();
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
    for (int k = 0; k + 1 < dim; ++k) {
      m(k + 1, k) = cplx(0.0, -off_[k]);
      m(k, k + 1) = cplx(0.0, off_[k]);
    }
    return m;
  }

  Eigen::MatrixXcd jz_dense() const {
    return jz_.cast<cplx>().asDiagonal();
  }

  // Tridiagonal products, O(dim).
  Eigen::VectorXcd apply_jx(const Eigen::VectorXcd& v) const {
    check_len(v);
    const int dim = dims_.dim();
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(dim);
    for (int k = 0; k + 1 < dim; ++k) {
      out[k + 1] += off_[k] * v[k];
      out[k] += off_[k] * v[k + 1];
    }
    return out;
  }

  Eigen::VectorXcd apply_jy(const Eigen::VectorXcd& v) const {
    check_len(v);
    const int dim = dims_.dim();
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(dim);
    for (int k = 0; k + 1 < dim; ++k) {
      out[k + 1] += cplx(0.0, -off_[k]) * v[k];
      out[k] += cplx(0.0, off_[k]) * v[k + 1];
    }
    return out;
  }

  Eigen::VectorXcd apply_jz(const Eigen::VectorXcd& v) const {
    check_len(v);
    return jz_.cast<cplx>().cwiseProduct(v);
  }

  // max |[J_x, J_y] - i J_z|, dense; meant for verification at modest N.
  double commutator_residual() const {
    const Eigen::MatrixXcd x = jx_dense();
    const Eigen::MatrixXcd y = jy_dense();
    const Eigen::MatrixXcd r = x * y - y * x - cplx(0.0, 1.0) * jz_dense();
    return r.cwiseAbs().maxCoeff();
  }

  // max |V diag(lambda) V^T - J_x|.
  double jx_reconstruction_residual() const {
    const Eigen::MatrixXd rebuilt =
        eigenvectors_ * eigenvalues_.asDiagonal() * eigenvectors_.transpose();
    return (rebuilt - jx_dense().real()).cwiseAbs().maxCoeff();
  }

  // max |(D V) diag(lambda) (D V)^dagger - J_y|.
  double jy_reconstruction_residual() const {
    const Eigen::MatrixXcd u = y_frame_.asDiagonal() * eigenvectors_.cast<cplx>();
    const Eigen::MatrixXcd rebuilt =
        u * eigenvalues_.cast<cplx>().asDiagonal() * u.adjoint();
    return (rebuilt - jy_dense()).cwiseAbs().maxCoeff();
  }

 private:
  void check_len(const Eigen::VectorXcd& v) const {
    if (v.size() != dims_.dim()) {
      throw DimensionError("vector length does not match operator set");
    }
  }

  EnsembleDims dims_;
  Eigen::VectorXd jz_;
  Eigen::VectorXd jz_sq_;
  Eigen::VectorXd off_;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd eigenvectors_;
  Eigen::VectorXcd y_frame_;
};

inline OperatorSet build_operator_set(EnsembleDims dims) {
  return OperatorSet(dims);
}

namespace detail {

inline void require_same_dims(const SpinState& s, const OperatorSet& ops) {
  if (!(s.dims == ops.dims())) {
    throw DimensionError("state has N=" + std::to_string(s.dims.n_atoms()) +
                         " but operator set has N=" +
                         std::to_string(ops.dims().n_atoms()));
  }
}

inline void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) {
    throw DomainError(std::string(what) + " must be finite");
  }
}

inline void require_sign(int sign, const char* what) {
  if (sign != 1 && sign != -1) {
    throw DomainError(std::string(what) + " must be +1 or -1");
  }
}

// psi <- V diag(exp(-i angle lambda)) V^T psi, with V real.
inline void rotate_in_eigenbasis(const Eigen::MatrixXd& v,
                                 const Eigen::VectorXd& lambda, double angle,
                                 Eigen::VectorXcd& psi) {
  const Eigen::VectorXd re = psi.real();
  const Eigen::VectorXd im = psi.imag();
  Eigen::VectorXd cr = v.transpose() * re;
  Eigen::VectorXd ci = v.transpose() * im;
  for (Eigen::Index k = 0; k < lambda.size(); ++k) {
    const cplx c = cplx(cr[k], ci[k]) * std::polar(1.0, -angle * lambda[k]);
    cr[k] = c.real();
    ci[k] = c.imag();
  }
  const Eigen::VectorXd out_re = v * cr;
  const Eigen::VectorXd out_im = v * ci;
  for (Eigen::Index k = 0; k < psi.size(); ++k) {
    psi[k] = cplx(out_re[k], out_im[k]);
  }
}

}  // namespace detail

// exp(-i angle J_axis) |psi>.
inline SpinState apply_rotation(const SpinState& state, const OperatorSet& ops,
                                Axis axis, double angle) {
  detail::require_same_dims(state, ops);
  detail::require_finite(angle, "rotation angle");
  SpinState out = state;
  if (angle == 0.0) return out;
  switch (axis) {
    case Axis::Z: {
      const auto& m = ops.jz_diagonal();
      for (Eigen::Index k = 0; k < m.size(); ++k) {
        out.amps[k] *= std::polar(1.0, -angle * m[k]);
      }
      break;
    }
    case Axis::X:
      detail::rotate_in_eigenbasis(ops.jx_eigenvectors(), ops.jx_eigenvalues(),
                                   angle, out.amps);
      break;
    case Axis::Y: {
      // exp(-i a J_y) = D exp(-i a J_x) D^dagger.
      const auto& d = ops.y_frame();
      out.amps = d.conjugate().cwiseProduct(out.amps);
      detail::rotate_in_eigenbasis(ops.jx_eigenvectors(), ops.jx_eigenvalues(),
                                   angle, out.amps);
      out.amps = d.cwiseProduct(out.amps);
      break;
    }
  }
  return out;
}

// exp(+i sign mu J_z^2) |psi>. sign = -1 is the squeezing factor
// exp(-i mu J_z^2); sign = +1 undoes it.
inline SpinState apply_oats(const SpinState& state, const OperatorSet& ops,
                            double mu, int sign) {
  detail::require_same_dims(state, ops);
  detail::require_finite(mu, "squeezing parameter mu");
  detail::require_sign(sign, "squeeze sign");
  SpinState out = state;
  const auto& m2 = ops.jz_sq_diagonal();
  for (Eigen::Index k = 0; k < m2.size(); ++k) {
    out.amps[k] *= std::polar(1.0, sign * mu * m2[k]);
  }
  return out;
}

// exp(-i sign phase J_z) |psi>: the phase accumulated in a dark zone.
inline SpinState apply_dark_phase(const SpinState& state, const OperatorSet& ops,
                                  double phase, int sign) {
  detail::require_sign(sign, "dark-phase sign");
  detail::require_finite(phase, "dark phase");
  return apply_rotation(state, ops, Axis::Z, sign * phase);
}

// Coherent spin state pointing along (theta, phi):
//   <E_{N-k}|Phi> = sqrt(C(N,k)) cos^{N-k}(theta/2) sin^k(theta/2) e^{i k phi}.
// Magnitudes are formed in the log domain so large N neither overflows the
// binomial nor underflows the powers prematurely.
inline SpinState css_state(EnsembleDims dims, double theta, double phi) {
  detail::require_finite(theta, "theta");
  detail::require_finite(phi, "phi");
  constexpr double kAngleSlack = 1e-12;
  if (theta < -kAngleSlack || theta > std::numbers::pi + kAngleSlack) {
    throw DomainError("theta must lie in [0, pi]");
  }
  theta = std::clamp(theta, 0.0, std::numbers::pi);
  const int n = dims.n_atoms();
  const double c = std::cos(0.5 * theta);
  const double s = std::sin(0.5 * theta);
  const double log_c = c > 0.0 ? std::log(c) : -std::numeric_limits<double>::infinity();
  const double log_s = s > 0.0 ? std::log(s) : -std::numeric_limits<double>::infinity();
  const double lg_n = std::lgamma(n + 1.0);

  Eigen::VectorXd log_mag(dims.dim());
  for (int k = 0; k <= n; ++k) {
    double v = 0.5 * (lg_n - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0));
    if (n - k > 0) v += (n - k) * log_c;
    if (k > 0) v += k * log_s;
    log_mag[k] = v;
  }
  const double peak = log_mag.maxCoeff();

  Eigen::VectorXcd amps(dims.dim());
  for (int k = 0; k <= n; ++k) {
    amps[n - k] = std::polar(std::exp(log_mag[k] - peak), k * phi);
  }
  amps /= amps.norm();
  return {dims, std::move(amps)};
}

// ---------------------------------------------------------------------------
// Pulses

struct Rotate {
  Axis axis;
  double angle;
};

// exp(+i sign mu J_z^2). mu is the default; protocol runs may override it.
struct Squeeze {
  double mu;
  int sign;
};

// exp(-i sign fraction phi J_z) where phi is the scan phase of the run.
struct DarkPhase {
  double fraction;
  int sign;
};

using Pulse = std::variant<Rotate, Squeeze, DarkPhase>;

inline void validate_pulse(const Pulse& p) {
  std::visit(
      [](const auto& q) {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, Rotate>) {
          detail::require_finite(q.angle, "rotation angle");
        } else if constexpr (std::is_same_v<T, Squeeze>) {
          detail::require_finite(q.mu, "squeezing parameter mu");
          detail::require_sign(q.sign, "squeeze sign");
        } else {
          if (!(q.fraction > 0.0 && q.fraction <= 1.0)) {
            throw DomainError("dark-phase fraction must lie in (0, 1]");
          }
          detail::require_sign(q.sign, "dark-phase sign");
        }
      },
      p);
}

inline SpinState apply_pulse(const SpinState& state, const OperatorSet& ops,
                             const Pulse& pulse, double phi,
                             const double* mu_override = nullptr) {
  return std::visit(
      [&](const auto& q) -> SpinState {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, Rotate>) {
          return apply_rotation(state, ops, q.axis, q.angle);
        } else if constexpr (std::is_same_v<T, Squeeze>) {
          return apply_oats(state, ops, mu_override ? *mu_override : q.mu,
                            q.sign);
        } else {
          return apply_dark_phase(state, ops, q.fraction * phi, q.sign);
        }
      },
      pulse);
}

}  // namespace catspin
