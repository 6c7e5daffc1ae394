#pragma once

// Cavity-feedback one-axis twisting: design formulas and the decoherence
// budget for a cat-state interferometer whose squeeze/unsqueeze steps are
// driven through a symmetric two-mirror cavity (kappa_ex = kappa_o = kappa/2).
//
// Units: rates in 1/s, lengths in m, power in W. Quantities normalized to the
// cavity half-width kappa/2 carry a _tilde suffix.

#include <nlohmann/json.hpp>

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "catspin/errors.hpp"

namespace catspin {

struct CavityParams {
  double kappa = 0.0;        // total intensity decay rate
  double delta_tilde = 0.0;  // probe detuning / (kappa/2)
  double xi_sq = 0.0;        // incident photon flux
  double cooperativity = 0.0;
  double gamma_sp = 0.0;     // excited-state decay rate
  double delta_opt = 0.0;    // optical detuning from the excited state
  double mirror_T = 0.0;
  double mode_side_D = 0.0;
  double power = 0.0;

  void validate() const {
    for (double r : {kappa, xi_sq, cooperativity, gamma_sp, mirror_T, mode_side_D, power}) {
      if (!(r >= 0.0) || !std::isfinite(r)) {
        throw DomainError("cavity rates, flux and geometry must be finite and >= 0");
      }
    }
    if (!std::isfinite(delta_tilde) || !std::isfinite(delta_opt)) {
      throw DomainError("detunings must be finite");
    }
  }
};

inline CavityParams cavity_params_from_json(const nlohmann::json& j) {
  CavityParams p;
  try {
    p.kappa = j.value("kappa", p.kappa);
    p.delta_tilde = j.value("delta_tilde", p.delta_tilde);
    p.xi_sq = j.value("xi_sq", p.xi_sq);
    p.cooperativity = j.value("cooperativity", p.cooperativity);
    p.gamma_sp = j.value("gamma_sp", p.gamma_sp);
    p.delta_opt = j.value("delta_opt", p.delta_opt);
    p.mirror_T = j.value("mirror_T", p.mirror_T);
    p.mode_side_D = j.value("mode_side_D", p.mode_side_D);
    p.power = j.value("power", p.power);
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("malformed cavity parameters: ") + e.what());
  }
  p.validate();
  return p;
}

inline nlohmann::json to_json(const CavityParams& p) {
  return {{"kappa", p.kappa},       {"delta_tilde", p.delta_tilde},
          {"xi_sq", p.xi_sq},       {"cooperativity", p.cooperativity},
          {"gamma_sp", p.gamma_sp}, {"delta_opt", p.delta_opt},
          {"mirror_T", p.mirror_T}, {"mode_side_D", p.mode_side_D},
          {"power", p.power}};
}

// Intracavity field amplitude in the steady state, zeta^2 being the photon
// number: sqrt(kappa/2) xi / (kappa/2 - i delta), delta = delta_tilde kappa/2.
inline std::complex<double> steady_state_amplitude(const CavityParams& p) {
  if (!(p.kappa > 0.0)) throw DomainError("steady state needs kappa > 0");
  const double half = 0.5 * p.kappa;
  const double delta = p.delta_tilde * half;
  return std::sqrt(half) * std::sqrt(p.xi_sq) / std::complex<double>(half, -delta);
}

// delta_tilde (1 + delta_tilde^2)^-2; peaks at |delta_tilde| = 1/sqrt(3).
inline double detuning_profile(double delta_tilde) {
  const double d = 1.0 + delta_tilde * delta_tilde;
  return delta_tilde / (d * d);
}

// chi from the single-photon differential light shift eps_tilde.
inline double squeezing_rate_from_light_shift(double delta_tilde, double xi_sq,
                                              double eps_tilde) {
  return detuning_profile(delta_tilde) * xi_sq * eps_tilde * eps_tilde;
}

// chi from the cooperativity. Odd in delta_tilde: flipping the probe detuning
// turns squeezing into unsqueezing.
inline double squeezing_rate_chi(const CavityParams& p) {
  p.validate();
  if (p.delta_opt == 0.0) throw DomainError("optical detuning must be nonzero");
  const double r = p.gamma_sp / p.delta_opt;
  return detuning_profile(p.delta_tilde) * p.xi_sq * p.cooperativity *
         p.cooperativity * r * r;
}

// Reference operating point of the engineering scaling law.
struct ChiReference {
  static constexpr double chi = 1e8;       // 1/s
  static constexpr double delta_tilde = 100.0;
  static constexpr double power = 1e-3;    // W
  static constexpr double side = 20e-6;    // m
  static constexpr double mirror_T = 1e-5;
  static constexpr double effective_area = 3.6e-12;  // m^2, Rb-87 Lambda leg
};

// Single-atom cooperativity of a two-mirror cavity with mode area D^2.
inline double cooperativity_from_geometry(double side_D, double mirror_T,
                                          double effective_area = ChiReference::effective_area) {
  if (!(side_D > 0.0) || !(mirror_T > 0.0)) {
    throw DomainError("mode side and transmittivity must be positive");
  }
  return effective_area / (side_D * side_D * mirror_T);
}

// Scaling law around the reference point, valid for delta_tilde >> 1.
inline double chi_engineering(double delta_tilde, double power, double side_D,
                              double mirror_T) {
  if (!(delta_tilde > 0.0) || !(side_D > 0.0) || !(mirror_T > 0.0) || !(power >= 0.0)) {
    throw DomainError("engineering chi needs delta_tilde, D, T > 0 and P >= 0");
  }
  using R = ChiReference;
  const double d = R::delta_tilde / delta_tilde;
  const double pw = power / R::power;
  const double s = R::side / side_D;
  const double t = R::mirror_T / mirror_T;
  return R::chi * d * d * d * pw * pw * (s * s) * (s * s) * t * t;
}

// The cavity linewidth is proportional to T, so at a fixed absolute probe
// detuning the normalized detuning falls as 1/T.
inline double delta_tilde_at_fixed_probe(double mirror_T) {
  if (!(mirror_T > 0.0)) throw DomainError("transmittivity must be positive");
  return ChiReference::delta_tilde * ChiReference::mirror_T / mirror_T;
}

// Time to accumulate twisting strength mu_target (pi/2 for the cat state).
inline double squeezing_time(double chi, double mu_target = 0.5 * std::numbers::pi) {
  if (!(chi > 0.0)) throw DomainError("squeezing time needs chi > 0");
  return mu_target / chi;
}

// Photons scattered per atom per second.
inline double scattering_rate(double chi, double cooperativity, double delta_tilde) {
  if (!(cooperativity > 0.0)) throw DomainError("scattering rate needs C > 0");
  if (delta_tilde == 0.0) throw DomainError("scattering rate needs delta_tilde != 0");
  return chi / (2.0 * cooperativity) * (1.0 + delta_tilde * delta_tilde) /
         std::abs(delta_tilde);
}

inline double scattering_rate(const CavityParams& p, double chi) {
  return scattering_rate(chi, p.cooperativity, p.delta_tilde);
}

// Dephasing rate of the J_z Lindblad channel that accompanies the twist.
inline double cavity_dephasing_rate(double chi, double delta_tilde) {
  if (delta_tilde == 0.0) throw DomainError("dephasing rate needs delta_tilde != 0");
  return 2.0 * chi / delta_tilde;
}

// ---------------------------------------------------------------------------
// Moments under pure J_z dephasing, d rho/dt = gamma (J_z rho J_z - {J_z^2, rho}/2).
// Transverse means decay at gamma/2; J_x^2 and J_y^2 relax toward each other
// at 2 gamma with their sum fixed; J_z moments are untouched.

struct MomentSet {
  double jx_mean = 0.0;
  double jy_mean = 0.0;
  double jx_sq = 0.0;
  double jy_sq = 0.0;
  double jz_mean = 0.0;
  double jz_sq = 0.0;
};

// Moments of the coherent spin state along +y.
inline MomentSet css_y_moments(double j) {
  return {0.0, j, 0.5 * j, j * j, 0.0, 0.5 * j};
}

inline MomentSet decay_moments(const MomentSet& m0, double gamma, double t) {
  if (!(t >= 0.0)) throw DomainError("decay time must be >= 0");
  if (!(gamma * t >= 0.0)) throw DomainError("gamma * t must be >= 0");
  const double gt = gamma * t;
  MomentSet m = m0;
  const double mean_factor = std::exp(-0.5 * gt);
  m.jx_mean = m0.jx_mean * mean_factor;
  m.jy_mean = m0.jy_mean * mean_factor;
  // D(t) - D0 = D0 (e^{-2 gt} - 1); split it symmetrically so the sum stays put.
  const double shift = 0.5 * (m0.jx_sq - m0.jy_sq) * std::expm1(-2.0 * gt);
  m.jx_sq = m0.jx_sq + shift;
  m.jy_sq = m0.jy_sq - shift;
  return m;
}

// ---------------------------------------------------------------------------
// Improvement factor F = (Lambda / Lambda_SQL)^2 with cavity decay and
// spontaneous emission folded in, evaluated at the working point
// phi_o = pi / (2 N_eff). The J_x variance growth is counted in full as signal
// variance, which makes the budget an upper bound on the degradation.

struct FidelityBudget {
  double n_atoms = 0.0;
  double cooperativity = 0.0;
  double delta_tilde = 0.0;
  double chi_t = 0.0;
  double gamma_t = 0.0;
  double ds_cav_sq = 0.0;
  double ds_se_sq = 0.0;
  double dn_cav = 0.0;
  double dn_se = 0.0;
  double theta_frac = 0.0;
  double n_eff = 0.0;
  bool valid = false;       // false when theta_frac >= 1
  double f_linear = std::numeric_limits<double>::quiet_NaN();
  double f_db = std::numeric_limits<double>::quiet_NaN();
  // First order in theta_frac, before the detuning is optimized.
  double f_first_order = std::numeric_limits<double>::quiet_NaN();

  double f_ideal_db() const { return 10.0 * std::log10(n_atoms); }

  const FidelityBudget& require_valid() const {
    if (!valid) {
      throw BudgetError("coherent-atom loss fraction " + std::to_string(theta_frac) +
                        " >= 1: no cat state survives (N=" + std::to_string(n_atoms) +
                        ", C=" + std::to_string(cooperativity) +
                        ", delta_tilde=" + std::to_string(delta_tilde) + ")");
    }
    return *this;
  }
};

inline double to_db(double linear) { return 10.0 * std::log10(linear); }

inline FidelityBudget improvement_factor(double n_atoms, double cooperativity,
                                         double delta_tilde,
                                         double chi_t = 0.5 * std::numbers::pi) {
  if (!(n_atoms >= 1.0) || !std::isfinite(n_atoms)) throw DomainError("budget needs N >= 1");
  if (!(cooperativity > 0.0)) throw DomainError("budget needs C > 0");
  if (!(delta_tilde > 0.0)) throw DomainError("budget needs delta_tilde > 0");
  if (!(chi_t > 0.0)) throw DomainError("budget needs chi t > 0");

  FidelityBudget b;
  const double n = n_atoms;
  b.n_atoms = n;
  b.cooperativity = cooperativity;
  b.delta_tilde = delta_tilde;
  b.chi_t = chi_t;
  b.gamma_t = 2.0 * chi_t / delta_tilde;
  // Squeeze and unsqueeze contribute equally.
  b.ds_cav_sq = 0.5 * n * n * b.gamma_t;
  b.dn_cav = 0.5 * n * b.gamma_t;
  b.ds_se_sq = n * chi_t / (8.0 * cooperativity) * std::abs(delta_tilde);
  b.dn_se = std::sqrt(b.ds_se_sq);
  b.theta_frac = (b.dn_cav + b.dn_se) / n;
  b.n_eff = n * (1.0 - b.theta_frac);
  b.valid = b.theta_frac < 1.0;
  if (b.valid) {
    const double ne = b.n_eff;
    const double inv = 4.0 * n / (ne * ne * ne * ne) *
                       (0.25 * ne * ne + b.ds_cav_sq + b.ds_se_sq);
    b.f_linear = 1.0 / inv;
    b.f_db = to_db(b.f_linear);
  }
  const double th = b.theta_frac;
  b.f_first_order =
      1.0 / ((1.0 + 2.0 * th) / n +
             4.0 * chi_t / (n * n) * (1.0 + 4.0 * th) *
                 (n / std::abs(delta_tilde) + std::abs(delta_tilde) / (8.0 * cooperativity)));
  return b;
}

struct DetuningChoice {
  double value;
  // Set when N C < 1, outside the regime where the optimum was derived.
  bool warning;
};

// Minimizes N/|d| + |d|/(8 C) over d: |d| = sqrt(8 N C).
inline DetuningChoice optimal_detuning(double n_atoms, double cooperativity) {
  if (!(n_atoms >= 1.0) || !(cooperativity > 0.0)) {
    throw DomainError("optimal detuning needs N >= 1 and C > 0");
  }
  const double cn = n_atoms * cooperativity;
  return {std::sqrt(8.0 * cn), cn < 1.0};
}

// Closed forms at the optimal detuning, to leading order for N C >> 1.
inline double theta_closed_form(double collective_cooperativity) {
  if (!(collective_cooperativity > 0.0)) throw DomainError("needs N C > 0");
  const double pi = std::numbers::pi;
  return std::pow(pi * pi / (32.0 * collective_cooperativity), 0.25);
}

inline double improvement_closed_form(double n_atoms, double theta) {
  return n_atoms / (1.0 + 2.0 * theta + 8.0 * theta * theta +
                    32.0 * theta * theta * theta);
}

struct FidelitySweepRow {
  double cooperativity;
  double theta;
  double f_exact_db;
  double f_approx_db;
  double f_ideal_db;
  bool detuning_warning;
};

// One row per cooperativity, each at its own optimal detuning. Throws
// BudgetError if any point has lost all coherent atoms.
inline std::vector<FidelitySweepRow> fidelity_sweep(double n_atoms,
                                                    const std::vector<double>& coops) {
  std::vector<FidelitySweepRow> rows;
  rows.reserve(coops.size());
  for (double c : coops) {
    const auto det = optimal_detuning(n_atoms, c);
    const auto b = improvement_factor(n_atoms, c, det.value);
    b.require_valid();
    const double th = theta_closed_form(n_atoms * c);
    rows.push_back({c, b.theta_frac, b.f_db,
                    to_db(improvement_closed_form(n_atoms, th)), b.f_ideal_db(),
                    det.warning});
  }
  return rows;
}

struct Separation {
  double distance;
  bool distinguishable;
};

// Spatial separation of the two cat components after moving apart at the
// recoil velocity for the given time; an emitted photon can tell them apart
// once this reaches its wavelength.
inline Separation wavepacket_separation(double recoil_velocity, double duration,
                                        double photon_wavelength) {
  if (!(recoil_velocity >= 0.0) || !(duration >= 0.0) || !(photon_wavelength >= 0.0)) {
    throw DomainError("wavepacket separation inputs must be >= 0");
  }
  const double d = recoil_velocity * duration;
  return {d, d >= photon_wavelength};
}

}  // namespace catspin
