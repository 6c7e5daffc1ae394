#pragma once

// Signals, noise, slopes and sensitivities read out of final states.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "catspin/parallel.hpp"
#include "catspin/protocol.hpp"

namespace catspin {

inline double expect_jz(const SpinState& s) {
  double acc = 0.0;
  for (int k = 0; k < s.dims.dim(); ++k) acc += s.population(k) * s.dims.m_of(k);
  return acc;
}

// Two-pass form; the one-pass <J_z^2> - <J_z>^2 cancels catastrophically when
// the state sits near an extremal Dicke state.
inline double variance_jz(const SpinState& s) {
  const double mean = expect_jz(s);
  double acc = 0.0;
  for (int k = 0; k < s.dims.dim(); ++k) {
    const double d = s.dims.m_of(k) - mean;
    acc += s.population(k) * d * d;
  }
  return acc;
}

inline double collective_population(const SpinState& s, int m_index) {
  if (m_index < 0 || m_index > s.dims.n_atoms()) {
    throw DomainError("collective state index " + std::to_string(m_index) +
                      " outside [0, N]");
  }
  return s.population(m_index);
}

inline Eigen::VectorXd collective_distribution(const SpinState& s) {
  return s.amps.cwiseAbs2();
}

struct Measurement {
  double signal;
  double sds;
};

inline Measurement measure(const SpinState& s, const Detection& d) {
  switch (d.kind) {
    case Detection::Kind::Conventional:
      return {expect_jz(s), std::sqrt(variance_jz(s))};
    case Detection::Kind::UpCount:
      return {s.dims.j() + expect_jz(s), std::sqrt(variance_jz(s))};
    case Detection::Kind::Collective: {
      const double p = collective_population(s, d.resolve_index(s.dims.n_atoms()));
      return {p, std::sqrt(std::max(0.0, p * (1.0 - p)))};
    }
  }
  return {0.0, 0.0};
}

// ---------------------------------------------------------------------------
// Slopes and sensitivity. Sensitivity is |dS/dphi| / Delta S in units where
// the scale factor between phase and the physical rotation/frequency is 1.

inline constexpr const char* kSensitivityNormalization =
    "dimensionless phase sensitivity (rotation/frequency scale factor = 1)";

inline double fd_step(int n_atoms) {
  return std::min(1e-4, std::numbers::pi / (200.0 * n_atoms));
}

// Below this noise floor the ratio is 0/0 and reported as undefined.
inline double sds_floor(int n_atoms) { return 1e-9 * n_atoms; }

struct ScanOptions {
  int threads = 1;
  std::optional<double> mu_override;
  // Central difference refined by one Richardson step, (4 D(h/2) - D(h)) / 3.
  // Plain central differences leave a relative slope error of order
  // (N h)^2 / 6, a few ppm at the default step.
  bool richardson = true;
};

struct FringePoint {
  double phi = 0.0;
  double signal = 0.0;
  double sds = 0.0;
  double pgs = 0.0;
  std::optional<double> lambda;
};

inline double slope_at(const PreparedRun& run, double phi, bool richardson) {
  const auto& det = run.spec().detection;
  const double h = fd_step(run.ops().dims().n_atoms());
  auto sig = [&](double p) { return measure(run.at(p), det).signal; };
  const double d_h = (sig(phi + h) - sig(phi - h)) / (2.0 * h);
  if (!richardson) return d_h;
  const double d_h2 = (sig(phi + 0.5 * h) - sig(phi - 0.5 * h)) / h;
  return (4.0 * d_h2 - d_h) / 3.0;
}

inline FringePoint evaluate_point(const PreparedRun& run, double phi,
                                  bool richardson = true) {
  const auto m = measure(run.at(phi), run.spec().detection);
  FringePoint pt;
  pt.phi = phi;
  pt.signal = m.signal;
  pt.sds = m.sds;
  pt.pgs = slope_at(run, phi, richardson);
  if (m.sds >= sds_floor(run.ops().dims().n_atoms())) {
    pt.lambda = std::abs(pt.pgs) / m.sds;
  }
  return pt;
}

inline std::vector<FringePoint> fringe_scan(const ProtocolSpec& spec,
                                            const OperatorSet& ops,
                                            const std::vector<double>& phi_grid,
                                            const ScanOptions& opt = {}) {
  for (std::size_t i = 0; i < phi_grid.size(); ++i) {
    if (!std::isfinite(phi_grid[i])) throw DomainError("phi grid must be finite");
    if (i > 0 && phi_grid[i] < phi_grid[i - 1]) {
      throw DomainError("phi grid must be sorted");
    }
  }
  const PreparedRun run(spec, ops, opt.mu_override);
  std::vector<FringePoint> out(phi_grid.size());
  parallel_for(phi_grid.size(), opt.threads, [&](std::size_t i) {
    out[i] = evaluate_point(run, phi_grid[i], opt.richardson);
  });
  return out;
}

struct SensitivityResult {
  std::optional<double> lambda;
  double phi_star = 0.0;
  double mu = 0.0;
  double signal = 0.0;
  double sds = 0.0;
  double pgs = 0.0;
};

inline double spec_mu(const ProtocolSpec& spec, std::optional<double> mu_override) {
  if (mu_override) return *mu_override;
  for (const auto& p : spec.pulses) {
    if (const auto* q = std::get_if<Squeeze>(&p)) return q->mu;
  }
  return 0.0;
}

inline SensitivityResult sensitivity_at(const ProtocolSpec& spec,
                                        const OperatorSet& ops, double phi,
                                        const ScanOptions& opt = {}) {
  const PreparedRun run(spec, ops, opt.mu_override);
  const auto pt = evaluate_point(run, phi, opt.richardson);
  return {pt.lambda, phi, spec_mu(spec, opt.mu_override), pt.signal, pt.sds,
          pt.pgs};
}

// phi_k = (pi/2) k / points for k = 1..points: the half-open window (0, pi/2]
// on the positive side of the central fringe.
inline std::vector<double> sensitivity_window(int points = 2001,
                                              double upper = 0.5 * std::numbers::pi) {
  if (points < 1) throw DomainError("sensitivity window needs at least one point");
  std::vector<double> w(points);
  for (int k = 1; k <= points; ++k) w[k - 1] = upper * k / points;
  return w;
}

// Per mu: the largest defined sensitivity over the window (first maximum on
// ties). Entries with no defined point in the window stay undefined.
inline std::vector<SensitivityResult> sensitivity_scan_mu(
    const ProtocolSpec& spec, const OperatorSet& ops,
    const std::vector<double>& mu_grid, const std::vector<double>& phi_window,
    const ScanOptions& opt = {}) {
  for (double mu : mu_grid) {
    if (!(mu >= -1e-12 && mu <= 0.5 * std::numbers::pi + 1e-12)) {
      throw DomainError("mu grid must lie in [0, pi/2]");
    }
  }
  std::vector<SensitivityResult> out(mu_grid.size());
  for (std::size_t m = 0; m < mu_grid.size(); ++m) {
    const PreparedRun run(spec, ops, mu_grid[m]);
    std::vector<FringePoint> pts(phi_window.size());
    parallel_for(phi_window.size(), opt.threads, [&](std::size_t i) {
      pts[i] = evaluate_point(run, phi_window[i], opt.richardson);
    });
    SensitivityResult best;
    best.mu = mu_grid[m];
    for (const auto& pt : pts) {
      if (pt.lambda && (!best.lambda || *pt.lambda > *best.lambda)) {
        best.lambda = pt.lambda;
        best.phi_star = pt.phi;
        best.signal = pt.signal;
        best.sds = pt.sds;
        best.pgs = pt.pgs;
      }
    }
    out[m] = best;
  }
  return out;
}

inline double parity_average(double lambda_even, double lambda_odd) {
  if (!(lambda_even >= 0.0) || !(lambda_odd >= 0.0)) {
    throw DomainError("parity_average needs non-negative sensitivities");
  }
  return std::sqrt(0.5 * (lambda_even * lambda_even + lambda_odd * lambda_odd));
}

// Full width at half depth of the fringe that contains phi = 0. The half
// level sits midway between S(0) and the opposite extremum of the scan; the
// crossings nearest to 0 on each side are linearly interpolated. Undefined if
// the scan is flat or either side never crosses.
inline std::optional<double> central_fringe_fwhm(const std::vector<FringePoint>& pts) {
  if (pts.size() < 3) return std::nullopt;
  std::size_t c = 0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (std::abs(pts[i].phi) < std::abs(pts[c].phi)) c = i;
  }
  double lo = pts[0].signal, hi = pts[0].signal;
  for (const auto& p : pts) {
    lo = std::min(lo, p.signal);
    hi = std::max(hi, p.signal);
  }
  if (hi - lo <= 1e-12 * std::max(1.0, std::abs(hi))) return std::nullopt;
  const double s0 = pts[c].signal;
  const double opposite = (s0 <= 0.5 * (lo + hi)) ? hi : lo;
  const double half = 0.5 * (s0 + opposite);
  const bool dip = opposite > s0;

  auto crosses = [&](double s) { return dip ? s >= half : s <= half; };
  auto interp = [&](std::size_t a, std::size_t b) {
    const double sa = pts[a].signal, sb = pts[b].signal;
    const double t = (sb == sa) ? 0.0 : (half - sa) / (sb - sa);
    return pts[a].phi + t * (pts[b].phi - pts[a].phi);
  };

  std::optional<double> right, left;
  for (std::size_t i = c + 1; i < pts.size(); ++i) {
    if (crosses(pts[i].signal)) {
      right = interp(i - 1, i);
      break;
    }
  }
  for (std::size_t i = c; i-- > 0;) {
    if (crosses(pts[i].signal)) {
      left = interp(i + 1, i);
      break;
    }
  }
  if (!left || !right) return std::nullopt;
  return *right - *left;
}

// ---------------------------------------------------------------------------
// Excess-noise robustness. Each protocol is summarized by how its slope and
// quantum-projection noise compare with a conventional Ramsey interferometer
// at its operating point (slope N/2, noise sqrt(N)/2). Added technical noise
// Delta S_EN then degrades the sensitivity as
//   Lambda = slope / sqrt(noise^2 + Delta S_EN^2).

struct NoiseModelRow {
  std::string protocol;
  double pgs_scale;
  double sds_scale;
};

inline std::vector<NoiseModelRow> noise_model_table(double n_atoms) {
  if (!(n_atoms >= 1.0)) throw DomainError("noise model needs N >= 1");
  const double n = n_atoms;
  return {
      {"CRAIN", 1.0, 1.0},
      {"TACT", 1.0, 1.0 / std::sqrt(0.5 * n)},
      {"ESP", std::sqrt(0.5 * n), 1.0},
      {"CD-SCAIN", n, std::sqrt(n)},
      {"CSD-SCAIN", 1.0, 1.0 / std::sqrt(n)},
  };
}

// Odd-N counterparts of the cat-state rows: conventional detection falls back
// to a Ramsey-like slope/noise pair and collective detection has no slope.
inline NoiseModelRow odd_parity_row(const NoiseModelRow& even, double n_atoms) {
  if (even.protocol == "CD-SCAIN") {
    return {"CD-SCAIN (odd N)", std::sqrt(n_atoms), std::sqrt(n_atoms)};
  }
  if (even.protocol == "CSD-SCAIN") return {"CSD-SCAIN (odd N)", 0.0, 1.0};
  return even;
}

inline void validate_row(const NoiseModelRow& r, bool allow_zero_slope = false) {
  if (!(r.sds_scale > 0.0) || !(allow_zero_slope ? r.pgs_scale >= 0.0 : r.pgs_scale > 0.0)) {
    throw DomainError("noise model scales must be positive");
  }
}

inline double noise_free_lambda(const NoiseModelRow& row, double n_atoms) {
  return row.pgs_scale * (0.5 * n_atoms) / (row.sds_scale * 0.5 * std::sqrt(n_atoms));
}

// Delta S_EN at which the excess noise equals the projection noise (rho = 1).
inline double noise_crossover(const NoiseModelRow& row, double n_atoms) {
  validate_row(row, true);
  return row.sds_scale * 0.5 * std::sqrt(n_atoms);
}

inline std::vector<double> excess_noise_curve(const NoiseModelRow& row,
                                              double n_atoms,
                                              const std::vector<double>& en_grid) {
  validate_row(row, true);
  const double slope = row.pgs_scale * 0.5 * n_atoms;
  const double qpn = row.sds_scale * 0.5 * std::sqrt(n_atoms);
  std::vector<double> out(en_grid.size());
  for (std::size_t i = 0; i < en_grid.size(); ++i) {
    if (!(en_grid[i] >= 0.0)) throw DomainError("excess noise must be >= 0");
    out[i] = slope / std::hypot(qpn, en_grid[i]);
  }
  return out;
}

// Slope/noise pair measured at an operating point, expressed against the
// Ramsey reference of the same N.
inline NoiseModelRow noise_row_from_point(std::string name, double pgs, double sds,
                                          int n_atoms) {
  if (!(sds > 0.0)) throw DomainError("measured noise must be positive");
  return {std::move(name), std::abs(pgs) / (0.5 * n_atoms),
          sds / (0.5 * std::sqrt(static_cast<double>(n_atoms)))};
}

}  // namespace catspin
