// Prints one PASS/FAIL line per acceptance criterion and exits nonzero if any
// criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

#include "catspin/product_oracle.hpp"
#include "test_support.hpp"

using namespace catspin;
using namespace catspin::testing;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

double max_err(const std::vector<double>& a, const std::function<double(std::size_t)>& f) {
  double e = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) e = std::max(e, std::abs(a[i] - f(i)));
  return e;
}

void c1(Verdict& v) {
  const auto phis = linspace(-kPi, kPi, 1001);
  for (int n : {4, 10, 40}) {
    const OperatorSet ops{EnsembleDims(n)};
    const auto cd = fringe_scan(builtin(ProtocolId::Scain), ops, phis);
    ProtocolParams p;
    p.detection = Detection::collective(0);
    const auto csd = fringe_scan(builtin(ProtocolId::Scain, p), ops, phis);
    std::vector<double> a, b;
    for (const auto& pt : cd) a.push_back(pt.signal);
    for (const auto& pt : csd) b.push_back(pt.signal);
    const double ea = max_err(a, [&](std::size_t i) { return -0.5 * n * std::cos(n * phis[i]); });
    const double eb = max_err(b, [&](std::size_t i) {
      const double c = std::cos(0.5 * n * phis[i]);
      return c * c;
    });
    v.detail << " N=" << n << " cd_err=" << fmt(ea) << " csd_err=" << fmt(eb);
    v.check(ea < 1e-9 && eb < 1e-9, "fringe law N=" + std::to_string(n));
  }
}

double peak_lambda(const ProtocolSpec& spec, const OperatorSet& ops,
                   const std::vector<double>& window, const ScanOptions& opt) {
  double best = 0.0;
  for (const auto& pt : fringe_scan(spec, ops, window, opt)) {
    if (pt.lambda) best = std::max(best, *pt.lambda);
  }
  return best;
}

void c2(Verdict& v) {
  const auto window = sensitivity_window();
  const double n40 = 40, n41 = 41;
  const OperatorSet even{EnsembleDims(40)}, odd{EnsembleDims(41)};
  ScanOptions opt;
  opt.threads = default_thread_count();
  for (const auto& [ops, n] : {std::pair{&even, n40}, std::pair{&odd, n41}}) {
    const double l = peak_lambda(builtin(ProtocolId::Crain), *ops, window, opt);
    v.detail << " CRAIN(" << n << ")=" << fmt(l);
    v.check(std::abs(l - std::sqrt(n)) <= 1e-6 * std::sqrt(n), "CRAIN N=" + fmt(n));
  }
  const double le = peak_lambda(builtin(ProtocolId::Scain), even, window, opt);
  const double lo = peak_lambda(builtin(ProtocolId::Scain), odd, window, opt);
  v.detail << " SCAIN(40)=" << fmt(le) << " SCAIN(41)=" << fmt(lo);
  v.check(std::abs(le - 40) <= 1e-6 * 40, "even SCAIN at N");
  v.check(std::abs(lo / std::sqrt(41.0) - 1.0) <= 0.05, "odd SCAIN at sqrt N");
}

void c3(Verdict& v) {
  std::vector<double> mus;
  for (int i = 0; i <= 25; ++i) mus.push_back((0.2 + 0.01 * i) * kPi);
  ScanOptions opt;
  opt.threads = default_thread_count();
  const auto window = sensitivity_window();
  for (int n : {40, 41}) {
    const OperatorSet ops{EnsembleDims(n)};
    const auto r = sensitivity_scan_mu(builtin(ProtocolId::Scain), ops, mus, window, opt);
    double mean = 0.0;
    for (const auto& x : r) mean += x.lambda.value_or(0.0) / n;
    mean /= static_cast<double>(r.size());
    v.detail << " N=" << n << " mean=" << fmt(mean);
    v.check(mean >= 0.66 && mean <= 0.76, "plateau N=" + std::to_string(n));
  }
}

void c4(Verdict& v) {
  for (double n : {40.0, 41.0, 1e4}) {
    const double avg = parity_average(n, std::sqrt(n));
    v.check(std::abs(avg - std::sqrt((n * n + n) / 2)) <= 1e-12 * avg, "formula N=" + fmt(n));
  }
  const double ratio = parity_average(1e4, 100.0) / (1e4 / std::sqrt(2.0));
  v.detail << " ratio(1e4)=" << fmt(ratio);
  v.check(std::abs(ratio - 1.0) <= 1e-4, "N/sqrt2 ratio");
}

void c5(Verdict& v) {
  auto g = rng(2024);
  const OperatorSet one{EnsembleDims(1)};
  double e_id = 0.0, e_var = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int n = uniform_int(g, 1, 64);
    const OperatorSet ops{EnsembleDims(n)};
    const double theta = uniform(g, 0.0, kPi), phi = uniform(g, -kPi, kPi);
    auto s = css_state(ops.dims(), theta, phi);
    auto a = css_state(one.dims(), theta, phi);
    for (const auto& r : random_rotations(g, 6)) {
      s = apply_rotation(s, ops, r.axis, r.angle);
      a = apply_rotation(a, one, r.axis, r.angle);
    }
    const double j = 0.5 * n;
    double weighted = 0.0;
    for (int k = 0; k <= n; ++k) weighted += (n - k) * s.population(k);
    e_id = std::max(e_id, std::abs((j - expect_jz(s)) - weighted));
    e_var = std::max(e_var, std::abs(std::sqrt(std::max(0.0, variance_jz(s))) -
                                     std::sqrt(n * std::max(0.0, variance_jz(a)))));
  }
  v.detail << " identity_err=" << fmt(e_id) << " variance_err=" << fmt(e_var);
  v.check(e_id <= 1e-10, "operator identity");
  v.check(e_var <= 1e-9, "variance scaling");
}

void c6(Verdict& v) {
  auto g = rng(6);
  double worst = 0.0, leak = 0.0;
  for (int n = 1; n <= 4; ++n) {
    const OperatorSet ops{EnsembleDims(n)};
    for (ProtocolId id : {ProtocolId::Crain, ProtocolId::Scain, ProtocolId::Cac,
                          ProtocolId::Cosac, ProtocolId::Scac}) {
      const auto spec = builtin(id);
      for (int t = 0; t < 20; ++t) {
        const double phi = uniform(g, -kPi, kPi);
        const auto o = oracle_run(spec, n, phi);
        worst = std::max(worst, max_abs_diff(o.dicke_amps, run(spec, ops, phi).amps));
        leak = std::max(leak, o.leakage);
      }
    }
  }
  v.detail << " max_diff=" << fmt(worst) << " max_leakage=" << fmt(leak);
  v.check(worst <= 1e-10 && leak <= 1e-10, "oracle match");
}

void c7(Verdict& v) {
  const auto phis = linspace(-kPi, kPi, 201);
  double ecos = 0.0, ecac = 0.0;
  for (int n = 1; n <= 100; ++n) {
    const OperatorSet ops{EnsembleDims(n)};
    const auto cosac = fringe_scan(builtin(ProtocolId::Cosac), ops, phis);
    const auto cac = fringe_scan(builtin(ProtocolId::Cac), ops, phis);
    for (std::size_t i = 0; i < phis.size(); ++i) {
      const double c = std::cos(0.5 * phis[i]);
      ecos = std::max(ecos, std::abs(cosac[i].signal - std::pow(c, 2 * n)));
      ecac = std::max(ecac, std::abs(cac[i].signal - n * c * c));
    }
  }
  v.detail << " cosac_err=" << fmt(ecos) << " cac_err=" << fmt(ecac);
  v.check(ecos <= 1e-9 && ecac <= 1e-9, "clock closed forms");
}

void c8(Verdict& v) {
  const OperatorSet ops{EnsembleDims(41)};
  const auto phis = linspace(-kPi, kPi, 4001);
  ScanOptions opt;
  opt.threads = default_thread_count();
  const auto wc = central_fringe_fwhm(fringe_scan(builtin(ProtocolId::Crain), ops, phis, opt));
  const auto ws = central_fringe_fwhm(fringe_scan(builtin(ProtocolId::Scain), ops, phis, opt));
  v.check(wc && ws, "widths defined");
  if (!wc || !ws) return;
  const double ratio = *ws / *wc, rn = std::sqrt(41.0);
  v.detail << " fwhm_ratio=" << fmt(ratio) << " band=[" << fmt(0.5 / rn) << ", "
           << fmt(2 / rn) << "]";
  v.check(ratio >= 0.5 / rn && ratio <= 2 / rn, "odd narrowing band");
}

void c9(Verdict& v) {
  const double chi = chi_engineering(100.0, 1e-3, 20e-6, 1e-5);
  v.detail << " chi=" << fmt(chi);
  v.check(chi >= 0.5e8 && chi <= 2e8, "chi anchor");

  const double d10 = delta_tilde_at_fixed_probe(1e-4);
  const double t_ref = squeezing_time(chi);
  const double t_big = squeezing_time(chi_engineering(d10, 1e-3, 200e-6, 1e-4));
  const double t_pow = squeezing_time(chi_engineering(d10, 1e-2, 200e-6, 1e-4));
  v.detail << " t_sc=" << fmt(t_ref) << "/" << fmt(t_big) << "/" << fmt(t_pow);
  v.check(std::abs(t_ref / 15e-9 - 1) <= 0.1, "t_sc 15 ns");
  v.check(std::abs(t_big / 15e-6 - 1) <= 0.1, "t_sc 15 us");
  v.check(std::abs(t_pow / 0.15e-6 - 1) <= 0.1, "t_sc 0.15 us");

  const auto b = improvement_factor(1e7, 0.01, optimal_detuning(1e7, 0.01).value);
  v.detail << " F=" << fmt(b.f_db) << "dB";
  v.check(b.valid && std::abs(b.f_db - 70.0) <= 1.0, "F within 1 dB of 70");

  double worst = 0.0;
  for (double cn : {1e3, 1e4, 1e5, 1e6, 1e7}) {
    const double n = 1e7, c = cn / n;
    const auto bb = improvement_factor(n, c, optimal_detuning(n, c).value);
    worst = std::max(worst, std::abs(theta_closed_form(cn) / bb.theta_frac - 1.0));
  }
  v.detail << " theta_closed_form_max_rel_err=" << fmt(worst);
  v.check(worst <= 0.01, "theta closed form within 1% for N*C >= 1e3");
}

void c10(Verdict& v) {
  auto g = rng(10);
  bool exact = true;
  for (int t = 0; t < 200; ++t) {
    const MomentSet m0{uniform(g, -5, 5), uniform(g, -5, 5), uniform(g, 0, 50),
                       uniform(g, 0, 50), uniform(g, -5, 5), uniform(g, 0, 50)};
    const auto m = decay_moments(m0, uniform(g, 0.0, 3.0), uniform(g, 0.0, 4.0));
    exact = exact && m.jz_mean == m0.jz_mean && m.jz_sq == m0.jz_sq &&
            std::abs((m.jx_sq + m.jy_sq) - (m0.jx_sq + m0.jy_sq)) <=
                1e-14 * (m0.jx_sq + m0.jy_sq);
  }
  v.check(exact, "conservation");

  // Large-J form <Jx^2> = (J/2)(1 + 2 J gamma t); residual must be O((gamma t)^2).
  double worst_order = 1e300;
  for (double j : {20.0, 1e3, 5e6}) {
    const auto m0 = css_y_moments(j);
    auto residual = [&](double gt) {
      return std::abs(decay_moments(m0, gt, 1.0).jx_sq - 0.5 * j * (1 + 2 * j * gt));
    };
    worst_order = std::min(worst_order, residual(1e-4) / residual(1e-5));
  }
  v.detail << " residual_shrink_per_decade=" << fmt(worst_order) << " (quadratic: 100)";
  v.check(worst_order >= 50.0, "second-order agreement");
}

void c11(Verdict& v) {
  const auto grid = make_grid(361, 721);
  const OperatorSet ops{EnsembleDims(40)};
  const auto spec = builtin(ProtocolId::Scain);
  double worst = 0.0;
  for (char stage = 'A'; stage <= 'J'; ++stage) {
    const auto s = run(spec, ops, 0.5 * kPi / 40, std::nullopt, stage_pulse_count(spec, stage));
    const double q = normalization_quadrature(qpd_field(s, grid, default_thread_count()));
    worst = std::max(worst, std::abs(q - 1.0));
  }
  v.detail << " max_dev=" << fmt(worst);
  v.check(worst <= 1e-3, "normalization");
}

void c12(Verdict& v) {
  const double n = 1e4, f = 1.01;
  auto crossover = [](const std::string& name, double nn) {
    for (const auto& r : noise_model_table(nn)) {
      if (r.protocol == name) return noise_crossover(r, nn);
    }
    return std::nan("");
  };
  const std::vector<std::pair<std::string, double>> expected = {
      {"TACT", 0.0}, {"CSD-SCAIN", 0.0}, {"CRAIN", 0.5}, {"ESP", 0.5}, {"CD-SCAIN", 1.0}};
  for (const auto& [name, slope] : expected) {
    const double x = crossover(name, n);
    const double k = std::log(crossover(name, n * f) / crossover(name, n / f)) /
                     std::log(f * f);
    v.detail << " " << name << "=" << fmt(x) << "~N^" << fmt(k);
    v.check(std::abs(k - slope) <= 0.01, name + " exponent");
  }
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, void (*)(Verdict&)>> criteria = {
      {"SCAIN fringe law", c1},          {"sensitivity endpoints", c2},
      {"intermediate plateau", c3},      {"parity average", c4},
      {"detection identity", c5},        {"product-space oracle", c6},
      {"clock closed forms", c7},        {"odd central fringe", c8},
      {"cavity anchors", c9},            {"moment decay", c10},
      {"Husimi normalization", c11},     {"excess-noise orderings", c12}};
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      criteria[i].second(v);
    } catch (const std::exception& e) {
      v.check(false, std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (!v.pass) ++failures;
    std::printf("%s %2zu %-24s (%.2fs)%s\n", v.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), secs, v.detail.str().c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
