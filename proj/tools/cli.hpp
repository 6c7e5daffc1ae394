#pragma once

// Command-line front end. Flags are gathered as raw strings from an optional
// JSON config file and then from argv (argv wins), and only then parsed and
// validated, so both sources go through the same checks.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <bit>
#include <chrono>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "catspin/catspin.hpp"

namespace catspin::cli {

// Malformed or out-of-range invocation; maps to exit status 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// --help; carries the rendered help text.
class HelpRequest : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum ExitCode { kOk = 0, kUsage = 1, kRuntime = 2 };

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  int count = 1;
};

struct RunConfig {
  std::string command;

  // Protocol selection.
  std::string protocol = "scain";
  std::optional<std::string> spec_file;
  int n_atoms = 40;
  double mu = 0.5 * std::numbers::pi;
  Axis ara = Axis::X;
  int xi = -1;
  std::optional<Detection> detection;

  Range phi_range{-std::numbers::pi, std::numbers::pi, 1001};
  Range mu_range{0.0, 0.5 * std::numbers::pi, 101};
  Range phi_window{0.0, 0.5 * std::numbers::pi, 2001};
  bool normalize = false;
  double rate_scale = 1.0;

  std::optional<char> stage;
  double phi = 0.0;
  int grid_theta = 181;
  int grid_phi = 361;

  double n_real = 1e7;  // cavity / excess-noise: N may be large
  std::optional<Range> coop_range;
  bool log_spacing = false;
  std::optional<double> coop;
  std::optional<double> delta_tilde;
  std::optional<std::string> params_file;

  Range en_range{1.0, 1e8, 161};

  std::optional<double> even;
  std::optional<double> odd;

  std::optional<std::string> out;
  std::string format = "csv";
  int threads = 1;

  // Every flag value after merging, for the manifest.
  std::map<std::string, std::string> raw;
};

// ---------------------------------------------------------------------------
// Value parsing

inline double parse_number(const std::string& flag, std::string_view s) {
  double v = 0.0;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  if (!s.empty() && *b == '+') ++b;
  const auto res = std::from_chars(b, e, v);
  if (res.ec != std::errc() || res.ptr != e || !std::isfinite(v)) {
    throw UsageError("--" + flag + ": '" + std::string(s) + "' is not a number");
  }
  return v;
}

// "0.5pi", "pi", "-pi", "-0.05pi", or a plain number of radians.
inline double parse_angle(const std::string& flag, std::string_view s) {
  if (s.size() >= 2 && s.substr(s.size() - 2) == "pi") {
    std::string_view coef = s.substr(0, s.size() - 2);
    if (!coef.empty() && coef.back() == '*') coef.remove_suffix(1);
    double c = 1.0;
    if (coef == "-") {
      c = -1.0;
    } else if (!coef.empty() && coef != "+") {
      c = parse_number(flag, coef);
    }
    return c * std::numbers::pi;
  }
  return parse_number(flag, s);
}

inline int parse_int(const std::string& flag, std::string_view s) {
  const double v = parse_number(flag, s);
  if (v != std::floor(v) || std::abs(v) > 2e9) {
    throw UsageError("--" + flag + ": '" + std::string(s) + "' is not an integer");
  }
  return static_cast<int>(v);
}

inline Range parse_range(const std::string& flag, const std::string& s, bool angles) {
  const auto c1 = s.find(':');
  const auto c2 = c1 == std::string::npos ? c1 : s.find(':', c1 + 1);
  if (c2 == std::string::npos || s.find(':', c2 + 1) != std::string::npos) {
    throw UsageError("--" + flag + ": expected lo:hi:count, got '" + s + "'");
  }
  auto val = [&](std::string_view part) {
    return angles ? parse_angle(flag, part) : parse_number(flag, part);
  };
  Range r;
  r.lo = val(std::string_view(s).substr(0, c1));
  r.hi = val(std::string_view(s).substr(c1 + 1, c2 - c1 - 1));
  r.count = parse_int(flag, std::string_view(s).substr(c2 + 1));
  if (r.count < 1) throw UsageError("--" + flag + ": count must be >= 1");
  if (r.hi < r.lo) throw UsageError("--" + flag + ": hi must be >= lo");
  return r;
}

inline bool parse_bool(const std::string& flag, const std::string& s) {
  if (s == "true" || s == "1" || s.empty()) return true;
  if (s == "false" || s == "0") return false;
  throw UsageError("--" + flag + ": expected true/false, got '" + s + "'");
}

// Inclusive endpoints; a single point sits at lo.
inline std::vector<double> expand(const Range& r, bool log_spacing = false) {
  std::vector<double> v(r.count);
  if (log_spacing && !(r.lo > 0.0)) throw UsageError("log spacing needs lo > 0");
  for (int i = 0; i < r.count; ++i) {
    const double t = r.count == 1 ? 0.0 : static_cast<double>(i) / (r.count - 1);
    if (log_spacing) {
      v[i] = std::exp(std::log(r.lo) + t * (std::log(r.hi) - std::log(r.lo)));
    } else {
      v[i] = i == r.count - 1 && r.count > 1 ? r.hi : r.lo + t * (r.hi - r.lo);
    }
  }
  return v;
}

// lo + (hi - lo) k / count for k = 1..count: excludes lo, includes hi.
inline std::vector<double> expand_half_open(const Range& r) {
  std::vector<double> v(r.count);
  for (int k = 1; k <= r.count; ++k) {
    v[k - 1] = k == r.count ? r.hi : r.lo + (r.hi - r.lo) * k / r.count;
  }
  return v;
}

// ---------------------------------------------------------------------------
// Flag tables

inline const std::vector<std::string>& value_flags() {
  static const std::vector<std::string> f = {
      "protocol", "spec", "n", "mu", "ara", "xi", "detection", "csd-index",
      "phi-range", "mu-range", "phi-window", "rate-scale", "stage", "phi",
      "grid", "coop-range", "coop", "delta-tilde", "params", "en-range",
      "even", "odd", "out", "format", "threads"};
  return f;
}

inline const std::vector<std::string>& bool_flags() {
  static const std::vector<std::string> f = {"normalize", "log"};
  return f;
}

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> c = {"fringe", "sensitivity", "qpd",
                                             "collective", "cavity", "excess-noise",
                                             "parity-average"};
  return c;
}

inline std::set<std::string> allowed_flags(const std::string& command) {
  std::set<std::string> s = {"out", "format", "threads"};
  const std::vector<std::string> protocol = {"protocol", "spec", "n", "mu", "ara",
                                             "xi", "detection", "csd-index"};
  auto add = [&](std::initializer_list<std::string> l) { s.insert(l.begin(), l.end()); };
  if (command == "fringe" || command == "sensitivity" || command == "qpd" ||
      command == "collective") {
    s.insert(protocol.begin(), protocol.end());
  }
  if (command == "fringe") add({"phi-range", "rate-scale"});
  if (command == "sensitivity") add({"mu-range", "phi-window", "normalize", "rate-scale"});
  if (command == "qpd") add({"stage", "phi", "grid"});
  if (command == "collective") add({"stage", "phi"});
  if (command == "cavity") add({"n", "coop-range", "log", "coop", "delta-tilde", "params"});
  if (command == "excess-noise") add({"n", "en-range", "log"});
  if (command == "parity-average") add({"even", "odd"});
  return s;
}

inline std::string json_scalar_to_string(const std::string& key, const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) return format_double(v.get<double>());
  throw UsageError("config key '" + key + "' must be a string, number or boolean");
}

// ---------------------------------------------------------------------------
// Config construction from merged raw flags.

inline RunConfig build_config(const std::string& command,
                              const std::map<std::string, std::string>& raw) {
  if (std::find(commands().begin(), commands().end(), command) == commands().end()) {
    throw UsageError("unknown command '" + command + "'");
  }
  const auto allowed = allowed_flags(command);
  for (const auto& [k, v] : raw) {
    if (!allowed.count(k)) {
      throw UsageError("--" + k + " does not apply to command '" + command + "'");
    }
  }
  RunConfig c;
  c.command = command;
  c.raw = raw;
  c.threads = default_thread_count();
  auto get = [&](const std::string& k) -> std::optional<std::string> {
    const auto it = raw.find(k);
    if (it == raw.end()) return std::nullopt;
    return it->second;
  };

  if (auto v = get("protocol")) {
    try {
      parse_protocol_id(*v);
    } catch (const DomainError&) {
      throw UsageError("--protocol: unknown protocol '" + *v + "'");
    }
    c.protocol = *v;
  }
  if (auto v = get("spec")) c.spec_file = *v;
  if (get("spec") && get("protocol")) {
    throw UsageError("--spec and --protocol are mutually exclusive");
  }
  if (auto v = get("n")) {
    const double n = parse_number("n", *v);
    if (command == "cavity" || command == "excess-noise") {
      if (!(n >= 1.0)) throw UsageError("--n must be >= 1");
      c.n_real = n;
    } else {
      if (n != std::floor(n)) throw UsageError("--n must be an integer");
      if (n < 1 || n > kMaxAtoms) {
        throw UsageError("--n must lie in [1, " + std::to_string(kMaxAtoms) + "]");
      }
      c.n_atoms = static_cast<int>(n);
    }
  }
  if (auto v = get("mu")) {
    c.mu = parse_angle("mu", *v);
    if (c.mu < -1e-12 || c.mu > 0.5 * std::numbers::pi + 1e-12) {
      throw UsageError("--mu must lie in [0, pi/2]");
    }
  }
  if (auto v = get("ara")) {
    if (*v == "x") c.ara = Axis::X;
    else if (*v == "y") c.ara = Axis::Y;
    else throw UsageError("--ara must be x or y");
  }
  if (auto v = get("xi")) {
    c.xi = parse_int("xi", *v);
    if (c.xi != 1 && c.xi != -1) throw UsageError("--xi must be +1 or -1");
  }
  const auto det = get("detection");
  const auto csd_index = get("csd-index");
  if (det) {
    if (*det == "cd") c.detection = Detection::conventional();
    else if (*det == "cd-up") c.detection = Detection::up_count();
    else if (*det == "csd") c.detection = Detection{Detection::Kind::Collective, std::nullopt};
    else throw UsageError("--detection must be cd, cd-up or csd");
  }
  if (csd_index) {
    if (c.detection && c.detection->kind != Detection::Kind::Collective) {
      throw UsageError("conflicting detection options: --csd-index needs --detection csd");
    }
    const int idx = parse_int("csd-index", *csd_index);
    if (idx > c.n_atoms || idx < -(c.n_atoms + 1)) {
      throw UsageError("--csd-index outside [0, N] (negative values count from N)");
    }
    c.detection = Detection::collective(idx);
  }

  if (auto v = get("phi-range")) c.phi_range = parse_range("phi-range", *v, true);
  if (auto v = get("mu-range")) {
    c.mu_range = parse_range("mu-range", *v, true);
    if (c.mu_range.lo < -1e-12 || c.mu_range.hi > 0.5 * std::numbers::pi + 1e-12) {
      throw UsageError("--mu-range must lie in [0, pi/2]");
    }
  }
  if (auto v = get("phi-window")) c.phi_window = parse_range("phi-window", *v, true);
  if (auto v = get("normalize")) c.normalize = parse_bool("normalize", *v);
  if (auto v = get("rate-scale")) {
    c.rate_scale = parse_number("rate-scale", *v);
    if (!(c.rate_scale > 0.0)) throw UsageError("--rate-scale must be > 0");
  }
  if (auto v = get("stage")) {
    if (v->size() != 1 || !std::isalpha(static_cast<unsigned char>((*v)[0]))) {
      throw UsageError("--stage must be a single letter A..Z");
    }
    c.stage = static_cast<char>(std::toupper(static_cast<unsigned char>((*v)[0])));
  }
  if (auto v = get("phi")) c.phi = parse_angle("phi", *v);
  if (auto v = get("grid")) {
    const auto x = v->find('x');
    if (x == std::string::npos) throw UsageError("--grid expects THETAxPHI, e.g. 181x361");
    c.grid_theta = parse_int("grid", std::string_view(*v).substr(0, x));
    c.grid_phi = parse_int("grid", std::string_view(*v).substr(x + 1));
    if (c.grid_theta < 2 || c.grid_phi < 2) throw UsageError("--grid sizes must be >= 2");
  }
  if (auto v = get("coop-range")) {
    c.coop_range = parse_range("coop-range", *v, false);
    if (!(c.coop_range->lo > 0.0)) throw UsageError("--coop-range must be > 0");
  }
  if (auto v = get("log")) c.log_spacing = parse_bool("log", *v);
  if (auto v = get("coop")) {
    c.coop = parse_number("coop", *v);
    if (!(*c.coop > 0.0)) throw UsageError("--coop must be > 0");
  }
  if (auto v = get("delta-tilde")) {
    c.delta_tilde = parse_number("delta-tilde", *v);
    if (!(*c.delta_tilde > 0.0)) throw UsageError("--delta-tilde must be > 0");
  }
  if (auto v = get("params")) c.params_file = *v;
  if (command == "cavity" && c.coop_range && c.coop) {
    throw UsageError("--coop and --coop-range are mutually exclusive");
  }
  if (auto v = get("en-range")) {
    c.en_range = parse_range("en-range", *v, false);
    if (c.en_range.lo < 0.0) throw UsageError("--en-range must be >= 0");
  }
  if (auto v = get("even")) c.even = parse_number("even", *v);
  if (auto v = get("odd")) c.odd = parse_number("odd", *v);
  if (command == "parity-average") {
    if (!c.even || !c.odd) throw UsageError("parity-average needs --even and --odd");
    if (*c.even < 0.0 || *c.odd < 0.0) throw UsageError("--even/--odd must be >= 0");
  }
  if (auto v = get("out")) c.out = *v;
  if (auto v = get("format")) {
    c.format = *v;
    const bool table = command != "qpd" && command != "parity-average";
    const bool ok = c.format == "csv" || c.format == "json" ||
                    (command == "qpd" && c.format == "raw");
    if (!ok) {
      throw UsageError("--format must be csv" + std::string(table ? " or json" : "") +
                       (command == "qpd" ? ", json or raw" : ""));
    }
    if (c.format == "raw" && !c.out) throw UsageError("--format raw needs --out");
  }
  if (auto v = get("threads")) {
    c.threads = parse_int("threads", *v);
    if (c.threads < 1) throw UsageError("--threads must be >= 1");
  }
  return c;
}

// argv[0] is the program name. The config file (--config) supplies defaults
// that argv flags override.
inline RunConfig parse_config(int argc, const char* const* argv) {
  CLI::App app{"catspin: collective-spin cat-state interferometer simulator"};
  app.allow_extras(false);
  std::string command;
  std::string config_path;
  std::map<std::string, std::string> cli_values;
  std::map<std::string, CLI::Option*> opts;
  app.add_option("command", command, "one of: fringe sensitivity qpd collective cavity "
                                     "excess-noise parity-average");
  app.add_option("--config", config_path, "JSON file of flag defaults");
  for (const auto& f : value_flags()) {
    opts[f] = app.add_option("--" + f, cli_values[f]);
  }
  for (const auto& f : bool_flags()) opts[f] = app.add_flag("--" + f);
  try {
    std::vector<std::string> args;
    for (int i = argc - 1; i >= 1; --i) args.emplace_back(argv[i]);
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    throw HelpRequest(app.help());
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  std::map<std::string, std::string> raw;
  if (!config_path.empty()) {
    std::ifstream f(config_path);
    if (!f) throw UsageError("--config: cannot read '" + config_path + "'");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
      throw UsageError("--config: " + std::string(e.what()));
    }
    if (!j.is_object()) throw UsageError("--config: top level must be an object");
    for (const auto& [k, v] : j.items()) {
      if (k == "command") {
        if (command.empty()) command = json_scalar_to_string(k, v);
        continue;
      }
      const bool known =
          std::find(value_flags().begin(), value_flags().end(), k) != value_flags().end() ||
          std::find(bool_flags().begin(), bool_flags().end(), k) != bool_flags().end();
      if (!known) throw UsageError("--config: unknown key '" + k + "'");
      raw[k] = json_scalar_to_string(k, v);
    }
  }
  for (const auto& [k, opt] : opts) {
    if (opt->count() == 0) continue;
    if (std::find(bool_flags().begin(), bool_flags().end(), k) != bool_flags().end()) {
      raw[k] = "true";
    } else {
      raw[k] = cli_values[k];
    }
  }
  if (command.empty()) throw UsageError("missing command\n" + app.help());
  return build_config(command, raw);
}

// ---------------------------------------------------------------------------
// Tables

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::optional<double>>> rows;

  std::string csv() const {
    CsvWriter w(header);
    for (const auto& r : rows) {
      std::vector<std::string> cells;
      cells.reserve(r.size());
      for (const auto& v : r) cells.push_back(format_optional(v));
      w.row(cells);
    }
    return w.str();
  }

  std::string json() const {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& r : rows) {
      nlohmann::json o = nlohmann::json::object();
      for (std::size_t i = 0; i < header.size(); ++i) {
        o[header[i]] = r[i] ? nlohmann::json(*r[i]) : nlohmann::json(nullptr);
      }
      a.push_back(std::move(o));
    }
    return a.dump(2) + "\n";
  }
};

struct Artifact {
  std::string bytes;
  // Extra files written beside the main output (path suffix -> bytes).
  std::vector<std::pair<std::string, std::string>> siblings;
  std::vector<std::string> warnings;
};

inline std::string render(const Table& t, const RunConfig& c) {
  return c.format == "json" ? t.json() : t.csv();
}

inline ProtocolSpec resolve_spec(const RunConfig& c) {
  ProtocolSpec spec;
  if (c.spec_file) {
    std::ifstream f(*c.spec_file);
    if (!f) throw Error("cannot read protocol file '" + *c.spec_file + "'");
    try {
      spec = spec_from_json(nlohmann::json::parse(f));
    } catch (const nlohmann::json::exception& e) {
      throw DomainError("protocol file: " + std::string(e.what()));
    }
    if (c.detection) {
      spec.detection = *c.detection;
      if (!spec.detection.index && spec.detection.kind == Detection::Kind::Collective) {
        spec.detection.index = 0;
      }
    }
  } else {
    ProtocolParams p;
    p.mu = c.mu;
    p.ara = c.ara;
    p.xi = c.xi;
    p.detection = c.detection;
    spec = builtin(c.protocol, p);
  }
  if (spec.detection.kind == Detection::Kind::Collective) {
    spec.detection.resolve_index(c.n_atoms);
  }
  return spec;
}

inline Artifact run_fringe(const RunConfig& c) {
  const auto spec = resolve_spec(c);
  const OperatorSet ops(EnsembleDims(c.n_atoms));
  ScanOptions opt;
  opt.threads = c.threads;
  const auto pts = fringe_scan(spec, ops, expand(c.phi_range), opt);
  Table t{{"phi", "signal", "sds", "pgs", "lambda"}, {}};
  for (const auto& p : pts) {
    std::optional<double> lam;
    if (p.lambda) lam = *p.lambda * c.rate_scale;
    t.rows.push_back({p.phi, p.signal, p.sds, p.pgs, lam});
  }
  return {render(t, c), {}, {}};
}

inline Artifact run_sensitivity(const RunConfig& c) {
  const auto spec = resolve_spec(c);
  const OperatorSet ops(EnsembleDims(c.n_atoms));
  ScanOptions opt;
  opt.threads = c.threads;
  const auto res =
      sensitivity_scan_mu(spec, ops, expand(c.mu_range), expand_half_open(c.phi_window), opt);
  Table t{{"mu", "phi_star", c.normalize ? "lambda_over_n" : "lambda"}, {}};
  for (const auto& r : res) {
    std::optional<double> lam;
    if (r.lambda) lam = *r.lambda * c.rate_scale / (c.normalize ? c.n_atoms : 1.0);
    t.rows.push_back({r.mu, r.lambda ? std::optional<double>(r.phi_star) : std::nullopt, lam});
  }
  return {render(t, c), {}, {}};
}

inline SpinState staged_state(const RunConfig& c, const ProtocolSpec& spec,
                              const OperatorSet& ops) {
  const char stage = c.stage.value_or(final_stage(spec));
  return run(spec, ops, c.phi, std::nullopt, stage_pulse_count(spec, stage));
}

inline Artifact run_qpd(const RunConfig& c) {
  const auto spec = resolve_spec(c);
  const OperatorSet ops(EnsembleDims(c.n_atoms));
  const auto state = staged_state(c, spec, ops);
  const auto field = qpd_field(state, make_grid(c.grid_theta, c.grid_phi), c.threads);
  const std::string label(1, c.stage.value_or(final_stage(spec)));
  Artifact a;
  if (c.format == "raw") {
    a.bytes.resize(field.values.size() * sizeof(double));
    static_assert(std::endian::native == std::endian::little,
                  "raw export assumes a little-endian host");
    std::memcpy(a.bytes.data(), field.values.data(), a.bytes.size());
    const nlohmann::json side = {{"n_theta", c.grid_theta},
                                 {"n_phi", c.grid_phi},
                                 {"n_atoms", c.n_atoms},
                                 {"stage_label", label}};
    a.siblings.push_back({".json", side.dump(2) + "\n"});
    return a;
  }
  Table t{{"theta", "phi", "q"}, {}};
  t.rows.reserve(field.values.size());
  for (std::size_t i = 0; i < field.grid.n_theta(); ++i) {
    for (std::size_t j = 0; j < field.grid.n_phi(); ++j) {
      t.rows.push_back({field.grid.thetas[i], field.grid.phis[j], field.at(i, j)});
    }
  }
  a.bytes = render(t, c);
  return a;
}

inline Artifact run_collective(const RunConfig& c) {
  const auto spec = resolve_spec(c);
  const OperatorSet ops(EnsembleDims(c.n_atoms));
  const auto state = staged_state(c, spec, ops);
  const auto dist = collective_distribution(state);
  Table t{{"k", "m", "population"}, {}};
  for (int k = 0; k <= c.n_atoms; ++k) {
    t.rows.push_back({static_cast<double>(k), state.dims.m_of(k), dist[k]});
  }
  return {render(t, c), {}, {}};
}

inline nlohmann::json budget_json(const FidelityBudget& b) {
  return {{"n_atoms", b.n_atoms},         {"cooperativity", b.cooperativity},
          {"delta_tilde", b.delta_tilde}, {"chi_t", b.chi_t},
          {"gamma_t", b.gamma_t},         {"ds_cav_sq", b.ds_cav_sq},
          {"ds_se_sq", b.ds_se_sq},       {"theta", b.theta_frac},
          {"n_eff", b.n_eff},             {"f_linear", b.f_linear},
          {"f_db", b.f_db},               {"f_first_order", b.f_first_order},
          {"f_approx_db", to_db(improvement_closed_form(
                              b.n_atoms, theta_closed_form(b.n_atoms * b.cooperativity)))},
          {"f_ideal_db", b.f_ideal_db()}};
}

inline Artifact run_cavity(const RunConfig& c) {
  Artifact a;
  if (c.coop_range) {
    const auto coops = expand(*c.coop_range, c.log_spacing);
    const auto rows = fidelity_sweep(c.n_real, coops);
    Table t{{"cooperativity", "theta", "f_exact_db", "f_approx_db", "f_ideal_db"}, {}};
    bool warned = false;
    for (const auto& r : rows) {
      t.rows.push_back({r.cooperativity, r.theta, r.f_exact_db, r.f_approx_db, r.f_ideal_db});
      warned = warned || r.detuning_warning;
    }
    if (warned) {
      a.warnings.push_back("some rows have N*C < 1, outside the large-cooperativity regime "
                           "the optimal detuning assumes");
    }
    a.bytes = render(t, c);
    return a;
  }

  nlohmann::json out = nlohmann::json::object();
  if (c.params_file) {
    std::ifstream f(*c.params_file);
    if (!f) throw Error("cannot read cavity parameter file '" + *c.params_file + "'");
    CavityParams p;
    try {
      p = cavity_params_from_json(nlohmann::json::parse(f));
    } catch (const nlohmann::json::exception& e) {
      throw DomainError("cavity parameter file: " + std::string(e.what()));
    }
    nlohmann::json d = {{"params", to_json(p)}};
    if (p.kappa > 0.0) {
      const auto z = steady_state_amplitude(p);
      d["zeta_re"] = z.real();
      d["zeta_im"] = z.imag();
      d["photon_number"] = std::norm(z);
    }
    if (p.delta_opt != 0.0) {
      const double chi = squeezing_rate_chi(p);
      d["chi"] = chi;
      if (chi > 0.0) d["t_sc"] = squeezing_time(chi);
      if (p.cooperativity > 0.0 && p.delta_tilde != 0.0) {
        d["scattering_rate"] = scattering_rate(p, chi);
      }
    }
    if (p.mode_side_D > 0.0 && p.mirror_T > 0.0) {
      d["cooperativity_from_geometry"] = cooperativity_from_geometry(p.mode_side_D, p.mirror_T);
      const double dt = delta_tilde_at_fixed_probe(p.mirror_T);
      const double chi_e = chi_engineering(dt, p.power, p.mode_side_D, p.mirror_T);
      d["delta_tilde_fixed_probe"] = dt;
      d["chi_engineering"] = chi_e;
      if (chi_e > 0.0) d["t_sc_engineering"] = squeezing_time(chi_e);
    }
    out["design"] = d;
  }
  if (c.coop) {
    const auto det = optimal_detuning(c.n_real, *c.coop);
    const double dt = c.delta_tilde.value_or(det.value);
    if (!c.delta_tilde && det.warning) {
      a.warnings.push_back("N*C < 1: optimal detuning derived for N*C >> 1");
    }
    const auto b = improvement_factor(c.n_real, *c.coop, dt);
    b.require_valid();
    out["budget"] = budget_json(b);
  }
  if (out.empty()) throw UsageError("cavity needs --coop-range, --coop or --params");
  a.bytes = out.dump(2) + "\n";
  return a;
}

inline Artifact run_excess_noise(const RunConfig& c) {
  const auto grid = expand(c.en_range, c.log_spacing);
  const auto table = noise_model_table(c.n_real);
  Table t;
  t.header.push_back("en");
  std::vector<std::vector<double>> cols;
  for (const auto& row : table) {
    t.header.push_back(row.protocol);
    cols.push_back(excess_noise_curve(row, c.n_real, grid));
  }
  for (const auto& row : table) {
    if (row.protocol != "CD-SCAIN" && row.protocol != "CSD-SCAIN") continue;
    const auto odd = excess_noise_curve(odd_parity_row(row, c.n_real), c.n_real, grid);
    const auto even = excess_noise_curve(row, c.n_real, grid);
    std::vector<double> avg(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) avg[i] = parity_average(even[i], odd[i]);
    t.header.push_back(row.protocol + " (parity avg)");
    cols.push_back(std::move(avg));
  }
  for (std::size_t i = 0; i < grid.size(); ++i) {
    std::vector<std::optional<double>> r{grid[i]};
    for (const auto& col : cols) r.push_back(col[i]);
    t.rows.push_back(std::move(r));
  }
  return {render(t, c), {}, {}};
}

inline Artifact run_parity_average(const RunConfig& c) {
  const double avg = parity_average(*c.even, *c.odd);
  if (c.format == "json") {
    const nlohmann::json j = {{"lambda_even", *c.even}, {"lambda_odd", *c.odd},
                              {"lambda_avg", avg}};
    return {j.dump(2) + "\n", {}, {}};
  }
  if (!c.out) return {format_double(avg) + "\n", {}, {}};
  Table t{{"lambda_even", "lambda_odd", "lambda_avg"}, {{*c.even, *c.odd, avg}}};
  return {t.csv(), {}, {}};
}

inline Artifact produce(const RunConfig& c) {
  if (c.command == "fringe") return run_fringe(c);
  if (c.command == "sensitivity") return run_sensitivity(c);
  if (c.command == "qpd") return run_qpd(c);
  if (c.command == "collective") return run_collective(c);
  if (c.command == "cavity") return run_cavity(c);
  if (c.command == "excess-noise") return run_excess_noise(c);
  if (c.command == "parity-average") return run_parity_average(c);
  throw UsageError("unknown command '" + c.command + "'");
}

// Runs the command. With --out, the artifact (plus any sidecar) and a
// <out>.manifest.json are written atomically; otherwise the artifact goes to
// `out`. Returns the process exit status.
inline int execute(const RunConfig& c, std::ostream& out, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const Artifact a = produce(c);
    for (const auto& w : a.warnings) err << "warning: " << w << "\n";
    if (!c.out) {
      out << a.bytes;
      return kOk;
    }
    write_file_atomic(*c.out, a.bytes);
    std::vector<std::string> files{*c.out};
    for (const auto& [suffix, bytes] : a.siblings) {
      write_file_atomic(*c.out + suffix, bytes);
      files.push_back(*c.out + suffix);
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    nlohmann::json inputs = nlohmann::json::object();
    for (const auto& [k, v] : c.raw) inputs[k] = v;
    const nlohmann::json manifest = {
        {"command", c.command},
        {"inputs", inputs},
        {"artifacts", files},
        {"threads", c.threads},
        {"versions",
         {{"catspin", CATSPIN_VERSION},
          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                        std::to_string(EIGEN_MAJOR_VERSION) + "." +
                        std::to_string(EIGEN_MINOR_VERSION)},
          {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
          {"cli11", CLI11_VERSION}}},
        {"wall_time_s", wall},
        {"timestamp_utc", utc_timestamp()}};
    write_file_atomic(*c.out + ".manifest.json", manifest.dump(2) + "\n");
    return kOk;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const BudgetError& e) {
    err << "budget error: " << e.what() << "\n";
    return kRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntime;
  }
}

inline int main_entry(int argc, const char* const* argv, std::ostream& out,
                      std::ostream& err) {
  RunConfig c;
  try {
    c = parse_config(argc, argv);
  } catch (const HelpRequest& h) {
    out << h.what();
    return kOk;
  } catch (const UsageError& e) {
    err << e.what() << "\n";
    return kUsage;
  }
  return execute(c, out, err);
}

}  // namespace catspin::cli
