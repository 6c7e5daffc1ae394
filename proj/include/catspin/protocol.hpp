#pragma once

// Interferometer/clock protocols as pulse sequences acting on |E_0> = |-z>.
// Pulses are stored in application order (first applied first), i.e. the
// reverse of how an operator product reads left to right.

#include <algorithm>
#include <cctype>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "catspin/dicke.hpp"

namespace catspin {

enum class ProtocolId { Crain, Scain, Cac, Cosac, Scac };

// What is read out at the end of the sequence.
//   Conventional: <J_z> (per-atom population difference / 2)
//   UpCount:      J + <J_z>, the number of atoms in the upper level
//   Collective:   population of one Dicke state |E_index>
// A negative collective index counts from the top: -1 is |E_N>.
struct Detection {
  enum class Kind { Conventional, UpCount, Collective };
  Kind kind = Kind::Conventional;
  std::optional<int> index;

  static Detection conventional() { return {Kind::Conventional, std::nullopt}; }
  static Detection up_count() { return {Kind::UpCount, std::nullopt}; }
  static Detection collective(int index) { return {Kind::Collective, index}; }

  int resolve_index(int n_atoms) const {
    const int raw = index.value_or(0);
    const int k = raw < 0 ? n_atoms + 1 + raw : raw;
    if (k < 0 || k > n_atoms) {
      throw DomainError("collective detection index " + std::to_string(raw) +
                        " outside [0, N] for N=" + std::to_string(n_atoms));
    }
    return k;
  }

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct ProtocolParams {
  double mu = 0.5 * std::numbers::pi;
  Axis ara = Axis::X;
  int xi = -1;
  // Unset: protocol default. A collective detection without an index gets the
  // protocol's default state (|E_0> for interferometers, |E_N> for clocks).
  std::optional<Detection> detection;

  void validate() const {
    if (!std::isfinite(mu)) throw DomainError("mu must be finite");
    if (ara != Axis::X && ara != Axis::Y) {
      throw DomainError("auxiliary rotation axis must be x or y");
    }
    if (xi != 1 && xi != -1) throw DomainError("xi must be +1 or -1");
  }
};

struct ProtocolSpec {
  std::string name;
  std::vector<Pulse> pulses;
  Detection detection;

  void validate() const {
    for (const auto& p : pulses) validate_pulse(p);
    if (detection.kind == Detection::Kind::Collective && !detection.index) {
      throw DomainError("collective detection requires an index");
    }
  }

  // Index of the first pulse whose action depends on phi; pulses before it
  // can be applied once per (spec, mu) and reused across a phi scan.
  std::size_t first_phi_pulse() const {
    for (std::size_t i = 0; i < pulses.size(); ++i) {
      if (std::holds_alternative<DarkPhase>(pulses[i])) return i;
    }
    return pulses.size();
  }

  std::size_t count_dark(double fraction) const {
    return static_cast<std::size_t>(
        std::count_if(pulses.begin(), pulses.end(), [&](const Pulse& p) {
          const auto* d = std::get_if<DarkPhase>(&p);
          return d && d->fraction == fraction;
        }));
  }
};

inline std::string protocol_name(ProtocolId id) {
  switch (id) {
    case ProtocolId::Crain: return "CRAIN";
    case ProtocolId::Scain: return "SCAIN";
    case ProtocolId::Cac: return "CAC";
    case ProtocolId::Cosac: return "COSAC";
    case ProtocolId::Scac: return "SCAC";
  }
  return "?";
}

inline ProtocolId parse_protocol_id(std::string_view s) {
  std::string lower(s);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (lower == "crain") return ProtocolId::Crain;
  if (lower == "scain") return ProtocolId::Scain;
  if (lower == "cac") return ProtocolId::Cac;
  if (lower == "cosac") return ProtocolId::Cosac;
  if (lower == "scac") return ProtocolId::Scac;
  throw DomainError("unknown protocol '" + std::string(s) + "'");
}

namespace detail {

inline Detection default_detection(ProtocolId id) {
  switch (id) {
    case ProtocolId::Crain:
    case ProtocolId::Scain:
    case ProtocolId::Scac:
      return Detection::conventional();
    case ProtocolId::Cac:
      return Detection::up_count();
    case ProtocolId::Cosac:
      return Detection::collective(-1);
  }
  return Detection::conventional();
}

inline int default_collective_index(ProtocolId id) {
  return (id == ProtocolId::Crain || id == ProtocolId::Scain) ? 0 : -1;
}

}  // namespace detail

inline ProtocolSpec builtin(ProtocolId id, const ProtocolParams& params = {}) {
  params.validate();
  constexpr double half_pi = 0.5 * std::numbers::pi;
  constexpr double pi = std::numbers::pi;
  const double mu = params.mu;
  const Axis ara = params.ara;
  const double corrective = params.xi * half_pi;

  ProtocolSpec spec;
  spec.name = protocol_name(id);
  switch (id) {
    case ProtocolId::Crain:
      spec.pulses = {Rotate{Axis::X, half_pi}, DarkPhase{0.5, +1},
                     Rotate{Axis::X, pi}, DarkPhase{0.5, -1},
                     Rotate{Axis::X, half_pi}};
      break;
    case ProtocolId::Scain:
      spec.pulses = {Rotate{Axis::X, half_pi}, Squeeze{mu, -1},
                     Rotate{ara, half_pi},     DarkPhase{0.5, +1},
                     Rotate{Axis::X, pi},      DarkPhase{0.5, -1},
                     Rotate{ara, corrective},  Squeeze{mu, +1},
                     Rotate{Axis::X, half_pi}};
      break;
    case ProtocolId::Cac:
    case ProtocolId::Cosac:
      spec.pulses = {Rotate{Axis::X, half_pi}, DarkPhase{1.0, +1},
                     Rotate{Axis::X, half_pi}};
      break;
    case ProtocolId::Scac:
      spec.pulses = {Rotate{Axis::X, half_pi}, Squeeze{mu, -1},
                     Rotate{ara, half_pi},     DarkPhase{1.0, +1},
                     Rotate{ara, corrective},  Squeeze{mu, +1},
                     Rotate{Axis::X, half_pi}};
      break;
  }

  spec.detection = params.detection.value_or(detail::default_detection(id));
  if (spec.detection.kind == Detection::Kind::Collective &&
      !spec.detection.index) {
    spec.detection.index = detail::default_collective_index(id);
  }
  if (spec.detection.kind != Detection::Kind::Collective) {
    spec.detection.index.reset();
  }
  return spec;
}

inline ProtocolSpec builtin(std::string_view name,
                            const ProtocolParams& params = {}) {
  return builtin(parse_protocol_id(name), params);
}

// Stage letters label the state between pulses: 'A' is the initial state,
// each applied pulse advances one letter.
inline std::size_t stage_pulse_count(const ProtocolSpec& spec, char stage) {
  const char up = static_cast<char>(std::toupper(static_cast<unsigned char>(stage)));
  if (up < 'A' || up > 'Z') {
    throw DomainError(std::string("invalid stage label '") + stage + "'");
  }
  const std::size_t count = static_cast<std::size_t>(up - 'A');
  if (count > spec.pulses.size()) {
    throw DomainError(std::string("stage ") + up + " beyond the last stage " +
                      static_cast<char>('A' + spec.pulses.size()) + " of " +
                      spec.name);
  }
  return count;
}

inline char final_stage(const ProtocolSpec& spec) {
  return static_cast<char>('A' + spec.pulses.size());
}

// Applies pulses [begin, end) of spec to state.
inline SpinState run_range(const ProtocolSpec& spec, const OperatorSet& ops,
                           SpinState state, std::size_t begin,
                           std::size_t end, double phi,
                           std::optional<double> mu_override = std::nullopt) {
  end = std::min(end, spec.pulses.size());
  const double* mu = mu_override ? &*mu_override : nullptr;
  for (std::size_t i = begin; i < end; ++i) {
    state = apply_pulse(state, ops, spec.pulses[i], phi, mu);
  }
  return state;
}

inline SpinState run(const ProtocolSpec& spec, const OperatorSet& ops,
                     double phi,
                     std::optional<double> mu_override = std::nullopt,
                     std::optional<std::size_t> stop_after = std::nullopt) {
  spec.validate();
  if (!std::isfinite(phi)) throw DomainError("phi must be finite");
  return run_range(spec, ops, basis_state(ops.dims(), 0), 0,
                   stop_after.value_or(spec.pulses.size()), phi, mu_override);
}

// A run with the phi-independent prefix already applied. Use for scans: the
// leading rotations and squeeze are paid once instead of per grid point.
class PreparedRun {
 public:
  PreparedRun(const ProtocolSpec& spec, const OperatorSet& ops,
              std::optional<double> mu_override = std::nullopt)
      : spec_(&spec),
        ops_(&ops),
        mu_(mu_override),
        split_(spec.first_phi_pulse()),
        prefix_(run_range(spec, ops, basis_state(ops.dims(), 0), 0, split_,
                          0.0, mu_override)) {
    spec.validate();
  }

  SpinState at(double phi) const {
    if (!std::isfinite(phi)) throw DomainError("phi must be finite");
    return run_range(*spec_, *ops_, prefix_, split_, spec_->pulses.size(), phi,
                     mu_);
  }

  const ProtocolSpec& spec() const { return *spec_; }
  const OperatorSet& ops() const { return *ops_; }

 private:
  const ProtocolSpec* spec_;
  const OperatorSet* ops_;
  std::optional<double> mu_;
  std::size_t split_;
  SpinState prefix_;
};

}  // namespace catspin
