#pragma once

// ProtocolSpec <-> JSON:
//   {"name": "...",
//    "pulses": [{"kind": "rotate", "axis": "x", "angle": 1.57},
//               {"kind": "squeeze", "mu": 1.57, "sign": -1},
//               {"kind": "dark", "fraction": 0.5, "sign": 1}],
//    "detection": {"kind": "cd" | "cd_up" | "csd", "index": 0}}

#include <nlohmann/json.hpp>

#include "catspin/protocol.hpp"

namespace catspin {

inline Axis parse_axis(std::string_view s) {
  if (s == "x" || s == "X") return Axis::X;
  if (s == "y" || s == "Y") return Axis::Y;
  if (s == "z" || s == "Z") return Axis::Z;
  throw DomainError("unknown axis '" + std::string(s) + "'");
}

inline nlohmann::json to_json(const Pulse& p) {
  return std::visit(
      [](const auto& q) -> nlohmann::json {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, Rotate>) {
          return {{"kind", "rotate"},
                  {"axis", std::string(1, axis_name(q.axis))},
                  {"angle", q.angle}};
        } else if constexpr (std::is_same_v<T, Squeeze>) {
          return {{"kind", "squeeze"}, {"mu", q.mu}, {"sign", q.sign}};
        } else {
          return {{"kind", "dark"}, {"fraction", q.fraction}, {"sign", q.sign}};
        }
      },
      p);
}

inline nlohmann::json to_json(const Detection& d) {
  switch (d.kind) {
    case Detection::Kind::Conventional: return {{"kind", "cd"}};
    case Detection::Kind::UpCount: return {{"kind", "cd_up"}};
    case Detection::Kind::Collective:
      return {{"kind", "csd"}, {"index", d.index.value_or(0)}};
  }
  return {};
}

inline nlohmann::json to_json(const ProtocolSpec& spec) {
  nlohmann::json pulses = nlohmann::json::array();
  for (const auto& p : spec.pulses) pulses.push_back(to_json(p));
  return {{"name", spec.name},
          {"pulses", std::move(pulses)},
          {"detection", to_json(spec.detection)}};
}

inline Pulse pulse_from_json(const nlohmann::json& j) {
  try {
    const auto kind = j.at("kind").get<std::string>();
    Pulse p;
    if (kind == "rotate") {
      p = Rotate{parse_axis(j.at("axis").get<std::string>()),
                 j.at("angle").get<double>()};
    } else if (kind == "squeeze") {
      p = Squeeze{j.at("mu").get<double>(), j.at("sign").get<int>()};
    } else if (kind == "dark") {
      p = DarkPhase{j.at("fraction").get<double>(), j.at("sign").get<int>()};
    } else {
      throw DomainError("unknown pulse kind '" + kind + "'");
    }
    validate_pulse(p);
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("malformed pulse: ") + e.what());
  }
}

inline Detection detection_from_json(const nlohmann::json& j) {
  try {
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "cd") return Detection::conventional();
    if (kind == "cd_up") return Detection::up_count();
    if (kind == "csd") return Detection::collective(j.value("index", 0));
    throw DomainError("unknown detection kind '" + kind + "'");
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("malformed detection: ") + e.what());
  }
}

inline ProtocolSpec spec_from_json(const nlohmann::json& j) {
  try {
    ProtocolSpec spec;
    spec.name = j.value("name", std::string("custom"));
    for (const auto& p : j.at("pulses")) spec.pulses.push_back(pulse_from_json(p));
    spec.detection = j.contains("detection")
                         ? detection_from_json(j.at("detection"))
                         : Detection::conventional();
    spec.validate();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw DomainError(std::string("malformed protocol document: ") + e.what());
  }
}

}  // namespace catspin
