/**
 * @file config.hpp
 * @brief JSON run configuration: parsing with unknown-key rejection, resolution into model
 *        types, and serialization of the fully resolved form (the metadata sidecar).
 *
 * Frequencies are given as /2pi values, either as numbers in Hz or as strings with a unit
 * ("37.5 GHz", "15 MHz"). They are kept in Hz here and converted to rad/s only in resolve().
 * Times (montecarlo block) are in seconds, temperatures in kelvin.
 */
#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "magsense/errors.hpp"
#include "magsense/model.hpp"
#include "magsense/modulation.hpp"
#include "magsense/spectra.hpp"
#include "magsense/stability.hpp"
#include "magsense/timedomain.hpp"

namespace magsense::config {

using json = nlohmann::json;

inline constexpr const char* kVersion = "1.0.0";

struct SystemConfig {
  double omega_m_hz = nominal::omega_m_hz;
  std::optional<double> omega_a_hz;  // unset: cavity resonant with the magnon
  double delta_a_hz = 0.0;
  double delta_m_hz = 0.0;
  double kappa_a_hz = nominal::kappa_a_hz;
  double kappa_m_hz = nominal::kappa_m_hz;
  double g_hz = nominal::g_hz;
  double temperature = nominal::temperature;
};

struct ModulationConfig {
  double lambda1 = nominal::lambda1;
  std::optional<double> lambda2;
  std::optional<double> lambda2_ratio;  // lambda2 = ratio * lambda1; default 0.95 if neither set
  double phi1 = 0.0;
  double phi2 = 0.0;
  std::optional<double> omega_L_hz;  // unset: omega_a - delta_a
  std::optional<double> omega_d_hz;  // unset: omega_m - delta_m
  std::optional<double> omega1_hz;   // unset: omega_d - omega_L
  std::optional<double> omega2_hz;   // unset: omega_L + omega_d
};

enum class SweepParameter { lambda2_ratio, temperature, cooperativity, detuning };

struct SweepConfig {
  SweepParameter parameter = SweepParameter::lambda2_ratio;
  std::vector<double> values;
};

struct StabilityGridConfig {
  std::string param1 = "lambda1";
  std::vector<double> values1;
  std::string param2 = "lambda2";
  std::vector<double> values2;
};

struct GridConfig {
  double omega_min_over_kappa_m = 0.01;
  double omega_max_over_kappa_m = 10.0;
  int points = 200;
  GridSpacing spacing = GridSpacing::log;
};

struct MonteCarloConfig {
  std::optional<double> dt;
  std::optional<double> duration;
  std::optional<double> burn_in;
  std::uint64_t seed = 42;
  int segments = 256;
  double segment_overlap = 0.5;
  std::optional<int> output_stride;
  std::int64_t trajectory_samples = 0;  // leading output samples written to trajectory.csv
};

struct SignalConfig {
  SignalKind kind = SignalKind::none;
  double amplitude = 0.0;
  double omega_s_hz = 0.0;
  SignalChannel channel = SignalChannel::x_m;
};

struct OutputConfig {
  std::string directory = "out";
  std::string format = "csv";
  bool metadata = true;
};

struct RunConfig {
  SystemConfig system;
  ModulationConfig modulation;
  std::optional<SweepConfig> sweep;
  std::optional<StabilityGridConfig> stability_grid;
  GridConfig grid;
  std::optional<MonteCarloConfig> montecarlo;
  std::optional<SignalConfig> signal;
  OutputConfig output;
  std::optional<std::string> figure;
};

// ---------------------------------------------------------------------------------------------
// Parsing

namespace detail {

inline void reject_unknown(const json& obj, const std::string& where,
                           std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": expected a JSON object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items()) {
    if (!ok.count(key)) throw ConfigError("unknown config key '" + where + "." + key + "'");
  }
}

inline double number(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("config key '" + key + "' must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError("config key '" + key + "' must be finite");
  return x;
}

/// "/2pi" frequency: number (Hz) or "<value> <unit>" with unit Hz, kHz, MHz, GHz or THz.
inline double frequency_hz(const json& v, const std::string& key) {
  if (v.is_number()) return number(v, key);
  if (!v.is_string()) throw ConfigError("config key '" + key + "' must be a frequency");
  const auto s = v.get<std::string>();
  double value = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  while (begin < end && *begin == ' ') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{}) throw ConfigError("config key '" + key + "': cannot parse '" + s + "'");
  std::string unit(ptr, end);
  unit.erase(0, unit.find_first_not_of(' '));
  unit.erase(unit.find_last_not_of(' ') + 1);
  double scale = 0.0;
  if (unit == "Hz") scale = 1.0;
  else if (unit == "kHz") scale = 1e3;
  else if (unit == "MHz") scale = 1e6;
  else if (unit == "GHz") scale = 1e9;
  else if (unit == "THz") scale = 1e12;
  else throw ConfigError("config key '" + key + "': unknown frequency unit '" + unit + "'");
  return value * scale;
}

inline std::vector<double> number_list(const json& v, const std::string& key) {
  if (!v.is_array()) throw ConfigError("config key '" + key + "' must be an array");
  std::vector<double> out;
  for (const auto& x : v) out.push_back(number(x, key));
  return out;
}

template <typename Fn>
void optional_field(const json& obj, const char* name, Fn&& fn) {
  if (auto it = obj.find(name); it != obj.end()) fn(*it);
}

}  // namespace detail

inline const char* to_string(SweepParameter p) {
  switch (p) {
    case SweepParameter::lambda2_ratio: return "lambda2_ratio";
    case SweepParameter::temperature: return "temperature";
    case SweepParameter::cooperativity: return "cooperativity";
    case SweepParameter::detuning: return "detuning";
  }
  return "?";
}

inline RunConfig parse(const json& root) {
  using namespace detail;
  reject_unknown(root, "config",
                 {"system", "modulation", "sweep", "stability_grid", "grid", "montecarlo", "signal",
                  "output", "figure", "metadata"});
  RunConfig cfg;

  optional_field(root, "system", [&](const json& s) {
    reject_unknown(s, "system", {"omega_m", "omega_a", "delta_a", "delta_m", "kappa_a", "kappa_m",
                                 "g", "temperature"});
    auto& sys = cfg.system;
    optional_field(s, "omega_m", [&](const json& v) { sys.omega_m_hz = frequency_hz(v, "system.omega_m"); });
    optional_field(s, "omega_a", [&](const json& v) { sys.omega_a_hz = frequency_hz(v, "system.omega_a"); });
    optional_field(s, "delta_a", [&](const json& v) { sys.delta_a_hz = frequency_hz(v, "system.delta_a"); });
    optional_field(s, "delta_m", [&](const json& v) { sys.delta_m_hz = frequency_hz(v, "system.delta_m"); });
    optional_field(s, "kappa_a", [&](const json& v) { sys.kappa_a_hz = frequency_hz(v, "system.kappa_a"); });
    optional_field(s, "kappa_m", [&](const json& v) { sys.kappa_m_hz = frequency_hz(v, "system.kappa_m"); });
    optional_field(s, "g", [&](const json& v) { sys.g_hz = frequency_hz(v, "system.g"); });
    optional_field(s, "temperature", [&](const json& v) { sys.temperature = number(v, "system.temperature"); });
    if (!(sys.kappa_a_hz > 0.0) || !(sys.kappa_m_hz > 0.0)) throw ConfigError("system: decay rates must be > 0");
    if (!(sys.omega_m_hz > 0.0)) throw ConfigError("system.omega_m must be > 0");
    if (sys.omega_a_hz && !(*sys.omega_a_hz > 0.0)) throw ConfigError("system.omega_a must be > 0");
    if (sys.g_hz < 0.0) throw ConfigError("system.g must be >= 0");
    if (sys.temperature < 0.0) throw ConfigError("system.temperature must be >= 0");
  });

  optional_field(root, "modulation", [&](const json& m) {
    reject_unknown(m, "modulation", {"lambda1", "lambda2", "lambda2_ratio", "phi1", "phi2", "omega_L",
                                     "omega_d", "omega1", "omega2"});
    auto& mod = cfg.modulation;
    optional_field(m, "lambda1", [&](const json& v) { mod.lambda1 = number(v, "modulation.lambda1"); });
    optional_field(m, "lambda2", [&](const json& v) { mod.lambda2 = number(v, "modulation.lambda2"); });
    optional_field(m, "lambda2_ratio", [&](const json& v) { mod.lambda2_ratio = number(v, "modulation.lambda2_ratio"); });
    optional_field(m, "phi1", [&](const json& v) { mod.phi1 = number(v, "modulation.phi1"); });
    optional_field(m, "phi2", [&](const json& v) { mod.phi2 = number(v, "modulation.phi2"); });
    optional_field(m, "omega_L", [&](const json& v) { mod.omega_L_hz = frequency_hz(v, "modulation.omega_L"); });
    optional_field(m, "omega_d", [&](const json& v) { mod.omega_d_hz = frequency_hz(v, "modulation.omega_d"); });
    optional_field(m, "omega1", [&](const json& v) { mod.omega1_hz = frequency_hz(v, "modulation.omega1"); });
    optional_field(m, "omega2", [&](const json& v) { mod.omega2_hz = frequency_hz(v, "modulation.omega2"); });
    if (mod.lambda2 && mod.lambda2_ratio) {
      throw ConfigError("modulation: give either lambda2 or lambda2_ratio, not both");
    }
    if (mod.lambda1 < 0.0 || mod.lambda2.value_or(0.0) < 0.0 || mod.lambda2_ratio.value_or(0.0) < 0.0) {
      throw ConfigError("modulation: modulation indices must be >= 0");
    }
  });

  optional_field(root, "sweep", [&](const json& s) {
    reject_unknown(s, "sweep", {"parameter", "values"});
    SweepConfig sw;
    if (!s.contains("parameter") || !s["parameter"].is_string()) throw ConfigError("sweep.parameter must be a string");
    const auto name = s["parameter"].get<std::string>();
    bool found = false;
    for (auto p : {SweepParameter::lambda2_ratio, SweepParameter::temperature,
                   SweepParameter::cooperativity, SweepParameter::detuning}) {
      if (name == to_string(p)) {
        sw.parameter = p;
        found = true;
      }
    }
    if (!found) throw ConfigError("sweep.parameter: unknown sweep parameter '" + name + "'");
    if (!s.contains("values")) throw ConfigError("sweep.values is required");
    if (sw.parameter == SweepParameter::detuning) {
      if (!s["values"].is_array()) throw ConfigError("sweep.values must be an array");
      for (const auto& v : s["values"]) sw.values.push_back(frequency_hz(v, "sweep.values"));
    } else {
      sw.values = number_list(s["values"], "sweep.values");
    }
    cfg.sweep = sw;
  });

  optional_field(root, "stability_grid", [&](const json& s) {
    reject_unknown(s, "stability_grid", {"param1", "values1", "param2", "values2"});
    StabilityGridConfig sg;
    for (const char* key : {"param1", "values1", "param2", "values2"}) {
      if (!s.contains(key)) throw ConfigError(std::string("stability_grid.") + key + " is required");
    }
    sg.param1 = s["param1"].get<std::string>();
    sg.param2 = s["param2"].get<std::string>();
    auto read = [&](const std::string& param, const json& v, const std::string& key) {
      const auto p = grid_parameter_from_string(param);
      const bool freq = p == GridParameter::delta_a || p == GridParameter::delta_m || p == GridParameter::g;
      std::vector<double> out;
      if (!v.is_array()) throw ConfigError(key + " must be an array");
      for (const auto& x : v) out.push_back(freq ? frequency_hz(x, key) : number(x, key));
      return out;
    };
    try {
      sg.values1 = read(sg.param1, s["values1"], "stability_grid.values1");
      sg.values2 = read(sg.param2, s["values2"], "stability_grid.values2");
    } catch (const PreconditionError& e) {
      throw ConfigError(std::string("stability_grid: ") + e.what());
    }
    cfg.stability_grid = sg;
  });

  optional_field(root, "grid", [&](const json& g) {
    reject_unknown(g, "grid", {"omega_min_over_kappa_m", "omega_max_over_kappa_m", "points", "spacing"});
    auto& grid = cfg.grid;
    optional_field(g, "omega_min_over_kappa_m", [&](const json& v) { grid.omega_min_over_kappa_m = number(v, "grid.omega_min_over_kappa_m"); });
    optional_field(g, "omega_max_over_kappa_m", [&](const json& v) { grid.omega_max_over_kappa_m = number(v, "grid.omega_max_over_kappa_m"); });
    optional_field(g, "points", [&](const json& v) {
      if (!v.is_number_integer()) throw ConfigError("grid.points must be an integer");
      grid.points = v.get<int>();
    });
    optional_field(g, "spacing", [&](const json& v) {
      const auto s = v.is_string() ? v.get<std::string>() : std::string();
      if (s == "log") grid.spacing = GridSpacing::log;
      else if (s == "linear") grid.spacing = GridSpacing::linear;
      else throw ConfigError("grid.spacing must be \"log\" or \"linear\"");
    });
    if (grid.points < 1) throw ConfigError("grid.points must be >= 1");
  });

  optional_field(root, "montecarlo", [&](const json& m) {
    reject_unknown(m, "montecarlo", {"dt", "duration", "burn_in", "seed", "segments", "segment_overlap",
                                     "output_stride", "trajectory_samples"});
    MonteCarloConfig mc;
    optional_field(m, "dt", [&](const json& v) { mc.dt = number(v, "montecarlo.dt"); });
    optional_field(m, "duration", [&](const json& v) { mc.duration = number(v, "montecarlo.duration"); });
    optional_field(m, "burn_in", [&](const json& v) { mc.burn_in = number(v, "montecarlo.burn_in"); });
    optional_field(m, "seed", [&](const json& v) {
      if (!v.is_number_unsigned()) throw ConfigError("montecarlo.seed must be an unsigned integer");
      mc.seed = v.get<std::uint64_t>();
    });
    optional_field(m, "segments", [&](const json& v) {
      if (!v.is_number_integer()) throw ConfigError("montecarlo.segments must be an integer");
      mc.segments = v.get<int>();
    });
    optional_field(m, "segment_overlap", [&](const json& v) { mc.segment_overlap = number(v, "montecarlo.segment_overlap"); });
    optional_field(m, "output_stride", [&](const json& v) {
      if (!v.is_number_integer()) throw ConfigError("montecarlo.output_stride must be an integer");
      mc.output_stride = v.get<int>();
    });
    optional_field(m, "trajectory_samples", [&](const json& v) {
      if (!v.is_number_integer()) throw ConfigError("montecarlo.trajectory_samples must be an integer");
      mc.trajectory_samples = v.get<std::int64_t>();
    });
    cfg.montecarlo = mc;
  });

  optional_field(root, "signal", [&](const json& s) {
    reject_unknown(s, "signal", {"kind", "amplitude", "omega_s", "channel"});
    SignalConfig sig;
    optional_field(s, "kind", [&](const json& v) {
      const auto k = v.is_string() ? v.get<std::string>() : std::string();
      if (k == "none") sig.kind = SignalKind::none;
      else if (k == "tone") sig.kind = SignalKind::tone;
      else throw ConfigError("signal.kind must be \"none\" or \"tone\"");
    });
    optional_field(s, "amplitude", [&](const json& v) { sig.amplitude = number(v, "signal.amplitude"); });
    optional_field(s, "omega_s", [&](const json& v) { sig.omega_s_hz = frequency_hz(v, "signal.omega_s"); });
    optional_field(s, "channel", [&](const json& v) {
      const auto c = v.is_string() ? v.get<std::string>() : std::string();
      if (c == "x_m") sig.channel = SignalChannel::x_m;
      else if (c == "p_m") sig.channel = SignalChannel::p_m;
      else throw ConfigError("signal.channel must be \"x_m\" or \"p_m\"");
    });
    if (sig.amplitude < 0.0) throw ConfigError("signal.amplitude must be >= 0");
    cfg.signal = sig;
  });

  optional_field(root, "output", [&](const json& o) {
    reject_unknown(o, "output", {"directory", "format", "metadata"});
    optional_field(o, "directory", [&](const json& v) {
      if (!v.is_string()) throw ConfigError("output.directory must be a string");
      cfg.output.directory = v.get<std::string>();
    });
    optional_field(o, "format", [&](const json& v) {
      if (!v.is_string() || v.get<std::string>() != "csv") throw ConfigError("output.format must be \"csv\"");
    });
    optional_field(o, "metadata", [&](const json& v) {
      if (!v.is_boolean()) throw ConfigError("output.metadata must be a boolean");
      cfg.output.metadata = v.get<bool>();
    });
  });

  optional_field(root, "figure", [&](const json& v) {
    if (!v.is_string()) throw ConfigError("figure must be a string");
    cfg.figure = v.get<std::string>();
  });
  return cfg;
}

inline RunConfig parse_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  try {
    return parse(root);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config type error: ") + e.what());
  }
}

inline RunConfig load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_text(ss.str());
}

// ---------------------------------------------------------------------------------------------
// Resolution

struct Resolved {
  SystemParams system;
  ModulationSettings modulation;
  bool omega_a_defaulted = false;
};

inline double resolved_omega_a_hz(const SystemConfig& s) { return s.omega_a_hz.value_or(s.omega_m_hz); }

inline double resolved_lambda2(const ModulationConfig& m) {
  if (m.lambda2) return *m.lambda2;
  return m.lambda2_ratio.value_or(nominal::lambda2_ratio) * m.lambda1;
}

inline Resolved resolve(const RunConfig& cfg) {
  const auto& s = cfg.system;
  const auto& m = cfg.modulation;
  Resolved r;
  r.omega_a_defaulted = !s.omega_a_hz.has_value();
  const double omega_a_hz = resolved_omega_a_hz(s);
  r.system.omega_m = hz_to_angular(s.omega_m_hz);
  r.system.omega_a = hz_to_angular(omega_a_hz);
  r.system.delta_a = hz_to_angular(s.delta_a_hz);
  r.system.delta_m = hz_to_angular(s.delta_m_hz);
  r.system.kappa_a = hz_to_angular(s.kappa_a_hz);
  r.system.kappa_m = hz_to_angular(s.kappa_m_hz);
  r.system.g = hz_to_angular(s.g_hz);
  r.system.temperature = s.temperature;

  const double wl = m.omega_L_hz.value_or(omega_a_hz - s.delta_a_hz);
  const double wd = m.omega_d_hz.value_or(s.omega_m_hz - s.delta_m_hz);
  r.modulation.lambda1 = m.lambda1;
  r.modulation.lambda2 = resolved_lambda2(m);
  r.modulation.phi1 = m.phi1;
  r.modulation.phi2 = m.phi2;
  r.modulation.omega_L = hz_to_angular(wl);
  r.modulation.omega_d = hz_to_angular(wd);
  r.modulation.omega1 = hz_to_angular(m.omega1_hz.value_or(wd - wl));
  r.modulation.omega2 = hz_to_angular(m.omega2_hz.value_or(wl + wd));
  return r;
}

/// Monte-Carlo settings with unset fields filled from default_sde_config.
inline SdeConfig resolve_montecarlo(const MonteCarloConfig& mc, const SystemParams& p,
                                    const EffectiveCouplings& c) {
  SdeConfig sde = default_sde_config(p, c);
  if (mc.dt) {
    sde.dt = *mc.dt;
    if (!mc.output_stride) {
      sde.output_stride = std::max(1, static_cast<int>(std::lround(0.02 / p.kappa_m / sde.dt)));
    }
  }
  if (mc.output_stride) sde.output_stride = *mc.output_stride;
  if (mc.burn_in) sde.burn_in = *mc.burn_in;
  if (mc.duration) sde.duration = *mc.duration;
  else if (mc.burn_in) sde.duration = sde.burn_in + 2.0e4 / p.kappa_m;
  sde.seed = mc.seed;
  sde.segments = mc.segments;
  sde.segment_overlap = mc.segment_overlap;
  return sde;
}

// ---------------------------------------------------------------------------------------------
// Serialization of the resolved configuration

namespace detail {
inline const char* to_string(GridSpacing s) { return s == GridSpacing::log ? "log" : "linear"; }
}  // namespace detail

/// Fully resolved configuration: every defaulted value is written explicitly, frequencies
/// as /2pi numbers in Hz. Feeding this back through parse() reproduces the same run.
inline json to_json(const RunConfig& cfg, const std::optional<SdeConfig>& sde = std::nullopt) {
  json root;
  const auto& s = cfg.system;
  root["system"] = {{"omega_m", s.omega_m_hz},   {"omega_a", resolved_omega_a_hz(s)},
                    {"delta_a", s.delta_a_hz},   {"delta_m", s.delta_m_hz},
                    {"kappa_a", s.kappa_a_hz},   {"kappa_m", s.kappa_m_hz},
                    {"g", s.g_hz},               {"temperature", s.temperature}};
  const auto& m = cfg.modulation;
  const double omega_a_hz = resolved_omega_a_hz(s);
  const double wl = m.omega_L_hz.value_or(omega_a_hz - s.delta_a_hz);
  const double wd = m.omega_d_hz.value_or(s.omega_m_hz - s.delta_m_hz);
  json mod = {{"lambda1", m.lambda1}, {"phi1", m.phi1}, {"phi2", m.phi2}, {"omega_L", wl},
              {"omega_d", wd}, {"omega1", m.omega1_hz.value_or(wd - wl)},
              {"omega2", m.omega2_hz.value_or(wl + wd)}};
  if (m.lambda2) mod["lambda2"] = *m.lambda2;
  else mod["lambda2_ratio"] = m.lambda2_ratio.value_or(nominal::lambda2_ratio);
  root["modulation"] = mod;
  if (cfg.sweep) root["sweep"] = {{"parameter", to_string(cfg.sweep->parameter)}, {"values", cfg.sweep->values}};
  if (cfg.stability_grid) {
    const auto& g = *cfg.stability_grid;
    root["stability_grid"] = {{"param1", g.param1}, {"values1", g.values1}, {"param2", g.param2}, {"values2", g.values2}};
  }
  root["grid"] = {{"omega_min_over_kappa_m", cfg.grid.omega_min_over_kappa_m},
                  {"omega_max_over_kappa_m", cfg.grid.omega_max_over_kappa_m},
                  {"points", cfg.grid.points},
                  {"spacing", detail::to_string(cfg.grid.spacing)}};
  if (cfg.montecarlo) {
    const auto& mc = *cfg.montecarlo;
    json j = {{"seed", mc.seed}, {"segments", mc.segments}, {"segment_overlap", mc.segment_overlap},
              {"trajectory_samples", mc.trajectory_samples}};
    if (sde) {
      j["dt"] = sde->dt;
      j["duration"] = sde->duration;
      j["burn_in"] = sde->burn_in;
      j["output_stride"] = sde->output_stride;
    }
    root["montecarlo"] = j;
  }
  if (cfg.signal) {
    const auto& sig = *cfg.signal;
    root["signal"] = {{"kind", sig.kind == SignalKind::tone ? "tone" : "none"},
                      {"amplitude", sig.amplitude},
                      {"omega_s", sig.omega_s_hz},
                      {"channel", sig.channel == SignalChannel::x_m ? "x_m" : "p_m"}};
  }
  root["output"] = {{"directory", cfg.output.directory}, {"format", "csv"}, {"metadata", cfg.output.metadata}};
  if (cfg.figure) root["figure"] = *cfg.figure;
  return root;
}

}  // namespace magsense::config
