#pragma once

// Flat 'key = value' experiment configuration. Parsing reports the offending
// line (or flag) for every complaint; serialization emits a canonical key
// order that parses back to an identical configuration. run_experiment turns
// a configuration into one curve per write polarization.

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "xspin/csv.hpp"

namespace xspin {

// Configuration complaints carry their origin ("line 3" or "--delta_gs").
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  ScanKind scan = ScanKind::Delay;
  std::vector<PolarizationState> write;  // delay scans only; one curve each
  PolarizationState read = PolarizationState::H();
  WritePath path = WritePath::GroundResonant;
  DotParameters dot;
  SignalParams sig;
  double pulse_ps = 10.0;  // informational: pulses are treated as instantaneous
  double delay_start_ps = 0.0;
  double delay_stop_ps = 500.0;
  int delay_points = 501;
  double angle_start_rad = 0.0;
  double angle_stop_rad = two_pi;
  int angle_points = 721;
  std::optional<double> fixed_delay_ps;  // angle scans; defaults to one period
  double lcvr_error_rad = 0.0;           // angle scans only
  std::string output = "scan";
  std::vector<std::string> warnings;  // produced by the parser, never serialized
};

struct ConfigEntry {
  std::string key;
  std::string value;
  std::string origin;
};

/// Splits config text into entries. Blank lines are skipped and '#' starts a
/// comment; each surviving line must read 'key = value'.
inline std::vector<ConfigEntry> parse_config_entries(std::string_view text) {
  std::vector<ConfigEntry> entries;
  std::size_t pos = 0;
  int lineno = 0;
  while (pos <= text.size()) {
    if (pos == text.size()) break;
    ++lineno;
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::string origin = "line " + std::to_string(lineno);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError(origin + ": expected 'key = value'");
    const std::string key(detail::trim(line.substr(0, eq)));
    const std::string value(detail::trim(line.substr(eq + 1)));
    if (key.empty()) throw ConfigError(origin + ": missing key before '='");
    if (value.empty()) throw ConfigError(origin + ": empty value for key '" + key + "'");
    entries.push_back({key, value, origin});
  }
  return entries;
}

namespace detail {

inline double config_double(const ConfigEntry& e) {
  try {
    return parse_double(e.value);
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(e.origin + ": key '" + e.key + "': " + ex.what());
  }
}

inline int config_points(const ConfigEntry& e) {
  long v = 0;
  try {
    v = parse_long(e.value);
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(e.origin + ": key '" + e.key + "': " + ex.what());
  }
  if (v < 2 || v > 10'000'000)
    throw ConfigError(e.origin + ": key '" + e.key + "' must lie in [2, 10000000]");
  return static_cast<int>(v);
}

}  // namespace detail

/// Builds a configuration from entries (file lines, command-line flags, or a
/// mix). Throws ConfigError naming the entry's origin for unknown keys,
/// duplicates, unparsable values, out-of-range values and scan-kind
/// mismatches.
inline ExperimentConfig build_config(const std::vector<ConfigEntry>& entries) {
  ExperimentConfig cfg;
  std::set<std::string> seen;
  const auto origin_of = [&entries](const std::string& key) -> const std::string& {
    for (const ConfigEntry& e : entries)
      if (e.key == key) return e.origin;
    throw std::logic_error("origin_of: key not present");
  };

  for (const ConfigEntry& e : entries) {
    if (!seen.insert(e.key).second)
      throw ConfigError(e.origin + ": duplicate key '" + e.key + "'");
    const auto bad = [&e](const std::string& msg) {
      return ConfigError(e.origin + ": key '" + e.key + "' " + msg);
    };
    try {
      if (e.key == "scan") {
        cfg.scan = parse_scan_kind(e.value);
      } else if (e.key == "write") {
        std::string_view rest = e.value;
        cfg.write.clear();
        while (!rest.empty()) {
          const auto comma = rest.find(',');
          const std::string_view item = detail::trim(rest.substr(0, comma));
          if (item.empty()) throw bad("has an empty polarization entry");
          cfg.write.push_back(parse_polarization(item));
          if (comma == std::string_view::npos) break;
          rest = rest.substr(comma + 1);
        }
        if (cfg.write.empty()) throw bad("needs at least one polarization");
      } else if (e.key == "read") {
        cfg.read = parse_polarization(e.value);
      } else if (e.key == "path") {
        cfg.path = parse_write_path(e.value);
      } else if (e.key == "delta_gs") {
        cfg.dot.delta_gs_ueV = detail::config_double(e);
        if (!std::isfinite(cfg.dot.delta_gs_ueV) || cfg.dot.delta_gs_ueV <= 0.0)
          throw bad("must be positive and finite (ueV)");
      } else if (e.key == "delta_es") {
        cfg.dot.delta_es_ueV = detail::config_double(e);
        if (!std::isfinite(cfg.dot.delta_es_ueV) || cfg.dot.delta_es_ueV <= 0.0)
          throw bad("must be positive and finite (ueV)");
      } else if (e.key == "tau_x") {
        cfg.dot.tau_x_ps = detail::config_double(e);
        if (!(cfg.dot.tau_x_ps > 0.0)) throw bad("must be positive (ps, inf allowed)");
      } else if (e.key == "t2") {
        cfg.dot.t2_ps = detail::config_double(e);
        if (!(cfg.dot.t2_ps > 0.0)) throw bad("must be positive (ps, inf allowed)");
      } else if (e.key == "t2_longitudinal") {
        cfg.dot.t2_longitudinal_ps = detail::config_double(e);
        if (!(cfg.dot.t2_longitudinal_ps > 0.0)) throw bad("must be positive (ps, inf allowed)");
      } else if (e.key == "relax_depol") {
        cfg.dot.relax_depol = detail::config_double(e);
        if (!(cfg.dot.relax_depol >= 0.0 && cfg.dot.relax_depol <= 1.0))
          throw bad("must lie in [0, 1]");
      } else if (e.key == "scale") {
        cfg.sig.scale = detail::config_double(e);
        if (!std::isfinite(cfg.sig.scale) || cfg.sig.scale <= 0.0)
          throw bad("must be positive and finite (counts)");
      } else if (e.key == "background") {
        cfg.sig.background = detail::config_double(e);
        if (!std::isfinite(cfg.sig.background) || cfg.sig.background < 0.0)
          throw bad("must be >= 0 and finite (counts)");
      } else if (e.key == "noise") {
        parse_noise_name(e.value, cfg.sig);
      } else if (e.key == "seed") {
        cfg.sig.seed = detail::parse_uint64(e.value);
      } else if (e.key == "pulse") {
        cfg.pulse_ps = detail::config_double(e);
        if (!std::isfinite(cfg.pulse_ps) || cfg.pulse_ps <= 0.0)
          throw bad("must be positive and finite (ps)");
      } else if (e.key == "delay_start") {
        cfg.delay_start_ps = detail::config_double(e);
        if (!std::isfinite(cfg.delay_start_ps) || cfg.delay_start_ps < 0.0)
          throw bad("must be >= 0 and finite (ps)");
      } else if (e.key == "delay_stop") {
        cfg.delay_stop_ps = detail::config_double(e);
        if (!std::isfinite(cfg.delay_stop_ps) || cfg.delay_stop_ps <= 0.0)
          throw bad("must be positive and finite (ps)");
      } else if (e.key == "delay_points") {
        cfg.delay_points = detail::config_points(e);
      } else if (e.key == "angle_start") {
        cfg.angle_start_rad = detail::config_double(e);
        if (!std::isfinite(cfg.angle_start_rad) || cfg.angle_start_rad < 0.0 ||
            cfg.angle_start_rad > two_pi)
          throw bad("must lie in [0, 2*pi] (rad)");
      } else if (e.key == "angle_stop") {
        cfg.angle_stop_rad = detail::config_double(e);
        if (!std::isfinite(cfg.angle_stop_rad) || cfg.angle_stop_rad < 0.0 ||
            cfg.angle_stop_rad > two_pi)
          throw bad("must lie in [0, 2*pi] (rad)");
      } else if (e.key == "angle_points") {
        cfg.angle_points = detail::config_points(e);
      } else if (e.key == "delay") {
        cfg.fixed_delay_ps = detail::config_double(e);
        if (!std::isfinite(*cfg.fixed_delay_ps) || *cfg.fixed_delay_ps < 0.0)
          throw bad("must be >= 0 and finite (ps)");
      } else if (e.key == "lcvr_error") {
        cfg.lcvr_error_rad = detail::config_double(e);
        if (!std::isfinite(cfg.lcvr_error_rad)) throw bad("must be finite (rad)");
      } else if (e.key == "output") {
        cfg.output = e.value;
      } else {
        throw ConfigError(e.origin + ": unknown key '" + e.key + "'");
      }
    } catch (const ConfigError&) {
      throw;
    } catch (const std::invalid_argument& ex) {
      throw ConfigError(e.origin + ": key '" + e.key + "': " + ex.what());
    }
  }

  const auto missing = [](const char* key, const char* why) {
    return ConfigError(std::string("missing required key '") + key + "'" + why);
  };
  if (!seen.count("scan")) throw missing("scan", "");
  if (!seen.count("read")) throw missing("read", "");
  if (cfg.scan == ScanKind::Delay) {
    if (!seen.count("write")) throw missing("write", " (required for delay scans)");
    for (const char* key : {"delay", "lcvr_error", "angle_start", "angle_stop", "angle_points"})
      if (seen.count(key))
        throw ConfigError(origin_of(key) + ": key '" + key + "' only applies to angle scans");
    if (!(cfg.delay_stop_ps > cfg.delay_start_ps))
      throw ConfigError("delay_stop must exceed delay_start");
  } else {
    for (const char* key : {"write", "delay_start", "delay_stop", "delay_points"})
      if (seen.count(key))
        throw ConfigError(origin_of(key) + ": key '" + key + "' only applies to delay scans");
    if (!(cfg.angle_stop_rad > cfg.angle_start_rad))
      throw ConfigError("angle_stop must exceed angle_start");
  }

  const double period = precession_period(cfg.dot.delta_gs_ueV);
  if (cfg.pulse_ps > period / 10.0)
    cfg.warnings.push_back("pulse duration " + detail::fmt_double(cfg.pulse_ps) +
                           " ps exceeds a tenth of the precession period " +
                           detail::fmt_double(period) +
                           " ps; pulses are still treated as instantaneous");
  return cfg;
}

inline ExperimentConfig parse_config(std::string_view text) {
  return build_config(parse_config_entries(text));
}

/// Canonical text form; parse_config(serialize_config(c)) reproduces c.
inline std::string serialize_config(const ExperimentConfig& cfg) {
  std::string out;
  const auto kv = [&out](std::string_view key, const std::string& value) {
    out += key;
    out += " = ";
    out += value;
    out += "\n";
  };
  kv("scan", scan_kind_name(cfg.scan));
  if (cfg.scan == ScanKind::Delay) {
    std::string joined;
    for (const PolarizationState& w : cfg.write) {
      if (!joined.empty()) joined += ",";
      joined += format_polarization(w);
    }
    kv("write", joined);
  }
  kv("read", format_polarization(cfg.read));
  kv("path", write_path_name(cfg.path));
  kv("delta_gs", detail::fmt_double(cfg.dot.delta_gs_ueV));
  kv("delta_es", detail::fmt_double(cfg.dot.delta_es_ueV));
  kv("tau_x", detail::fmt_double(cfg.dot.tau_x_ps));
  kv("t2", detail::fmt_double(cfg.dot.t2_ps));
  kv("t2_longitudinal", detail::fmt_double(cfg.dot.t2_longitudinal_ps));
  kv("relax_depol", detail::fmt_double(cfg.dot.relax_depol));
  kv("scale", detail::fmt_double(cfg.sig.scale));
  kv("background", detail::fmt_double(cfg.sig.background));
  kv("noise", noise_name(cfg.sig));
  kv("seed", std::to_string(cfg.sig.seed));
  kv("pulse", detail::fmt_double(cfg.pulse_ps));
  if (cfg.scan == ScanKind::Delay) {
    kv("delay_start", detail::fmt_double(cfg.delay_start_ps));
    kv("delay_stop", detail::fmt_double(cfg.delay_stop_ps));
    kv("delay_points", std::to_string(cfg.delay_points));
  } else {
    kv("angle_start", detail::fmt_double(cfg.angle_start_rad));
    kv("angle_stop", detail::fmt_double(cfg.angle_stop_rad));
    kv("angle_points", std::to_string(cfg.angle_points));
    if (cfg.fixed_delay_ps) kv("delay", detail::fmt_double(*cfg.fixed_delay_ps));
    kv("lcvr_error", detail::fmt_double(cfg.lcvr_error_rad));
  }
  kv("output", cfg.output);
  return out;
}

inline std::vector<double> linspace(double start, double stop, int points) {
  if (points < 2) throw std::invalid_argument("linspace: need at least 2 points");
  if (!(stop > start)) throw std::invalid_argument("linspace: stop must exceed start");
  std::vector<double> v(static_cast<std::size_t>(points));
  const double step = (stop - start) / (points - 1);
  for (int i = 0; i < points; ++i) v[static_cast<std::size_t>(i)] = start + i * step;
  v.back() = stop;
  return v;
}

/// Executes the configured scan: one curve per write polarization for delay
/// scans, a single curve for angle scans. Multi-curve runs decorrelate their
/// noise by offsetting the seed per curve; the effective seed is recorded in
/// each curve's metadata.
inline std::vector<SignalCurve> run_experiment(const ExperimentConfig& cfg) {
  cfg.dot.validate();
  cfg.sig.validate();
  std::vector<SignalCurve> curves;
  if (cfg.scan == ScanKind::Delay) {
    if (cfg.write.empty())
      throw std::invalid_argument("run_experiment: delay scan needs write polarizations");
    const std::vector<double> delays =
        linspace(cfg.delay_start_ps, cfg.delay_stop_ps, cfg.delay_points);
    for (std::size_t k = 0; k < cfg.write.size(); ++k) {
      SignalParams sig = cfg.sig;
      sig.seed += static_cast<std::uint64_t>(k);
      curves.push_back(delay_scan(cfg.write[k], cfg.path, cfg.read, delays, cfg.dot, sig));
    }
  } else {
    const std::vector<double> angles =
        linspace(cfg.angle_start_rad, cfg.angle_stop_rad, cfg.angle_points);
    const double delay =
        cfg.fixed_delay_ps ? *cfg.fixed_delay_ps : precession_period(cfg.dot.delta_gs_ueV);
    curves.push_back(angle_scan(cfg.scan, angles, cfg.read, delay, cfg.path, cfg.dot, cfg.sig,
                                cfg.lcvr_error_rad));
  }
  return curves;
}

/// File stem for curve `index` of a run: the output stem alone for a single
/// curve, otherwise suffixed with the write polarization's name.
inline std::string curve_stem(const ExperimentConfig& cfg, std::size_t index, std::size_t total) {
  if (total <= 1) return cfg.output;
  std::string suffix = "w" + std::to_string(index);
  if (index < cfg.write.size())
    if (const auto name = canonical_name(cfg.write[index])) suffix = *name;
  return cfg.output + "_" + suffix;
}

}  // namespace xspin
