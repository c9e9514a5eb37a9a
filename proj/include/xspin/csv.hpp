#pragma once

// CSV exchange format for signal curves: a block of '# key=value' metadata
// lines followed by bare 'abscissa,value' rows, one per point, LF-terminated.
// Numbers round-trip exactly, so saving and loading a curve is lossless and
// re-serializing reproduces the bytes.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "xspin/detail/text.hpp"
#include "xspin/readout.hpp"

namespace xspin {

inline std::string scan_kind_name(ScanKind k) {
  switch (k) {
    case ScanKind::Delay: return "delay";
    case ScanKind::AnglePhi: return "angle_phi";
    case ScanKind::AngleTheta: return "angle_theta";
  }
  throw std::invalid_argument("unknown scan kind");
}

inline ScanKind parse_scan_kind(std::string_view text) {
  if (text == "delay") return ScanKind::Delay;
  if (text == "angle_phi") return ScanKind::AnglePhi;
  if (text == "angle_theta") return ScanKind::AngleTheta;
  throw std::invalid_argument("unknown scan kind '" + std::string(text) +
                              "' (expected delay, angle_phi or angle_theta)");
}

inline std::string write_path_name(WritePath p) {
  return p == WritePath::GroundResonant ? "ground" : "excited";
}

inline WritePath parse_write_path(std::string_view text) {
  if (text == "ground") return WritePath::GroundResonant;
  if (text == "excited") return WritePath::ExcitedResonant;
  throw std::invalid_argument("unknown path '" + std::string(text) +
                              "' (expected ground or excited)");
}

/// "none", "poisson" or "gaussian:<sigma>".
inline std::string noise_name(const SignalParams& sig) {
  switch (sig.noise) {
    case NoiseKind::None: return "none";
    case NoiseKind::Poisson: return "poisson";
    case NoiseKind::Gaussian: return "gaussian:" + detail::fmt_double(sig.sigma);
  }
  throw std::invalid_argument("unknown noise kind");
}

inline void parse_noise_name(std::string_view text, SignalParams& sig) {
  if (text == "none") {
    sig.noise = NoiseKind::None;
    sig.sigma = 0.0;
    return;
  }
  if (text == "poisson") {
    sig.noise = NoiseKind::Poisson;
    sig.sigma = 0.0;
    return;
  }
  if (text.substr(0, 9) == "gaussian:") {
    sig.noise = NoiseKind::Gaussian;
    sig.sigma = detail::parse_double(text.substr(9));
    if (!std::isfinite(sig.sigma) || sig.sigma < 0.0)
      throw std::invalid_argument("gaussian noise needs sigma >= 0");
    return;
  }
  throw std::invalid_argument("unknown noise '" + std::string(text) +
                              "' (expected none, poisson or gaussian:<sigma>)");
}

inline std::string to_csv(const SignalCurve& curve) {
  const CurveMeta& m = curve.meta;
  if (curve.abscissa.size() != curve.values.size())
    throw std::invalid_argument("to_csv: abscissa and values must have equal length");
  std::string out;
  const auto kv = [&out](std::string_view key, const std::string& value) {
    out += "# ";
    out += key;
    out += "=";
    out += value;
    out += "\n";
  };
  kv("write_pol", format_polarization(m.write_pol));
  kv("read_pol", format_polarization(m.read_pol));
  kv("scan", scan_kind_name(m.scan));
  kv("delta_ueV", detail::fmt_double(m.dot.delta_gs_ueV));
  kv("tau_x_ps", detail::fmt_double(m.dot.tau_x_ps));
  kv("t2_ps", detail::fmt_double(m.dot.t2_ps));
  kv("scale", detail::fmt_double(m.sig.scale));
  kv("background", detail::fmt_double(m.sig.background));
  kv("noise", noise_name(m.sig));
  kv("seed", std::to_string(m.sig.seed));
  kv("path", write_path_name(m.path));
  kv("delta_es_ueV", detail::fmt_double(m.dot.delta_es_ueV));
  kv("relax_depol", detail::fmt_double(m.dot.relax_depol));
  kv("t2_longitudinal_ps", detail::fmt_double(m.dot.t2_longitudinal_ps));
  if (m.scan != ScanKind::Delay) {
    kv("delay_ps", detail::fmt_double(m.fixed_delay_ps));
    kv("lcvr_error_rad", detail::fmt_double(m.lcvr_error_rad));
  }
  for (std::size_t i = 0; i < curve.abscissa.size(); ++i) {
    out += detail::fmt_double(curve.abscissa[i]);
    out += ",";
    out += detail::fmt_double(curve.values[i]);
    out += "\n";
  }
  return out;
}

inline SignalCurve parse_csv(std::string_view text) {
  SignalCurve curve;
  std::map<std::string, std::string, std::less<>> meta;
  std::size_t pos = 0;
  int lineno = 0;
  const auto fail = [&lineno](const std::string& msg) {
    throw std::invalid_argument("csv line " + std::to_string(lineno) + ": " + msg);
  };
  while (pos < text.size()) {
    ++lineno;
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    const std::string_view line = detail::trim(text.substr(pos, eol - pos));
    pos = eol + 1;
    if (line.empty()) continue;
    if (line.front() == '#') {
      const std::string_view body = detail::trim(line.substr(1));
      const auto eq = body.find('=');
      if (eq == std::string_view::npos) fail("metadata line lacks '='");
      const std::string key(detail::trim(body.substr(0, eq)));
      if (key.empty()) fail("metadata line lacks a key");
      if (!meta.emplace(key, std::string(detail::trim(body.substr(eq + 1)))).second)
        fail("duplicate metadata key '" + key + "'");
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string_view::npos) fail("data row lacks ','");
    try {
      curve.abscissa.push_back(detail::parse_double(detail::trim(line.substr(0, comma))));
      curve.values.push_back(detail::parse_double(detail::trim(line.substr(comma + 1))));
    } catch (const std::invalid_argument& e) {
      fail(e.what());
    }
  }

  lineno = 0;  // metadata errors below are not tied to one line
  const auto require = [&meta](const char* key) -> const std::string& {
    const auto it = meta.find(key);
    if (it == meta.end())
      throw std::invalid_argument("csv: missing metadata key '" + std::string(key) + "'");
    return it->second;
  };
  CurveMeta& m = curve.meta;
  try {
    m.write_pol = parse_polarization(require("write_pol"));
    m.read_pol = parse_polarization(require("read_pol"));
    m.scan = parse_scan_kind(require("scan"));
    m.dot.delta_gs_ueV = detail::parse_double(require("delta_ueV"));
    m.dot.tau_x_ps = detail::parse_double(require("tau_x_ps"));
    m.dot.t2_ps = detail::parse_double(require("t2_ps"));
    m.sig.scale = detail::parse_double(require("scale"));
    m.sig.background = detail::parse_double(require("background"));
    parse_noise_name(require("noise"), m.sig);
    m.sig.seed = detail::parse_uint64(require("seed"));
    m.path = parse_write_path(require("path"));
    if (const auto it = meta.find("delta_es_ueV"); it != meta.end())
      m.dot.delta_es_ueV = detail::parse_double(it->second);
    if (const auto it = meta.find("relax_depol"); it != meta.end())
      m.dot.relax_depol = detail::parse_double(it->second);
    if (const auto it = meta.find("t2_longitudinal_ps"); it != meta.end())
      m.dot.t2_longitudinal_ps = detail::parse_double(it->second);
    if (m.scan != ScanKind::Delay) {
      m.fixed_delay_ps = detail::parse_double(require("delay_ps"));
      if (const auto it = meta.find("lcvr_error_rad"); it != meta.end())
        m.lcvr_error_rad = detail::parse_double(it->second);
    }
    m.dot.validate();
    m.sig.validate();
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string("csv: ") + e.what());
  }

  if (curve.abscissa.empty()) throw std::invalid_argument("csv: no data rows");
  for (std::size_t i = 1; i < curve.abscissa.size(); ++i)
    if (!(curve.abscissa[i] > curve.abscissa[i - 1]))
      throw std::invalid_argument("csv: abscissa must be strictly increasing");
  return curve;
}

inline SignalCurve load_csv(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + file.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_csv(buf.str());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(file.string() + ": " + e.what());
  }
}

/// Writes atomically: the bytes land in a sibling temp file first and are
/// renamed over the target, so readers never observe a partial curve.
inline void save_csv(const SignalCurve& curve, const std::filesystem::path& file) {
  const std::string body = to_csv(curve);
  std::filesystem::path tmp = file;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    out.flush();
    if (!out) throw std::runtime_error("short write to '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, file);
}

}  // namespace xspin
