#pragma once

// Built-in experiment presets. Each preset is ordinary config text embedded
// verbatim; identical copies ship under presets/ for reference and editing.
// Unlisted keys take their documented defaults (500 ps delay scans with 501
// points, full-circle angle scans with 721 points, one precession period of
// fixed delay for angle scans, no noise).

#include <array>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "xspin/config.hpp"
#include "xspin/plot.hpp"

namespace xspin {

struct Preset {
  std::string_view name;
  std::string_view text;
};

inline constexpr std::string_view preset_fig3a_LD =
    R"(# Delay scan: L write pulse, D readout, excited-state write path.
scan = delay
write = L
read = D
path = excited
output = fig3a_LD
)";

inline constexpr std::string_view preset_fig3a_LL =
    R"(# Delay scan: L write pulse, L readout, excited-state write path.
scan = delay
write = L
read = L
path = excited
output = fig3a_LL
)";

inline constexpr std::string_view preset_fig3a_LDbar =
    R"(# Delay scan: L write pulse, Dbar readout, excited-state write path.
scan = delay
write = L
read = Dbar
path = excited
output = fig3a_LDbar
)";

inline constexpr std::string_view preset_fig3a_LR =
    R"(# Delay scan: L write pulse, R readout, excited-state write path.
scan = delay
write = L
read = R
path = excited
output = fig3a_LR
)";

inline constexpr std::string_view preset_fig3a_VH =
    R"(# Delay scan: V write pulse, H readout; no oscillation, pure decay.
scan = delay
write = V
read = H
path = excited
output = fig3a_VH
)";

inline constexpr std::string_view preset_fig3b =
    R"(# Delay scans of four write pulses against the R readout, excited-state path.
scan = delay
write = D,R,Dbar,L
read = R
path = excited
output = fig3b
)";

inline constexpr std::string_view preset_fig3c =
    R"(# Delay scans of four write pulses against the R readout, ground-state path.
scan = delay
write = D,R,Dbar,L
read = R
path = ground
output = fig3c
)";

inline constexpr std::string_view preset_fig4a_phi_D =
    R"(# Equator scan of the write polarization, D readout, one period of delay.
scan = angle_phi
read = D
path = excited
output = fig4a_phi_D
)";

inline constexpr std::string_view preset_fig4a_phi_V =
    R"(# Equator scan of the write polarization, V readout, one period of delay.
scan = angle_phi
read = V
path = excited
output = fig4a_phi_V
)";

inline constexpr std::string_view preset_fig4b_theta_V =
    R"(# Meridian scan of the write polarization, V readout, one period of delay.
scan = angle_theta
read = V
path = excited
output = fig4b_theta_V
)";

inline constexpr std::string_view preset_fig4b_theta_D =
    R"(# Meridian scan of the write polarization, D readout, one period of delay.
scan = angle_theta
read = D
path = excited
output = fig4b_theta_D
)";

inline constexpr std::array<Preset, 11> presets = {{
    {"fig3a_LD", preset_fig3a_LD},
    {"fig3a_LL", preset_fig3a_LL},
    {"fig3a_LDbar", preset_fig3a_LDbar},
    {"fig3a_LR", preset_fig3a_LR},
    {"fig3a_VH", preset_fig3a_VH},
    {"fig3b", preset_fig3b},
    {"fig3c", preset_fig3c},
    {"fig4a_phi_D", preset_fig4a_phi_D},
    {"fig4a_phi_V", preset_fig4a_phi_V},
    {"fig4b_theta_V", preset_fig4b_theta_V},
    {"fig4b_theta_D", preset_fig4b_theta_D},
}};

inline const Preset* find_preset(std::string_view name) {
  for (const Preset& p : presets)
    if (p.name == name) return &p;
  return nullptr;
}

inline ExperimentConfig preset_config(std::string_view name) {
  const Preset* p = find_preset(name);
  if (!p) {
    std::string known;
    for (const Preset& q : presets) {
      if (!known.empty()) known += ", ";
      known += q.name;
    }
    throw std::invalid_argument("unknown preset '" + std::string(name) + "' (available: " +
                                known + ")");
  }
  return parse_config(p->text);
}

namespace detail {

inline void save_text(const std::string& body, const std::filesystem::path& file) {
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

}  // namespace detail

/// Runs a preset and writes its curves as CSV plus a combined SVG into
/// `dir`. Returns the written paths in order (CSVs first, then the SVG).
inline std::vector<std::filesystem::path> run_preset(std::string_view name,
                                                     const std::filesystem::path& dir,
                                                     std::optional<std::uint64_t> seed = {}) {
  ExperimentConfig cfg = preset_config(name);
  if (seed) cfg.sig.seed = *seed;
  const std::vector<SignalCurve> curves = run_experiment(cfg);
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  for (std::size_t k = 0; k < curves.size(); ++k) {
    const std::filesystem::path file = dir / (curve_stem(cfg, k, curves.size()) + ".csv");
    save_csv(curves[k], file);
    written.push_back(file);
  }
  const std::filesystem::path svg = dir / (cfg.output + ".svg");
  detail::save_text(render_svg(curves), svg);
  written.push_back(svg);
  return written;
}

}  // namespace xspin
