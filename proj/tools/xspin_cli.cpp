// Command line front end: forward scans, presets, fitting, state estimation,
// retarder solving and plotting. Exit codes: 0 success, 2 validation or
// usage error, 1 runtime failure.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "xspin/xspin.hpp"

namespace fs = std::filesystem;

namespace {

using xspin::detail::fmt_double;

// Flags mirror config keys one to one; each used flag becomes a config entry
// that overrides the same key from --config.
struct FlagEntries {
  std::vector<xspin::ConfigEntry> entries;

  void add(CLI::App* cmd, const std::string& key, const std::string& desc) {
    cmd->add_option_function<std::string>(
        "--" + key,
        [this, key](const std::string& v) { entries.push_back({key, v, "--" + key}); }, desc);
  }
};

void add_config_flags(CLI::App* cmd, FlagEntries& flags, bool delay_keys, bool angle_keys) {
  if (delay_keys) flags.add(cmd, "write", "write polarization(s), comma separated");
  flags.add(cmd, "read", "readout polarization (H, V, D, Dbar, R, L or theta:phi)");
  flags.add(cmd, "path", "write path: ground or excited");
  flags.add(cmd, "delta_gs", "ground-state fine-structure splitting in ueV");
  flags.add(cmd, "delta_es", "excited-state fine-structure splitting in ueV");
  flags.add(cmd, "tau_x", "exciton lifetime in ps (inf allowed)");
  flags.add(cmd, "t2", "transverse coherence time in ps (inf allowed)");
  flags.add(cmd, "t2_longitudinal", "longitudinal spin decay time in ps (inf allowed)");
  flags.add(cmd, "relax_depol", "transverse depolarization of the excited-state write, [0, 1]");
  flags.add(cmd, "scale", "counts at unit projection probability");
  flags.add(cmd, "background", "background counts");
  flags.add(cmd, "noise", "noise model: none, poisson or gaussian:<sigma>");
  flags.add(cmd, "seed", "noise seed (uint64)");
  flags.add(cmd, "pulse", "pulse duration in ps (informational)");
  if (delay_keys) {
    flags.add(cmd, "delay_start", "first write-read delay in ps");
    flags.add(cmd, "delay_stop", "last write-read delay in ps");
    flags.add(cmd, "delay_points", "number of delay points");
  }
  if (angle_keys) {
    flags.add(cmd, "angle_start", "first preparation angle in rad");
    flags.add(cmd, "angle_stop", "last preparation angle in rad");
    flags.add(cmd, "angle_points", "number of angle points");
    flags.add(cmd, "delay", "fixed write-read delay in ps (default: one precession period)");
    flags.add(cmd, "lcvr_error", "retardance miscalibration added to both cells, rad");
  }
  flags.add(cmd, "output", "output file stem");
}

std::vector<xspin::ConfigEntry> read_config_entries(const std::string& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config '" + file + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return xspin::parse_config_entries(buf.str());
}

// File entries first, minus keys a flag overrides, then the scan kind from
// the subcommand, then the flags themselves.
xspin::ExperimentConfig merged_config(const std::optional<std::string>& config_file,
                                      const std::vector<xspin::ConfigEntry>& flag_entries,
                                      const std::optional<std::string>& scan_value) {
  std::vector<xspin::ConfigEntry> merged;
  if (config_file) {
    for (xspin::ConfigEntry& e : read_config_entries(*config_file)) {
      if (scan_value && e.key == "scan") continue;
      bool overridden = false;
      for (const xspin::ConfigEntry& f : flag_entries) overridden |= f.key == e.key;
      if (!overridden) merged.push_back(std::move(e));
    }
  }
  if (scan_value) merged.push_back({"scan", *scan_value, "subcommand"});
  merged.insert(merged.end(), flag_entries.begin(), flag_entries.end());
  return xspin::build_config(merged);
}

int run_scan(const xspin::ExperimentConfig& cfg, const std::string& outdir) {
  for (const std::string& w : cfg.warnings) std::cerr << "warning: " << w << "\n";
  const std::vector<xspin::SignalCurve> curves = xspin::run_experiment(cfg);
  fs::create_directories(outdir);
  for (std::size_t k = 0; k < curves.size(); ++k) {
    const fs::path file = fs::path(outdir) / (xspin::curve_stem(cfg, k, curves.size()) + ".csv");
    xspin::save_csv(curves[k], file);
    std::cout << file.string() << "\n";
  }
  return 0;
}

int run_fit(const std::string& file) {
  const xspin::SignalCurve curve = xspin::load_csv(file);
  const xspin::FitResult r = xspin::fit_delay_curve(curve);
  const auto line = [](const char* key, double v, double s) {
    std::cout << key << " = " << fmt_double(v) << " +- " << fmt_double(s) << "\n";
  };
  line("period_ps", r.model.period_ps, r.sigma.period_ps);
  line("tau_x_ps", r.model.tau_x_ps, r.sigma.tau_x_ps);
  line("contrast", r.model.contrast, r.sigma.contrast);
  line("phase_rad", r.model.phase_rad, r.sigma.phase_rad);
  line("level", r.model.level, r.sigma.level);
  line("background", r.model.background, r.sigma.background);
  std::cout << "residual_rms = " << fmt_double(r.residual_rms) << "\n";
  std::cout << "iterations = " << r.iterations << "\n";
  std::cout << "converged = " << (r.converged ? "true" : "false") << "\n";
  if (!r.converged) {
    std::cerr << "error: fit did not converge\n";
    return 1;
  }
  return 0;
}

int run_estimate(const std::vector<std::string>& files) {
  std::vector<xspin::SignalCurve> curves;
  curves.reserve(files.size());
  for (const std::string& f : files) curves.push_back(xspin::load_csv(f));
  const xspin::StateEstimate est = xspin::estimate_state(curves);
  std::cout << "theta_rad = " << fmt_double(est.theta_rad) << "\n";
  std::cout << "phi_rad = " << fmt_double(est.phi_rad) << "\n";
  std::cout << "purity = " << fmt_double(est.purity) << "\n";
  return 0;
}

int run_solve_lcvr(const std::string& pol) {
  const xspin::PolarizationState target = xspin::parse_polarization(pol);
  const xspin::LcvrSettings set = xspin::solve_lcvr_pair(target);
  const double achieved =
      xspin::fidelity(xspin::apply_lcvr_pair(set, xspin::PolarizationState::H()), target);
  std::cout << "retardance_first_rad = " << fmt_double(set.retardance_first) << "\n";
  std::cout << "retardance_second_rad = " << fmt_double(set.retardance_second) << "\n";
  std::cout << "fidelity = " << fmt_double(achieved) << "\n";
  return 0;
}

int run_plot(const std::vector<std::string>& files, const std::string& output) {
  std::vector<xspin::SignalCurve> curves;
  curves.reserve(files.size());
  for (const std::string& f : files) curves.push_back(xspin::load_csv(f));
  xspin::detail::save_text(xspin::render_svg(curves), output);
  std::cout << output << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Two-pulse exciton spin write/read: forward scans and state estimation"};
  app.require_subcommand(1);

  std::optional<std::string> config_file;
  std::string outdir = ".";

  CLI::App* scan_delay = app.add_subcommand("scan-delay", "simulate signal versus write-read delay");
  FlagEntries delay_flags;
  scan_delay->add_option("--config", config_file, "config file; flags override its keys");
  scan_delay->add_option("--output-dir", outdir, "directory for output files");
  add_config_flags(scan_delay, delay_flags, true, false);

  CLI::App* scan_angle =
      app.add_subcommand("scan-angle", "simulate signal versus write polarization angle");
  FlagEntries angle_flags;
  std::optional<std::string> vary;
  scan_angle->add_option("--config", config_file, "config file; flags override its keys");
  scan_angle->add_option("--output-dir", outdir, "directory for output files");
  scan_angle->add_option("--vary", vary, "scanned angle: phi or theta")
      ->check(CLI::IsMember({"phi", "theta"}));
  add_config_flags(scan_angle, angle_flags, false, true);

  CLI::App* preset = app.add_subcommand("preset", "run a bundled configuration");
  std::string preset_name;
  std::optional<std::uint64_t> preset_seed;
  preset->add_option("name", preset_name, "preset name")->required();
  preset->add_option("--output-dir", outdir, "directory for output files");
  preset->add_option("--seed", preset_seed, "override the preset's noise seed");

  CLI::App* fit = app.add_subcommand("fit", "fit the oscillating-decay model to a delay scan");
  std::string fit_file;
  fit->add_option("csv", fit_file, "delay-scan CSV file")->required();

  CLI::App* estimate =
      app.add_subcommand("estimate", "recover the written spin state from delay scans");
  std::vector<std::string> estimate_files;
  estimate->add_option("csv", estimate_files, "delay-scan CSV files (complementary probes)")
      ->required();

  CLI::App* solve = app.add_subcommand("solve-lcvr", "retardances preparing a polarization from H");
  std::string solve_pol;
  solve->add_option("polarization", solve_pol, "target (H, V, D, Dbar, R, L or theta:phi)")
      ->required();

  CLI::App* plot = app.add_subcommand("plot", "render curves to a deterministic SVG");
  std::vector<std::string> plot_files;
  std::string plot_output = "plot.svg";
  plot->add_option("csv", plot_files, "curve CSV files")->required();
  plot->add_option("--output", plot_output, "output SVG file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(scan_delay))
      return run_scan(merged_config(config_file, delay_flags.entries, "delay"), outdir);
    if (app.got_subcommand(scan_angle)) {
      std::optional<std::string> scan_value;
      if (vary) scan_value = *vary == "phi" ? "angle_phi" : "angle_theta";
      if (!scan_value && !config_file)
        throw xspin::ConfigError("scan-angle needs --vary or a config with an angle scan");
      const xspin::ExperimentConfig cfg =
          merged_config(config_file, angle_flags.entries, scan_value);
      if (cfg.scan == xspin::ScanKind::Delay)
        throw xspin::ConfigError("scan-angle needs --vary or a config with an angle scan");
      return run_scan(cfg, outdir);
    }
    if (app.got_subcommand(preset)) {
      for (const fs::path& p : xspin::run_preset(preset_name, outdir, preset_seed))
        std::cout << p.string() << "\n";
      return 0;
    }
    if (app.got_subcommand(fit)) return run_fit(fit_file);
    if (app.got_subcommand(estimate)) return run_estimate(estimate_files);
    if (app.got_subcommand(solve)) return run_solve_lcvr(solve_pol);
    if (app.got_subcommand(plot)) return run_plot(plot_files, plot_output);
    std::cerr << "error: no subcommand\n";
    return 2;
  } catch (const xspin::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
