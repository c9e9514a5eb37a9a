#pragma once

// Two-pulse readout model. A probe pulse drives the exciton-to-biexciton
// transition, which (via the singlet electron configuration) absorbs only
// the component of the exciton spin orthogonal to the probe polarization.
// The detected biexciton photoluminescence is therefore proportional to the
// projection of the evolved spin onto orthogonal(probe).
//
// Scan generators produce the delay scans and preparation-angle scans used
// by the command line tool and the state estimator, with optional synthetic
// counting noise. Noise draws are indexed by point so a curve's randomness
// depends only on (seed, point index), never on evaluation order.

#include <cstdint>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "xspin/dynamics.hpp"

namespace xspin {

enum class NoiseKind { None, Poisson, Gaussian };

struct SignalParams {
  double scale = 10000.0;   // detected counts for unit projection probability
  double background = 0.0;  // additive offset in counts
  NoiseKind noise = NoiseKind::None;
  double sigma = 0.0;       // Gaussian standard deviation in counts
  std::uint64_t seed = 0;

  void validate() const {
    if (!std::isfinite(scale) || !(scale > 0.0))
      throw std::invalid_argument("scale must be positive and finite");
    if (!std::isfinite(background) || background < 0.0)
      throw std::invalid_argument("background must be >= 0");
    if (noise == NoiseKind::Gaussian && (!std::isfinite(sigma) || sigma < 0.0))
      throw std::invalid_argument("gaussian noise needs sigma >= 0");
  }
};

enum class ScanKind { Delay, AnglePhi, AngleTheta };

struct CurveMeta {
  PolarizationState write_pol = PolarizationState::H();  // angle scans: state at angle 0
  PolarizationState read_pol = PolarizationState::H();
  ScanKind scan = ScanKind::Delay;
  WritePath path = WritePath::GroundResonant;
  DotParameters dot;
  SignalParams sig;
  double fixed_delay_ps = 0.0;   // angle scans only
  double lcvr_error_rad = 0.0;   // angle scans only
};

struct SignalCurve {
  std::vector<double> abscissa;  // delay in ps, or preparation angle in rad
  std::vector<double> values;    // counts
  CurveMeta meta;
};

/// Probability that the probe is absorbed by the evolved exciton.
inline double projection_probability(const ExcitonState& state, const PolarizationState& probe) {
  const StokesVector axis = stokes_from_jones(orthogonal(probe));
  const double p = state.population * 0.5 * (1.0 + dot(state.bloch, axis));
  return std::clamp(p, 0.0, 1.0);
}

namespace detail {

// splitmix64 finalizer; good enough to decorrelate (seed, index) streams.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace detail

/// One noise draw around `mean` for curve point `index`.
inline double apply_noise(double mean, const SignalParams& sig, std::uint64_t index) {
  switch (sig.noise) {
    case NoiseKind::None:
      return mean;
    case NoiseKind::Poisson: {
      if (!(mean >= 0.0))
        throw std::invalid_argument("poisson noise requires a nonnegative mean signal");
      if (mean == 0.0) return 0.0;
      std::mt19937_64 rng(detail::mix64(sig.seed ^ detail::mix64(index)));
      return static_cast<double>(std::poisson_distribution<long long>(mean)(rng));
    }
    case NoiseKind::Gaussian: {
      if (sig.sigma == 0.0) return mean;
      std::mt19937_64 rng(detail::mix64(sig.seed ^ detail::mix64(index)));
      return mean + std::normal_distribution<double>(0.0, sig.sigma)(rng);
    }
  }
  throw std::invalid_argument("unknown noise kind");
}

/// Detected photoluminescence for one (write, evolve, read) shot.
inline double pl_signal(const PolarizationState& write, WritePath path,
                        const PolarizationState& probe, double delay_ps,
                        const DotParameters& dot, const SignalParams& sig,
                        std::uint64_t noise_index = 0) {
  sig.validate();
  if (!(delay_ps >= 0.0)) throw std::invalid_argument("pl_signal: delay_ps must be >= 0");
  const ExcitonState evolved = evolve(write_state(write, path, dot), delay_ps, dot);
  const double mean = sig.scale * projection_probability(evolved, probe) + sig.background;
  return apply_noise(mean, sig, noise_index);
}

/// Applies sig's noise model pointwise to a noiseless curve.
inline SignalCurve add_noise(const SignalCurve& curve, const SignalParams& sig) {
  sig.validate();
  SignalCurve out = curve;
  out.meta.sig = sig;
  for (std::size_t i = 0; i < out.values.size(); ++i)
    out.values[i] = apply_noise(out.values[i], sig, static_cast<std::uint64_t>(i));
  return out;
}

namespace detail {

inline void require_increasing(const std::vector<double>& xs, const char* what) {
  if (xs.empty()) throw std::invalid_argument(std::string(what) + ": grid must not be empty");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!std::isfinite(xs[i])) throw std::invalid_argument(std::string(what) + ": grid must be finite");
    if (i > 0 && !(xs[i] > xs[i - 1]))
      throw std::invalid_argument(std::string(what) + ": grid must be strictly increasing");
  }
}

}  // namespace detail

/// Photoluminescence versus write-read delay at fixed polarizations.
inline SignalCurve delay_scan(const PolarizationState& write, WritePath path,
                              const PolarizationState& probe, std::vector<double> delays_ps,
                              const DotParameters& dot, const SignalParams& sig) {
  dot.validate();
  sig.validate();
  detail::require_increasing(delays_ps, "delay_scan");
  if (delays_ps.front() < 0.0) throw std::invalid_argument("delay_scan: delays must be >= 0");

  SignalCurve curve;
  curve.abscissa = std::move(delays_ps);
  curve.values.reserve(curve.abscissa.size());
  SignalParams noiseless = sig;
  noiseless.noise = NoiseKind::None;
  for (double t : curve.abscissa)
    curve.values.push_back(pl_signal(write, path, probe, t, dot, noiseless));
  curve.meta = {write, probe, ScanKind::Delay, path, dot, sig, 0.0, 0.0};
  return add_noise(curve, sig);
}

/// Write polarization at a point of the scanned great circle. AnglePhi walks
/// the equator (angle = phi, so L -> Dbar -> R -> D); AngleTheta walks the
/// meridian through H -> L -> V -> R and back, with angle = theta on the
/// first half and 2*pi - theta (at phi = pi) on the second.
inline PolarizationState angle_scan_write_state(ScanKind vary, double angle) {
  if (!std::isfinite(angle)) throw std::invalid_argument("scan angle must be finite");
  if (vary == ScanKind::AnglePhi) return jones_from_angles({pi / 2.0, wrap_two_pi(angle)});
  if (vary != ScanKind::AngleTheta)
    throw std::invalid_argument("angle_scan_write_state: vary must be an angle scan");
  const double a = wrap_two_pi(angle);
  return a <= pi ? jones_from_angles({a, 0.0}) : jones_from_angles({two_pi - a, pi});
}

/// Photoluminescence versus write polarization angle at a fixed delay.
/// A nonzero lcvr_error_rad prepares each write state through the retarder
/// train with both retardances offset by that amount, modelling a
/// miscalibrated preparation.
inline SignalCurve angle_scan(ScanKind vary, std::vector<double> angles_rad,
                              const PolarizationState& probe, double delay_ps, WritePath path,
                              const DotParameters& dot, const SignalParams& sig,
                              double lcvr_error_rad = 0.0) {
  if (vary == ScanKind::Delay)
    throw std::invalid_argument("angle_scan: vary must be AnglePhi or AngleTheta");
  dot.validate();
  sig.validate();
  if (!(delay_ps >= 0.0)) throw std::invalid_argument("angle_scan: delay_ps must be >= 0");
  if (!std::isfinite(lcvr_error_rad))
    throw std::invalid_argument("angle_scan: lcvr_error_rad must be finite");
  detail::require_increasing(angles_rad, "angle_scan");
  if (angles_rad.front() < 0.0 || angles_rad.back() > two_pi + 1e-9)
    throw std::invalid_argument("angle_scan: angles must lie in [0, 2*pi]");

  SignalCurve curve;
  curve.abscissa = std::move(angles_rad);
  curve.values.reserve(curve.abscissa.size());
  SignalParams noiseless = sig;
  noiseless.noise = NoiseKind::None;
  for (double a : curve.abscissa) {
    PolarizationState write = angle_scan_write_state(vary, a);
    if (lcvr_error_rad != 0.0) {
      const LcvrSettings ideal = solve_lcvr_pair(write);
      write = apply_lcvr_pair({ideal.retardance_first + lcvr_error_rad,
                               ideal.retardance_second + lcvr_error_rad},
                              PolarizationState::H());
    }
    curve.values.push_back(pl_signal(write, path, probe, delay_ps, dot, noiseless));
  }
  curve.meta = {angle_scan_write_state(vary, 0.0), probe, vary, path,
                dot,  sig, delay_ps, lcvr_error_rad};
  return add_noise(curve, sig);
}

}  // namespace xspin
