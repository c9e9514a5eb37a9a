#pragma once

// Jones calculus on the (H, V) basis, the Poincare-sphere chart used
// throughout the project, and the variable-retarder preparation optics.
//
// Chart convention: theta in [0, pi] is measured from the H-V axis of the
// sphere (theta = 0 at H, pi at V); phi in [0, 2*pi) runs along the equator
// starting at L and increasing toward Dbar, which is the sense of free
// precession. The Jones representative of (theta, phi) is
//   (cos(theta/2), e^{i*alpha} sin(theta/2)),  alpha = -(pi/2 + phi),
// which places the named states at
//   H=(1,0)  V=(0,1)  D=(1,1)/sqrt2  Dbar=(1,-1)/sqrt2
//   R=(1,i)/sqrt2  L=(1,-i)/sqrt2.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "xspin/detail/text.hpp"

namespace xspin {

using complexd = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Wraps an angle into [0, 2*pi).
inline double wrap_two_pi(double a) {
  double w = std::fmod(a, two_pi);
  if (w < 0.0) w += two_pi;
  if (w >= two_pi) w -= two_pi;  // fmod can round back up to 2*pi
  return w + 0.0;                // drop a negative zero
}

// Normalized two-component Jones vector with a canonical global phase:
// the H amplitude is real and nonnegative, and states within 1e-12 of a
// pole snap to exactly (1, 0) or (0, 1).
class PolarizationState {
 public:
  PolarizationState(complexd h_amp, complexd v_amp) {
    const double n = std::sqrt(std::norm(h_amp) + std::norm(v_amp));
    if (!(n > 0.0) || !std::isfinite(n))
      throw std::invalid_argument("polarization amplitudes must be finite and not both zero");
    h_amp /= n;
    v_amp /= n;
    const double ah = std::abs(h_amp);
    if (ah < kPoleEps) {
      ch_ = 0.0;
      cv_ = 1.0;
    } else if (std::abs(v_amp) < kPoleEps) {
      ch_ = 1.0;
      cv_ = 0.0;
    } else {
      const complexd rot = std::conj(h_amp) / ah;  // removes the global phase
      ch_ = ah;
      cv_ = v_amp * rot;
    }
  }

  complexd ch() const { return ch_; }
  complexd cv() const { return cv_; }

  static PolarizationState H() { return {1.0, 0.0}; }
  static PolarizationState V() { return {0.0, 1.0}; }
  static PolarizationState D() { return {kInvSqrt2, kInvSqrt2}; }
  static PolarizationState Dbar() { return {kInvSqrt2, -kInvSqrt2}; }
  static PolarizationState R() { return {kInvSqrt2, complexd(0.0, kInvSqrt2)}; }
  static PolarizationState L() { return {kInvSqrt2, complexd(0.0, -kInvSqrt2)}; }

 private:
  static constexpr double kPoleEps = 1e-12;
  static constexpr double kInvSqrt2 = 0.70710678118654752440;
  complexd ch_, cv_;
};

inline complexd inner_product(const PolarizationState& a, const PolarizationState& b) {
  return std::conj(a.ch()) * b.ch() + std::conj(a.cv()) * b.cv();
}

/// Squared overlap |<a|b>|^2: 1 for the same ray, 0 for orthogonal rays.
inline double fidelity(const PolarizationState& a, const PolarizationState& b) {
  return std::min(std::norm(inner_product(a, b)), 1.0);  // roundoff can poke above 1
}

/// The antipodal polarization, <orthogonal(s)|s> = 0.
inline PolarizationState orthogonal(const PolarizationState& s) {
  return {std::conj(s.cv()), -std::conj(s.ch())};
}

struct StokesVector {
  double s1 = 0.0;  // +1 at D, -1 at Dbar
  double s2 = 0.0;  // +1 at R, -1 at L
  double s3 = 0.0;  // +1 at H, -1 at V
};

inline StokesVector operator-(const StokesVector& s) { return {-s.s1, -s.s2, -s.s3}; }

inline double dot(const StokesVector& a, const StokesVector& b) {
  return a.s1 * b.s1 + a.s2 * b.s2 + a.s3 * b.s3;
}

inline double norm(const StokesVector& s) { return std::sqrt(dot(s, s)); }

inline StokesVector stokes_from_jones(const PolarizationState& s) {
  const complexd cross = std::conj(s.ch()) * s.cv();
  return {2.0 * cross.real(), 2.0 * cross.imag(), std::norm(s.ch()) - std::norm(s.cv())};
}

struct PoincareAngles {
  double theta = 0.0;  // [0, pi], 0 at H
  double phi = 0.0;    // [0, 2*pi), 0 at L, increasing toward Dbar
};

// V-amplitude phase realizing a given equatorial angle; fixed by requiring
// phi = 0 to be L = (1, -i)/sqrt2.
inline double jones_phase_from_phi(double phi) { return -(pi / 2.0 + phi); }

inline PolarizationState jones_from_angles(const PoincareAngles& a) {
  if (!std::isfinite(a.theta) || !std::isfinite(a.phi) || a.theta < -1e-9 || a.theta > pi + 1e-9)
    throw std::invalid_argument("theta must lie in [0, pi]");
  const double theta = std::clamp(a.theta, 0.0, pi);
  const double alpha = jones_phase_from_phi(wrap_two_pi(a.phi));
  return {std::cos(theta / 2.0), std::polar(std::sin(theta / 2.0), alpha)};
}

inline PoincareAngles angles_from_jones(const PolarizationState& s) {
  const double ah = std::abs(s.ch());
  const double av = std::abs(s.cv());
  const double theta = 2.0 * std::atan2(av, ah);
  if (ah < 1e-12 || av < 1e-12) return {theta, 0.0};  // phi is arbitrary at a pole
  return {theta, wrap_two_pi(-(pi / 2.0) - std::arg(s.cv()))};
}

/// Unit Stokes vector of the chart point (theta, phi). Matches
/// stokes_from_jones(jones_from_angles(a)) to rounding.
inline StokesVector stokes_from_angles(const PoincareAngles& a) {
  const double st = std::sin(a.theta);
  return {-st * std::sin(a.phi), -st * std::cos(a.phi), std::cos(a.theta)};
}

// ---------------------------------------------------------------------------
// Retarders and the two-cell preparation train.

// Linear retarder: the field component along the fast axis acquires phase
// exp(-i*retardance) relative to the slow component. fast_axis is the
// real-space angle from H in radians.
struct Retarder {
  double retardance = 0.0;
  double fast_axis = 0.0;
};

inline PolarizationState apply_retarder(const Retarder& r, const PolarizationState& s) {
  if (!std::isfinite(r.retardance) || !std::isfinite(r.fast_axis))
    throw std::invalid_argument("retarder parameters must be finite");
  const double c = std::cos(r.fast_axis);
  const double sn = std::sin(r.fast_axis);
  // rotate into the axis frame, retard, rotate back
  complexd a = c * s.ch() + sn * s.cv();
  const complexd b = -sn * s.ch() + c * s.cv();
  a *= std::polar(1.0, -r.retardance);
  return {c * a - sn * b, sn * a + c * b};
}

// Preparation train geometry: H-polarized source, first cell with fast axis
// at pi/4, second cell with fast axis at 0 (along H).
inline constexpr double lcvr_axis_first = pi / 4.0;
inline constexpr double lcvr_axis_second = 0.0;

struct LcvrSettings {
  double retardance_first = 0.0;
  double retardance_second = 0.0;
};

inline PolarizationState apply_lcvr_pair(const LcvrSettings& set, const PolarizationState& input) {
  return apply_retarder({set.retardance_second, lcvr_axis_second},
                        apply_retarder({set.retardance_first, lcvr_axis_first}, input));
}

/// Retardances in [0, 2*pi) steering the H source onto `target`. The train
/// sends H to (cos(r1/2), -i e^{i*r2} sin(r1/2)) up to a global phase, so
/// r1 = theta, r2 = -phi solves it in closed form; the result is checked
/// against the forward model before returning.
inline LcvrSettings solve_lcvr_pair(const PolarizationState& target) {
  const PoincareAngles a = angles_from_jones(target);
  const LcvrSettings set{a.theta, wrap_two_pi(-a.phi)};
  if (fidelity(apply_lcvr_pair(set, PolarizationState::H()), target) < 1.0 - 1e-9)
    throw std::runtime_error("solve_lcvr_pair: retarder train failed to reach the target state");
  return set;
}

// ---------------------------------------------------------------------------
// Naming.

/// "H", "V", "D", "Dbar", "R" or "L" when `s` matches the named state to
/// fidelity 1 - 1e-12, otherwise nothing.
inline std::optional<std::string> canonical_name(const PolarizationState& s) {
  struct Entry {
    const char* name;
    PolarizationState state;
  };
  const Entry table[] = {
      {"H", PolarizationState::H()},       {"V", PolarizationState::V()},
      {"D", PolarizationState::D()},       {"Dbar", PolarizationState::Dbar()},
      {"R", PolarizationState::R()},       {"L", PolarizationState::L()},
  };
  for (const Entry& e : table)
    if (fidelity(s, e.state) >= 1.0 - 1e-12) return std::string(e.name);
  return std::nullopt;
}

/// Canonical name if there is one, otherwise "theta:phi" in radians with
/// shortest round-trip formatting.
inline std::string format_polarization(const PolarizationState& s) {
  if (auto name = canonical_name(s)) return *name;
  const PoincareAngles a = angles_from_jones(s);
  return detail::fmt_double(a.theta) + ":" + detail::fmt_double(a.phi);
}

/// Accepts the six canonical names or "theta:phi" in radians.
inline PolarizationState parse_polarization(std::string_view text) {
  const std::string_view t = detail::trim(text);
  if (t == "H") return PolarizationState::H();
  if (t == "V") return PolarizationState::V();
  if (t == "D") return PolarizationState::D();
  if (t == "Dbar") return PolarizationState::Dbar();
  if (t == "R") return PolarizationState::R();
  if (t == "L") return PolarizationState::L();
  const auto colon = t.find(':');
  if (colon == std::string_view::npos)
    throw std::invalid_argument("unknown polarization '" + std::string(t) +
                                "' (expected H, V, D, Dbar, R, L or theta:phi)");
  const double theta = detail::parse_double(detail::trim(t.substr(0, colon)));
  const double phi = detail::parse_double(detail::trim(t.substr(colon + 1)));
  return jones_from_angles({theta, phi});
}

}  // namespace xspin
