#pragma once

// Shared helpers for the test suite: seeded random states and angle metrics.

#include <cmath>
#include <random>

#include "xspin/xspin.hpp"

namespace testutil {

inline std::mt19937_64 make_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline xspin::PolarizationState random_state(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  while (true) {
    const xspin::complexd h(n(rng), n(rng));
    const xspin::complexd v(n(rng), n(rng));
    if (std::norm(h) + std::norm(v) > 1e-6) return {h, v};
  }
}

// Uniform on the sphere in the chart's angles.
inline xspin::PoincareAngles random_angles(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double ct = 1.0 - 2.0 * u(rng);
  return {std::acos(std::clamp(ct, -1.0, 1.0)), xspin::two_pi * u(rng)};
}

// Angle between two Bloch/Stokes vectors, robust near 0 and pi.
inline double vector_angle(const xspin::StokesVector& a, const xspin::StokesVector& b) {
  const xspin::StokesVector cross{a.s2 * b.s3 - a.s3 * b.s2, a.s3 * b.s1 - a.s1 * b.s3,
                                  a.s1 * b.s2 - a.s2 * b.s1};
  return std::atan2(xspin::norm(cross), xspin::dot(a, b));
}

// Distance between angles on the circle, in [0, pi].
inline double circular_distance(double a, double b) {
  const double d = xspin::wrap_two_pi(a - b);
  return std::min(d, xspin::two_pi - d);
}

}  // namespace testutil
