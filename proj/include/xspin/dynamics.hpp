#pragma once

// Exciton spin dynamics: the write map from pulse polarization to the
// Bloch vector, closed-form free evolution (fine-structure precession plus
// decay), and a small-step density-matrix integrator kept around as an
// independent cross-check of the closed form.
//
// The fine-structure eigenstates are H and V with the V exciton higher by
// delta_gs. On the Bloch sphere (axes = Stokes axes of the written pulse)
// the transverse spin (s1, s2) therefore precesses while s3 is stationary;
// the rotation sense is L -> Dbar -> R -> D, i.e.
//   (s1 + i s2)(t) = e^{-i*2*pi*t/T} (s1 + i s2)(0),  T = 2*pi*hbar/delta.

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>

#include "xspin/polarization.hpp"

namespace xspin {

inline constexpr double infinity = std::numeric_limits<double>::infinity();

/// hbar in ueV*ps.
inline constexpr double hbar_ueV_ps = 658.2119569;

/// Precession period T = 2*pi*hbar/delta in ps for a splitting in ueV.
inline double precession_period(double delta_ueV) {
  if (!(delta_ueV > 0.0) || !std::isfinite(delta_ueV))
    throw std::invalid_argument("precession_period: splitting must be positive and finite");
  return two_pi * hbar_ueV_ps / delta_ueV;
}

struct DotParameters {
  double delta_gs_ueV = 34.0;   // ground-state exciton fine-structure splitting
  double delta_es_ueV = 60.0;   // excited-state exciton splitting
  double tau_x_ps = 1000.0;     // radiative lifetime of the exciton population
  double t2_ps = infinity;      // transverse spin coherence time
  double t2_longitudinal_ps = infinity;  // optional decay of the s3 component
  double relax_depol = 0.0;     // transverse shrink applied by an excited-state write

  void validate() const {
    if (!std::isfinite(delta_gs_ueV) || !(delta_gs_ueV > 0.0))
      throw std::invalid_argument("delta_gs_ueV must be positive and finite");
    if (!std::isfinite(delta_es_ueV) || !(delta_es_ueV > 0.0))
      throw std::invalid_argument("delta_es_ueV must be positive and finite");
    if (!(tau_x_ps > 0.0)) throw std::invalid_argument("tau_x_ps must be positive");
    if (!(t2_ps > 0.0)) throw std::invalid_argument("t2_ps must be positive");
    if (!(t2_longitudinal_ps > 0.0))
      throw std::invalid_argument("t2_longitudinal_ps must be positive");
    if (!(relax_depol >= 0.0 && relax_depol <= 1.0))
      throw std::invalid_argument("relax_depol must lie in [0, 1]");
  }
};

// Spin polarization vector of the exciton; reuses the Stokes axes of the
// pulse that wrote it.
using BlochVector = StokesVector;

struct ExcitonState {
  BlochVector bloch;        // |bloch| <= 1 (1 for a pure spin state)
  double population = 0.0;  // surviving exciton occupancy in [0, 1]
};

enum class WritePath {
  GroundResonant,   // pulse resonant with the ground-state exciton
  ExcitedResonant,  // pulse resonant with the excited exciton, followed by
                    // fast spin-conserving relaxation
};

/// Photogeneration: the pulse polarization is copied onto the exciton spin
/// with unit population. The excited-state path relaxes spin-conservingly;
/// relax_depol shrinks the transverse components once on the way down.
inline ExcitonState write_state(const PolarizationState& pulse, WritePath path,
                                const DotParameters& params) {
  params.validate();
  BlochVector b = stokes_from_jones(pulse);
  if (path == WritePath::ExcitedResonant) {
    b.s1 *= 1.0 - params.relax_depol;
    b.s2 *= 1.0 - params.relax_depol;
  }
  return {b, 1.0};
}

/// Free evolution for dt_ps >= 0. Infinite coherence times are allowed and
/// leave the corresponding component undamped.
inline ExcitonState evolve(const ExcitonState& state, double dt_ps, const DotParameters& params) {
  params.validate();
  if (!(dt_ps >= 0.0)) throw std::invalid_argument("evolve: dt_ps must be >= 0");
  const double beta = two_pi * dt_ps / precession_period(params.delta_gs_ueV);
  const double c = std::cos(beta);
  const double s = std::sin(beta);
  const double transverse = std::exp(-dt_ps / params.t2_ps);
  ExcitonState out;
  out.bloch.s1 = (state.bloch.s1 * c + state.bloch.s2 * s) * transverse;
  out.bloch.s2 = (-state.bloch.s1 * s + state.bloch.s2 * c) * transverse;
  out.bloch.s3 = state.bloch.s3 * std::exp(-dt_ps / params.t2_longitudinal_ps);
  out.population = state.population * std::exp(-dt_ps / params.tau_x_ps);
  return out;
}

namespace detail {

// 2x2 exciton density matrix in the (H, V) basis, not trace-normalized:
// the trace carries the surviving population.
struct DensityMatrix {
  double hh = 0.0;
  double vv = 0.0;
  complexd hv;  // vh = conj(hv)

  DensityMatrix& axpy(double a, const DensityMatrix& d) {
    hh += a * d.hh;
    vv += a * d.vv;
    hv += a * d.hv;
    return *this;
  }
};

// Right-hand side of the master equation with H_fs = diag(-delta/2, +delta/2):
// coherent rotation of the coherence at omega = delta/hbar, uniform radiative
// decay of every entry, extra pure dephasing of the coherence, and optional
// relaxation of the population imbalance.
inline DensityMatrix master_rhs(const DensityMatrix& rho, const DotParameters& p) {
  const double omega = p.delta_gs_ueV / hbar_ueV_ps;
  const double gamma = 1.0 / p.tau_x_ps;
  const double imbalance = (rho.hh - rho.vv) / (2.0 * p.t2_longitudinal_ps);
  DensityMatrix d;
  d.hh = -gamma * rho.hh - imbalance;
  d.vv = -gamma * rho.vv + imbalance;
  d.hv = (complexd(0.0, omega) - complexd(gamma + 1.0 / p.t2_ps, 0.0)) * rho.hv;
  return d;
}

}  // namespace detail

/// Reference implementation of evolve: integrates the exciton density matrix
/// with classic RK4 at the requested step. Requires step_ps <= dt_ps/100 so
/// callers cannot silently under-resolve the precession.
inline ExcitonState evolve_oracle(const ExcitonState& state, double dt_ps,
                                  const DotParameters& params, double step_ps) {
  params.validate();
  if (!(dt_ps >= 0.0)) throw std::invalid_argument("evolve_oracle: dt_ps must be >= 0");
  if (dt_ps == 0.0) return state;
  if (!(step_ps > 0.0)) throw std::invalid_argument("evolve_oracle: step_ps must be positive");
  if (step_ps > dt_ps / 100.0)
    throw std::invalid_argument("evolve_oracle: step_ps must be <= dt_ps/100");

  detail::DensityMatrix rho;
  rho.hh = state.population * (1.0 + state.bloch.s3) / 2.0;
  rho.vv = state.population * (1.0 - state.bloch.s3) / 2.0;
  // bloch = (2 Re rho_vh, 2 Im rho_vh, hh - vv) / population
  rho.hv = std::conj(state.population * complexd(state.bloch.s1, state.bloch.s2) / 2.0);

  const long n = static_cast<long>(std::ceil(dt_ps / step_ps));
  const double h = dt_ps / static_cast<double>(n);
  for (long i = 0; i < n; ++i) {
    const detail::DensityMatrix k1 = detail::master_rhs(rho, params);
    detail::DensityMatrix t = rho;
    t.axpy(h / 2.0, k1);
    const detail::DensityMatrix k2 = detail::master_rhs(t, params);
    t = rho;
    t.axpy(h / 2.0, k2);
    const detail::DensityMatrix k3 = detail::master_rhs(t, params);
    t = rho;
    t.axpy(h, k3);
    const detail::DensityMatrix k4 = detail::master_rhs(t, params);
    rho.axpy(h / 6.0, k1).axpy(h / 3.0, k2).axpy(h / 3.0, k3).axpy(h / 6.0, k4);
  }

  ExcitonState out;
  out.population = rho.hh + rho.vv;
  if (out.population <= 0.0) return {{0.0, 0.0, 0.0}, 0.0};
  const complexd vh = std::conj(rho.hv);
  out.bloch.s1 = 2.0 * vh.real() / out.population;
  out.bloch.s2 = 2.0 * vh.imag() / out.population;
  out.bloch.s3 = (rho.hh - rho.vv) / out.population;
  return out;
}

}  // namespace xspin
