#pragma once

// Inverse problem: least-squares fits of the oscillating-decay signal model
// to delay scans, refinement of oscillation maxima, and recovery of the
// written spin state from a set of scans taken with complementary probes.
//
// The estimator works entirely with ratios of fitted quantities (levels and
// contrasts), so it is invariant under a common rescaling of the input
// curves and never consults the recorded detection scale.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <stdexcept>
#include <vector>

#include "xspin/readout.hpp"

namespace xspin {

/// value(t) = background + level * exp(-t/tau_x) * (1 + contrast*cos(2*pi*t/period - phase))
struct FitModel {
  double period_ps = 100.0;
  double tau_x_ps = infinity;
  double contrast = 0.0;    // in [0, 1]
  double phase_rad = 0.0;   // in [0, 2*pi)
  double level = 1.0;
  double background = 0.0;

  double value(double t_ps) const {
    const double envelope = std::exp(-t_ps / tau_x_ps);
    return background +
           level * envelope * (1.0 + contrast * std::cos(two_pi * t_ps / period_ps - phase_rad));
  }
};

struct FitUncertainty {
  double period_ps = 0.0;
  double tau_x_ps = 0.0;
  double contrast = 0.0;
  double phase_rad = 0.0;
  double level = 0.0;
  double background = 0.0;
};

struct FitResult {
  FitModel model;
  FitUncertainty sigma;     // one-sigma from the local curvature at the optimum
  double residual_rms = 0.0;
  bool converged = false;
  int iterations = 0;
};

namespace detail {

// Internal fit parameters. The lifetime enters as a rate lam = 1/tau_x so
// curves without visible decay sit at the ordinary point lam = 0 instead of
// tau = infinity.
struct FitParams {
  double T = 1.0;
  double lam = 0.0;
  double A = 0.0;
  double phase = 0.0;
  double I0 = 0.0;
  double B = 0.0;

  std::array<double, 6> as_array() const { return {T, lam, A, phase, I0, B}; }
};

inline bool fit_params_valid(const FitParams& p) {
  return std::isfinite(p.T) && p.T > 0.0 && std::isfinite(p.lam) && std::isfinite(p.A) &&
         std::isfinite(p.phase) && std::isfinite(p.I0) && std::isfinite(p.B);
}

// Resolve the sign ambiguity (A, phase) ~ (-A, phase+pi), keep the rate
// nonnegative and the phase wrapped.
inline FitParams canonical_fit_params(FitParams p) {
  if (p.lam < 0.0) p.lam = 0.0;
  if (p.A < 0.0) {
    p.A = -p.A;
    p.phase += pi;
  }
  if (p.A > 2.0) p.A = 2.0;
  p.phase = wrap_two_pi(p.phase);
  return p;
}

inline double fit_cost(const std::vector<double>& t, const std::vector<double>& y,
                       const FitParams& p) {
  if (!fit_params_valid(p)) return infinity;
  double cost = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double envelope = std::exp(-p.lam * t[i]);
    const double c = std::cos(two_pi * t[i] / p.T - p.phase);
    const double r = p.B + p.I0 * envelope * (1.0 + p.A * c) - y[i];
    cost += r * r;
  }
  return cost;
}

inline void fit_residual_jacobian(const std::vector<double>& t, const std::vector<double>& y,
                                  const FitParams& p, Eigen::VectorXd& r, Eigen::MatrixXd& J) {
  const auto n = static_cast<Eigen::Index>(t.size());
  r.resize(n);
  J.resize(n, 6);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ti = t[static_cast<std::size_t>(i)];
    const double envelope = std::exp(-p.lam * ti);
    const double u = two_pi * ti / p.T - p.phase;
    const double c = std::cos(u);
    const double s = std::sin(u);
    const double osc = 1.0 + p.A * c;
    r(i) = p.B + p.I0 * envelope * osc - y[static_cast<std::size_t>(i)];
    J(i, 0) = p.I0 * envelope * p.A * s * two_pi * ti / (p.T * p.T);
    J(i, 1) = -ti * p.I0 * envelope * osc;
    J(i, 2) = p.I0 * envelope * c;
    J(i, 3) = p.I0 * envelope * p.A * s;
    J(i, 4) = envelope * osc;
    J(i, 5) = 1.0;
  }
}

struct GnOutcome {
  FitParams p;
  double cost = infinity;
  int iterations = 0;
  bool converged = false;
};

// Damped least squares over the six model parameters.
inline GnOutcome run_fit(const std::vector<double>& t, const std::vector<double>& y,
                         FitParams start, const std::array<double, 6>& scale) {
  GnOutcome out;
  out.p = canonical_fit_params(start);
  if (!fit_params_valid(out.p)) return out;
  out.cost = fit_cost(t, y, out.p);
  if (!std::isfinite(out.cost)) return out;

  Eigen::VectorXd r;
  Eigen::MatrixXd J;
  double damping = 1e-3;
  constexpr int kMaxIterations = 200;
  for (int iter = 1; iter <= kMaxIterations; ++iter) {
    out.iterations = iter;
    if (out.cost == 0.0) {
      out.converged = true;
      return out;
    }
    fit_residual_jacobian(t, y, out.p, r, J);
    const Eigen::Matrix<double, 6, 6> H = J.transpose() * J;
    const Eigen::Matrix<double, 6, 1> g = J.transpose() * r;
    const double href = std::max(H.diagonal().maxCoeff(), 1e-300);

    bool accepted = false;
    double step_rel = infinity;
    while (true) {
      Eigen::Matrix<double, 6, 6> damped = H;
      for (int j = 0; j < 6; ++j)
        damped(j, j) += damping * std::max(H(j, j), 1e-12 * href);
      const Eigen::Matrix<double, 6, 1> delta = damped.ldlt().solve(-g);

      step_rel = 0.0;
      const std::array<double, 6> pa = out.p.as_array();
      for (int j = 0; j < 6; ++j)
        step_rel = std::max(step_rel, std::abs(delta(j)) / std::max(std::abs(pa[j]), scale[j]));

      FitParams trial = out.p;
      trial.T += delta(0);
      trial.lam += delta(1);
      trial.A += delta(2);
      trial.phase += delta(3);
      trial.I0 += delta(4);
      trial.B += delta(5);
      trial = canonical_fit_params(trial);
      const double trial_cost = fit_params_valid(trial) ? fit_cost(t, y, trial) : infinity;
      if (trial_cost < out.cost) {
        const double gain = out.cost - trial_cost;
        out.p = trial;
        out.cost = trial_cost;
        damping = std::max(damping / 3.0, 1e-14);
        accepted = true;
        if (step_rel < 1e-10 || gain <= 1e-15 * out.cost) out.converged = true;
        break;
      }
      damping *= 8.0;
      if (damping > 1e15) break;  // no downhill step left at any damping
    }
    if (!accepted) {
      // fully damped step is negligible: we are at a (local) optimum
      out.converged = step_rel < 1e-6;
      return out;
    }
    if (out.converged) return out;
  }
  return out;  // iteration budget exhausted, converged stays false
}

// Data-driven starting point: envelope from a log-linear fit, oscillation
// from the peak of an oversampled discrete spectrum of the detrended data.
inline FitParams seed_fit(const std::vector<double>& t, const std::vector<double>& y) {
  const std::size_t n = t.size();
  const double span = t.back() - t.front();
  FitParams seed;
  seed.B = y.front();
  for (double v : y) seed.B = std::min(seed.B, v);

  std::vector<double> d(n);
  double dmax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = y[i] - seed.B;
    dmax = std::max(dmax, d[i]);
  }
  seed.T = std::max(span, 1e-30);
  if (dmax <= 0.0) return seed;  // constant curve

  // log-linear envelope fit over points well above the floor
  double sn = 0.0, st = 0.0, sl = 0.0, stt = 0.0, stl = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (d[i] <= 1e-3 * dmax) continue;
    const double l = std::log(d[i]);
    sn += 1.0;
    st += t[i];
    sl += l;
    stt += t[i] * t[i];
    stl += t[i] * l;
  }
  const double det = sn * stt - st * st;
  if (sn >= 2.0 && det > 0.0) {
    const double slope = (sn * stl - st * sl) / det;
    seed.lam = std::clamp(-slope, 0.0, 40.0 / span);
  }

  // detrend and remove the mean
  std::vector<double> z(n);
  double zmean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    z[i] = d[i] * std::exp(seed.lam * (t[i] - t.front()));
    zmean += z[i];
  }
  zmean /= static_cast<double>(n);
  for (double& v : z) v -= zmean;
  const double anchor = std::min(seed.lam * t.front(), 700.0);
  seed.I0 = zmean * std::exp(anchor);

  // spectrum peak over an oversampled frequency grid
  double dtmin = span;
  for (std::size_t i = 1; i < n; ++i) dtmin = std::min(dtmin, t[i] - t[i - 1]);
  const double flo = 0.7 / span;
  const double fhi = std::max(0.5 / dtmin, 2.0 * flo);
  const int nf = std::clamp(static_cast<int>(16 * n), 64, 65536);
  const auto spectrum_at = [&](double f) {
    complexd acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += z[i] * std::polar(1.0, -two_pi * f * t[i]);
    return acc;
  };
  std::vector<double> power(static_cast<std::size_t>(nf));
  int kbest = 0;
  const double fstep = (fhi - flo) / (nf - 1);
  for (int k = 0; k < nf; ++k) {
    power[static_cast<std::size_t>(k)] = std::norm(spectrum_at(flo + k * fstep));
    if (power[static_cast<std::size_t>(k)] > power[static_cast<std::size_t>(kbest)]) kbest = k;
  }
  double fpeak = flo + kbest * fstep;
  if (kbest > 0 && kbest < nf - 1) {
    const double pm = power[static_cast<std::size_t>(kbest - 1)];
    const double p0 = power[static_cast<std::size_t>(kbest)];
    const double pp = power[static_cast<std::size_t>(kbest + 1)];
    const double denom = pm - 2.0 * p0 + pp;
    if (denom < 0.0) fpeak += 0.5 * fstep * (pm - pp) / denom;
  }
  seed.T = 1.0 / fpeak;
  const complexd peak = spectrum_at(fpeak);
  seed.phase = wrap_two_pi(-std::arg(peak));
  if (zmean > 0.0)
    seed.A = std::clamp(2.0 * std::abs(peak) / (static_cast<double>(n) * zmean), 0.05, 1.0);
  else
    seed.A = 0.05;
  return seed;
}

}  // namespace detail

/// Fits the oscillating-decay model to a delay scan. When `init` is absent
/// the starting point is derived from the data itself; several oscillation
/// phases are tried and the best optimum wins. Convergence means the
/// relative parameter step fell below 1e-10 (or the residual stopped
/// improving); otherwise the best parameters so far are returned with
/// converged = false.
inline FitResult fit_delay_curve(const SignalCurve& curve,
                                 const std::optional<FitModel>& init = std::nullopt) {
  const std::vector<double>& t = curve.abscissa;
  const std::vector<double>& y = curve.values;
  if (curve.meta.scan != ScanKind::Delay)
    throw std::invalid_argument("fit_delay_curve: curve must be a delay scan");
  if (t.size() < 8) throw std::invalid_argument("fit_delay_curve: need at least 8 points");
  if (t.size() != y.size())
    throw std::invalid_argument("fit_delay_curve: abscissa and values must have equal length");
  detail::require_increasing(t, "fit_delay_curve");

  detail::FitParams seed;
  if (init) {
    if (!(init->period_ps > 0.0) || !std::isfinite(init->period_ps))
      throw std::invalid_argument("fit_delay_curve: init period must be positive and finite");
    if (!(init->tau_x_ps > 0.0))
      throw std::invalid_argument("fit_delay_curve: init tau_x must be positive");
    seed.T = init->period_ps;
    seed.lam = 1.0 / init->tau_x_ps;
    seed.A = std::clamp(init->contrast, 0.0, 1.0);
    seed.phase = wrap_two_pi(init->phase_rad);
    seed.I0 = init->level;
    seed.B = init->background;
  } else {
    seed = detail::seed_fit(t, y);
  }

  const double span = t.back() - t.front();
  double yspread = 0.0;
  for (double v : y) yspread = std::max(yspread, std::abs(v - y.front()));
  const std::array<double, 6> scale = {
      std::max(seed.T * 1e-3, 1e-30), 1.0 / (100.0 * span), 1e-2, 1e-2,
      std::max({std::abs(seed.I0), yspread, 1e-30}), std::max({std::abs(seed.B), yspread, 1e-30})};

  double ymax = 0.0;
  for (double v : y) ymax = std::max(ymax, std::abs(v));
  const double exact_cost = static_cast<double>(t.size()) * (1e-9 * ymax) * (1e-9 * ymax);

  const std::array<double, 5> phases = {seed.phase, 0.0, pi / 2.0, pi, 3.0 * pi / 2.0};
  detail::GnOutcome best;
  for (double ph : phases) {
    detail::FitParams start = seed;
    start.phase = ph;
    const detail::GnOutcome outcome = detail::run_fit(t, y, start, scale);
    if (outcome.cost < best.cost) best = outcome;
    if (best.converged && best.cost <= exact_cost) break;  // data already matched to working precision
  }

  FitResult result;
  result.model.period_ps = best.p.T;
  result.model.tau_x_ps = best.p.lam > 0.0 ? 1.0 / best.p.lam : infinity;
  result.model.contrast = std::clamp(best.p.A, 0.0, 1.0);
  result.model.phase_rad = wrap_two_pi(best.p.phase);
  result.model.level = best.p.I0;
  result.model.background = best.p.B;
  result.converged = best.converged;
  result.iterations = best.iterations;
  result.residual_rms = std::sqrt(best.cost / static_cast<double>(t.size()));

  // one-sigma parameter uncertainties from the pseudoinverse curvature
  const auto dof = static_cast<double>(t.size()) - 6.0;
  std::array<double, 6> sig{};
  if (dof > 0.0 && std::isfinite(best.cost)) {
    const double variance = best.cost / dof;
    Eigen::VectorXd r;
    Eigen::MatrixXd J;
    detail::fit_residual_jacobian(t, y, best.p, r, J);
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(J, Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double floor = std::max(sv(0) * 1e-18, 1e-300);
    for (int j = 0; j < 6; ++j) {
      double acc = 0.0;
      for (int k = 0; k < 6; ++k) {
        const double s = std::max(sv(k), floor);
        acc += svd.matrixV()(j, k) * svd.matrixV()(j, k) / (s * s);
      }
      sig[static_cast<std::size_t>(j)] = std::sqrt(variance * acc);
    }
  } else {
    sig.fill(infinity);
  }
  result.sigma.period_ps = sig[0];
  result.sigma.tau_x_ps = best.p.lam > 0.0 ? sig[1] / (best.p.lam * best.p.lam) : infinity;
  result.sigma.contrast = sig[2];
  result.sigma.phase_rad = sig[3];
  result.sigma.level = sig[4];
  result.sigma.background = sig[5];
  return result;
}

/// Abscissa positions of local maxima, each refined by the vertex of the
/// parabola through the three bracketing samples (works for nonuniform
/// grids). A boundary point counts as a maximum only when the curve bends
/// downward there and the parabola vertex falls inside the edge interval;
/// refined positions are clamped to the data range. Returns an empty vector
/// when the curve has no maxima.
inline std::vector<double> locate_maxima(const SignalCurve& curve) {
  const std::vector<double>& x = curve.abscissa;
  const std::vector<double>& y = curve.values;
  if (x.size() != y.size())
    throw std::invalid_argument("locate_maxima: abscissa and values must have equal length");
  std::vector<double> maxima;
  const std::size_t n = x.size();
  if (n < 3) return maxima;

  // vertex of the parabola through points (i0, i1, i2); curvature must be
  // negative for a maximum
  const auto vertex = [&](std::size_t i0, std::size_t i1, std::size_t i2,
                          double& vx) {
    const double d1 = (y[i1] - y[i0]) / (x[i1] - x[i0]);
    const double d2 = (y[i2] - y[i1]) / (x[i2] - x[i1]);
    const double curv = (d2 - d1) / (x[i2] - x[i0]);
    if (!(curv < 0.0)) return false;
    vx = 0.5 * (x[i0] + x[i1]) - d1 / (2.0 * curv);
    return true;
  };

  if (y[0] > y[1]) {
    double vx;
    if (vertex(0, 1, 2, vx) && vx < x[1] && vx >= x[0] - 0.5 * (x[1] - x[0]))
      maxima.push_back(std::clamp(vx, x[0], x[1]));
  }
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (y[i] >= y[i - 1] && y[i] > y[i + 1]) {
      double vx;
      if (!vertex(i - 1, i, i + 1, vx)) vx = x[i];
      maxima.push_back(std::clamp(vx, x[i - 1], x[i + 1]));
    }
  }
  if (y[n - 1] > y[n - 2]) {
    double vx;
    if (vertex(n - 3, n - 2, n - 1, vx) && vx > x[n - 2] &&
        vx <= x[n - 1] + 0.5 * (x[n - 1] - x[n - 2]))
      maxima.push_back(std::clamp(vx, x[n - 2], x[n - 1]));
  }
  return maxima;
}

struct StateEstimate {
  double theta_rad = 0.0;  // [0, pi]
  double phi_rad = 0.0;    // [0, 2*pi)
  double purity = 0.0;     // recovered |bloch| in [0, 1]
};

/// Recovers the written spin state from delay scans sharing one write pulse.
/// Equatorial probes are fitted freely; their oscillation amplitudes and
/// phases carry the transverse spin components, and their fits also pin the
/// background and the decay rate. H/V probe curves are pure exponentials, so
/// fitting them freely would split level and background almost arbitrarily;
/// instead their level is obtained by a linear fit against that shared
/// envelope, and its ratio to the equatorial level carries s3. Requires at
/// least one probe of each kind.
inline StateEstimate estimate_state(const std::vector<SignalCurve>& curves) {
  if (curves.size() < 2) throw std::invalid_argument("estimate_state: need at least two curves");
  const CurveMeta& m0 = curves.front().meta;
  for (const SignalCurve& c : curves) {
    const CurveMeta& m = c.meta;
    if (m.scan != ScanKind::Delay)
      throw std::invalid_argument("estimate_state: all curves must be delay scans");
    if (c.abscissa.size() != c.values.size())
      throw std::invalid_argument("estimate_state: abscissa and values must have equal length");
    detail::require_increasing(c.abscissa, "estimate_state");
    const bool same =
        fidelity(m.write_pol, m0.write_pol) >= 1.0 - 1e-9 && m.path == m0.path &&
        m.dot.delta_gs_ueV == m0.dot.delta_gs_ueV && m.dot.tau_x_ps == m0.dot.tau_x_ps &&
        m.dot.t2_ps == m0.dot.t2_ps && m.sig.scale == m0.sig.scale &&
        m.sig.background == m0.sig.background;
    if (!same) throw std::invalid_argument("estimate_state: curves disagree in metadata");
  }

  struct Equatorial {
    double probe_phi;
    FitResult fit;
  };
  struct Polar {
    double axis_s3;  // +-1: s3 of the projection axis orthogonal(probe)
    const SignalCurve* curve;
  };
  std::vector<Equatorial> equatorial;
  std::vector<Polar> polar;

  const double period = precession_period(m0.dot.delta_gs_ueV);
  for (const SignalCurve& c : curves) {
    const StokesVector probe = stokes_from_jones(c.meta.read_pol);
    if (std::abs(probe.s3) > 1e-9 && std::abs(probe.s3) < 1.0 - 1e-9)
      throw std::invalid_argument(
          "estimate_state: probe '" + format_polarization(c.meta.read_pol) +
          "' is neither equatorial nor H/V; insufficient probe diversity");
    if (std::abs(probe.s3) > 0.5) {
      polar.push_back({stokes_from_jones(orthogonal(c.meta.read_pol)).s3, &c});
      continue;
    }

    FitModel init;
    init.period_ps = period;
    init.tau_x_ps = m0.dot.tau_x_ps;
    init.contrast = 0.5;
    init.phase_rad = 0.0;
    double lo = c.values.front(), mean = 0.0;
    for (double v : c.values) {
      lo = std::min(lo, v);
      mean += v;
    }
    mean /= static_cast<double>(c.values.size());
    double env = 0.0;  // average decay factor over the grid
    for (double t : c.abscissa) env += std::exp(-t / m0.dot.tau_x_ps);
    env /= static_cast<double>(c.abscissa.size());
    init.background = lo;
    init.level = std::max((mean - lo) / std::max(env, 1e-12), 1e-12);

    const FitResult fit = fit_delay_curve(c, init);
    if (!fit.converged)
      throw std::runtime_error("estimate_state: fit did not converge for probe '" +
                               format_polarization(c.meta.read_pol) + "'");
    equatorial.push_back({angles_from_jones(c.meta.read_pol).phi, fit});
  }
  if (equatorial.empty() || polar.empty())
    throw std::invalid_argument(
        "estimate_state: insufficient probe diversity (need at least one equatorial probe and "
        "one H/V probe)");

  double eq_level = 0.0, bg = 0.0, rate = 0.0;
  double transverse_amp = 0.0;
  complexd phase_acc = 0.0;
  for (const Equatorial& e : equatorial) {
    eq_level += e.fit.model.level;
    bg += e.fit.model.background;
    rate += std::isfinite(e.fit.model.tau_x_ps) ? 1.0 / e.fit.model.tau_x_ps : 0.0;
    // A and I0 are anticorrelated in the fit; their product is the robust
    // oscillation amplitude
    const double amp = e.fit.model.contrast * e.fit.model.level;
    transverse_amp += amp;
    // maxima occur when the spin points along the projection axis: the
    // fitted phase of probe at equatorial angle phi_p is pi + phi_p - phi0
    phase_acc += amp * amp * std::polar(1.0, pi + e.probe_phi - e.fit.model.phase_rad);
  }
  const auto n_eq = static_cast<double>(equatorial.size());
  eq_level /= n_eq;
  bg /= n_eq;
  rate /= n_eq;
  transverse_amp /= n_eq;
  if (!(eq_level > 0.0))
    throw std::runtime_error("estimate_state: nonpositive fitted equatorial level");

  double s3 = 0.0;  // r*cos(theta), from level ratios
  for (const Polar& p : polar) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < p.curve->abscissa.size(); ++i) {
      const double envelope = std::exp(-rate * p.curve->abscissa[i]);
      num += envelope * (p.curve->values[i] - bg);
      den += envelope * envelope;
    }
    if (!(den > 0.0)) throw std::runtime_error("estimate_state: degenerate polar curve");
    s3 += (num / den / eq_level - 1.0) / p.axis_s3;
  }
  s3 /= static_cast<double>(polar.size());
  const double transverse = transverse_amp / eq_level;  // r*sin(theta)

  StateEstimate est;
  est.theta_rad = std::atan2(transverse, s3);
  est.phi_rad = std::abs(phase_acc) > 1e-12 ? wrap_two_pi(std::arg(phase_acc)) : 0.0;
  est.purity = std::clamp(std::hypot(transverse, s3), 0.0, 1.0);
  return est;
}

}  // namespace xspin
