#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "helpers.hpp"
#include "xspin/readout.hpp"

using namespace xspin;
using Catch::Matchers::WithinAbs;
using testutil::make_rng;

namespace {

DotParameters coherent_dot() {
  DotParameters d;
  d.tau_x_ps = infinity;
  return d;
}

std::vector<double> grid(double stop, int points) {
  std::vector<double> v(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i)
    v[static_cast<std::size_t>(i)] = stop * i / (points - 1);
  return v;
}

}  // namespace

TEST_CASE("projection probability", "[readout]") {
  const DotParameters dot;
  SECTION("equals the squared overlap with the orthogonal probe") {
    auto rng = make_rng(91);
    for (int i = 0; i < 300; ++i) {
      const PolarizationState pulse = testutil::random_state(rng);
      const PolarizationState probe = testutil::random_state(rng);
      const ExcitonState st = write_state(pulse, WritePath::GroundResonant, dot);
      const double amplitude_rule = std::norm(inner_product(orthogonal(probe), pulse));
      REQUIRE_THAT(projection_probability(st, probe), WithinAbs(amplitude_rule, 1e-12));
    }
  }
  SECTION("aligned probe is dark, orthogonal probe is bright") {
    auto rng = make_rng(92);
    for (int i = 0; i < 100; ++i) {
      const PolarizationState pulse = testutil::random_state(rng);
      const ExcitonState st = write_state(pulse, WritePath::GroundResonant, dot);
      REQUIRE_THAT(projection_probability(st, pulse), WithinAbs(0.0, 1e-15));
      REQUIRE_THAT(projection_probability(st, orthogonal(pulse)), WithinAbs(1.0, 1e-12));
    }
  }
  SECTION("scales with population and stays in [0, 1]") {
    ExcitonState st = write_state(PolarizationState::L(), WritePath::GroundResonant, dot);
    st.population = 0.25;
    REQUIRE_THAT(projection_probability(st, PolarizationState::R()), WithinAbs(0.25, 1e-12));
    REQUIRE(projection_probability(st, PolarizationState::L()) >= 0.0);
  }
}

TEST_CASE("pl signal", "[readout]") {
  SECTION("peak value at zero delay") {
    SignalParams sig;
    sig.scale = 7000.0;
    sig.background = 350.0;
    const double v = pl_signal(PolarizationState::L(), WritePath::GroundResonant,
                               PolarizationState::R(), 0.0, coherent_dot(), sig);
    REQUIRE_THAT(v, WithinAbs(7350.0, 1e-9));
  }
  SECTION("matches the cosine law for equatorial writes and probes") {
    const DotParameters dot = coherent_dot();
    const double period = precession_period(dot.delta_gs_ueV);
    SignalParams sig;
    sig.scale = 10000.0;
    sig.background = 120.0;
    auto rng = make_rng(101);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 40; ++i) {
      const double phi0 = two_pi * u(rng);
      const double phi_probe = two_pi * u(rng);
      const PolarizationState write = jones_from_angles({pi / 2, phi0});
      const PolarizationState probe = jones_from_angles({pi / 2, phi_probe});
      const double phase = pi + phi_probe - phi0;
      for (int k = 0; k < 10; ++k) {
        const double t = 3.0 * period * u(rng);
        const double expected =
            sig.background +
            sig.scale * 0.5 * (1.0 + std::cos(two_pi * t / period - phase));
        REQUIRE_THAT(pl_signal(write, WritePath::GroundResonant, probe, t, dot, sig),
                     WithinAbs(expected, 1e-9 * sig.scale));
      }
    }
  }
  SECTION("oscillation amplitude follows sin(theta)") {
    const DotParameters dot = coherent_dot();
    const double period = precession_period(dot.delta_gs_ueV);
    SignalParams sig;
    const double theta = 0.77;
    const PolarizationState write = jones_from_angles({theta, 1.3});
    const PolarizationState probe = jones_from_angles({pi / 2, 2.6});
    const double phase = pi + 2.6 - 1.3;
    for (int k = 0; k < 25; ++k) {
      const double t = k * period / 25.0;
      const double expected =
          sig.scale * 0.5 * (1.0 + std::sin(theta) * std::cos(two_pi * t / period - phase));
      REQUIRE_THAT(pl_signal(write, WritePath::GroundResonant, probe, t, dot, sig),
                   WithinAbs(expected, 1e-9 * sig.scale));
    }
  }
  SECTION("negative delay throws") {
    REQUIRE_THROWS_AS(pl_signal(PolarizationState::L(), WritePath::GroundResonant,
                                PolarizationState::D(), -1.0, DotParameters{}, SignalParams{}),
                      std::invalid_argument);
  }
}

TEST_CASE("noise model", "[readout]") {
  SECTION("no noise passes the mean through") {
    SignalParams sig;
    REQUIRE(apply_noise(1234.5, sig, 7) == 1234.5);
  }
  SECTION("draws depend only on seed and index") {
    SignalParams sig;
    sig.noise = NoiseKind::Poisson;
    sig.seed = 99;
    const double a = apply_noise(500.0, sig, 3);
    REQUIRE(apply_noise(500.0, sig, 3) == a);
    sig.seed = 100;
    REQUIRE(apply_noise(500.0, sig, 3) != a);  // overwhelmingly likely
  }
  SECTION("curve noise is stable under extension") {
    SignalCurve short_curve;
    short_curve.abscissa = grid(10.0, 11);
    short_curve.values.assign(11, 800.0);
    SignalCurve long_curve;
    long_curve.abscissa = grid(20.0, 21);
    long_curve.values.assign(21, 800.0);
    SignalParams sig;
    sig.noise = NoiseKind::Poisson;
    sig.seed = 5;
    const SignalCurve a = add_noise(short_curve, sig);
    const SignalCurve b = add_noise(long_curve, sig);
    for (std::size_t i = 0; i < a.values.size(); ++i) REQUIRE(a.values[i] == b.values[i]);
  }
  SECTION("poisson sample moments") {
    SignalParams sig;
    sig.noise = NoiseKind::Poisson;
    sig.seed = 42;
    const double mean = 1000.0;
    const int n = 4000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double v = apply_noise(mean, sig, static_cast<std::uint64_t>(i));
      sum += v;
      sum2 += v * v;
    }
    const double m = sum / n;
    const double var = sum2 / n - m * m;
    REQUIRE_THAT(m, WithinAbs(mean, 4.0));       // ~8 sigma of the sample mean
    REQUIRE_THAT(var, WithinAbs(mean, 160.0));   // poisson variance equals the mean
  }
  SECTION("gaussian sample moments and sigma zero") {
    SignalParams sig;
    sig.noise = NoiseKind::Gaussian;
    sig.sigma = 50.0;
    sig.seed = 7;
    const int n = 4000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
      const double v = apply_noise(2000.0, sig, static_cast<std::uint64_t>(i));
      sum += v;
      sum2 += v * v;
    }
    const double m = sum / n;
    REQUIRE_THAT(m, WithinAbs(2000.0, 7.0));
    REQUIRE_THAT(std::sqrt(sum2 / n - m * m), WithinAbs(50.0, 5.0));
    sig.sigma = 0.0;
    REQUIRE(apply_noise(2000.0, sig, 3) == 2000.0);
  }
  SECTION("poisson rejects negative means") {
    SignalParams sig;
    sig.noise = NoiseKind::Poisson;
    REQUIRE_THROWS_AS(apply_noise(-1.0, sig, 0), std::invalid_argument);
    REQUIRE(apply_noise(0.0, sig, 0) == 0.0);
  }
}

TEST_CASE("delay scans", "[readout]") {
  const DotParameters dot;
  SignalParams sig;
  sig.scale = 5000.0;
  sig.background = 10.0;
  SECTION("values match pointwise evaluation and metadata is recorded") {
    const std::vector<double> delays = grid(400.0, 81);
    const SignalCurve curve =
        delay_scan(PolarizationState::L(), WritePath::ExcitedResonant, PolarizationState::D(),
                   delays, dot, sig);
    REQUIRE(curve.abscissa == delays);
    REQUIRE(curve.values.size() == delays.size());
    for (std::size_t i = 0; i < delays.size(); ++i)
      REQUIRE(curve.values[i] == pl_signal(PolarizationState::L(), WritePath::ExcitedResonant,
                                           PolarizationState::D(), delays[i], dot, sig));
    REQUIRE(curve.meta.scan == ScanKind::Delay);
    REQUIRE(curve.meta.path == WritePath::ExcitedResonant);
    REQUIRE(fidelity(curve.meta.write_pol, PolarizationState::L()) >= 1.0 - 1e-15);
    REQUIRE(fidelity(curve.meta.read_pol, PolarizationState::D()) >= 1.0 - 1e-15);
    REQUIRE(curve.meta.sig.scale == sig.scale);
  }
  SECTION("noisy scans are reproducible") {
    SignalParams noisy = sig;
    noisy.noise = NoiseKind::Poisson;
    noisy.seed = 11;
    const SignalCurve a = delay_scan(PolarizationState::L(), WritePath::GroundResonant,
                                     PolarizationState::D(), grid(200.0, 41), dot, noisy);
    const SignalCurve b = delay_scan(PolarizationState::L(), WritePath::GroundResonant,
                                     PolarizationState::D(), grid(200.0, 41), dot, noisy);
    REQUIRE(a.values == b.values);
  }
  SECTION("grid validation") {
    REQUIRE_THROWS_AS(delay_scan(PolarizationState::L(), WritePath::GroundResonant,
                                 PolarizationState::D(), {}, dot, sig),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(delay_scan(PolarizationState::L(), WritePath::GroundResonant,
                                 PolarizationState::D(), {0.0, 1.0, 1.0}, dot, sig),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(delay_scan(PolarizationState::L(), WritePath::GroundResonant,
                                 PolarizationState::D(), {-1.0, 1.0}, dot, sig),
                      std::invalid_argument);
  }
}

TEST_CASE("angle scans", "[readout]") {
  const DotParameters dot = coherent_dot();
  const double period = precession_period(dot.delta_gs_ueV);
  SignalParams sig;

  SECTION("write state mapping on the equator") {
    for (double a : {0.0, 0.4, pi / 2, pi, 4.5}) {
      REQUIRE(fidelity(angle_scan_write_state(ScanKind::AnglePhi, a),
                       jones_from_angles({pi / 2, a})) >= 1.0 - 1e-15);
    }
  }
  SECTION("write state mapping on the meridian H -> L -> V -> R") {
    REQUIRE(fidelity(angle_scan_write_state(ScanKind::AngleTheta, 0.0), PolarizationState::H()) >=
            1.0 - 1e-15);
    REQUIRE(fidelity(angle_scan_write_state(ScanKind::AngleTheta, pi / 2),
                     PolarizationState::L()) >= 1.0 - 1e-15);
    REQUIRE(fidelity(angle_scan_write_state(ScanKind::AngleTheta, pi), PolarizationState::V()) >=
            1.0 - 1e-15);
    REQUIRE(fidelity(angle_scan_write_state(ScanKind::AngleTheta, 3 * pi / 2),
                     PolarizationState::R()) >= 1.0 - 1e-15);
    REQUIRE(fidelity(angle_scan_write_state(ScanKind::AngleTheta, two_pi),
                     PolarizationState::H()) >= 1.0 - 1e-15);
    // continuity across the V pole
    REQUIRE(fidelity(angle_scan_write_state(ScanKind::AngleTheta, pi - 0.01),
                     angle_scan_write_state(ScanKind::AngleTheta, pi + 0.01)) >= 1.0 - 1e-3);
  }
  SECTION("phi scan against an equatorial probe is a full-contrast cosine") {
    const std::vector<double> angles = grid(two_pi, 73);
    const SignalCurve curve = angle_scan(ScanKind::AnglePhi, angles, PolarizationState::D(),
                                         period, WritePath::GroundResonant, dot, sig);
    REQUIRE(curve.meta.scan == ScanKind::AnglePhi);
    REQUIRE(curve.meta.fixed_delay_ps == period);
    REQUIRE(fidelity(curve.meta.write_pol, PolarizationState::L()) >= 1.0 - 1e-15);
    for (std::size_t i = 0; i < angles.size(); ++i) {
      // after one full period the spin returns to the written direction,
      // so the D probe sees phase pi + phi_D - phi
      const double expected =
          sig.scale * 0.5 * (1.0 + std::cos(pi + 3 * pi / 2 - angles[i]));
      REQUIRE_THAT(curve.values[i], WithinAbs(expected, 1e-7 * sig.scale));
    }
  }
  SECTION("phi scan against V is flat") {
    const SignalCurve curve = angle_scan(ScanKind::AnglePhi, grid(two_pi, 73),
                                         PolarizationState::V(), period,
                                         WritePath::GroundResonant, dot, sig);
    double lo = curve.values.front(), hi = lo;
    for (double v : curve.values) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    REQUIRE(hi - lo < 1e-9 * sig.scale);
    REQUIRE_THAT(curve.values.front(), WithinAbs(0.5 * sig.scale, 1e-9 * sig.scale));
  }
  SECTION("miscalibrated preparation changes the curve") {
    const std::vector<double> angles = grid(two_pi, 73);
    const SignalCurve ideal = angle_scan(ScanKind::AnglePhi, angles, PolarizationState::V(),
                                         period, WritePath::GroundResonant, dot, sig);
    const SignalCurve off = angle_scan(ScanKind::AnglePhi, angles, PolarizationState::V(), period,
                                       WritePath::GroundResonant, dot, sig, 0.05);
    REQUIRE(off.meta.lcvr_error_rad == 0.05);
    double maxdiff = 0.0;
    for (std::size_t i = 0; i < angles.size(); ++i)
      maxdiff = std::max(maxdiff, std::abs(off.values[i] - ideal.values[i]));
    REQUIRE(maxdiff > 1e-4 * sig.scale);
    REQUIRE(maxdiff < 0.2 * sig.scale);
  }
  SECTION("validation") {
    REQUIRE_THROWS_AS(angle_scan(ScanKind::Delay, grid(two_pi, 9), PolarizationState::D(), period,
                                 WritePath::GroundResonant, dot, sig),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(angle_scan(ScanKind::AnglePhi, {0.0, 7.0}, PolarizationState::D(), period,
                                 WritePath::GroundResonant, dot, sig),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(angle_scan(ScanKind::AnglePhi, grid(two_pi, 9), PolarizationState::D(),
                                 -1.0, WritePath::GroundResonant, dot, sig),
                      std::invalid_argument);
  }
}
