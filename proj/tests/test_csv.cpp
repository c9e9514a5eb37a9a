#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <string>

#include "helpers.hpp"
#include "xspin/csv.hpp"

using namespace xspin;
namespace fs = std::filesystem;

namespace {

SignalCurve sample_curve() {
  SignalCurve c;
  c.abscissa = {0.0, 0.5, 1.0};
  c.values = {1.0, 2.25, 3.5};
  c.meta.write_pol = PolarizationState::L();
  c.meta.read_pol = PolarizationState::D();
  return c;
}

SignalCurve sample_angle_curve() {
  SignalCurve c = sample_curve();
  c.meta.scan = ScanKind::AnglePhi;
  c.meta.fixed_delay_ps = 121.5;
  c.meta.lcvr_error_rad = 0.05;
  c.meta.sig.noise = NoiseKind::Gaussian;
  c.meta.sig.sigma = 12.5;
  c.meta.sig.seed = 77;
  c.meta.path = WritePath::ExcitedResonant;
  c.meta.dot.relax_depol = 0.25;
  c.meta.dot.t2_ps = 800.0;
  return c;
}

fs::path temp_file(const char* name) {
  return fs::temp_directory_path() / (std::string("xspin_csv_") + std::to_string(getpid()) + "_" + name);
}

}  // namespace

TEST_CASE("csv golden form", "[csv]") {
  const std::string expected =
      "# write_pol=L\n"
      "# read_pol=D\n"
      "# scan=delay\n"
      "# delta_ueV=34\n"
      "# tau_x_ps=1000\n"
      "# t2_ps=inf\n"
      "# scale=10000\n"
      "# background=0\n"
      "# noise=none\n"
      "# seed=0\n"
      "# path=ground\n"
      "# delta_es_ueV=60\n"
      "# relax_depol=0\n"
      "# t2_longitudinal_ps=inf\n"
      "0,1\n"
      "0.5,2.25\n"
      "1,3.5\n";
  REQUIRE(to_csv(sample_curve()) == expected);
}

TEST_CASE("csv round trip", "[csv]") {
  SECTION("delay curve") {
    const SignalCurve c = sample_curve();
    const SignalCurve back = parse_csv(to_csv(c));
    REQUIRE(back.abscissa == c.abscissa);
    REQUIRE(back.values == c.values);
    REQUIRE(back.meta.scan == ScanKind::Delay);
    REQUIRE(fidelity(back.meta.write_pol, c.meta.write_pol) >= 1.0 - 1e-12);
    REQUIRE(fidelity(back.meta.read_pol, c.meta.read_pol) >= 1.0 - 1e-12);
    REQUIRE(back.meta.dot.tau_x_ps == c.meta.dot.tau_x_ps);
    REQUIRE(back.meta.dot.t2_ps == c.meta.dot.t2_ps);
    REQUIRE(back.meta.sig.scale == c.meta.sig.scale);
  }
  SECTION("angle curve with extras") {
    const SignalCurve c = sample_angle_curve();
    const SignalCurve back = parse_csv(to_csv(c));
    REQUIRE(back.meta.scan == ScanKind::AnglePhi);
    REQUIRE(back.meta.fixed_delay_ps == 121.5);
    REQUIRE(back.meta.lcvr_error_rad == 0.05);
    REQUIRE(back.meta.sig.noise == NoiseKind::Gaussian);
    REQUIRE(back.meta.sig.sigma == 12.5);
    REQUIRE(back.meta.sig.seed == 77);
    REQUIRE(back.meta.path == WritePath::ExcitedResonant);
    REQUIRE(back.meta.dot.relax_depol == 0.25);
    REQUIRE(back.meta.dot.t2_ps == 800.0);
  }
  SECTION("serialization is stable") {
    const std::string once = to_csv(sample_angle_curve());
    REQUIRE(to_csv(parse_csv(once)) == once);
  }
  SECTION("awkward doubles survive") {
    SignalCurve c = sample_curve();
    c.abscissa = {0.1, 121.63728519423539, 1e8};
    c.values = {1e-12, -2.5, 98765.4321};  // negative values occur with gaussian noise
    const SignalCurve back = parse_csv(to_csv(c));
    REQUIRE(back.abscissa == c.abscissa);
    REQUIRE(back.values == c.values);
  }
  SECTION("nonstandard write polarization") {
    SignalCurve c = sample_curve();
    c.meta.write_pol = jones_from_angles({1.0, 2.0});
    const SignalCurve back = parse_csv(to_csv(c));
    REQUIRE(fidelity(back.meta.write_pol, c.meta.write_pol) >= 1.0 - 1e-15);
  }
}

TEST_CASE("csv file io", "[csv]") {
  const fs::path file = temp_file("roundtrip.csv");
  const SignalCurve c = sample_angle_curve();
  save_csv(c, file);
  const SignalCurve back = load_csv(file);
  REQUIRE(back.values == c.values);
  REQUIRE(!fs::exists(file.string() + ".tmp"));  // temp file renamed away
  fs::remove(file);
  REQUIRE_THROWS_AS(load_csv(file), std::runtime_error);
}

TEST_CASE("csv parse errors", "[csv]") {
  const std::string good = to_csv(sample_curve());
  SECTION("missing required key") {
    std::string text = good;
    const auto at = text.find("# scan=delay\n");
    text.erase(at, 13);
    REQUIRE_THROWS_WITH(parse_csv(text), Catch::Matchers::ContainsSubstring("scan"));
  }
  SECTION("bad number cites the line") {
    REQUIRE_THROWS_WITH(parse_csv(good + "oops,1\n"),
                        Catch::Matchers::ContainsSubstring("line 18"));
  }
  SECTION("missing comma") {
    REQUIRE_THROWS_AS(parse_csv(good + "3.5\n"), std::invalid_argument);
  }
  SECTION("duplicate metadata key") {
    REQUIRE_THROWS_WITH(parse_csv("# scan=delay\n" + good),
                        Catch::Matchers::ContainsSubstring("duplicate"));
  }
  SECTION("no data rows") {
    const std::string header = good.substr(0, good.find("0,1\n"));
    REQUIRE_THROWS_WITH(parse_csv(header), Catch::Matchers::ContainsSubstring("no data rows"));
  }
  SECTION("non-increasing abscissa") {
    REQUIRE_THROWS_WITH(parse_csv(good + "1,9\n"),
                        Catch::Matchers::ContainsSubstring("strictly increasing"));
  }
  SECTION("unknown metadata keys are ignored") {
    REQUIRE_NOTHROW(parse_csv("# future_key=anything\n" + good));
  }
  SECTION("invalid enum values") {
    std::string text = good;
    text.replace(text.find("scan=delay"), 10, "scan=weird");
    REQUIRE_THROWS_AS(parse_csv(text), std::invalid_argument);
  }
  SECTION("angle scan requires its delay") {
    std::string text = to_csv(sample_angle_curve());
    const auto at = text.find("# delay_ps=");
    text.erase(at, text.find('\n', at) - at + 1);
    REQUIRE_THROWS_WITH(parse_csv(text), Catch::Matchers::ContainsSubstring("delay_ps"));
  }
  SECTION("out-of-range metadata rejected") {
    std::string text = good;
    text.replace(text.find("tau_x_ps=1000"), 13, "tau_x_ps=-5");
    REQUIRE_THROWS_AS(parse_csv(text), std::invalid_argument);
  }
}

TEST_CASE("noise names", "[csv]") {
  SignalParams sig;
  REQUIRE(noise_name(sig) == "none");
  sig.noise = NoiseKind::Poisson;
  REQUIRE(noise_name(sig) == "poisson");
  sig.noise = NoiseKind::Gaussian;
  sig.sigma = 2.5;
  REQUIRE(noise_name(sig) == "gaussian:2.5");
  SignalParams parsed;
  parse_noise_name("gaussian:2.5", parsed);
  REQUIRE(parsed.noise == NoiseKind::Gaussian);
  REQUIRE(parsed.sigma == 2.5);
  REQUIRE_THROWS_AS(parse_noise_name("gaussian:-1", parsed), std::invalid_argument);
  REQUIRE_THROWS_AS(parse_noise_name("salt", parsed), std::invalid_argument);
}
