#pragma once

// Deterministic SVG rendering of signal curves: fixed canvas, nice-number
// ticks, fixed palette, legend from curve metadata. Identical input yields
// byte-identical output, so rendered files can be compared directly.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "xspin/detail/text.hpp"
#include "xspin/readout.hpp"

namespace xspin {

namespace detail {

inline double nice_step(double raw) {
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double frac = raw / mag;
  if (frac <= 1.0) return mag;
  if (frac <= 2.0) return 2.0 * mag;
  if (frac <= 5.0) return 5.0 * mag;
  return 10.0 * mag;
}

inline std::vector<double> nice_ticks(double lo, double hi, int target) {
  const double step = nice_step((hi - lo) / target);
  std::vector<double> ticks;
  const double first = std::ceil(lo / step - 1e-9);
  for (int i = 0; i < 4 * target; ++i) {
    const double v = (first + i) * step;
    if (v > hi + step * 1e-9) break;
    ticks.push_back(v);
  }
  return ticks;
}

}  // namespace detail

inline std::string render_svg(const std::vector<SignalCurve>& curves) {
  if (curves.empty()) throw std::invalid_argument("render_svg: no curves");
  const ScanKind kind = curves.front().meta.scan;
  const bool angle = kind != ScanKind::Delay;
  for (const SignalCurve& c : curves) {
    if (c.abscissa.empty() || c.abscissa.size() != c.values.size())
      throw std::invalid_argument("render_svg: curve lacks data");
    if ((c.meta.scan != ScanKind::Delay) != angle)
      throw std::invalid_argument("render_svg: cannot mix delay and angle scans in one plot");
  }

  double xlo = curves[0].abscissa.front(), xhi = xlo;
  double ylo = curves[0].values.front(), yhi = ylo;
  for (const SignalCurve& c : curves) {
    for (double x : c.abscissa) {
      xlo = std::min(xlo, x);
      xhi = std::max(xhi, x);
    }
    for (double y : c.values) {
      ylo = std::min(ylo, y);
      yhi = std::max(yhi, y);
    }
  }
  // guard against flat or near-flat ranges; ticks need a usable span
  const double xref = std::max({std::abs(xlo), std::abs(xhi), 1.0});
  if (xhi - xlo < 1e-9 * xref) {
    xlo -= 0.5 * xref;
    xhi += 0.5 * xref;
  }
  const double yref = std::max({std::abs(ylo), std::abs(yhi), 1.0});
  const double ypad = yhi - ylo >= 1e-9 * yref ? 0.05 * (yhi - ylo) : 0.05 * yref;
  ylo -= ypad;
  yhi += ypad;

  constexpr double W = 860.0, H = 540.0, ml = 80.0, mr = 25.0, mt = 30.0, mb = 60.0;
  const auto sx = [&](double x) { return ml + (x - xlo) / (xhi - xlo) * (W - ml - mr); };
  const auto sy = [&](double y) { return H - mb - (y - ylo) / (yhi - ylo) * (H - mt - mb); };
  const auto px = [](double v) { return detail::fmt_fixed(v, 2); };

  static constexpr const char* palette[] = {"#4477aa", "#ee6677", "#228833", "#ccbb44",
                                            "#66ccee", "#aa3377", "#994455", "#222222"};
  constexpr std::size_t ncolors = sizeof(palette) / sizeof(palette[0]);

  std::string svg;
  svg +=
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"860\" height=\"540\" "
      "viewBox=\"0 0 860 540\">\n"
      "<rect width=\"860\" height=\"540\" fill=\"white\"/>\n";

  svg += "<g stroke=\"#dddddd\" stroke-width=\"1\">\n";
  const std::vector<double> xticks = detail::nice_ticks(xlo, xhi, 6);
  const std::vector<double> yticks = detail::nice_ticks(ylo, yhi, 6);
  for (double t : xticks)
    svg += "<line x1=\"" + px(sx(t)) + "\" y1=\"" + px(mt) + "\" x2=\"" + px(sx(t)) +
           "\" y2=\"" + px(H - mb) + "\"/>\n";
  for (double t : yticks)
    svg += "<line x1=\"" + px(ml) + "\" y1=\"" + px(sy(t)) + "\" x2=\"" + px(W - mr) +
           "\" y2=\"" + px(sy(t)) + "\"/>\n";
  svg += "</g>\n";

  svg += "<g fill=\"#222222\" font-family=\"Helvetica,Arial,sans-serif\" font-size=\"13\">\n";
  for (double t : xticks)
    svg += "<text x=\"" + px(sx(t)) + "\" y=\"" + px(H - mb + 18.0) +
           "\" text-anchor=\"middle\">" + detail::fmt_general(t, 10) + "</text>\n";
  for (double t : yticks)
    svg += "<text x=\"" + px(ml - 8.0) + "\" y=\"" + px(sy(t) + 4.0) +
           "\" text-anchor=\"end\">" + detail::fmt_general(t, 10) + "</text>\n";
  svg += "<text x=\"" + px(ml + (W - ml - mr) / 2.0) + "\" y=\"" + px(H - 15.0) +
         "\" text-anchor=\"middle\">" + (angle ? "angle (rad)" : "delay (ps)") + "</text>\n";
  svg += "<text x=\"20\" y=\"" + px(mt + (H - mt - mb) / 2.0) +
         "\" text-anchor=\"middle\" transform=\"rotate(-90 20 " +
         px(mt + (H - mt - mb) / 2.0) + ")\">counts</text>\n";
  svg += "</g>\n";

  svg += "<rect x=\"" + px(ml) + "\" y=\"" + px(mt) + "\" width=\"" + px(W - ml - mr) +
         "\" height=\"" + px(H - mt - mb) +
         "\" fill=\"none\" stroke=\"#222222\" stroke-width=\"1\"/>\n";

  for (std::size_t k = 0; k < curves.size(); ++k) {
    const SignalCurve& c = curves[k];
    svg += "<polyline fill=\"none\" stroke=\"";
    svg += palette[k % ncolors];
    svg += "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < c.abscissa.size(); ++i) {
      if (i) svg += " ";
      svg += px(sx(c.abscissa[i])) + "," + px(sy(c.values[i]));
    }
    svg += "\"/>\n";
  }

  const double lx = W - mr - 190.0;
  double ly = mt + 14.0;
  svg += "<g font-family=\"Helvetica,Arial,sans-serif\" font-size=\"13\">\n";
  for (std::size_t k = 0; k < curves.size(); ++k) {
    const CurveMeta& m = curves[k].meta;
    std::string label;
    if (m.scan == ScanKind::Delay)
      label = format_polarization(m.write_pol) + " / " + format_polarization(m.read_pol);
    else
      label = scan_kind_name(m.scan) + " / " + format_polarization(m.read_pol);
    svg += "<line x1=\"" + px(lx) + "\" y1=\"" + px(ly - 4.0) + "\" x2=\"" + px(lx + 26.0) +
           "\" y2=\"" + px(ly - 4.0) + "\" stroke=\"";
    svg += palette[k % ncolors];
    svg += "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + px(lx + 32.0) + "\" y=\"" + px(ly) + "\" fill=\"#222222\">" + label +
           "</text>\n";
    ly += 18.0;
  }
  svg += "</g>\n</svg>\n";
  return svg;
}

}  // namespace xspin
