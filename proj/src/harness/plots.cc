// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "asvlab/harness/plots.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "asvlab/core/error.h"
#include "asvlab/harness/metrics.h"

namespace asvlab {

namespace {

constexpr int kW = 480;
constexpr int kH = 360;
constexpr int kPad = 48;

std::string Num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return std::string(buf);
}

void WriteFile(const std::string& path, const std::string& body) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::kIo, "plot: cannot open for write: " + path);
  f << body;
  if (!f) throw Error(ErrorKind::kIo, "plot: write failed: " + path);
}

// Maps a unit-square point to pixel space (y axis flipped).
double Px(double unit) { return kPad + unit * (kW - 2 * kPad); }
double Py(double unit) { return kH - kPad - unit * (kH - 2 * kPad); }

void Frame(std::ostringstream& os, const std::string& title,
           const std::string& xlabel, const std::string& ylabel) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW
     << "\" height=\"" << kH << "\" viewBox=\"0 0 " << kW << " " << kH
     << "\">\n";
  os << "<rect width=\"" << kW << "\" height=\"" << kH
     << "\" fill=\"white\"/>\n";
  os << "<rect x=\"" << kPad << "\" y=\"" << kPad << "\" width=\""
     << kW - 2 * kPad << "\" height=\"" << kH - 2 * kPad
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<text x=\"" << kW / 2 << "\" y=\"20\" text-anchor=\"middle\" "
     << "font-family=\"monospace\" font-size=\"13\">" << title << "</text>\n";
  os << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 10
     << "\" text-anchor=\"middle\" font-family=\"monospace\" "
     << "font-size=\"11\">" << xlabel << "</text>\n";
  os << "<text x=\"14\" y=\"" << kH / 2 << "\" text-anchor=\"middle\" "
     << "font-family=\"monospace\" font-size=\"11\" transform=\"rotate(-90 14 "
     << kH / 2 << ")\">" << ylabel << "</text>\n";
}

}  // namespace

std::vector<DetPoint> DetSweep(const std::vector<double>& scores,
                               const std::vector<int>& labels) {
  if (scores.size() != labels.size()) {
    throw Error(ErrorKind::kShape, "det sweep: scores and labels differ");
  }
  if (scores.empty()) {
    throw Error(ErrorKind::kArgument, "det sweep: empty score set");
  }
  bool has0 = false, has1 = false;
  for (int l : labels) {
    if (l != 0 && l != 1) {
      throw Error(ErrorKind::kArgument, "det sweep: labels must be 0 or 1");
    }
    (l ? has1 : has0) = true;
  }
  if (!has0 || !has1) {
    throw Error(ErrorKind::kCalibration, "det sweep: needs both classes");
  }

  std::vector<double> distinct(scores);
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()),
                 distinct.end());

  std::vector<double> cand;
  cand.push_back(distinct.front() - 1.0);
  for (size_t i = 1; i < distinct.size(); ++i) {
    cand.push_back(0.5 * (distinct[i - 1] + distinct[i]));
  }
  cand.push_back(distinct.back() + 1.0);

  std::vector<DetPoint> pts;
  pts.reserve(cand.size());
  for (double t : cand) {
    const FarFrr ff = ComputeFarFrr(scores, labels, t);
    pts.push_back({t, ff.far, ff.frr});
  }
  return pts;
}

void WriteDetCurveSvg(const std::string& path,
                      const std::vector<DetPoint>& points,
                      const std::string& title) {
  if (points.empty()) {
    throw Error(ErrorKind::kArgument, "det plot: no points");
  }
  std::ostringstream os;
  Frame(os, title, "false accept rate", "false reject rate");
  // Chance diagonal (EER locus FAR == FRR).
  os << "<line x1=\"" << Num(Px(0)) << "\" y1=\"" << Num(Py(0)) << "\" x2=\""
     << Num(Px(1)) << "\" y2=\"" << Num(Py(1))
     << "\" stroke=\"#bbbbbb\" stroke-dasharray=\"4 3\"/>\n";
  for (double g : {0.25, 0.5, 0.75}) {
    os << "<line x1=\"" << Num(Px(g)) << "\" y1=\"" << Num(Py(0)) << "\" x2=\""
       << Num(Px(g)) << "\" y2=\"" << Num(Py(1))
       << "\" stroke=\"#eeeeee\"/>\n";
    os << "<line x1=\"" << Num(Px(0)) << "\" y1=\"" << Num(Py(g)) << "\" x2=\""
       << Num(Px(1)) << "\" y2=\"" << Num(Py(g))
       << "\" stroke=\"#eeeeee\"/>\n";
  }
  os << "<polyline fill=\"none\" stroke=\"#c0392b\" stroke-width=\"1.5\" "
     << "points=\"";
  for (const auto& p : points) {
    os << Num(Px(p.far)) << "," << Num(Py(p.frr)) << " ";
  }
  os << "\"/>\n";
  for (const auto& p : points) {
    os << "<circle cx=\"" << Num(Px(p.far)) << "\" cy=\"" << Num(Py(p.frr))
       << "\" r=\"1.6\" fill=\"#c0392b\"/>\n";
  }
  for (double g : {0.0, 0.5, 1.0}) {
    os << "<text x=\"" << Num(Px(g)) << "\" y=\"" << kH - kPad + 14
       << "\" text-anchor=\"middle\" font-family=\"monospace\" "
       << "font-size=\"9\">" << Num(g) << "</text>\n";
    os << "<text x=\"" << kPad - 6 << "\" y=\"" << Num(Py(g) + 3)
       << "\" text-anchor=\"end\" font-family=\"monospace\" "
       << "font-size=\"9\">" << Num(g) << "</text>\n";
  }
  os << "</svg>\n";
  WriteFile(path, os.str());
}

void WriteScoreHistogramSvg(const std::string& path,
                            const std::vector<double>& bona,
                            const std::vector<double>& adv, int bins,
                            const std::string& title) {
  if (bona.empty() || adv.empty()) {
    throw Error(ErrorKind::kArgument, "histogram: both score sets required");
  }
  if (bins < 1) throw Error(ErrorKind::kArgument, "histogram: bins < 1");

  double lo = bona[0], hi = bona[0];
  for (double v : bona) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (double v : adv) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi <= lo) hi = lo + 1.0;
  const double width = (hi - lo) / bins;

  auto fill = [&](const std::vector<double>& xs) {
    std::vector<double> h(static_cast<size_t>(bins), 0.0);
    for (double v : xs) {
      int b = static_cast<int>((v - lo) / width);
      b = std::clamp(b, 0, bins - 1);
      h[static_cast<size_t>(b)] += 1.0 / static_cast<double>(xs.size());
    }
    return h;
  };
  const auto hb = fill(bona);
  const auto ha = fill(adv);
  double peak = 0.0;
  for (int b = 0; b < bins; ++b) {
    peak = std::max({peak, hb[static_cast<size_t>(b)],
                     ha[static_cast<size_t>(b)]});
  }
  if (peak <= 0.0) peak = 1.0;

  std::ostringstream os;
  Frame(os, title, "detector score", "relative frequency");
  auto bars = [&](const std::vector<double>& h, const std::string& color,
                  double inset) {
    for (int b = 0; b < bins; ++b) {
      const double x0 = Px((b + inset) / bins);
      const double x1 = Px((b + 1.0 - inset) / bins);
      const double y = Py(h[static_cast<size_t>(b)] / peak);
      os << "<rect x=\"" << Num(x0) << "\" y=\"" << Num(y) << "\" width=\""
         << Num(x1 - x0) << "\" height=\"" << Num(Py(0) - y) << "\" fill=\""
         << color << "\" fill-opacity=\"0.55\"/>\n";
    }
  };
  bars(hb, "#2980b9", 0.08);
  bars(ha, "#c0392b", 0.24);
  os << "<text x=\"" << kW - kPad << "\" y=\"" << kPad - 6
     << "\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"10\" "
     << "fill=\"#2980b9\">bona fide</text>\n";
  os << "<text x=\"" << kW - kPad << "\" y=\"" << kPad + 8
     << "\" text-anchor=\"end\" font-family=\"monospace\" font-size=\"10\" "
     << "fill=\"#c0392b\">adversarial</text>\n";
  for (double g : {0.0, 0.5, 1.0}) {
    os << "<text x=\"" << Num(Px(g)) << "\" y=\"" << kH - kPad + 14
       << "\" text-anchor=\"middle\" font-family=\"monospace\" "
       << "font-size=\"9\">" << Num(lo + g * (hi - lo)) << "</text>\n";
  }
  os << "</svg>\n";
  WriteFile(path, os.str());
}

}  // namespace asvlab
