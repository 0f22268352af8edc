#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "ris_sense/common.hpp"

namespace ris_sense::geometry {

/// Feed/aperture layout in the frame with the RIS center at the origin and
/// the aperture in the z=0 plane. The feed sits at (0, -H*tan(theta0), H) and
/// is aimed at the feed beam point (x0, y0, 0).
struct GeometryConfig {
  double h = 0.33;              // feed height above the aperture plane [m]
  double theta0 = 0.0;          // feed offset angle from the plane normal [rad]
  double fbp_x = 0.0;           // feed beam point x [m]
  double fbp_y = 0.0;           // feed beam point y [m]
  double aperture_side = 0.1846;  // square aperture side [m]
  double q = 5.0;               // feed pattern exponent (field ~ cos^q)
  double qe = 1.0;              // element pattern exponent

  void validate() const {
    if (!(h > 0.0)) throw UsageError("geometry: H must be > 0");
    if (!(aperture_side > 0.0)) throw UsageError("geometry: aperture side must be > 0");
    if (q < 0.0 || qe < 0.0) throw UsageError("geometry: q and qe must be >= 0");
    if (theta0 < 0.0 || theta0 >= kPi / 2.0)
      throw UsageError("geometry: theta0 must be in [0, pi/2)");
  }
};

struct GeometricQuantities {
  double feed_x, feed_y, feed_z;  // feed position [m]
  double r0;                      // feed -> FBP distance [m]
  double r;                       // feed -> element distance [m]
  double s;                       // in-plane FBP -> element distance [m]
};

struct EfficiencyReport {
  double eta_s = 0.0;
  double eta_i = 0.0;
  double eta_a = 0.0;
  double edge_taper_db = 0.0;
};

/// Closed forms for the feed/element distances of the layout table.
inline GeometricQuantities geometric_quantities(const GeometryConfig& g,
                                                double elem_x, double elem_y) {
  g.validate();
  const double tan0 = std::tan(g.theta0);
  const double sec2 = 1.0 + tan0 * tan0;
  GeometricQuantities out{};
  out.feed_x = 0.0;
  out.feed_y = -g.h * tan0;
  out.feed_z = g.h;
  out.r0 = std::sqrt(g.fbp_x * g.fbp_x + g.fbp_y * g.fbp_y + g.h * g.h * sec2 +
                     g.fbp_y * 2.0 * g.h * tan0);
  out.r = std::sqrt(elem_x * elem_x + elem_y * elem_y + g.h * g.h * sec2 +
                    elem_y * 2.0 * g.h * tan0);
  const double dx = elem_x - g.fbp_x, dy = elem_y - g.fbp_y;
  out.s = std::sqrt(dx * dx + dy * dy);
  return out;
}

namespace detail {

/// Integer power by repeated multiplication; exponents here are small.
inline double powi(double base, int n) {
  double acc = 1.0;
  for (int i = 0; i < n; ++i) acc *= base;
  return acc;
}

/// cos of the angle at the feed between the FBP direction and the element
/// direction, from the law of cosines (FBP and elements share the z=0 plane,
/// so the in-plane s is the true chord length).
inline double beam_cos(double r0, double r, double s) {
  double c = (r0 * r0 + r * r - s * s) / (2.0 * r0 * r);
  return std::clamp(c, 0.0, 1.0);  // back-hemisphere contributions are zero
}

struct IllumIntegrand {
  const GeometryConfig& g;
  double tan0, sec2, r0;
  bool q_integer;
  int qi, qei;

  explicit IllumIntegrand(const GeometryConfig& cfg) : g(cfg) {
    tan0 = std::tan(g.theta0);
    sec2 = 1.0 + tan0 * tan0;
    r0 = std::sqrt(g.fbp_x * g.fbp_x + g.fbp_y * g.fbp_y + g.h * g.h * sec2 +
                   g.fbp_y * 2.0 * g.h * tan0);
    qi = static_cast<int>(std::lround(g.q));
    qei = static_cast<int>(std::lround(g.qe));
    q_integer = std::abs(g.q - qi) < 1e-12 && std::abs(g.qe - qei) < 1e-12;
  }

  /// Returns {P, I, I^2}: feed power density through the plane, illumination
  /// amplitude, and its square, all at aperture point (x, y).
  std::array<double, 3> operator()(double x, double y) const {
    const double r2 =
        x * x + y * y + g.h * g.h * sec2 + y * 2.0 * g.h * tan0;
    const double r = std::sqrt(r2);
    const double dx = x - g.fbp_x, dy = y - g.fbp_y;
    const double s2 = dx * dx + dy * dy;
    const double c = std::clamp((r0 * r0 + r2 - s2) / (2.0 * r0 * r), 0.0, 1.0);
    double cq, c2q, hqe, rqe;
    if (q_integer) {
      cq = powi(c, qi);
      c2q = cq * cq;
      hqe = powi(g.h, qei);
      rqe = powi(r, 1 + qei);
    } else {
      cq = std::pow(c, g.q);
      c2q = cq * cq;
      hqe = std::pow(g.h, g.qe);
      rqe = std::pow(r, 1.0 + g.qe);
    }
    const double P = g.h / (r2 * r) * c2q;
    const double I = hqe / rqe * cq;
    return {P, I, I * I};
  }
};

struct QuadResult {
  std::array<double, 3> value;
  bool converged;
};

inline std::array<double, 3> simpson_cell(const IllumIntegrand& f, double x0,
                                          double x1, double y0, double y1,
                                          std::array<std::array<double, 3>, 9>& fv) {
  // 3x3 tensor Simpson; fv is filled with the stencil values for reuse.
  const double xs[3] = {x0, 0.5 * (x0 + x1), x1};
  const double ys[3] = {y0, 0.5 * (y0 + y1), y1};
  static constexpr double w[3] = {1.0, 4.0, 1.0};
  std::array<double, 3> acc{0.0, 0.0, 0.0};
  int k = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j, ++k) {
      fv[k] = f(xs[i], ys[j]);
      const double ww = w[i] * w[j];
      for (int c = 0; c < 3; ++c) acc[c] += ww * fv[k][c];
    }
  const double scale = (x1 - x0) * (y1 - y0) / 36.0;
  for (auto& v : acc) v *= scale;
  return acc;
}

inline void adaptive_cell(const IllumIntegrand& f, double x0, double x1,
                          double y0, double y1,
                          const std::array<double, 3>& whole, double tol,
                          int depth, int max_depth,
                          std::array<double, 3>& out, bool& converged) {
  const double xm = 0.5 * (x0 + x1), ym = 0.5 * (y0 + y1);
  std::array<std::array<double, 3>, 9> fv;
  const std::array<double, 3> q00 = simpson_cell(f, x0, xm, y0, ym, fv);
  const std::array<double, 3> q01 = simpson_cell(f, x0, xm, ym, y1, fv);
  const std::array<double, 3> q10 = simpson_cell(f, xm, x1, y0, ym, fv);
  const std::array<double, 3> q11 = simpson_cell(f, xm, x1, ym, y1, fv);
  std::array<double, 3> sum;
  double err = 0.0, ref = 0.0;
  for (int c = 0; c < 3; ++c) {
    sum[c] = q00[c] + q01[c] + q10[c] + q11[c];
    err = std::max(err, std::abs(sum[c] - whole[c]));
    ref = std::max(ref, std::abs(sum[c]));
  }
  if (err <= 15.0 * tol * std::max(ref, 1e-300) || depth >= max_depth) {
    if (depth >= max_depth && err > 15.0 * tol * std::max(ref, 1e-300))
      converged = false;
    for (int c = 0; c < 3; ++c)
      out[c] += sum[c] + (sum[c] - whole[c]) / 15.0;  // Richardson term
    return;
  }
  adaptive_cell(f, x0, xm, y0, ym, q00, tol, depth + 1, max_depth, out, converged);
  adaptive_cell(f, x0, xm, ym, y1, q01, tol, depth + 1, max_depth, out, converged);
  adaptive_cell(f, xm, x1, y0, ym, q10, tol, depth + 1, max_depth, out, converged);
  adaptive_cell(f, xm, x1, ym, y1, q11, tol, depth + 1, max_depth, out, converged);
}

/// Adaptive 2-D Simpson over the aperture square, integrating {P, I, I^2}
/// simultaneously so one pass serves both efficiencies.
inline QuadResult integrate_aperture(const GeometryConfig& g, double rel_tol,
                                     int max_depth) {
  const IllumIntegrand f(g);
  const double a = 0.5 * g.aperture_side;
  QuadResult res{{0.0, 0.0, 0.0}, true};
  // Seed with a 4x4 cell partition so the adaptive error estimate starts on
  // cells comparable to the illumination feature size.
  constexpr int kSeed = 4;
  for (int i = 0; i < kSeed; ++i) {
    for (int j = 0; j < kSeed; ++j) {
      const double x0 = -a + 2.0 * a * i / kSeed, x1 = -a + 2.0 * a * (i + 1) / kSeed;
      const double y0 = -a + 2.0 * a * j / kSeed, y1 = -a + 2.0 * a * (j + 1) / kSeed;
      std::array<std::array<double, 3>, 9> fv;
      const auto whole = simpson_cell(f, x0, x1, y0, y1, fv);
      adaptive_cell(f, x0, x1, y0, y1, whole, rel_tol, 0, max_depth, res.value,
                    res.converged);
    }
  }
  return res;
}

}  // namespace detail

struct QuadratureSpec {
  double rel_tol = 1e-4;
  int max_depth = 12;
};

/// Total radiated power of the cos^(2q) power pattern over the forward
/// hemisphere (the pattern is zero behind the feed): 2*pi / (2q + 1).
inline double total_radiated_power(double q) { return 2.0 * kPi / (2.0 * q + 1.0); }

/// Fraction of feed power intercepted by the aperture square.
inline double spillover_efficiency(const GeometryConfig& g,
                                   const QuadratureSpec& quad = {}) {
  g.validate();
  const auto res = detail::integrate_aperture(g, quad.rel_tol, quad.max_depth);
  if (!res.converged)
    throw NumericalError("spillover quadrature did not reach tolerance");
  const double eta = res.value[0] / total_radiated_power(g.q);
  return std::clamp(eta, 0.0, 1.0);
}

/// Uniformity of the aperture illumination: |∫I|^2 / (A ∫I^2).
inline double illumination_efficiency(const GeometryConfig& g,
                                      const QuadratureSpec& quad = {}) {
  g.validate();
  const auto res = detail::integrate_aperture(g, quad.rel_tol, quad.max_depth);
  if (!res.converged)
    throw NumericalError("illumination quadrature did not reach tolerance");
  const double area = g.aperture_side * g.aperture_side;
  const double eta = (res.value[1] * res.value[1]) / (area * res.value[2]);
  return std::clamp(eta, 0.0, 1.0);
}

/// One quadrature pass for both efficiencies plus the edge taper.
inline EfficiencyReport efficiency_report(const GeometryConfig& g,
                                          const QuadratureSpec& quad = {});

/// Power ratio in dB between the most weakly illuminated of the four edge
/// midpoints and four corners, and the FBP.
inline double edge_taper_db(const GeometryConfig& g) {
  g.validate();
  const detail::IllumIntegrand f(g);
  const double a = 0.5 * g.aperture_side;
  const std::array<std::pair<double, double>, 8> pts{{{a, 0.0},
                                                      {-a, 0.0},
                                                      {0.0, a},
                                                      {0.0, -a},
                                                      {a, a},
                                                      {a, -a},
                                                      {-a, a},
                                                      {-a, -a}}};
  const double i_fbp = f(g.fbp_x, g.fbp_y)[1];
  double worst = std::numeric_limits<double>::infinity();
  for (const auto& [px, py] : pts) worst = std::min(worst, f(px, py)[1]);
  double ratio = (worst * worst) / (i_fbp * i_fbp);
  return std::min(0.0, 10.0 * std::log10(ratio));
}

inline EfficiencyReport efficiency_report(const GeometryConfig& g,
                                          const QuadratureSpec& quad) {
  g.validate();
  const auto res = detail::integrate_aperture(g, quad.rel_tol, quad.max_depth);
  if (!res.converged)
    throw NumericalError("aperture quadrature did not reach tolerance");
  EfficiencyReport rep{};
  rep.eta_s = std::clamp(res.value[0] / total_radiated_power(g.q), 0.0, 1.0);
  const double area = g.aperture_side * g.aperture_side;
  rep.eta_i = std::clamp((res.value[1] * res.value[1]) / (area * res.value[2]), 0.0, 1.0);
  rep.eta_a = rep.eta_s * rep.eta_i;
  rep.edge_taper_db = edge_taper_db(g);
  return rep;
}

struct SweepRange {
  double lo = 0.0, hi = 0.0, step = 1.0;

  std::vector<double> grid() const {
    if (step <= 0.0) throw UsageError("sweep: step must be > 0");
    std::vector<double> v;
    // Half-step slack so the inclusive endpoint survives rounding.
    for (double x = lo; x <= hi + 0.5 * step; x += step) v.push_back(std::min(x, hi));
    if (!v.empty() && v.back() < hi - 1e-12) v.push_back(hi);
    return v;
  }
};

struct SweepSpec {
  SweepRange theta0_deg{0.0, 50.0, 1.0};
  SweepRange h_m{0.20, 1.80, 0.01};
  SweepRange y0_m{-0.15, 0.15, 0.01};
  double h_min = 0.0;          // feasibility constraint H >= h_min
  double aperture_side = 0.1846;
  double q = 5.0;
  double qe = 1.0;
  QuadratureSpec quad{};
};

struct SweepResult {
  GeometryConfig best;
  EfficiencyReport report;
  std::size_t grid_size = 0;
};

/// Exhaustive grid search maximizing eta_a subject to H >= h_min.
/// Deterministic tie-break: lexicographically smallest (H, theta0, y0).
inline SweepResult sweep_optimize(const SweepSpec& spec) {
  const auto thetas = spec.theta0_deg.grid();
  const auto hs = spec.h_m.grid();
  const auto y0s = spec.y0_m.grid();
  if (thetas.empty() || hs.empty() || y0s.empty())
    throw UsageError("sweep: empty grid");

  SweepResult result{};
  result.grid_size = thetas.size() * hs.size() * y0s.size();
  bool found = false;
  double best_ea = -1.0;
  // Lexicographic (H, theta0, y0) scan order doubles as the tie-break.
  for (double h : hs) {
    if (h < spec.h_min) continue;
    for (double th : thetas) {
      for (double y0 : y0s) {
        GeometryConfig g;
        g.h = h;
        g.theta0 = deg2rad(th);
        g.fbp_x = 0.0;
        g.fbp_y = y0;
        g.aperture_side = spec.aperture_side;
        g.q = spec.q;
        g.qe = spec.qe;
        const auto res =
            detail::integrate_aperture(g, spec.quad.rel_tol, spec.quad.max_depth);
        if (!res.converged)
          throw NumericalError("sweep quadrature did not reach tolerance");
        const double eta_s =
            std::clamp(res.value[0] / total_radiated_power(g.q), 0.0, 1.0);
        const double area = g.aperture_side * g.aperture_side;
        const double eta_i = std::clamp(
            (res.value[1] * res.value[1]) / (area * res.value[2]), 0.0, 1.0);
        const double ea = eta_s * eta_i;
        if (ea > best_ea + 1e-15) {
          best_ea = ea;
          result.best = g;
          result.report.eta_s = eta_s;
          result.report.eta_i = eta_i;
          result.report.eta_a = ea;
          found = true;
        }
      }
    }
  }
  if (!found) throw UsageError("sweep: empty feasible set (h_min excludes all H)");
  result.report.edge_taper_db = edge_taper_db(result.best);
  return result;
}

}  // namespace ris_sense::geometry
