#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "ris_sense/common.hpp"

namespace ris_sense::codebook {

inline constexpr int kN = 8;            // elements per side
inline constexpr int kGroups = 16;      // 2x2 element groups
inline constexpr double kCellPitch = 0.023;   // unit cell pitch [m]
inline constexpr double kTileSide = 0.184;    // tile height/width [m]

/// Desired steering direction plus the feed placement used to compute the
/// per-element path lengths.
struct SteeringSpec {
  double theta = 0.0;      // steering elevation [rad]
  double phi = 0.0;        // steering azimuth [rad]
  double frequency = 5.91e9;  // design frequency [Hz]
  double feed_x = 0.0, feed_y = 0.0, feed_z = 0.40;  // feed position [m]

  void validate() const {
    if (!(frequency > 0.0)) throw UsageError("steering: frequency must be > 0");
    if (std::abs(theta) > kPi / 2.0)
      throw UsageError("steering: |theta| must be <= pi/2");
  }
};

/// Feed placed at distance d from the tile center, offset by `angle` from the
/// tile normal in the xz-plane (the characterization arrangement).
inline SteeringSpec characterization_feed(double d, double angle_rad) {
  SteeringSpec s;
  s.feed_x = d * std::sin(angle_rad);
  s.feed_y = 0.0;
  s.feed_z = d * std::cos(angle_rad);
  return s;
}

struct PhaseProfile {
  std::array<double, kN * kN> phases{};  // [0, 2*pi), row-major (i, j)
  double cell_pitch = kCellPitch;
  double tile_side = kTileSide;

  double& at(int i, int j) { return phases[static_cast<std::size_t>(i) * kN + j]; }
  double at(int i, int j) const { return phases[static_cast<std::size_t>(i) * kN + j]; }
};

struct RisState {
  std::array<std::uint8_t, kN * kN> bits{};  // 0/1, row-major (i, j)

  std::uint8_t& at(int i, int j) { return bits[static_cast<std::size_t>(i) * kN + j]; }
  std::uint8_t at(int i, int j) const { return bits[static_cast<std::size_t>(i) * kN + j]; }
};

/// Element center, with the half-cell correction so the 8x8 grid is symmetric
/// about the tile center: x_ij = (i + 0.5) * C_d - side/2.
inline std::pair<double, double> element_center(int i, int j) {
  return {(i + 0.5) * kCellPitch - kTileSide / 2.0,
          (j + 0.5) * kCellPitch - kTileSide / 2.0};
}

/// Group index of element (i, j); groups are contiguous 2x2 blocks.
inline int group_of(int i, int j) { return (i / 2) * 4 + (j / 2); }

/// Ideal continuous phase profile for a steering direction:
/// phi_ij = k * (R - sin(theta) * x_ij * cos(phi) + y_ij * sin(phi)) mod 2*pi,
/// with R the element-to-feed distance.
inline PhaseProfile ideal_phase_profile(const SteeringSpec& s) {
  s.validate();
  const double lambda = kSpeedOfLight / s.frequency;
  const double k = 2.0 * kPi / lambda;
  PhaseProfile p;
  for (int i = 0; i < kN; ++i) {
    for (int j = 0; j < kN; ++j) {
      const auto [x, y] = element_center(i, j);
      const double dx = s.feed_x - x, dy = s.feed_y - y;
      const double R = std::sqrt(dx * dx + dy * dy + s.feed_z * s.feed_z);
      const double phase =
          k * (R - std::sin(s.theta) * x * std::cos(s.phi) + y * std::sin(s.phi));
      p.at(i, j) = wrap_2pi(phase);
    }
  }
  return p;
}

/// 1-bit quantization: 0 for phases in [0, pi), 1 for [pi, 2*pi).
/// The boundary phase 0 maps to bit 0.
inline RisState quantize_profile(const PhaseProfile& p) {
  RisState st;
  for (std::size_t n = 0; n < p.phases.size(); ++n) {
    const double ph = wrap_2pi(p.phases[n]);
    st.bits[n] = ph >= kPi ? 1 : 0;
  }
  return st;
}

/// Collapse a cell state to its 16 group bits. The sensing pipeline only
/// produces group-homogeneous states; anything else is a contract violation.
inline std::array<std::uint8_t, kGroups> group_states(const RisState& st) {
  std::array<std::uint8_t, kGroups> groups{};
  std::array<bool, kGroups> seen{};
  for (int i = 0; i < kN; ++i) {
    for (int j = 0; j < kN; ++j) {
      const int g = group_of(i, j);
      if (!seen[g]) {
        groups[g] = st.at(i, j);
        seen[g] = true;
      } else if (groups[g] != st.at(i, j)) {
        throw DataError("group_states: heterogeneous 2x2 group " + std::to_string(g));
      }
    }
  }
  return groups;
}

/// Expand 16 group bits to the full 8x8 cell state.
inline RisState expand_groups(const std::array<std::uint8_t, kGroups>& groups) {
  RisState st;
  for (int i = 0; i < kN; ++i)
    for (int j = 0; j < kN; ++j) st.at(i, j) = groups[group_of(i, j)] ? 1 : 0;
  return st;
}

struct RadiationPattern {
  std::vector<double> angles_deg;  // strictly increasing rotor angles
  std::vector<double> gain_db;     // normalized, max = 0 dB
};

/// Per-state complex reflection coefficients used for pattern evaluation.
/// The ideal 1-bit pair is {+1, -1}.
struct StateCoefficients {
  cplx off{1.0, 0.0};
  cplx on{-1.0, 0.0};
};

/// Far-field pattern over rotor angle: coherent sum of per-element
/// contributions, each weighted by the cos^q feed illumination over spherical
/// spreading, the state reflection coefficient, the feed->element propagation
/// phase, and the plane-wave phase toward the receiver direction in the rotor
/// plane (the xz-plane). Output normalized to a 0 dB peak.
inline RadiationPattern radiation_pattern(const RisState& st, double frequency,
                                          const SteeringSpec& feed,
                                          const std::vector<double>& rotor_angles_deg,
                                          const StateCoefficients& coef = {},
                                          double feed_q = 5.0) {
  if (rotor_angles_deg.empty())
    throw UsageError("radiation_pattern: empty rotor angle list");
  for (std::size_t i = 1; i < rotor_angles_deg.size(); ++i)
    if (rotor_angles_deg[i] <= rotor_angles_deg[i - 1])
      throw UsageError("radiation_pattern: rotor angles must be strictly increasing");
  const double lambda = kSpeedOfLight / frequency;
  const double k = 2.0 * kPi / lambda;
  const double feed_r0 = std::sqrt(feed.feed_x * feed.feed_x +
                                   feed.feed_y * feed.feed_y +
                                   feed.feed_z * feed.feed_z);

  // Per-element complex weight independent of the rotor angle.
  std::array<cplx, kN * kN> w;
  std::array<double, kN * kN> xs;
  for (int i = 0; i < kN; ++i) {
    for (int j = 0; j < kN; ++j) {
      const auto [x, y] = element_center(i, j);
      const double dx = feed.feed_x - x, dy = feed.feed_y - y;
      const double R = std::sqrt(dx * dx + dy * dy + feed.feed_z * feed.feed_z);
      // Angle between feed boresight (pointing at the tile center) and the
      // feed->element direction.
      const double cosang = std::clamp(
          (feed_r0 * feed_r0 + R * R - (x * x + y * y)) / (2.0 * feed_r0 * R), 0.0,
          1.0);
      const double amp = std::pow(cosang, feed_q) / R;
      const cplx refl = st.bits[static_cast<std::size_t>(i) * kN + j] ? coef.on
                                                                      : coef.off;
      w[static_cast<std::size_t>(i) * kN + j] =
          amp * refl * std::exp(cplx(0.0, -k * R));
      xs[static_cast<std::size_t>(i) * kN + j] = x;
    }
  }

  RadiationPattern pat;
  pat.angles_deg = rotor_angles_deg;
  pat.gain_db.resize(rotor_angles_deg.size());
  double peak = 0.0;
  for (std::size_t a = 0; a < rotor_angles_deg.size(); ++a) {
    const double sin_a = std::sin(deg2rad(rotor_angles_deg[a]));
    cplx e{0.0, 0.0};
    for (std::size_t n = 0; n < w.size(); ++n)
      e += w[n] * std::exp(cplx(0.0, k * xs[n] * sin_a));
    const double p = std::norm(e);
    pat.gain_db[a] = p;
    peak = std::max(peak, p);
  }
  if (peak <= 0.0) throw NumericalError("radiation_pattern: zero pattern");
  for (auto& g : pat.gain_db) g = 10.0 * std::log10(std::max(g / peak, 1e-30));
  return pat;
}

}  // namespace ris_sense::codebook
