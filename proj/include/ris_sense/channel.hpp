#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <vector>

#include "ris_sense/codebook.hpp"
#include "ris_sense/common.hpp"

namespace ris_sense::channel {

inline constexpr int kGroups = 16;      // L
inline constexpr int kStates = 2;       // N_a
inline constexpr int kCuboids = 32;     // M
inline constexpr int kElements = 64;    // N*N
inline constexpr int kFreqPoints = 201;       // n_res
inline constexpr double kFreqLo = 5.0e9;
inline constexpr double kFreqHi = 6.5e9;

enum class CellState : int { Off = 0, On = 1 };

/// 201-point uniform frequency grid over [5.0, 6.5] GHz.
inline std::vector<double> frequency_grid() {
  std::vector<double> f(kFreqPoints);
  for (int i = 0; i < kFreqPoints; ++i)
    f[i] = kFreqLo + (kFreqHi - kFreqLo) * i / (kFreqPoints - 1);
  return f;
}

/// Measured unit-cell reflection anchor: magnitude in dB, phase in degrees
/// (unwrapped), per state.
struct ReflectionAnchor {
  double frequency;     // Hz
  double off_mag_db;
  double off_phase_deg;
  double on_mag_db;
  double on_phase_deg;
};

/// Per-state complex reflection coefficient vs frequency, piecewise-linear in
/// (dB magnitude, unwrapped phase) through a measured anchor set.
class CellReflectionTable {
 public:
  explicit CellReflectionTable(std::vector<ReflectionAnchor> anchors)
      : anchors_(std::move(anchors)) {
    if (anchors_.size() < 2)
      throw DataError("reflection table: need at least two anchors");
    for (std::size_t i = 1; i < anchors_.size(); ++i)
      if (anchors_[i].frequency <= anchors_[i - 1].frequency)
        throw DataError("reflection table: anchors must be sorted by frequency");
    for (const auto& a : anchors_)
      if (a.off_mag_db > 0.0 || a.on_mag_db > 0.0)
        throw DataError("reflection table: magnitudes must be <= 0 dB");
  }

  cplx coefficient(CellState s, double frequency) const {
    if (frequency < anchors_.front().frequency ||
        frequency > anchors_.back().frequency)
      throw DataError("reflection table: frequency outside covered range");
    std::size_t hi = 1;
    while (hi + 1 < anchors_.size() && anchors_[hi].frequency < frequency) ++hi;
    const auto& a = anchors_[hi - 1];
    const auto& b = anchors_[hi];
    const double t = (frequency - a.frequency) / (b.frequency - a.frequency);
    double mag_db, ph_deg;
    if (s == CellState::Off) {
      mag_db = a.off_mag_db + t * (b.off_mag_db - a.off_mag_db);
      ph_deg = a.off_phase_deg + t * (b.off_phase_deg - a.off_phase_deg);
    } else {
      mag_db = a.on_mag_db + t * (b.on_mag_db - a.on_mag_db);
      ph_deg = a.on_phase_deg + t * (b.on_phase_deg - a.on_phase_deg);
    }
    const double mag = std::pow(10.0, mag_db / 20.0);
    return std::polar(mag, deg2rad(ph_deg));
  }

  double min_frequency() const { return anchors_.front().frequency; }
  double max_frequency() const { return anchors_.back().frequency; }
  const std::vector<ReflectionAnchor>& anchors() const { return anchors_; }

 private:
  std::vector<ReflectionAnchor> anchors_;
};

inline CellReflectionTable build_reflection_table(std::vector<ReflectionAnchor> anchors) {
  return CellReflectionTable(std::move(anchors));
}

/// Default table through the measured unit-cell anchor points: 178 deg phase
/// difference at 5.93 GHz with ON at -3.77 dB and OFF at -1.67 dB, 174 deg at
/// 5.91 GHz with both states above -3 dB, and roughly 110 deg difference with
/// a 1.88 dB magnitude gap at 6.16 GHz. End points extend the trends to the
/// edges of the measured band.
inline CellReflectionTable default_reflection_table() {
  return build_reflection_table({
      {5.00e9, -1.20, 0.0, -1.90, -60.0},
      {5.50e9, -1.40, 0.0, -2.30, -120.0},
      {5.91e9, -1.70, 0.0, -2.90, -174.0},
      {5.93e9, -1.67, 0.0, -3.77, -178.0},
      {6.16e9, -1.50, 0.0, -3.38, -110.0},
      {6.50e9, -1.30, 0.0, -2.50, -70.0},
  });
}

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

inline double distance(const Vec3& a, const Vec3& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

/// Space of interest partitioned into M equal cuboids; eta is the complex
/// reflection coefficient per cuboid (zero when empty).
struct SceneGrid {
  std::array<Vec3, kCuboids> centers{};
  std::array<Vec3, kCuboids> sizes{};
  std::array<cplx, kCuboids> eta{};
};

struct LinkBudget {
  double pt = 1.0;                    // transmit power (unit baseband)
  double gt = 15.848931924611133;     // 12 dBi horn, linear
  double gr = 15.848931924611133;
  Vec3 tx{};                          // feed phase center [m]
  Vec3 rx{};                          // receiver [m]
  std::array<Vec3, kElements> elements{};  // RIS element centers [m]

  void validate() const {
    if (!(pt > 0.0)) throw UsageError("link budget: Pt must be > 0");
    if (!(gt > 0.0) || !(gr > 0.0))
      throw UsageError("link budget: antenna gains must be > 0");
  }
};

/// Default desk-scale layout: RIS tile centered at the origin in the z=0
/// plane, feed at the optimized placement (H=0.33 m, theta0=35 deg), SoI box
/// of 30x30x20 cm in front of the tile split 4x4x2, Rx below looking at the
/// SoI center.
inline LinkBudget default_link_budget() {
  LinkBudget lb;
  const double h = 0.33, theta0 = deg2rad(35.0);
  lb.tx = {0.0, -h * std::tan(theta0), h};
  lb.rx = {0.30, 0.0, 0.05};
  for (int i = 0; i < codebook::kN; ++i)
    for (int j = 0; j < codebook::kN; ++j) {
      const auto [x, y] = codebook::element_center(i, j);
      lb.elements[static_cast<std::size_t>(i) * codebook::kN + j] = {x, y, 0.0};
    }
  return lb;
}

/// 4x4x2 cuboid grid of a 30x30x20 cm SoI box centered at `center`.
inline SceneGrid default_scene_grid(const Vec3& center = {0.0, 0.08, 0.25}) {
  SceneGrid grid;
  const Vec3 size{0.30 / 4.0, 0.30 / 4.0, 0.20 / 2.0};
  int m = 0;
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 2; ++c, ++m) {
        grid.centers[m] = {center.x + (a - 1.5) * size.x,
                           center.y + (b - 1.5) * size.y,
                           center.z + (c - 0.5) * size.z};
        grid.sizes[m] = size;
        grid.eta[m] = {0.0, 0.0};
      }
  return grid;
}

/// Channel-gain kernel of one Tx -> element -> cuboid -> Rx bounce with the
/// cuboid reflectivity factored out:
///   lambda * r(s) * sqrt(gT*gR) / (4*pi * dTx * dnm * dmRx)
///     * exp(-j*2*pi*(dTx + dnm + dmRx)/lambda).
inline cplx element_gain(int element, int cuboid, CellState state, double frequency,
                         const LinkBudget& lb, const SceneGrid& grid,
                         const CellReflectionTable& tbl) {
  if (element < 0 || element >= kElements)
    throw UsageError("element_gain: element index out of range");
  if (cuboid < 0 || cuboid >= kCuboids)
    throw UsageError("element_gain: cuboid index out of range");
  lb.validate();
  const double lambda = kSpeedOfLight / frequency;
  const double d_tx = distance(lb.tx, lb.elements[element]);
  const double d_nm = distance(lb.elements[element], grid.centers[cuboid]);
  const double d_rx = distance(grid.centers[cuboid], lb.rx);
  if (d_tx <= 0.0 || d_nm <= 0.0 || d_rx <= 0.0)
    throw DataError("element_gain: zero path length");
  const cplx refl = tbl.coefficient(state, frequency);
  const double mag =
      lambda * std::sqrt(lb.gt * lb.gr) / (4.0 * kPi * d_tx * d_nm * d_rx);
  const double phase = -2.0 * kPi * (d_tx + d_nm + d_rx) / lambda;
  return mag * refl * std::exp(cplx(0.0, phase));
}

/// Channel gain matrix A, (L*N_a) x M. Row ordering is
/// (l=0,OFF), (l=0,ON), ..., (l=15,ON); columns are cuboids. Entries are the
/// eta-independent group kernels alpha_{m,l,i} = sum over the group's four
/// elements of the bounce kernel.
struct ChannelGainMatrix {
  static constexpr int kRows = kGroups * kStates;
  static constexpr int kCols = kCuboids;
  std::array<cplx, static_cast<std::size_t>(kRows) * kCols> a{};

  cplx& at(int row, int col) { return a[static_cast<std::size_t>(row) * kCols + col]; }
  cplx at(int row, int col) const {
    return a[static_cast<std::size_t>(row) * kCols + col];
  }
  static int row_index(int group, CellState s) {
    return group * kStates + static_cast<int>(s);
  }
};

inline ChannelGainMatrix gain_matrix(const LinkBudget& lb, const SceneGrid& grid,
                                     const CellReflectionTable& tbl,
                                     double frequency) {
  lb.validate();
  ChannelGainMatrix mat;
  for (int m = 0; m < kCuboids; ++m) {
    for (int i = 0; i < codebook::kN; ++i) {
      for (int j = 0; j < codebook::kN; ++j) {
        const int n = i * codebook::kN + j;
        const int l = codebook::group_of(i, j);
        mat.at(ChannelGainMatrix::row_index(l, CellState::Off), m) +=
            element_gain(n, m, CellState::Off, frequency, lb, grid, tbl);
        mat.at(ChannelGainMatrix::row_index(l, CellState::On), m) +=
            element_gain(n, m, CellState::On, frequency, lb, grid, tbl);
      }
    }
  }
  return mat;
}

/// Received response of one discrete RIS configuration (16 group bits):
/// y = Pt * sum_m eta_m * sum_l alpha_{m,l,s(l)}.
inline cplx configuration_response(const std::array<std::uint8_t, kGroups>& groups,
                                   const ChannelGainMatrix& a,
                                   const std::array<cplx, kCuboids>& eta,
                                   double pt = 1.0) {
  cplx y{0.0, 0.0};
  for (int m = 0; m < kCuboids; ++m) {
    if (eta[m] == cplx{0.0, 0.0}) continue;
    cplx path{0.0, 0.0};
    for (int l = 0; l < kGroups; ++l) {
      const auto s = groups[l] ? CellState::On : CellState::Off;
      path += a.at(ChannelGainMatrix::row_index(l, s), m);
    }
    y += eta[m] * path;
  }
  return pt * y;
}

struct NoiseSpec {
  double std_dev = 0.0;  // per real/imag component
  std::uint64_t seed = 0;
};

/// Frame-level received signal y = Pt * (T * A) * eta + z, with z i.i.d.
/// circular complex Gaussian. T is row-major K x (L*N_a).
inline std::vector<cplx> received_signal(const std::vector<double>& t_matrix,
                                         int frames, const ChannelGainMatrix& a,
                                         const std::array<cplx, kCuboids>& eta,
                                         double pt, const NoiseSpec& noise = {}) {
  if (frames <= 0 ||
      t_matrix.size() != static_cast<std::size_t>(frames) * ChannelGainMatrix::kRows)
    throw DataError("received_signal: T dimension mismatch");
  std::vector<cplx> y(frames, cplx{0.0, 0.0});
  for (int k = 0; k < frames; ++k) {
    for (int m = 0; m < kCuboids; ++m) {
      cplx g{0.0, 0.0};
      for (int r = 0; r < ChannelGainMatrix::kRows; ++r)
        g += t_matrix[static_cast<std::size_t>(k) * ChannelGainMatrix::kRows + r] *
             a.at(r, m);
      y[k] += g * eta[m];
    }
    y[k] *= pt;
  }
  if (noise.std_dev > 0.0) {
    Rng rng(derive_seed(noise.seed, "received_signal"));
    for (auto& v : y)
      v += cplx(noise.std_dev * rng.gaussian(), noise.std_dev * rng.gaussian());
  }
  return y;
}

}  // namespace ris_sense::channel
