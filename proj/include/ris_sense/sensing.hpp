#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "ris_sense/channel.hpp"
#include "ris_sense/common.hpp"
#include "ris_sense/sequencer.hpp"

namespace ris_sense::sensing {

inline constexpr int kFreqPoints = channel::kFreqPoints;  // 201
inline constexpr int kConfigs =
    sequencer::kDefaultFrames * sequencer::kConfigsPerFrame;  // 390

enum class Gesture { OpenHand, TwoFingers, ClosedHand, Empty };

inline const char* to_string(Gesture g) {
  switch (g) {
    case Gesture::OpenHand: return "open_hand";
    case Gesture::TwoFingers: return "two_fingers";
    case Gesture::ClosedHand: return "closed_hand";
    case Gesture::Empty: return "empty";
  }
  throw UsageError("unknown gesture");
}

inline Gesture gesture_from_string(const std::string& s) {
  if (s == "open_hand") return Gesture::OpenHand;
  if (s == "two_fingers") return Gesture::TwoFingers;
  if (s == "closed_hand") return Gesture::ClosedHand;
  if (s == "empty") return Gesture::Empty;
  throw DataError("unknown gesture label: " + s);
}

/// The three classifier classes in the fixed reporting order.
inline constexpr std::array<Gesture, 3> kClassOrder{
    Gesture::OpenHand, Gesture::TwoFingers, Gesture::ClosedHand};

inline int class_index(Gesture g) {
  for (int i = 0; i < 3; ++i)
    if (kClassOrder[i] == g) return i;
  throw DataError("gesture has no classifier class: empty scene");
}

struct GestureScene {
  Gesture label = Gesture::Empty;
  int orientation_id = 0;
  channel::SceneGrid grid;
};

namespace detail {

/// Cuboid index in the 4x4x2 partition: a, b in 0..3 (in-plane), c in 0..1.
inline int cuboid_index(int a, int b, int c) { return (a * 4 + b) * 2 + c; }

}  // namespace detail

/// Deterministic occupancy template over the 4x4x2 SoI grid. Orientation 0 is
/// canonical; 1..4 shift the template by one cuboid in-plane; 5..8 jitter the
/// occupied reflectivities by +/-10%.
inline GestureScene gesture_scene(Gesture label, int orientation_id,
                                  const channel::Vec3& soi_center = {0.0, 0.08, 0.25},
                                  cplx occupied_eta = {0.8, 0.0}) {
  if (orientation_id < 0 || orientation_id > 8)
    throw UsageError("gesture_scene: orientation must be in 0..8");
  GestureScene scene;
  scene.label = label;
  scene.orientation_id = orientation_id;
  scene.grid = channel::default_scene_grid(soi_center);
  if (label == Gesture::Empty) return scene;

  // Base templates in the front layer (c = 0): a compact palm for the closed
  // hand, a 3x3 spread for the open hand, and palm plus a two-cell protrusion
  // for the two-finger gesture.
  std::vector<std::pair<int, int>> cells;
  switch (label) {
    case Gesture::ClosedHand:
      cells = {{1, 1}, {1, 2}, {2, 1}, {2, 2}};
      break;
    case Gesture::OpenHand:
      cells = {{0, 1}, {0, 2}, {0, 3}, {1, 1}, {1, 2}, {1, 3}, {2, 1}, {2, 2}, {2, 3}};
      break;
    case Gesture::TwoFingers:
      cells = {{1, 1}, {1, 2}, {2, 1}, {2, 2}, {0, 1}, {0, 2}};
      break;
    case Gesture::Empty:
      break;
  }

  int da = 0, db = 0;
  if (orientation_id == 1) da = 1;
  if (orientation_id == 2) da = -1;
  if (orientation_id == 3) db = 1;
  if (orientation_id == 4) db = -1;

  int idx = 0;
  for (auto [a, b] : cells) {
    // Toroidal shift keeps the occupied-cell count (and hence the template
    // identity) intact at the grid edges.
    const int aa = ((a + da) % 4 + 4) % 4;
    const int bb = ((b + db) % 4 + 4) % 4;
    cplx eta = occupied_eta;
    if (orientation_id >= 5) {
      // Deterministic +/-10% jitter pattern keyed by orientation and cell.
      const auto bit = (splitmix64(orientation_id * 131 + idx) >> 17) & 1u;
      eta *= bit ? 1.1 : 0.9;
    }
    scene.grid.eta[detail::cuboid_index(aa, bb, 0)] = eta;
    ++idx;
  }
  return scene;
}

/// One measurement run: complex S21 per (frequency point, configuration).
struct SampleRecord {
  std::vector<cplx> s21;  // row-major kFreqPoints x (configs), frequency-major
  int configs = kConfigs;
  Gesture label = Gesture::Empty;
  std::string provenance;  // "random" | "fcao"
  int orientation_id = 0;
  int run_id = 0;
  std::uint64_t seed = 0;
  bool normalized = false;
  double norm_scale = 1.0;  // divisor applied when normalizing

  cplx& at(int freq, int config) {
    return s21[static_cast<std::size_t>(freq) * configs + config];
  }
  cplx at(int freq, int config) const {
    return s21[static_cast<std::size_t>(freq) * configs + config];
  }

  void validate() const {
    if (configs != kConfigs ||
        s21.size() != static_cast<std::size_t>(kFreqPoints) * kConfigs)
      throw DataError("sample record: expected 201x390 S21 array");
  }
};

/// Per-frequency channel matrices for a fixed physical layout, cached so that
/// many runs against the same geometry reuse the kernel evaluations.
class FrequencySweepChannel {
 public:
  FrequencySweepChannel(const channel::LinkBudget& lb,
                        const channel::SceneGrid& geometry,
                        const channel::CellReflectionTable& tbl)
      : lb_(lb) {
    lb_.validate();
    const auto freqs = channel::frequency_grid();
    mats_.reserve(freqs.size());
    for (double f : freqs) mats_.push_back(channel::gain_matrix(lb_, geometry, tbl, f));
    freqs_ = freqs;
  }

  const channel::ChannelGainMatrix& at_freq(int fi) const { return mats_.at(fi); }
  const std::vector<double>& frequencies() const { return freqs_; }
  const channel::LinkBudget& link_budget() const { return lb_; }

  int nearest_index(double frequency) const {
    int best = 0;
    for (int i = 1; i < static_cast<int>(freqs_.size()); ++i)
      if (std::abs(freqs_[i] - frequency) < std::abs(freqs_[best] - frequency))
        best = i;
    return best;
  }

 private:
  channel::LinkBudget lb_;
  std::vector<double> freqs_;
  std::vector<channel::ChannelGainMatrix> mats_;
};

/// Synthesize one run: the per-configuration (not frame-averaged) response of
/// every RIS configuration in the sequence at every frequency point, plus
/// measurement noise. Deterministic given the seed.
inline SampleRecord synth_run(const GestureScene& scene,
                              const sequencer::ConfigSequence& seq,
                              const FrequencySweepChannel& sweep,
                              double noise_std, std::uint64_t seed) {
  seq.validate();
  const int total_configs = seq.frame_count() * sequencer::kConfigsPerFrame;
  SampleRecord rec;
  rec.configs = total_configs;
  rec.s21.assign(static_cast<std::size_t>(kFreqPoints) * total_configs, {0.0, 0.0});
  rec.label = scene.label;
  rec.provenance = seq.provenance;
  rec.orientation_id = scene.orientation_id;
  rec.seed = seed;
  const double pt = sweep.link_budget().pt;

  for (int fi = 0; fi < kFreqPoints; ++fi) {
    const auto& a = sweep.at_freq(fi);
    // Scene-projected per-(group,state) responses: beta = A * eta per group row.
    std::array<cplx, channel::kGroups * channel::kStates> beta{};
    for (int r = 0; r < channel::ChannelGainMatrix::kRows; ++r) {
      cplx acc{0.0, 0.0};
      for (int m = 0; m < channel::kCuboids; ++m)
        if (scene.grid.eta[m] != cplx{0.0, 0.0}) acc += a.at(r, m) * scene.grid.eta[m];
      beta[r] = acc;
    }
    int c = 0;
    for (const auto& frame : seq.frames) {
      for (const auto& cfg : frame) {
        cplx y{0.0, 0.0};
        for (int l = 0; l < channel::kGroups; ++l)
          y += beta[l * channel::kStates + (cfg[l] ? 1 : 0)];
        rec.at(fi, c) = pt * y;
        ++c;
      }
    }
  }
  if (noise_std > 0.0) {
    const std::uint64_t ns = derive_seed(seed, "synth_noise");
    for (std::size_t i = 0; i < rec.s21.size(); ++i)
      rec.s21[i] += cplx(noise_std * gaussian_at(ns, 2 * i),
                         noise_std * gaussian_at(ns, 2 * i + 1));
  }
  return rec;
}

/// Scale a record to unit dynamic range (max |S21| = 1). No-op on an
/// all-zero record.
inline void normalize_record(SampleRecord& rec) {
  if (rec.normalized) return;
  double peak = 0.0;
  for (const auto& v : rec.s21) peak = std::max(peak, std::abs(v));
  if (peak > 0.0) {
    for (auto& v : rec.s21) v /= peak;
    rec.norm_scale = peak;
  }
  rec.normalized = true;
}

inline constexpr std::array<double, 4> kAugmentStdSet{0.08, 0.1, 0.15, 0.2};

/// Noise replica `replica_index` of a base record: the record is normalized to
/// unit dynamic range, then white Gaussian noise with a per-replica standard
/// deviation drawn uniformly from `std_set` is added to the real and
/// imaginary channels. Pure function of (base, seed, replica_index).
inline SampleRecord augment_one(const SampleRecord& base, std::uint64_t seed,
                                int replica_index,
                                const std::vector<double>& std_set = {
                                    kAugmentStdSet.begin(), kAugmentStdSet.end()}) {
  if (std_set.empty()) throw UsageError("augment: empty std set");
  SampleRecord rec = base;
  normalize_record(rec);
  const std::uint64_t rs = derive_seed(derive_seed(seed, "augment"),
                                       static_cast<std::uint64_t>(replica_index));
  const double std_dev = std_set[splitmix64(rs) % std_set.size()];
  for (std::size_t i = 0; i < rec.s21.size(); ++i)
    rec.s21[i] += cplx(std_dev * gaussian_at(rs, 2 * i),
                       std_dev * gaussian_at(rs, 2 * i + 1));
  rec.run_id = base.run_id;
  rec.seed = rs;
  return rec;
}

inline std::vector<SampleRecord> augment(const SampleRecord& base, int replicas,
                                         std::uint64_t seed,
                                         const std::vector<double>& std_set = {
                                             kAugmentStdSet.begin(),
                                             kAugmentStdSet.end()}) {
  std::vector<SampleRecord> out;
  out.reserve(replicas);
  for (int r = 0; r < replicas; ++r) out.push_back(augment_one(base, seed, r, std_set));
  return out;
}

// ---------------------------------------------------------------------------
// Scene reconstruction from measurements.
// ---------------------------------------------------------------------------

using CMatrix = Eigen::Matrix<cplx, Eigen::Dynamic, Eigen::Dynamic>;
using CVector = Eigen::Matrix<cplx, Eigen::Dynamic, 1>;

struct Reconstruction {
  CVector eta;
  double residual_norm = 0.0;
  std::vector<double> residual_trace;  // per matching-pursuit iteration
};

/// Ridge estimate: argmin ||G*eta - y||^2 + mu*||eta||^2.
inline Reconstruction reconstruct_ridge(const CMatrix& gamma, const CVector& y,
                                        double mu) {
  if (gamma.rows() != y.rows())
    throw DataError("reconstruct: Gamma/y dimension mismatch");
  CMatrix normal = gamma.adjoint() * gamma;
  normal.diagonal().array() += mu;
  Eigen::FullPivLU<CMatrix> lu(normal);
  if (!lu.isInvertible())
    throw NumericalError("reconstruct: singular normal equations (mu = 0?)");
  Reconstruction rec;
  rec.eta = lu.solve(gamma.adjoint() * y);
  rec.residual_norm = (gamma * rec.eta - y).norm();
  return rec;
}

/// Orthogonal matching pursuit up to the requested sparsity: greedily add the
/// column most correlated with the residual, re-fit by least squares on the
/// support, repeat. The residual norm trace is non-increasing.
inline Reconstruction reconstruct_matching_pursuit(const CMatrix& gamma,
                                                   const CVector& y,
                                                   int sparsity) {
  if (gamma.rows() != y.rows())
    throw DataError("reconstruct: Gamma/y dimension mismatch");
  if (sparsity < 1 || sparsity > gamma.cols())
    throw UsageError("matching pursuit: sparsity out of range");
  std::vector<double> col_norms(gamma.cols());
  for (int c = 0; c < gamma.cols(); ++c) {
    col_norms[c] = gamma.col(c).norm();
    if (col_norms[c] <= 0.0) throw DataError("matching pursuit: zero column");
  }
  Reconstruction rec;
  rec.eta = CVector::Zero(gamma.cols());
  CVector residual = y;
  rec.residual_trace.push_back(residual.norm());
  std::vector<int> support;
  std::vector<char> in_support(gamma.cols(), 0);
  for (int it = 0; it < sparsity; ++it) {
    int pick = -1;
    double best = -1.0;
    for (int c = 0; c < gamma.cols(); ++c) {
      if (in_support[c]) continue;
      const double corr = std::abs(gamma.col(c).dot(residual)) / col_norms[c];
      if (corr > best) {
        best = corr;
        pick = c;
      }
    }
    if (pick < 0) break;
    support.push_back(pick);
    in_support[pick] = 1;
    CMatrix sub(gamma.rows(), static_cast<int>(support.size()));
    for (std::size_t s = 0; s < support.size(); ++s) sub.col(s) = gamma.col(support[s]);
    const CVector coef =
        (sub.adjoint() * sub).ldlt().solve(sub.adjoint() * y);
    residual = y - sub * coef;
    rec.eta.setZero();
    for (std::size_t s = 0; s < support.size(); ++s) rec.eta(support[s]) = coef(s);
    rec.residual_trace.push_back(residual.norm());
  }
  rec.residual_norm = rec.residual_trace.back();
  return rec;
}

/// Per-configuration measurement matrix: one row per discrete configuration,
/// evaluated at the given frequency index of the sweep. Stacking rows across
/// configurations (and, for full column rank, across frequency indices) gives
/// the Gamma used for reconstruction tests.
inline CMatrix per_configuration_gamma(const sequencer::ConfigSequence& seq,
                                       const FrequencySweepChannel& sweep,
                                       int freq_index) {
  seq.validate();
  const auto& a = sweep.at_freq(freq_index);
  const int rows = seq.frame_count() * sequencer::kConfigsPerFrame;
  CMatrix gamma(rows, channel::kCuboids);
  int r = 0;
  for (const auto& frame : seq.frames) {
    for (const auto& cfg : frame) {
      for (int m = 0; m < channel::kCuboids; ++m) {
        cplx v{0.0, 0.0};
        for (int l = 0; l < channel::kGroups; ++l)
          v += a.at(channel::ChannelGainMatrix::row_index(
                        l, cfg[l] ? channel::CellState::On : channel::CellState::Off),
                    m);
        gamma(r, m) = v;
      }
      ++r;
    }
  }
  return gamma;
}

}  // namespace ris_sense::sensing
