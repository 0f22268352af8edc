#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "ris_sense/channel.hpp"
#include "ris_sense/common.hpp"

namespace ris_sense::sequencer {

inline constexpr int kDefaultFrames = 10;       // K
inline constexpr int kConfigsPerFrame = 39;     // discrete slots per frame
inline constexpr int kGroups = channel::kGroups;
inline constexpr int kStates = channel::kStates;

/// Time-allocation matrix T, K x (L*N_a), row-major. For every frame and
/// group, t_off + t_on = delta; entries are exact multiples of delta/39 so
/// each row is realizable as 39 discrete configurations.
struct TimeMatrix {
  int frames = kDefaultFrames;
  double delta = 1.0;
  std::vector<double> t;  // frames x (kGroups * kStates)

  static std::size_t index(int frame, int group, int state) {
    return static_cast<std::size_t>(frame) * (kGroups * kStates) +
           static_cast<std::size_t>(group) * kStates + state;
  }
  double on(int frame, int group) const { return t[index(frame, group, 1)]; }
  double off(int frame, int group) const { return t[index(frame, group, 0)]; }

  void set_on(int frame, int group, double value) {
    t[index(frame, group, 1)] = value;
    t[index(frame, group, 0)] = delta - value;
  }

  void validate() const {
    if (frames < 1 || t.size() != static_cast<std::size_t>(frames) * kGroups * kStates)
      throw DataError("time matrix: dimension mismatch");
    for (int k = 0; k < frames; ++k)
      for (int l = 0; l < kGroups; ++l) {
        const double sum = off(k, l) + on(k, l);
        if (std::abs(sum - delta) > 1e-12)
          throw DataError("time matrix: per-group durations must sum to delta");
        if (on(k, l) < -1e-12 || on(k, l) > delta + 1e-12)
          throw DataError("time matrix: entry outside [0, delta]");
      }
  }
};

/// Discrete realization of a TimeMatrix: K frames of 39 group-state vectors.
struct ConfigSequence {
  std::string provenance;  // "random" | "fcao"
  std::uint64_t seed = 0;
  double delta = 1.0;
  // frames[k][c] is the 16-bit group-state vector of configuration c in frame k.
  std::vector<std::vector<std::array<std::uint8_t, kGroups>>> frames;

  int frame_count() const { return static_cast<int>(frames.size()); }

  void validate() const {
    for (const auto& f : frames)
      if (static_cast<int>(f.size()) != kConfigsPerFrame)
        throw DataError("config sequence: each frame must hold 39 configurations");
  }
};

/// Uniform random T on the realizable levels {0, 1/39, ..., 39/39} * delta.
inline TimeMatrix random_time_matrix(int frames, std::uint64_t seed,
                                     double delta = 1.0) {
  if (frames < 1) throw UsageError("random_time_matrix: frames must be >= 1");
  TimeMatrix tm;
  tm.frames = frames;
  tm.delta = delta;
  tm.t.assign(static_cast<std::size_t>(frames) * kGroups * kStates, 0.0);
  Rng rng(derive_seed(seed, "time_matrix"));
  for (int k = 0; k < frames; ++k)
    for (int l = 0; l < kGroups; ++l) {
      const auto level = rng.uniform_int(kConfigsPerFrame + 1);
      tm.set_on(k, l, delta * static_cast<double>(level) / kConfigsPerFrame);
    }
  return tm;
}

struct CoherenceReport {
  double max = 0.0;
  double avg = 0.0;
};

/// Mutual coherence over distinct column pairs of a complex matrix
/// (row-major, rows x cols): |<g_i, g_j>| / (||g_i|| * ||g_j||).
inline CoherenceReport mutual_coherence(const std::vector<cplx>& g, int rows,
                                        int cols) {
  if (rows < 1 || cols < 2 ||
      g.size() != static_cast<std::size_t>(rows) * cols)
    throw DataError("mutual_coherence: dimension mismatch");
  std::vector<double> norms(cols, 0.0);
  for (int c = 0; c < cols; ++c) {
    double n2 = 0.0;
    for (int r = 0; r < rows; ++r)
      n2 += std::norm(g[static_cast<std::size_t>(r) * cols + c]);
    if (n2 <= 0.0) throw DataError("mutual_coherence: zero column");
    norms[c] = std::sqrt(n2);
  }
  CoherenceReport rep;
  double sum = 0.0;
  int pairs = 0;
  for (int i = 0; i < cols; ++i) {
    for (int j = i + 1; j < cols; ++j) {
      cplx dot{0.0, 0.0};
      for (int r = 0; r < rows; ++r)
        dot += std::conj(g[static_cast<std::size_t>(r) * cols + i]) *
               g[static_cast<std::size_t>(r) * cols + j];
      const double mu = std::abs(dot) / (norms[i] * norms[j]);
      rep.max = std::max(rep.max, mu);
      sum += mu;
      ++pairs;
    }
  }
  rep.avg = sum / pairs;
  return rep;
}

/// Gamma = T * A as a row-major K x M complex matrix.
inline std::vector<cplx> measurement_matrix(const TimeMatrix& tm,
                                            const channel::ChannelGainMatrix& a) {
  tm.validate();
  std::vector<cplx> gamma(static_cast<std::size_t>(tm.frames) * channel::kCuboids,
                          cplx{0.0, 0.0});
  for (int k = 0; k < tm.frames; ++k)
    for (int m = 0; m < channel::kCuboids; ++m) {
      cplx v{0.0, 0.0};
      for (int r = 0; r < channel::ChannelGainMatrix::kRows; ++r)
        v += tm.t[static_cast<std::size_t>(k) *
                      channel::ChannelGainMatrix::kRows +
                  r] *
             a.at(r, m);
      gamma[static_cast<std::size_t>(k) * channel::kCuboids + m] = v;
    }
  return gamma;
}

namespace detail {

/// Mean squared off-diagonal coherence, the descent objective.
inline double coherence_objective(const std::vector<cplx>& gamma, int rows,
                                  int cols) {
  std::vector<double> norms2(cols, 0.0);
  for (int c = 0; c < cols; ++c) {
    double n2 = 0.0;
    for (int r = 0; r < rows; ++r)
      n2 += std::norm(gamma[static_cast<std::size_t>(r) * cols + c]);
    norms2[c] = n2;
  }
  double sum = 0.0;
  int pairs = 0;
  for (int i = 0; i < cols; ++i)
    for (int j = i + 1; j < cols; ++j) {
      cplx dot{0.0, 0.0};
      for (int r = 0; r < rows; ++r)
        dot += std::conj(gamma[static_cast<std::size_t>(r) * cols + i]) *
               gamma[static_cast<std::size_t>(r) * cols + j];
      if (norms2[i] <= 0.0 || norms2[j] <= 0.0) return 1.0;  // degenerate column
      sum += std::norm(dot) / (norms2[i] * norms2[j]);
      ++pairs;
    }
  return sum / pairs;
}

}  // namespace detail

struct FcaoOptions {
  int frames = kDefaultFrames;
  int max_iters = 25;   // full coordinate sweeps per restart
  int restarts = 4;
  std::uint64_t seed = 0;
};

struct FcaoResult {
  TimeMatrix t;
  double objective = 0.0;              // mean squared off-diagonal coherence
  std::vector<double> objective_trace;  // per accepted improvement
};

namespace detail {

/// Incremental evaluator for the descent: a level move changes only row k of
/// Gamma, so column norms and pairwise dots are updated in O(M^2) instead of
/// rebuilding the product.
class CoherenceDescent {
 public:
  CoherenceDescent(const channel::ChannelGainMatrix& a, const TimeMatrix& tm)
      : frames_(tm.frames), gamma_(measurement_matrix(tm, a)) {
    for (int l = 0; l < kGroups; ++l)
      for (int m = 0; m < kM; ++m)
        state_delta_[static_cast<std::size_t>(l) * kM + m] =
            a.at(channel::ChannelGainMatrix::row_index(l, channel::CellState::On), m) -
            a.at(channel::ChannelGainMatrix::row_index(l, channel::CellState::Off), m);
    norms2_.assign(kM, 0.0);
    dots_.assign(static_cast<std::size_t>(kM) * kM, cplx{0.0, 0.0});
    for (int m = 0; m < kM; ++m)
      for (int k = 0; k < frames_; ++k)
        norms2_[m] += std::norm(gamma_[static_cast<std::size_t>(k) * kM + m]);
    for (int i = 0; i < kM; ++i)
      for (int j = i + 1; j < kM; ++j) {
        cplx dot{0.0, 0.0};
        for (int k = 0; k < frames_; ++k)
          dot += std::conj(gamma_[static_cast<std::size_t>(k) * kM + i]) *
                 gamma_[static_cast<std::size_t>(k) * kM + j];
        dots_[static_cast<std::size_t>(i) * kM + j] = dot;
      }
  }

  double objective() const {
    double sum = 0.0;
    for (int i = 0; i < kM; ++i)
      for (int j = i + 1; j < kM; ++j) {
        if (norms2_[i] <= 0.0 || norms2_[j] <= 0.0) return 1.0;
        sum += std::norm(dots_[static_cast<std::size_t>(i) * kM + j]) /
               (norms2_[i] * norms2_[j]);
      }
    return sum / (kM * (kM - 1) / 2);
  }

  /// Objective if t_on(frame, group) moved by dv, without committing.
  double probe(int frame, int group, double dv) const {
    const cplx* old_row = &gamma_[static_cast<std::size_t>(frame) * kM];
    const cplx* d = &state_delta_[static_cast<std::size_t>(group) * kM];
    std::array<cplx, kM> new_row;
    std::array<double, kM> new_norms2;
    for (int m = 0; m < kM; ++m) {
      new_row[m] = old_row[m] + dv * d[m];
      new_norms2[m] = norms2_[m] - std::norm(old_row[m]) + std::norm(new_row[m]);
    }
    double sum = 0.0;
    for (int i = 0; i < kM; ++i)
      for (int j = i + 1; j < kM; ++j) {
        if (new_norms2[i] <= 0.0 || new_norms2[j] <= 0.0) return 1.0;
        const cplx dot = dots_[static_cast<std::size_t>(i) * kM + j] -
                         std::conj(old_row[i]) * old_row[j] +
                         std::conj(new_row[i]) * new_row[j];
        sum += std::norm(dot) / (new_norms2[i] * new_norms2[j]);
      }
    return sum / (kM * (kM - 1) / 2);
  }

  void commit(int frame, int group, double dv) {
    cplx* row = &gamma_[static_cast<std::size_t>(frame) * kM];
    const cplx* d = &state_delta_[static_cast<std::size_t>(group) * kM];
    for (int i = 0; i < kM; ++i)
      for (int j = i + 1; j < kM; ++j)
        dots_[static_cast<std::size_t>(i) * kM + j] -=
            std::conj(row[i]) * row[j];
    for (int m = 0; m < kM; ++m) {
      const cplx next = row[m] + dv * d[m];
      norms2_[m] += std::norm(next) - std::norm(row[m]);
      row[m] = next;
    }
    for (int i = 0; i < kM; ++i)
      for (int j = i + 1; j < kM; ++j)
        dots_[static_cast<std::size_t>(i) * kM + j] +=
            std::conj(row[i]) * row[j];
  }

 private:
  static constexpr int kM = channel::kCuboids;
  int frames_;
  std::vector<cplx> gamma_;
  std::array<cplx, static_cast<std::size_t>(kGroups) * kM> state_delta_;
  std::vector<double> norms2_;
  std::vector<cplx> dots_;
};

}  // namespace detail

/// Coherence-minimizing schedule search: seeded multi-restart coordinate
/// descent over the 40 realizable levels of t_on per (frame, group) cell,
/// minimizing the mean squared off-diagonal coherence of T*A. The result is
/// never worse than the best random initialization.
inline FcaoResult fcao_optimize(const channel::ChannelGainMatrix& a,
                                const FcaoOptions& opt = {}) {
  if (opt.frames < 2) throw UsageError("fcao: need at least two frames");
  FcaoResult best;
  bool have_best = false;
  for (int rs = 0; rs < opt.restarts; ++rs) {
    TimeMatrix tm =
        random_time_matrix(opt.frames, derive_seed(opt.seed, 0x46434100u + rs));
    detail::CoherenceDescent state(a, tm);
    double cur = state.objective();
    std::vector<double> trace{cur};
    for (int it = 0; it < opt.max_iters; ++it) {
      bool improved = false;
      for (int k = 0; k < tm.frames; ++k) {
        for (int l = 0; l < kGroups; ++l) {
          const double v0 = tm.on(k, l);
          double best_on = v0;
          double best_obj = cur;
          for (int level = 0; level <= kConfigsPerFrame; ++level) {
            const double v = tm.delta * level / kConfigsPerFrame;
            if (v == v0) continue;
            const double obj = state.probe(k, l, v - v0);
            if (obj < best_obj - 1e-15) {
              best_obj = obj;
              best_on = v;
            }
          }
          if (best_obj < cur - 1e-15) {
            state.commit(k, l, best_on - v0);
            tm.set_on(k, l, best_on);
            cur = best_obj;
            trace.push_back(cur);
            improved = true;
          }
        }
      }
      if (!improved) break;
    }
    if (!have_best || cur < best.objective) {
      best.t = tm;
      best.objective = cur;
      best.objective_trace = std::move(trace);
      have_best = true;
    }
  }
  return best;
}

/// Realize T as K frames of 39 discrete configurations: group l is ON in
/// exactly round(39 * t_on / delta) of each frame's configurations, with the
/// ON slots placed by a seeded shuffle. The frame-averaged indicators
/// reproduce T exactly.
inline ConfigSequence realize_sequence(const TimeMatrix& tm, std::uint64_t seed,
                                       const std::string& provenance = "random") {
  tm.validate();
  ConfigSequence seq;
  seq.provenance = provenance;
  seq.seed = seed;
  seq.delta = tm.delta;
  seq.frames.resize(tm.frames);
  Rng rng(derive_seed(seed, "realize_sequence"));
  for (int k = 0; k < tm.frames; ++k) {
    auto& frame = seq.frames[k];
    frame.assign(kConfigsPerFrame, {});
    for (int l = 0; l < kGroups; ++l) {
      const double exact = tm.on(k, l) * kConfigsPerFrame / tm.delta;
      const int count = static_cast<int>(std::lround(exact));
      if (std::abs(exact - count) > 0.5 - 1e-9 || count < 0 ||
          count > kConfigsPerFrame)
        throw DataError("realize_sequence: T not realizable in 39 slots");
      std::vector<int> slots(kConfigsPerFrame);
      std::iota(slots.begin(), slots.end(), 0);
      // Fisher-Yates with the sequence's own stream.
      for (int i = kConfigsPerFrame - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.uniform_int(i + 1));
        std::swap(slots[i], slots[j]);
      }
      for (int c = 0; c < count; ++c) frame[slots[c]][l] = 1;
    }
  }
  return seq;
}

/// Recover T from a sequence: t_on = delta * (ON count in frame) / 39.
inline TimeMatrix time_matrix_from_sequence(const ConfigSequence& seq) {
  seq.validate();
  TimeMatrix tm;
  tm.frames = seq.frame_count();
  tm.delta = seq.delta;
  tm.t.assign(static_cast<std::size_t>(tm.frames) * kGroups * kStates, 0.0);
  for (int k = 0; k < tm.frames; ++k) {
    for (int l = 0; l < kGroups; ++l) {
      int count = 0;
      for (const auto& cfg : seq.frames[k]) count += cfg[l] ? 1 : 0;
      tm.set_on(k, l, tm.delta * count / kConfigsPerFrame);
    }
  }
  return tm;
}

}  // namespace ris_sense::sequencer
