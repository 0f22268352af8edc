#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "ris_sense/common.hpp"
#include "ris_sense/io.hpp"
#include "ris_sense/sensing.hpp"

namespace ris_sense::classifier {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Feature extraction.
// ---------------------------------------------------------------------------

/// Per-frame mean of Re(S21) at the design frequency: one value per frame.
inline std::vector<double> features_m1(const sensing::SampleRecord& rec,
                                       double f_design,
                                       int frames = sequencer::kDefaultFrames) {
  if (f_design < channel::kFreqLo - 1.0 || f_design > channel::kFreqHi + 1.0)
    throw UsageError("features_m1: design frequency outside the sweep grid");
  const auto grid = channel::frequency_grid();
  int fi = 0;
  double best = std::abs(grid[0] - f_design);
  for (int i = 1; i < channel::kFreqPoints; ++i)
    if (std::abs(grid[i] - f_design) < best) {
      best = std::abs(grid[i] - f_design);
      fi = i;
    }
  if (rec.configs % frames != 0)
    throw DataError("features_m1: configurations not divisible into frames");
  const int per_frame = rec.configs / frames;
  std::vector<double> v(frames, 0.0);
  for (int k = 0; k < frames; ++k) {
    double sum = 0.0;
    for (int c = 0; c < per_frame; ++c)
      sum += rec.at(fi, k * per_frame + c).real();
    v[k] = sum / per_frame;
    if (!std::isfinite(v[k])) throw DataError("features_m1: non-finite feature");
  }
  return v;
}

struct FeatureImageM2 {
  int rows = sensing::kFreqPoints;
  int cols = sensing::kConfigs;
  std::vector<double> magnitude;  // rows*cols, min-max normalized dB
  std::vector<double> phase;      // rows*cols, arg/pi in [-1, 1]
};

/// Two-channel image: clipped/normalized magnitude in dB and wrapped phase.
inline FeatureImageM2 features_m2(const sensing::SampleRecord& rec) {
  FeatureImageM2 img;
  img.rows = sensing::kFreqPoints;
  img.cols = rec.configs;
  const std::size_t n = rec.s21.size();
  img.magnitude.resize(n);
  img.phase.resize(n);
  double lo = 1e300, hi = -1e300;
  for (std::size_t i = 0; i < n; ++i) {
    const double mag = std::abs(rec.s21[i]);
    double db = mag > 0.0 ? 20.0 * std::log10(mag) : -80.0;
    db = std::clamp(db, -80.0, 0.0);
    img.magnitude[i] = db;
    lo = std::min(lo, db);
    hi = std::max(hi, db);
    img.phase[i] = std::arg(rec.s21[i]) / kPi;
  }
  const double span = hi - lo;
  for (auto& v : img.magnitude) v = span > 0.0 ? (v - lo) / span : 1.0;
  return img;
}

// ---------------------------------------------------------------------------
// Models. All parameters live in one flat vector so the Adam update and the
// finite-difference gradient check are model-agnostic.
// ---------------------------------------------------------------------------

enum class ModelSpec { M1, M2 };

inline const char* to_string(ModelSpec s) {
  return s == ModelSpec::M1 ? "m1" : "m2";
}

inline ModelSpec model_from_string(const std::string& s) {
  if (s == "m1") return ModelSpec::M1;
  if (s == "m2") return ModelSpec::M2;
  throw UsageError("unknown model: " + s + " (expected m1 or m2)");
}

struct ModelParams {
  ModelSpec spec = ModelSpec::M1;
  // M1: input length; M2: image rows/cols (2 channels implied).
  int input_dim = 10;
  int rows = 0, cols = 0;
  std::uint64_t seed = 0;
  std::vector<double> theta;
  std::string descriptor;
};

namespace detail {

inline constexpr int kClasses = 3;
inline constexpr int kM1Hidden1 = 64;
inline constexpr int kM1Hidden2 = 32;
inline constexpr int kConv1Filters = 8;
inline constexpr int kConv2Filters = 16;
inline constexpr int kKernel = 3;
inline constexpr int kM2Dense = 64;

struct Segment {
  std::size_t offset = 0;
  std::size_t size = 0;
};

/// Parameter layout builder over the flat theta vector.
class Layout {
 public:
  Segment add(std::size_t size) {
    Segment s{total_, size};
    total_ += size;
    return s;
  }
  std::size_t total() const { return total_; }

 private:
  std::size_t total_ = 0;
};

inline void softmax(const double* logits, double* p) {
  const double m = std::max({logits[0], logits[1], logits[2]});
  double sum = 0.0;
  for (int i = 0; i < kClasses; ++i) {
    p[i] = std::exp(logits[i] - m);
    sum += p[i];
  }
  for (int i = 0; i < kClasses; ++i) p[i] /= sum;
}

// --- Model #1: dense input -> 64 -> 32 -> 3 with ReLU hiddens. -------------

struct M1Layout {
  Segment w1, b1, w2, b2, w3, b3;
  std::size_t total = 0;
  explicit M1Layout(int input_dim) {
    Layout l;
    w1 = l.add(static_cast<std::size_t>(kM1Hidden1) * input_dim);
    b1 = l.add(kM1Hidden1);
    w2 = l.add(static_cast<std::size_t>(kM1Hidden2) * kM1Hidden1);
    b2 = l.add(kM1Hidden2);
    w3 = l.add(static_cast<std::size_t>(kClasses) * kM1Hidden2);
    b3 = l.add(kClasses);
    total = l.total();
  }
};

struct M1Workspace {
  std::vector<double> h1, h2;
  std::array<double, kClasses> logits{}, probs{};
};

inline void m1_forward(const ModelParams& mp, const M1Layout& lay,
                       const std::vector<double>& x, M1Workspace& ws) {
  const double* th = mp.theta.data();
  const int in = mp.input_dim;
  ws.h1.assign(kM1Hidden1, 0.0);
  for (int i = 0; i < kM1Hidden1; ++i) {
    double a = th[lay.b1.offset + i];
    const double* w = th + lay.w1.offset + static_cast<std::size_t>(i) * in;
    for (int j = 0; j < in; ++j) a += w[j] * x[j];
    ws.h1[i] = std::max(0.0, a);
  }
  ws.h2.assign(kM1Hidden2, 0.0);
  for (int i = 0; i < kM1Hidden2; ++i) {
    double a = th[lay.b2.offset + i];
    const double* w = th + lay.w2.offset + static_cast<std::size_t>(i) * kM1Hidden1;
    for (int j = 0; j < kM1Hidden1; ++j) a += w[j] * ws.h1[j];
    ws.h2[i] = std::max(0.0, a);
  }
  for (int i = 0; i < kClasses; ++i) {
    double a = th[lay.b3.offset + i];
    const double* w = th + lay.w3.offset + static_cast<std::size_t>(i) * kM1Hidden2;
    for (int j = 0; j < kM1Hidden2; ++j) a += w[j] * ws.h2[j];
    ws.logits[i] = a;
  }
  softmax(ws.logits.data(), ws.probs.data());
}

/// Accumulates d(loss)/d(theta) into grad; returns the cross-entropy loss.
inline double m1_backward(const ModelParams& mp, const M1Layout& lay,
                          const std::vector<double>& x, int label,
                          std::vector<double>& grad) {
  M1Workspace ws;
  m1_forward(mp, lay, x, ws);
  const double loss = -std::log(std::max(ws.probs[label], 1e-300));
  const double* th = mp.theta.data();
  const int in = mp.input_dim;
  std::array<double, kClasses> dlogit{};
  for (int i = 0; i < kClasses; ++i)
    dlogit[i] = ws.probs[i] - (i == label ? 1.0 : 0.0);
  std::vector<double> dh2(kM1Hidden2, 0.0);
  for (int i = 0; i < kClasses; ++i) {
    grad[lay.b3.offset + i] += dlogit[i];
    double* gw = grad.data() + lay.w3.offset + static_cast<std::size_t>(i) * kM1Hidden2;
    const double* w = th + lay.w3.offset + static_cast<std::size_t>(i) * kM1Hidden2;
    for (int j = 0; j < kM1Hidden2; ++j) {
      gw[j] += dlogit[i] * ws.h2[j];
      dh2[j] += dlogit[i] * w[j];
    }
  }
  std::vector<double> dh1(kM1Hidden1, 0.0);
  for (int i = 0; i < kM1Hidden2; ++i) {
    if (ws.h2[i] <= 0.0) continue;
    grad[lay.b2.offset + i] += dh2[i];
    double* gw = grad.data() + lay.w2.offset + static_cast<std::size_t>(i) * kM1Hidden1;
    const double* w = th + lay.w2.offset + static_cast<std::size_t>(i) * kM1Hidden1;
    for (int j = 0; j < kM1Hidden1; ++j) {
      gw[j] += dh2[i] * ws.h1[j];
      dh1[j] += dh2[i] * w[j];
    }
  }
  for (int i = 0; i < kM1Hidden1; ++i) {
    if (ws.h1[i] <= 0.0) continue;
    grad[lay.b1.offset + i] += dh1[i];
    double* gw = grad.data() + lay.w1.offset + static_cast<std::size_t>(i) * in;
    for (int j = 0; j < in; ++j) gw[j] += dh1[i] * x[j];
  }
  return loss;
}

// --- Model #2: conv(2->8, 3x3) -> maxpool2 -> conv(8->16, 3x3) -> maxpool2
//               -> dense 64 -> dense 3. Valid padding, stride 1. -------------

struct M2Layout {
  int rows, cols;
  int c1r, c1c, p1r, p1c, c2r, c2c, p2r, p2c;
  std::size_t flat;
  Segment k1, b1, k2, b2, w3, b3, w4, b4;
  std::size_t total = 0;

  M2Layout(int rows_, int cols_) : rows(rows_), cols(cols_) {
    c1r = rows - kKernel + 1;
    c1c = cols - kKernel + 1;
    if (c1r < 2 || c1c < 2) throw UsageError("m2: image too small");
    p1r = c1r / 2;
    p1c = c1c / 2;
    c2r = p1r - kKernel + 1;
    c2c = p1c - kKernel + 1;
    if (c2r < 2 || c2c < 2) throw UsageError("m2: image too small");
    p2r = c2r / 2;
    p2c = c2c / 2;
    flat = static_cast<std::size_t>(kConv2Filters) * p2r * p2c;
    Layout l;
    k1 = l.add(static_cast<std::size_t>(kConv1Filters) * 2 * kKernel * kKernel);
    b1 = l.add(kConv1Filters);
    k2 = l.add(static_cast<std::size_t>(kConv2Filters) * kConv1Filters * kKernel *
               kKernel);
    b2 = l.add(kConv2Filters);
    w3 = l.add(static_cast<std::size_t>(kM2Dense) * flat);
    b3 = l.add(kM2Dense);
    w4 = l.add(static_cast<std::size_t>(kClasses) * kM2Dense);
    b4 = l.add(kClasses);
    total = l.total();
  }
};

struct M2Workspace {
  std::vector<double> a1;   // conv1 post-ReLU, kConv1Filters x c1r x c1c
  std::vector<double> p1;   // pool1, kConv1Filters x p1r x p1c
  std::vector<int> p1_idx;  // argmax index into a1 per pooled cell
  std::vector<double> a2;   // conv2 post-ReLU
  std::vector<double> p2;
  std::vector<int> p2_idx;
  std::vector<double> h3;  // dense hidden, ReLU
  std::array<double, kClasses> logits{}, probs{};
};

inline void conv_valid(const double* in, int channels, int rows, int cols,
                       const double* kernels, const double* bias, int filters,
                       double* out, int orows, int ocols) {
  for (int f = 0; f < filters; ++f) {
    for (int r = 0; r < orows; ++r)
      for (int c = 0; c < ocols; ++c) {
        double a = bias[f];
        for (int ch = 0; ch < channels; ++ch) {
          const double* kf = kernels + ((static_cast<std::size_t>(f) * channels + ch) *
                                        kKernel * kKernel);
          const double* base =
              in + (static_cast<std::size_t>(ch) * rows + r) * cols + c;
          for (int kr = 0; kr < kKernel; ++kr)
            for (int kc = 0; kc < kKernel; ++kc)
              a += kf[kr * kKernel + kc] * base[kr * cols + kc];
        }
        out[(static_cast<std::size_t>(f) * orows + r) * ocols + c] =
            std::max(0.0, a);
      }
  }
}

inline void maxpool2(const double* in, int channels, int rows, int cols,
                     double* out, int* idx, int orows, int ocols) {
  for (int ch = 0; ch < channels; ++ch)
    for (int r = 0; r < orows; ++r)
      for (int c = 0; c < ocols; ++c) {
        int best = (static_cast<int>((static_cast<std::size_t>(ch) * rows + 2 * r) *
                                     cols) +
                    2 * c);
        double bv = in[best];
        for (int dr = 0; dr < 2; ++dr)
          for (int dc = 0; dc < 2; ++dc) {
            const int i =
                (static_cast<int>((static_cast<std::size_t>(ch) * rows + 2 * r + dr) *
                                  cols) +
                 2 * c + dc);
            if (in[i] > bv) {
              bv = in[i];
              best = i;
            }
          }
        const std::size_t o = (static_cast<std::size_t>(ch) * orows + r) * ocols + c;
        out[o] = bv;
        idx[o] = best;
      }
}

inline void m2_forward(const ModelParams& mp, const M2Layout& lay,
                       const std::vector<double>& x, M2Workspace& ws) {
  const double* th = mp.theta.data();
  ws.a1.assign(static_cast<std::size_t>(kConv1Filters) * lay.c1r * lay.c1c, 0.0);
  conv_valid(x.data(), 2, lay.rows, lay.cols, th + lay.k1.offset,
             th + lay.b1.offset, kConv1Filters, ws.a1.data(), lay.c1r, lay.c1c);
  ws.p1.assign(static_cast<std::size_t>(kConv1Filters) * lay.p1r * lay.p1c, 0.0);
  ws.p1_idx.assign(ws.p1.size(), 0);
  maxpool2(ws.a1.data(), kConv1Filters, lay.c1r, lay.c1c, ws.p1.data(),
           ws.p1_idx.data(), lay.p1r, lay.p1c);
  ws.a2.assign(static_cast<std::size_t>(kConv2Filters) * lay.c2r * lay.c2c, 0.0);
  conv_valid(ws.p1.data(), kConv1Filters, lay.p1r, lay.p1c, th + lay.k2.offset,
             th + lay.b2.offset, kConv2Filters, ws.a2.data(), lay.c2r, lay.c2c);
  ws.p2.assign(lay.flat, 0.0);
  ws.p2_idx.assign(lay.flat, 0);
  maxpool2(ws.a2.data(), kConv2Filters, lay.c2r, lay.c2c, ws.p2.data(),
           ws.p2_idx.data(), lay.p2r, lay.p2c);
  ws.h3.assign(kM2Dense, 0.0);
  for (int i = 0; i < kM2Dense; ++i) {
    double a = th[lay.b3.offset + i];
    const double* w = th + lay.w3.offset + static_cast<std::size_t>(i) * lay.flat;
    for (std::size_t j = 0; j < lay.flat; ++j) a += w[j] * ws.p2[j];
    ws.h3[i] = std::max(0.0, a);
  }
  for (int i = 0; i < kClasses; ++i) {
    double a = th[lay.b4.offset + i];
    const double* w = th + lay.w4.offset + static_cast<std::size_t>(i) * kM2Dense;
    for (int j = 0; j < kM2Dense; ++j) a += w[j] * ws.h3[j];
    ws.logits[i] = a;
  }
  softmax(ws.logits.data(), ws.probs.data());
}

inline double m2_backward(const ModelParams& mp, const M2Layout& lay,
                          const std::vector<double>& x, int label,
                          std::vector<double>& grad) {
  M2Workspace ws;
  m2_forward(mp, lay, x, ws);
  const double loss = -std::log(std::max(ws.probs[label], 1e-300));
  const double* th = mp.theta.data();
  std::array<double, kClasses> dlogit{};
  for (int i = 0; i < kClasses; ++i)
    dlogit[i] = ws.probs[i] - (i == label ? 1.0 : 0.0);
  std::vector<double> dh3(kM2Dense, 0.0);
  for (int i = 0; i < kClasses; ++i) {
    grad[lay.b4.offset + i] += dlogit[i];
    double* gw = grad.data() + lay.w4.offset + static_cast<std::size_t>(i) * kM2Dense;
    const double* w = th + lay.w4.offset + static_cast<std::size_t>(i) * kM2Dense;
    for (int j = 0; j < kM2Dense; ++j) {
      gw[j] += dlogit[i] * ws.h3[j];
      dh3[j] += dlogit[i] * w[j];
    }
  }
  std::vector<double> dp2(lay.flat, 0.0);
  for (int i = 0; i < kM2Dense; ++i) {
    if (ws.h3[i] <= 0.0) continue;
    grad[lay.b3.offset + i] += dh3[i];
    double* gw = grad.data() + lay.w3.offset + static_cast<std::size_t>(i) * lay.flat;
    const double* w = th + lay.w3.offset + static_cast<std::size_t>(i) * lay.flat;
    for (std::size_t j = 0; j < lay.flat; ++j) {
      gw[j] += dh3[i] * ws.p2[j];
      dp2[j] += dh3[i] * w[j];
    }
  }
  // Unpool + ReLU mask into conv2 activations.
  std::vector<double> da2(ws.a2.size(), 0.0);
  for (std::size_t i = 0; i < dp2.size(); ++i)
    if (ws.a2[ws.p2_idx[i]] > 0.0) da2[ws.p2_idx[i]] += dp2[i];
  // Backprop conv2 to kernels, biases, and its pool1 input.
  std::vector<double> dp1(ws.p1.size(), 0.0);
  for (int f = 0; f < kConv2Filters; ++f)
    for (int r = 0; r < lay.c2r; ++r)
      for (int c = 0; c < lay.c2c; ++c) {
        const double g =
            da2[(static_cast<std::size_t>(f) * lay.c2r + r) * lay.c2c + c];
        if (g == 0.0) continue;
        grad[lay.b2.offset + f] += g;
        for (int ch = 0; ch < kConv1Filters; ++ch) {
          const std::size_t koff =
              lay.k2.offset +
              (static_cast<std::size_t>(f) * kConv1Filters + ch) * kKernel * kKernel;
          const std::size_t base =
              (static_cast<std::size_t>(ch) * lay.p1r + r) * lay.p1c + c;
          for (int kr = 0; kr < kKernel; ++kr)
            for (int kc = 0; kc < kKernel; ++kc) {
              const std::size_t in_i = base + static_cast<std::size_t>(kr) * lay.p1c + kc;
              grad[koff + kr * kKernel + kc] += g * ws.p1[in_i];
              dp1[in_i] += g * th[koff + kr * kKernel + kc];
            }
        }
      }
  std::vector<double> da1(ws.a1.size(), 0.0);
  for (std::size_t i = 0; i < dp1.size(); ++i)
    if (ws.a1[ws.p1_idx[i]] > 0.0) da1[ws.p1_idx[i]] += dp1[i];
  for (int f = 0; f < kConv1Filters; ++f)
    for (int r = 0; r < lay.c1r; ++r)
      for (int c = 0; c < lay.c1c; ++c) {
        const double g =
            da1[(static_cast<std::size_t>(f) * lay.c1r + r) * lay.c1c + c];
        if (g == 0.0) continue;
        grad[lay.b1.offset + f] += g;
        for (int ch = 0; ch < 2; ++ch) {
          const std::size_t koff =
              lay.k1.offset + (static_cast<std::size_t>(f) * 2 + ch) * kKernel * kKernel;
          const std::size_t base =
              (static_cast<std::size_t>(ch) * lay.rows + r) * lay.cols + c;
          for (int kr = 0; kr < kKernel; ++kr)
            for (int kc = 0; kc < kKernel; ++kc) {
              grad[koff + kr * kKernel + kc] +=
                  g * x[base + static_cast<std::size_t>(kr) * lay.cols + kc];
            }
        }
      }
  return loss;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Shared forward interface.
// ---------------------------------------------------------------------------

inline ModelParams init_model(ModelSpec spec, int input_dim_or_rows, int cols,
                              std::uint64_t seed) {
  ModelParams mp;
  mp.spec = spec;
  mp.seed = seed;
  Rng rng(derive_seed(seed, "init"));
  if (spec == ModelSpec::M1) {
    mp.input_dim = input_dim_or_rows;
    detail::M1Layout lay(mp.input_dim);
    mp.theta.assign(lay.total, 0.0);
    // He-style fan-in scaling for the ReLU stacks.
    auto fill = [&](detail::Segment s, int fan_in) {
      const double scale = std::sqrt(2.0 / fan_in);
      for (std::size_t i = 0; i < s.size; ++i)
        mp.theta[s.offset + i] = scale * rng.gaussian();
    };
    fill(lay.w1, mp.input_dim);
    fill(lay.w2, detail::kM1Hidden1);
    fill(lay.w3, detail::kM1Hidden2);
    mp.descriptor = "dense:" + std::to_string(mp.input_dim) + "-64-32-3";
  } else {
    mp.rows = input_dim_or_rows;
    mp.cols = cols;
    detail::M2Layout lay(mp.rows, mp.cols);
    mp.input_dim = 2 * mp.rows * mp.cols;
    mp.theta.assign(lay.total, 0.0);
    auto fill = [&](detail::Segment s, int fan_in) {
      const double scale = std::sqrt(2.0 / fan_in);
      for (std::size_t i = 0; i < s.size; ++i)
        mp.theta[s.offset + i] = scale * rng.gaussian();
    };
    fill(lay.k1, 2 * detail::kKernel * detail::kKernel);
    fill(lay.k2, detail::kConv1Filters * detail::kKernel * detail::kKernel);
    fill(lay.w3, static_cast<int>(lay.flat));
    fill(lay.w4, detail::kM2Dense);
    mp.descriptor = "conv:2x" + std::to_string(mp.rows) + "x" +
                    std::to_string(mp.cols) + "-c8-p2-c16-p2-d64-d3";
  }
  return mp;
}

/// Class probabilities for one sample (x is the flattened feature input).
inline std::array<double, 3> predict_proba(const ModelParams& mp,
                                           const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != mp.input_dim)
    throw DataError("predict: feature length mismatch");
  if (mp.spec == ModelSpec::M1) {
    detail::M1Layout lay(mp.input_dim);
    detail::M1Workspace ws;
    detail::m1_forward(mp, lay, x, ws);
    return ws.probs;
  }
  detail::M2Layout lay(mp.rows, mp.cols);
  detail::M2Workspace ws;
  detail::m2_forward(mp, lay, x, ws);
  return ws.probs;
}

inline int predict(const ModelParams& mp, const std::vector<double>& x) {
  const auto p = predict_proba(mp, x);
  return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
}

/// Cross-entropy loss and accumulated gradient over a batch (mean-reduced).
inline double batch_loss_grad(const ModelParams& mp,
                              const std::vector<std::vector<double>>& xs,
                              const std::vector<int>& labels,
                              const std::vector<std::size_t>& batch,
                              std::vector<double>& grad) {
  grad.assign(mp.theta.size(), 0.0);
  double loss = 0.0;
  if (mp.spec == ModelSpec::M1) {
    detail::M1Layout lay(mp.input_dim);
    for (auto i : batch) loss += detail::m1_backward(mp, lay, xs[i], labels[i], grad);
  } else {
    detail::M2Layout lay(mp.rows, mp.cols);
    for (auto i : batch) loss += detail::m2_backward(mp, lay, xs[i], labels[i], grad);
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  for (auto& g : grad) g *= inv;
  return loss * inv;
}

inline double batch_loss(const ModelParams& mp,
                         const std::vector<std::vector<double>>& xs,
                         const std::vector<int>& labels,
                         const std::vector<std::size_t>& idx) {
  double loss = 0.0;
  for (auto i : idx) {
    const auto p = predict_proba(mp, xs[i]);
    loss += -std::log(std::max(p[labels[i]], 1e-300));
  }
  return loss / static_cast<double>(idx.size());
}

// ---------------------------------------------------------------------------
// Gradient check.
// ---------------------------------------------------------------------------

/// Max relative deviation between analytic and central-difference gradients.
/// For large models, `max_params` strides deterministically over theta.
inline double gradient_check(ModelParams mp,
                             const std::vector<std::vector<double>>& xs,
                             const std::vector<int>& labels, double epsilon,
                             std::size_t max_params = 4096) {
  std::vector<std::size_t> batch(xs.size());
  std::iota(batch.begin(), batch.end(), 0);
  std::vector<double> grad;
  batch_loss_grad(mp, xs, labels, batch, grad);
  double grad_linf = 0.0;
  for (auto g : grad) grad_linf = std::max(grad_linf, std::abs(g));
  const double denom_floor = std::max(1e-8, 1e-6 * grad_linf);
  const std::size_t n = mp.theta.size();
  const std::size_t stride = std::max<std::size_t>(1, n / std::min(n, max_params));
  double worst = 0.0;
  for (std::size_t i = 0; i < n; i += stride) {
    const double save = mp.theta[i];
    mp.theta[i] = save + epsilon;
    const double lp = batch_loss(mp, xs, labels, batch);
    mp.theta[i] = save - epsilon;
    const double lm = batch_loss(mp, xs, labels, batch);
    mp.theta[i] = save;
    const double fd = (lp - lm) / (2.0 * epsilon);
    const double dev = std::abs(fd - grad[i]) /
                       std::max(denom_floor, std::max(std::abs(fd), std::abs(grad[i])));
    worst = std::max(worst, dev);
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Training and evaluation.
// ---------------------------------------------------------------------------

struct EvalReport {
  std::array<std::array<int, 3>, 3> confusion{};  // [true][pred], kClassOrder
  double accuracy = 0.0;
  std::array<double, 3> precision{}, recall{};
  std::vector<double> train_loss, val_loss;  // per epoch
  int test_count = 0;
};

struct LabeledFeatures {
  std::vector<std::vector<double>> x;
  std::vector<int> y;  // class index in sensing::kClassOrder
};

struct SplitIndices {
  std::vector<std::size_t> train, val, test;
};

/// Stratified split preserving class proportions within one sample per class.
inline SplitIndices stratified_split(const std::vector<int>& labels,
                                     double train_frac, double val_frac,
                                     std::uint64_t seed) {
  if (train_frac <= 0.0 || val_frac < 0.0 || train_frac + val_frac >= 1.0)
    throw UsageError("split fractions must be positive and sum below 1");
  SplitIndices out;
  Rng rng(derive_seed(seed, "split"));
  for (int cls = 0; cls < 3; ++cls) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == cls) idx.push_back(i);
    for (std::size_t i = idx.size(); i > 1; --i)
      std::swap(idx[i - 1], idx[rng.uniform_int(i)]);
    const auto n = idx.size();
    const auto n_train = static_cast<std::size_t>(std::llround(train_frac * n));
    const auto n_val = static_cast<std::size_t>(std::llround(val_frac * n));
    if (n_train == 0 || n_val == 0 || n_train + n_val >= n)
      throw DataError("split: class " +
                      std::string(sensing::to_string(sensing::kClassOrder[cls])) +
                      " missing from a partition");
    out.train.insert(out.train.end(), idx.begin(), idx.begin() + n_train);
    out.val.insert(out.val.end(), idx.begin() + n_train,
                   idx.begin() + n_train + n_val);
    out.test.insert(out.test.end(), idx.begin() + n_train + n_val, idx.end());
  }
  return out;
}

inline EvalReport evaluate(const ModelParams& mp, const LabeledFeatures& data,
                           const std::vector<std::size_t>& idx) {
  if (idx.empty()) throw UsageError("evaluate: empty test set");
  EvalReport rep;
  rep.test_count = static_cast<int>(idx.size());
  for (auto i : idx) rep.confusion[data.y[i]][predict(mp, data.x[i])]++;
  int correct = 0;
  for (int c = 0; c < 3; ++c) correct += rep.confusion[c][c];
  rep.accuracy = static_cast<double>(correct) / rep.test_count;
  for (int c = 0; c < 3; ++c) {
    int col = 0, row = 0;
    for (int r = 0; r < 3; ++r) {
      col += rep.confusion[r][c];
      row += rep.confusion[c][r];
    }
    rep.precision[c] = col > 0 ? static_cast<double>(rep.confusion[c][c]) / col : 0.0;
    rep.recall[c] = row > 0 ? static_cast<double>(rep.confusion[c][c]) / row : 0.0;
  }
  return rep;
}

struct TrainOptions {
  int epochs = 200;
  int batch_size = 32;
  double learning_rate = 1e-3;
  double train_frac = 0.8;
  double val_frac = 0.1;
  std::uint64_t seed = 0;
  bool halve_lr_on_plateau = false;  // halve when validation loss stalls
};

struct Adam {
  double lr, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::vector<double> m, v;
  long t = 0;
  explicit Adam(std::size_t n, double lr_) : lr(lr_), m(n, 0.0), v(n, 0.0) {}
  void step(std::vector<double>& theta, const std::vector<double>& grad) {
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
      theta[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
    }
  }
};

struct TrainResult {
  ModelParams params;
  EvalReport report;
};

/// Mini-batch Adam training on pre-extracted features with a stratified
/// train/validation/test split; the report is computed on the test split.
inline TrainResult train_on_features(ModelSpec spec, const LabeledFeatures& data,
                                     const TrainOptions& opt, int rows = 0,
                                     int cols = 0) {
  if (data.x.size() != data.y.size() || data.x.empty())
    throw DataError("train: empty or inconsistent dataset");
  std::array<int, 3> counts{};
  for (auto y : data.y) counts.at(y)++;
  for (int c = 0; c < 3; ++c)
    if (counts[c] < 10)
      throw DataError("train: need >= 10 samples per class, class " +
                      std::string(sensing::to_string(sensing::kClassOrder[c])) +
                      " has " + std::to_string(counts[c]));
  const auto split = stratified_split(data.y, opt.train_frac, opt.val_frac, opt.seed);
  ModelParams mp = spec == ModelSpec::M1
                       ? init_model(spec, static_cast<int>(data.x[0].size()), 0,
                                    opt.seed)
                       : init_model(spec, rows, cols, opt.seed);
  Adam adam(mp.theta.size(), opt.learning_rate);
  Rng shuffle_rng(derive_seed(opt.seed, "shuffle"));
  EvalReport rep;
  std::vector<double> grad;
  std::vector<std::size_t> order = split.train;
  double best_val = 1e300;
  int stall = 0;
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.uniform_int(i)]);
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(opt.batch_size)) {
      const auto stop = std::min(order.size(),
                                 start + static_cast<std::size_t>(opt.batch_size));
      std::vector<std::size_t> batch(order.begin() + start, order.begin() + stop);
      batch_loss_grad(mp, data.x, data.y, batch, grad);
      adam.step(mp.theta, grad);
    }
    rep.train_loss.push_back(batch_loss(mp, data.x, data.y, split.train));
    rep.val_loss.push_back(batch_loss(mp, data.x, data.y, split.val));
    if (opt.halve_lr_on_plateau) {
      if (rep.val_loss.back() < best_val - 1e-6) {
        best_val = rep.val_loss.back();
        stall = 0;
      } else if (++stall >= 5) {
        adam.lr *= 0.5;
        stall = 0;
      }
    }
  }
  auto final_rep = evaluate(mp, data, split.test);
  final_rep.train_loss = rep.train_loss;
  final_rep.val_loss = rep.val_loss;
  return {std::move(mp), std::move(final_rep)};
}

// ---------------------------------------------------------------------------
// Feature extraction from dataset manifests.
// ---------------------------------------------------------------------------

inline constexpr double kDesignFrequency = 5.91e9;

/// Model #1 features for every augmented sample in the manifest. Only the
/// design-frequency row of each record is needed, so replicas are expanded
/// in place from the normalized base runs instead of materializing full
/// records (the noise stream is indexed by element position, making the
/// row-local expansion exact).
inline LabeledFeatures extract_features_m1(const io::DatasetManifest& m,
                                           double f_design = kDesignFrequency) {
  LabeledFeatures out;
  for (std::size_t ri = 0; ri < m.base_runs.size(); ++ri) {
    const auto& entry = m.base_runs[ri];
    const fs::path bin = m.root / entry.file;
    auto base = io::read_record(bin, io::read_json_file(fs::path(bin.string() + ".json")));
    sensing::normalize_record(base);
    // Locate the design-frequency row once per base run.
    const auto grid = channel::frequency_grid();
    int fi = 0;
    double bestd = std::abs(grid[0] - f_design);
    for (int i = 1; i < channel::kFreqPoints; ++i)
      if (std::abs(grid[i] - f_design) < bestd) {
        bestd = std::abs(grid[i] - f_design);
        fi = i;
      }
    const int per_frame = base.configs / sequencer::kDefaultFrames;
    for (int rep = 0; rep < m.replicas; ++rep) {
      const std::uint64_t rs =
          derive_seed(derive_seed(entry.seed, "augment"), static_cast<std::uint64_t>(rep));
      const double std_dev = m.std_set[splitmix64(rs) % m.std_set.size()];
      std::vector<double> v(sequencer::kDefaultFrames, 0.0);
      for (int k = 0; k < sequencer::kDefaultFrames; ++k) {
        double sum = 0.0;
        for (int c = 0; c < per_frame; ++c) {
          const std::size_t i =
              static_cast<std::size_t>(fi) * base.configs + k * per_frame + c;
          sum += base.s21[i].real() + std_dev * gaussian_at(rs, 2 * i);
        }
        v[k] = sum / per_frame;
      }
      out.x.push_back(std::move(v));
      out.y.push_back(sensing::class_index(entry.label));
    }
  }
  return out;
}

/// Model #2 features (two channels flattened magnitude-then-phase). Expensive;
/// intended for small sample subsets.
inline LabeledFeatures extract_features_m2(const io::DatasetManifest& m,
                                           int max_samples_per_run = -1) {
  LabeledFeatures out;
  for (std::size_t ri = 0; ri < m.base_runs.size(); ++ri) {
    const int reps = max_samples_per_run < 0
                         ? m.replicas
                         : std::min(m.replicas, max_samples_per_run);
    for (int rep = 0; rep < reps; ++rep) {
      const auto rec = io::materialize_sample(m, ri, rep);
      const auto img = features_m2(rec);
      std::vector<double> x;
      x.reserve(img.magnitude.size() + img.phase.size());
      x.insert(x.end(), img.magnitude.begin(), img.magnitude.end());
      x.insert(x.end(), img.phase.begin(), img.phase.end());
      out.x.push_back(std::move(x));
      out.y.push_back(sensing::class_index(m.base_runs[ri].label));
    }
  }
  return out;
}

/// Full train pipeline from a dataset manifest.
inline TrainResult train(ModelSpec spec, const io::DatasetManifest& m,
                         const TrainOptions& opt,
                         double f_design = kDesignFrequency) {
  if (spec == ModelSpec::M1)
    return train_on_features(spec, extract_features_m1(m, f_design), opt);
  const auto data = extract_features_m2(m);
  return train_on_features(spec, data, opt, sensing::kFreqPoints, sensing::kConfigs);
}

// ---------------------------------------------------------------------------
// Model serialization: versioned binary with an architecture descriptor
// followed by little-endian float64 weights.
// ---------------------------------------------------------------------------

inline void save_model(const fs::path& path, const ModelParams& mp) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  const std::string magic = "RSMODEL1";
  out.write(magic.data(), 8);
  const auto write_u32 = [&](std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), 4);
  };
  const auto write_u64 = [&](std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), 8);
  };
  write_u32(mp.spec == ModelSpec::M1 ? 1u : 2u);
  write_u32(static_cast<std::uint32_t>(mp.input_dim));
  write_u32(static_cast<std::uint32_t>(mp.rows));
  write_u32(static_cast<std::uint32_t>(mp.cols));
  write_u64(mp.seed);
  write_u32(static_cast<std::uint32_t>(mp.descriptor.size()));
  out.write(mp.descriptor.data(),
            static_cast<std::streamsize>(mp.descriptor.size()));
  write_u64(mp.theta.size());
  out.write(reinterpret_cast<const char*>(mp.theta.data()),
            static_cast<std::streamsize>(mp.theta.size() * sizeof(double)));
}

inline ModelParams load_model(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (std::string(magic, 8) != "RSMODEL1")
    throw DataError(path.string() + ": not a model file");
  const auto read_u32 = [&] {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
  };
  const auto read_u64 = [&] {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 8);
    return v;
  };
  ModelParams mp;
  mp.spec = read_u32() == 1u ? ModelSpec::M1 : ModelSpec::M2;
  mp.input_dim = static_cast<int>(read_u32());
  mp.rows = static_cast<int>(read_u32());
  mp.cols = static_cast<int>(read_u32());
  mp.seed = read_u64();
  std::string desc(read_u32(), '\0');
  in.read(desc.data(), static_cast<std::streamsize>(desc.size()));
  mp.descriptor = desc;
  mp.theta.resize(read_u64());
  in.read(reinterpret_cast<char*>(mp.theta.data()),
          static_cast<std::streamsize>(mp.theta.size() * sizeof(double)));
  if (!in) throw DataError(path.string() + ": truncated model file");
  return mp;
}

}  // namespace ris_sense::classifier
