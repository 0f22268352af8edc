// Acceptance harness: one pass/fail line per criterion.
//
// Usage: acceptance [N]   (N in 1..7; no argument runs all)
// Exit: 0 when every executed criterion passes (skips do not fail),
//       1 on any failure, 77 when a single requested criterion is skipped.

#include <unistd.h>

#include <array>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "ris_sense/channel.hpp"
#include "ris_sense/classifier.hpp"
#include "ris_sense/codebook.hpp"
#include "ris_sense/geometry.hpp"
#include "ris_sense/io.hpp"
#include "ris_sense/sensing.hpp"
#include "ris_sense/sequencer.hpp"

using namespace ris_sense;
namespace fs = std::filesystem;

namespace {

enum class Outcome { Pass, Fail, Skip };

struct CriterionResult {
  Outcome outcome = Outcome::Fail;
  std::string details;
};

struct Check {
  bool ok;
  std::string text;
};

CriterionResult summarize(const std::vector<Check>& checks) {
  CriterionResult res;
  res.outcome = Outcome::Pass;
  std::ostringstream out;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    if (!checks[i].ok) res.outcome = Outcome::Fail;
    out << (i ? "; " : "") << (checks[i].ok ? "" : "FAILED: ") << checks[i].text;
  }
  res.details = out.str();
  return res;
}

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(4);
  s << v;
  return s.str();
}

const sensing::FrequencySweepChannel& shared_sweep() {
  static sensing::FrequencySweepChannel sweep(channel::default_link_budget(),
                                              channel::default_scene_grid(),
                                              channel::default_reflection_table());
  return sweep;
}

// --- Criterion 1: feed-placement optimizer -------------------------------

CriterionResult criterion_1() {
  geometry::SweepSpec constrained;
  constrained.h_min = 0.33;
  const auto res = geometry::sweep_optimize(constrained);
  const double theta0_deg = rad2deg(res.best.theta0);

  geometry::SweepSpec unconstrained;
  unconstrained.h_min = 0.0;
  const auto free_res = geometry::sweep_optimize(unconstrained);

  std::vector<Check> checks;
  checks.push_back({std::abs(theta0_deg - 35.0) <= 2.0,
                    "constrained offset angle " + fmt(theta0_deg) +
                        " deg within 35 +/- 2 (known gap: the scalar-feed "
                        "efficiency model is maximized at 0 deg)"});
  checks.push_back({std::abs(res.report.eta_a - 0.35) <= 0.05,
                    "aperture efficiency " + fmt(res.report.eta_a) +
                        " within 0.35 +/- 0.05"});
  checks.push_back({std::abs(free_res.best.h - 0.16) <= 0.04 + 1e-12,
                    "unconstrained height " + fmt(free_res.best.h) +
                        " m within 0.16 +/- 0.04 (grid floor 0.20 m)"});
  return summarize(checks);
}

// --- Criterion 2: characterization edge taper -----------------------------

CriterionResult criterion_2() {
  geometry::GeometryConfig g;
  g.h = 0.20 * std::cos(deg2rad(35.0));
  g.theta0 = deg2rad(35.0);
  g.fbp_y = 0.0;
  const double taper = geometry::edge_taper_db(g);
  std::vector<Check> checks;
  checks.push_back({std::abs(taper - (-9.0)) <= 1.5,
                    "edge taper " + fmt(taper) + " dB within -9 +/- 1.5"});
  return summarize(checks);
}

// --- Criterion 3: steering property suite ----------------------------------

CriterionResult criterion_3() {
  const auto feed = codebook::characterization_feed(0.40, 0.0);
  std::vector<double> angles;
  for (double a = -60.0; a <= 60.001; a += 2.0) angles.push_back(a);

  std::vector<Check> checks;
  for (double cmd : {0.0, 20.0, -20.0, 40.0, -40.0}) {
    auto spec = feed;
    spec.theta = deg2rad(cmd);
    spec.frequency = 5.91e9;
    const auto st = codebook::quantize_profile(codebook::ideal_phase_profile(spec));
    const auto pat = codebook::radiation_pattern(st, 5.91e9, feed, angles);
    int best = 0;
    for (std::size_t i = 1; i < pat.gain_db.size(); ++i)
      if (pat.gain_db[i] > pat.gain_db[best]) best = static_cast<int>(i);
    const double peak = pat.angles_deg[best];
    checks.push_back({std::abs(peak - cmd) <= 2.0 + 1e-9,
                      "argmax " + fmt(peak) + " deg for commanded " + fmt(cmd)});
  }

  // +/-20 degree mirror symmetry within 1 dB point-wise.
  auto sp = feed, sm = feed;
  sp.theta = deg2rad(20.0);
  sm.theta = deg2rad(-20.0);
  const auto pp = codebook::radiation_pattern(
      codebook::quantize_profile(codebook::ideal_phase_profile(sp)), 5.91e9, feed,
      angles);
  const auto pm = codebook::radiation_pattern(
      codebook::quantize_profile(codebook::ideal_phase_profile(sm)), 5.91e9, feed,
      angles);
  double worst = 0.0;
  for (std::size_t i = 0; i < angles.size(); ++i)
    worst = std::max(worst,
                     std::abs(pp.gain_db[i] - pm.gain_db[angles.size() - 1 - i]));
  checks.push_back(
      {worst <= 1.0, "mirror deviation " + fmt(worst) + " dB <= 1 dB"});
  return summarize(checks);
}

// --- Criterion 4: sequencer suite ------------------------------------------

CriterionResult criterion_4() {
  const auto a = channel::gain_matrix(channel::default_link_budget(),
                                      channel::default_scene_grid(),
                                      channel::default_reflection_table(), 5.91e9);
  int wins = 0;
  const int trials = 100;
  bool delta_ok = true, roundtrip_ok = true;
  for (int t = 0; t < trials; ++t) {
    const std::uint64_t seed = 1000 + t;
    const auto rand_tm = sequencer::random_time_matrix(10, seed);
    const auto rand_mu = sequencer::mutual_coherence(
        sequencer::measurement_matrix(rand_tm, a), 10, channel::kCuboids);

    sequencer::FcaoOptions opt;
    opt.frames = 10;
    opt.restarts = 1;
    opt.max_iters = 6;
    opt.seed = seed;
    const auto fcao = sequencer::fcao_optimize(a, opt);
    const auto fcao_mu = sequencer::mutual_coherence(
        sequencer::measurement_matrix(fcao.t, a), 10, channel::kCuboids);
    if (fcao_mu.avg < rand_mu.avg) ++wins;

    for (const auto* tm : {&rand_tm, &fcao.t})
      for (int k = 0; k < tm->frames; ++k)
        for (int l = 0; l < sequencer::kGroups; ++l)
          if (tm->on(k, l) + tm->off(k, l) != tm->delta) delta_ok = false;

    if (t < 10) {
      const auto seq = sequencer::realize_sequence(fcao.t, seed, "fcao");
      const auto back = sequencer::time_matrix_from_sequence(seq);
      for (std::size_t i = 0; i < back.t.size(); ++i)
        if (std::abs(back.t[i] - fcao.t.t[i]) > 1e-12) roundtrip_ok = false;
    }
  }
  std::vector<Check> checks;
  checks.push_back({wins >= 95, "optimized schedule beats random in " +
                                    std::to_string(wins) + "/100 paired trials"});
  checks.push_back({delta_ok, "per-group durations sum exactly to delta"});
  checks.push_back({roundtrip_ok, "realize/recover round-trip exact"});
  return summarize(checks);
}

// --- Criterion 5: sensing oracle suite --------------------------------------

CriterionResult criterion_5() {
  const auto& sweep = shared_sweep();
  const auto seq =
      sequencer::realize_sequence(sequencer::random_time_matrix(10, 31), 31);

  // Full-rank 390-row Gamma: rows cycle through the frequency grid so the 32
  // scene unknowns are observable.
  sensing::CMatrix gamma(sensing::kConfigs, channel::kCuboids);
  {
    int r = 0;
    for (const auto& frame : seq.frames)
      for (const auto& cfg : frame) {
        const auto& a = sweep.at_freq((r * 7) % channel::kFreqPoints);
        for (int m = 0; m < channel::kCuboids; ++m) {
          cplx v{0.0, 0.0};
          for (int l = 0; l < channel::kGroups; ++l)
            v += a.at(channel::ChannelGainMatrix::row_index(
                          l, cfg[l] ? channel::CellState::On
                                    : channel::CellState::Off),
                      m);
          gamma(r, m) = v;
        }
        ++r;
      }
  }
  const auto scene = sensing::gesture_scene(sensing::Gesture::OpenHand, 0);
  sensing::CVector eta(channel::kCuboids);
  for (int m = 0; m < channel::kCuboids; ++m) eta(m) = scene.grid.eta[m];
  const sensing::CVector y = gamma * eta;
  const auto rec = sensing::reconstruct_ridge(gamma, y, 0.0);
  const double rel = (rec.eta - eta).norm() / eta.norm();

  // Superposition linearity of the forward model.
  sensing::CVector e1 = sensing::CVector::Zero(channel::kCuboids);
  sensing::CVector e2 = sensing::CVector::Zero(channel::kCuboids);
  e1(3) = cplx(0.7, -0.2);
  e1(21) = cplx(-0.1, 0.4);
  e2(3) = cplx(-0.3, 0.9);
  e2(14) = cplx(0.5, 0.5);
  const double lin =
      (gamma * (e1 + e2) - (gamma * e1 + gamma * e2)).norm() /
      std::max(1e-300, (gamma * (e1 + e2)).norm());

  // Dataset counts at the published replica factor.
  const fs::path tmp = fs::temp_directory_path() /
                       ("ris_sense_accept5_" + std::to_string(::getpid()));
  io::BuildOptions opt;
  opt.replicas = 115;
  opt.master_seed = 31;
  const auto m = io::build_dataset(tmp, seq, sweep, opt);
  const bool counts_ok = m.sample_count() == 3105 &&
                         m.samples_for(sensing::Gesture::OpenHand) == 1035 &&
                         m.samples_for(sensing::Gesture::TwoFingers) == 1035 &&
                         m.samples_for(sensing::Gesture::ClosedHand) == 1035;
  std::error_code ec;
  fs::remove_all(tmp, ec);

  std::vector<Check> checks;
  checks.push_back({rel <= 1e-8, "noiseless inverse relative error " + fmt(rel) +
                                     " <= 1e-8 on the 390-row system"});
  checks.push_back(
      {lin <= 1e-10, "superposition deviation " + fmt(lin) + " <= 1e-10"});
  checks.push_back({counts_ok, "dataset counts 1035/gesture, 3105/provenance"});
  return summarize(checks);
}

// --- Criterion 6: classifier suite ------------------------------------------

classifier::LabeledFeatures blob_fixture(int per_class, std::uint64_t seed) {
  classifier::LabeledFeatures data;
  Rng rng(seed);
  for (int cls = 0; cls < 3; ++cls)
    for (int s = 0; s < per_class; ++s) {
      std::vector<double> x(10, 0.0);
      for (int d = 0; d < 10; ++d)
        x[d] = (d % 3 == cls ? 1.0 : -0.5) + 0.1 * rng.gaussian();
      data.x.push_back(std::move(x));
      data.y.push_back(cls);
    }
  return data;
}

double arm_accuracy(const sequencer::TimeMatrix& tm, const std::string& provenance,
                    std::uint64_t seed, const fs::path& dir) {
  const auto seq = sequencer::realize_sequence(tm, seed, provenance);
  io::BuildOptions opt;
  opt.provenance = provenance;
  opt.master_seed = seed;
  const auto m = io::build_dataset(dir, seq, shared_sweep(), opt);
  classifier::TrainOptions topt;
  topt.epochs = 60;
  topt.seed = seed;
  const auto res = classifier::train(classifier::ModelSpec::M1, m, topt);
  return res.report.accuracy;
}

CriterionResult criterion_6() {
  std::vector<Check> checks;

  // Gradient check on both architectures.
  {
    const auto data = blob_fixture(4, 11);
    auto mp = classifier::init_model(classifier::ModelSpec::M1, 10, 0, 3);
    const double worst = classifier::gradient_check(mp, data.x, data.y, 1e-5);
    checks.push_back({worst < 1e-4, "dense gradient deviation " + fmt(worst)});

    classifier::LabeledFeatures img;
    Rng rng(5);
    for (int s = 0; s < 6; ++s) {
      std::vector<double> x(2 * 14 * 14);
      for (auto& v : x) v = rng.uniform();
      img.x.push_back(std::move(x));
      img.y.push_back(s % 3);
    }
    auto mp2 = classifier::init_model(classifier::ModelSpec::M2, 14, 14, 3);
    const double worst2 =
        classifier::gradient_check(mp2, img.x, img.y, 1e-5, 512);
    checks.push_back({worst2 < 1e-4, "conv gradient deviation " + fmt(worst2)});
  }

  // Separable fixture reaches perfect held-out accuracy.
  {
    classifier::TrainOptions opt;
    opt.epochs = 40;
    opt.seed = 4;
    const auto res = classifier::train_on_features(classifier::ModelSpec::M1,
                                                   blob_fixture(30, 2), opt);
    checks.push_back({res.report.accuracy == 1.0,
                      "separable fixture accuracy " + fmt(res.report.accuracy)});
  }

  // Label-permutation control stays near chance (averaged over 3 seeds).
  {
    double acc_sum = 0.0;
    for (std::uint64_t s : {1u, 2u, 3u}) {
      auto data = blob_fixture(100, 2);
      Rng rng(700 + s);
      for (auto& y : data.y) y = static_cast<int>(rng.uniform_int(3));
      classifier::TrainOptions opt;
      opt.epochs = 30;
      opt.seed = s;
      acc_sum += classifier::train_on_features(classifier::ModelSpec::M1, data, opt)
                     .report.accuracy;
    }
    const double acc = acc_sum / 3.0;
    checks.push_back({std::abs(acc - 1.0 / 3.0) <= 0.10,
                      "label-permutation accuracy " + fmt(acc) +
                          " within 0.333 +/- 0.10"});
  }

  // Model #1: optimized-schedule arm at least matches the random arm, averaged
  // over 5 seeds of the full synthetic pipeline.
  {
    const auto a = channel::gain_matrix(channel::default_link_budget(),
                                        channel::default_scene_grid(),
                                        channel::default_reflection_table(),
                                        5.91e9);
    const fs::path tmp = fs::temp_directory_path() /
                         ("ris_sense_accept6_" + std::to_string(::getpid()));
    double rand_sum = 0.0, fcao_sum = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto rand_tm = sequencer::random_time_matrix(10, seed);
      sequencer::FcaoOptions fopt;
      fopt.frames = 10;
      fopt.restarts = 1;
      fopt.max_iters = 6;
      fopt.seed = seed;
      const auto fcao_tm = sequencer::fcao_optimize(a, fopt).t;
      rand_sum += arm_accuracy(rand_tm, "random", seed,
                               tmp / ("rand_" + std::to_string(seed)));
      fcao_sum += arm_accuracy(fcao_tm, "fcao", seed,
                               tmp / ("fcao_" + std::to_string(seed)));
    }
    std::error_code ec;
    fs::remove_all(tmp, ec);
    const double rand_avg = rand_sum / 5.0, fcao_avg = fcao_sum / 5.0;
    checks.push_back({fcao_avg >= rand_avg,
                      "optimized-arm accuracy " + fmt(fcao_avg) +
                          " >= random-arm " + fmt(rand_avg) + " over 5 seeds"});
  }
  return summarize(checks);
}

// --- Criterion 7: published-dataset reproduction (conditional) --------------

CriterionResult criterion_7() {
  const char* env = std::getenv("RIS_SENSE_EXTERNAL_DATA");
  fs::path dir = env ? fs::path(env) : fs::path("external-data");
  if (!fs::exists(dir / "manifest.json")) {
    CriterionResult res;
    res.outcome = Outcome::Skip;
    res.details =
        "published measurement archive not available (no manifest.json under " +
        dir.string() + "; set RIS_SENSE_EXTERNAL_DATA to run)";
    return res;
  }
  const auto m = io::load_external_dataset(dir);
  classifier::TrainOptions opt;
  opt.epochs = 200;
  opt.seed = 42;
  const auto res1 = classifier::train(classifier::ModelSpec::M1, m, opt);
  std::vector<Check> checks;
  const double target = m.provenance == "fcao" ? 0.9967 : 0.9614;
  checks.push_back({std::abs(res1.report.accuracy - target) <= 0.02,
                    "model #1 accuracy " + fmt(res1.report.accuracy) +
                        " within " + fmt(target) + " +/- 0.02"});
  return summarize(checks);
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> which;
  if (argc > 1) {
    const int n = std::atoi(argv[1]);
    if (n < 1 || n > 7) {
      std::cerr << "usage: acceptance [1..7]\n";
      return 2;
    }
    which.push_back(n);
  } else {
    for (int n = 1; n <= 7; ++n) which.push_back(n);
  }

  bool any_fail = false;
  bool single_skip = false;
  for (int n : which) {
    CriterionResult res;
    switch (n) {
      case 1: res = criterion_1(); break;
      case 2: res = criterion_2(); break;
      case 3: res = criterion_3(); break;
      case 4: res = criterion_4(); break;
      case 5: res = criterion_5(); break;
      case 6: res = criterion_6(); break;
      case 7: res = criterion_7(); break;
    }
    const char* tag = res.outcome == Outcome::Pass   ? "PASS"
                      : res.outcome == Outcome::Fail ? "FAIL"
                                                     : "SKIP";
    std::cout << "criterion " << n << ": " << tag << " — " << res.details << "\n";
    if (res.outcome == Outcome::Fail) any_fail = true;
    if (res.outcome == Outcome::Skip && which.size() == 1) single_skip = true;
  }
  if (any_fail) return 1;
  if (single_skip) return 77;
  return 0;
}
