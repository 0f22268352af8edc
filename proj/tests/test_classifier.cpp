#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <set>

#include <catch2/catch_amalgamated.hpp>

#include "ris_sense/classifier.hpp"

using namespace ris_sense;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

/// Three well-separated Gaussian blobs in feature space.
classifier::LabeledFeatures blob_fixture(int dim, int per_class,
                                         std::uint64_t seed, double spread = 0.1) {
  classifier::LabeledFeatures data;
  Rng rng(seed);
  for (int cls = 0; cls < 3; ++cls)
    for (int s = 0; s < per_class; ++s) {
      std::vector<double> x(dim, 0.0);
      for (int d = 0; d < dim; ++d)
        x[d] = (d % 3 == cls ? 1.0 : -0.5) + spread * rng.gaussian();
      data.x.push_back(std::move(x));
      data.y.push_back(cls);
    }
  return data;
}

sensing::SampleRecord full_record() {
  sensing::SampleRecord rec;
  rec.configs = sensing::kConfigs;
  rec.s21.assign(static_cast<std::size_t>(sensing::kFreqPoints) * rec.configs,
                 {0.0, 0.0});
  return rec;
}

}  // namespace

TEST_CASE("m1 features are per-frame means at the design row", "[classifier]") {
  auto rec = full_record();
  // Design frequency 5.91 GHz sits exactly on grid index round((5.91-5)/0.0075).
  const auto grid = channel::frequency_grid();
  int fi = 0;
  for (int i = 1; i < channel::kFreqPoints; ++i)
    if (std::abs(grid[i] - 5.91e9) < std::abs(grid[fi] - 5.91e9)) fi = i;
  const int per_frame = rec.configs / 10;
  for (int k = 0; k < 10; ++k)
    for (int c = 0; c < per_frame; ++c)
      rec.at(fi, k * per_frame + c) = cplx(k + 0.5 * c, 3.0);  // imag ignored

  const auto v = classifier::features_m1(rec, 5.91e9);
  REQUIRE(v.size() == 10);
  for (int k = 0; k < 10; ++k)
    CHECK(v[k] == Approx(k + 0.5 * (per_frame - 1) / 2.0).margin(1e-12));

  CHECK_THROWS_AS(classifier::features_m1(rec, 1.0e9), UsageError);
  rec.configs = 389;  // not divisible by 10
  rec.s21.resize(static_cast<std::size_t>(sensing::kFreqPoints) * 389);
  CHECK_THROWS_AS(classifier::features_m1(rec, 5.91e9), DataError);
}

TEST_CASE("m2 features normalize magnitude and wrap phase", "[classifier]") {
  sensing::SampleRecord rec;
  rec.configs = 4;
  rec.s21.assign(static_cast<std::size_t>(sensing::kFreqPoints) * 4, {0.5, 0.0});
  rec.s21[0] = cplx(1.0, 0.0);       // 0 dB after clip
  rec.s21[1] = cplx(0.0, 0.0);       // clipped to -80 dB
  rec.s21[2] = cplx(0.0, -0.25);     // phase -pi/2
  const auto img = classifier::features_m2(rec);
  CHECK(img.rows == sensing::kFreqPoints);
  CHECK(img.cols == 4);
  CHECK(img.magnitude[0] == Approx(1.0));
  CHECK(img.magnitude[1] == Approx(0.0));
  for (double m : img.magnitude) {
    CHECK(m >= 0.0);
    CHECK(m <= 1.0);
  }
  CHECK(img.phase[2] == Approx(-0.5).margin(1e-12));
  for (double p : img.phase) {
    CHECK(p >= -1.0);
    CHECK(p <= 1.0);
  }

  // Constant-magnitude record has zero span and maps to all ones.
  sensing::SampleRecord flat;
  flat.configs = 2;
  flat.s21.assign(static_cast<std::size_t>(sensing::kFreqPoints) * 2, {0.3, 0.4});
  const auto fimg = classifier::features_m2(flat);
  for (double m : fimg.magnitude) CHECK(m == Approx(1.0));
}

TEST_CASE("model init is seed deterministic", "[classifier]") {
  const auto a = classifier::init_model(classifier::ModelSpec::M1, 10, 0, 7);
  const auto b = classifier::init_model(classifier::ModelSpec::M1, 10, 0, 7);
  const auto c = classifier::init_model(classifier::ModelSpec::M1, 10, 0, 8);
  CHECK(a.theta == b.theta);
  CHECK(a.theta != c.theta);
  CHECK(a.descriptor == "dense:10-64-32-3");

  const auto m2 = classifier::init_model(classifier::ModelSpec::M2, 14, 14, 7);
  CHECK(m2.input_dim == 2 * 14 * 14);
  CHECK(m2.descriptor == "conv:2x14x14-c8-p2-c16-p2-d64-d3");

  const auto p = classifier::predict_proba(a, std::vector<double>(10, 0.3));
  CHECK(p[0] + p[1] + p[2] == Approx(1.0).margin(1e-12));
  CHECK_THROWS_AS(classifier::predict_proba(a, std::vector<double>(9, 0.0)),
                  DataError);
}

TEST_CASE("analytic gradients match finite differences (dense model)",
          "[classifier]") {
  const auto data = blob_fixture(10, 4, 11);
  auto mp = classifier::init_model(classifier::ModelSpec::M1, 10, 0, 3);
  const double worst =
      classifier::gradient_check(mp, data.x, data.y, 1e-5);
  CHECK(worst < 1e-4);
}

TEST_CASE("analytic gradients match finite differences (conv model)",
          "[classifier]") {
  const int rows = 14, cols = 14;
  classifier::LabeledFeatures data;
  Rng rng(5);
  for (int s = 0; s < 6; ++s) {
    std::vector<double> x(2 * rows * cols);
    for (auto& v : x) v = rng.uniform();
    data.x.push_back(std::move(x));
    data.y.push_back(s % 3);
  }
  auto mp = classifier::init_model(classifier::ModelSpec::M2, rows, cols, 3);
  const double worst =
      classifier::gradient_check(mp, data.x, data.y, 1e-5, 512);
  CHECK(worst < 1e-4);
}

TEST_CASE("stratified split preserves class balance and is disjoint",
          "[classifier]") {
  std::vector<int> labels;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 40; ++i) labels.push_back(c);
  const auto sp = classifier::stratified_split(labels, 0.8, 0.1, 9);
  CHECK(sp.train.size() == 96);
  CHECK(sp.val.size() == 12);
  CHECK(sp.test.size() == 12);
  std::set<std::size_t> all;
  std::array<int, 3> train_counts{};
  for (auto i : sp.train) {
    all.insert(i);
    train_counts[labels[i]]++;
  }
  for (auto i : sp.val) all.insert(i);
  for (auto i : sp.test) all.insert(i);
  CHECK(all.size() == labels.size());
  for (int c = 0; c < 3; ++c) CHECK(train_counts[c] == 32);

  const auto again = classifier::stratified_split(labels, 0.8, 0.1, 9);
  CHECK(again.train == sp.train);
  const auto other = classifier::stratified_split(labels, 0.8, 0.1, 10);
  CHECK(other.train != sp.train);

  CHECK_THROWS_AS(classifier::stratified_split(labels, 0.0, 0.1, 1), UsageError);
  CHECK_THROWS_AS(classifier::stratified_split(labels, 0.9, 0.2, 1), UsageError);
  std::vector<int> tiny{0, 1, 2};
  CHECK_THROWS_AS(classifier::stratified_split(tiny, 0.8, 0.1, 1), DataError);
}

TEST_CASE("training separates a linearly separable fixture", "[classifier]") {
  const auto data = blob_fixture(10, 30, 2);
  classifier::TrainOptions opt;
  opt.epochs = 40;
  opt.seed = 4;
  const auto res =
      classifier::train_on_features(classifier::ModelSpec::M1, data, opt);
  CHECK(res.report.accuracy == Approx(1.0));
  CHECK(res.report.test_count == 9);
  for (int c = 0; c < 3; ++c) {
    CHECK(res.report.precision[c] == Approx(1.0));
    CHECK(res.report.recall[c] == Approx(1.0));
  }
  REQUIRE(res.report.train_loss.size() == 40);
  CHECK(res.report.train_loss.back() < res.report.train_loss.front());
  CHECK(res.report.val_loss.back() < 0.1);
}

TEST_CASE("training on permuted labels stays near chance", "[classifier]") {
  auto data = blob_fixture(10, 30, 2);
  Rng rng(77);
  for (auto& y : data.y) y = static_cast<int>(rng.uniform_int(3));
  classifier::TrainOptions opt;
  opt.epochs = 30;
  opt.seed = 4;
  const auto res =
      classifier::train_on_features(classifier::ModelSpec::M1, data, opt);
  CHECK(res.report.accuracy < 0.75);
}

TEST_CASE("training validates its inputs", "[classifier]") {
  classifier::LabeledFeatures empty;
  classifier::TrainOptions opt;
  CHECK_THROWS_AS(
      classifier::train_on_features(classifier::ModelSpec::M1, empty, opt),
      DataError);
  const auto small = blob_fixture(10, 5, 1);  // 5 per class < 10
  CHECK_THROWS_AS(
      classifier::train_on_features(classifier::ModelSpec::M1, small, opt),
      DataError);

  const auto data = blob_fixture(10, 12, 1);
  auto mp = classifier::init_model(classifier::ModelSpec::M1, 10, 0, 1);
  CHECK_THROWS_AS(classifier::evaluate(mp, data, {}), UsageError);
}

TEST_CASE("model files round-trip exactly", "[classifier]") {
  const fs::path path = fs::temp_directory_path() /
                        ("ris_sense_model_" + std::to_string(::getpid()) + ".bin");
  const auto mp = classifier::init_model(classifier::ModelSpec::M1, 10, 0, 99);
  classifier::save_model(path, mp);
  const auto back = classifier::load_model(path);
  CHECK(back.spec == mp.spec);
  CHECK(back.input_dim == mp.input_dim);
  CHECK(back.seed == mp.seed);
  CHECK(back.descriptor == mp.descriptor);
  CHECK(back.theta == mp.theta);
  fs::remove(path);

  const fs::path junk = fs::temp_directory_path() /
                        ("ris_sense_junk_" + std::to_string(::getpid()) + ".bin");
  {
    std::ofstream out(junk, std::ios::binary);
    out << "not a model";
  }
  CHECK_THROWS_AS(classifier::load_model(junk), DataError);
  fs::remove(junk);
  CHECK_THROWS_AS(classifier::load_model(junk), DataError);  // missing file
}

TEST_CASE("manifest feature expansion matches materialized samples",
          "[classifier]") {
  const fs::path tmp = fs::temp_directory_path() /
                       ("ris_sense_cls_ds_" + std::to_string(::getpid()));
  fs::create_directories(tmp);
  const sensing::FrequencySweepChannel sweep(channel::default_link_budget(),
                                             channel::default_scene_grid(),
                                             channel::default_reflection_table());
  const auto seq =
      sequencer::realize_sequence(sequencer::random_time_matrix(10, 6), 6);
  io::BuildOptions opt;
  opt.master_seed = 6;
  opt.replicas = 2;
  const auto m = io::build_dataset(tmp, seq, sweep, opt);

  const auto feats = classifier::extract_features_m1(m);
  REQUIRE(feats.x.size() == m.sample_count());
  // Row-local expansion must agree with the fully materialized replica.
  for (std::size_t ri : {std::size_t{0}, std::size_t{13}}) {
    for (int rep = 0; rep < 2; ++rep) {
      const auto rec = io::materialize_sample(m, ri, rep);
      const auto direct =
          classifier::features_m1(rec, classifier::kDesignFrequency);
      const auto& expanded = feats.x[ri * 2 + rep];
      REQUIRE(direct.size() == expanded.size());
      for (std::size_t k = 0; k < direct.size(); ++k)
        CHECK(expanded[k] == Approx(direct[k]).margin(1e-12));
      CHECK(feats.y[ri * 2 + rep] ==
            sensing::class_index(m.base_runs[ri].label));
    }
  }

  // M2 extraction honors the per-run cap and produces full-size images.
  const auto f2 = classifier::extract_features_m2(m, 1);
  CHECK(f2.x.size() == m.base_runs.size());
  CHECK(f2.x[0].size() ==
        2u * static_cast<std::size_t>(sensing::kFreqPoints) * sensing::kConfigs);

  std::error_code ec;
  fs::remove_all(tmp, ec);
}
