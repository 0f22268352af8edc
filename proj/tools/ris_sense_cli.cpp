// ris-sense: command-line driver for the RIS sensing toolkit.
//
// Subcommands: geometry, codebook, pattern, sequence, coherence,
// dataset (build/import/export), train, evaluate, plot, recipe.
// Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ris_sense/channel.hpp"
#include "ris_sense/classifier.hpp"
#include "ris_sense/codebook.hpp"
#include "ris_sense/common.hpp"
#include "ris_sense/geometry.hpp"
#include "ris_sense/io.hpp"
#include "ris_sense/sensing.hpp"
#include "ris_sense/sequencer.hpp"
#include "ris_sense/svg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ris_sense;

namespace {

geometry::SweepRange parse_range(const std::string& s, const char* what) {
  geometry::SweepRange r;
  if (std::sscanf(s.c_str(), "%lf:%lf:%lf", &r.lo, &r.hi, &r.step) != 3)
    throw UsageError(std::string(what) + ": expected lo:hi:step, got " + s);
  if (r.step <= 0.0 || r.hi < r.lo)
    throw UsageError(std::string(what) + ": bad range " + s);
  return r;
}

std::vector<double> range_grid(const std::string& s, const char* what) {
  return parse_range(s, what).grid();
}

// ---------------------------------------------------------------------------
// Subcommand implementations.
// ---------------------------------------------------------------------------

void cmd_geometry_sweep(const std::string& theta0, const std::string& h,
                        const std::string& y0, double h_min,
                        const std::string& out) {
  geometry::SweepSpec spec;
  spec.theta0_deg = parse_range(theta0, "--theta0");
  spec.h_m = parse_range(h, "--h");
  spec.y0_m = parse_range(y0, "--y0");
  spec.h_min = h_min;
  const auto res = geometry::sweep_optimize(spec);
  json j{{"best",
          {{"h_m", res.best.h},
           {"theta0_deg", rad2deg(res.best.theta0)},
           {"fbp_y0_m", res.best.fbp_y}}},
         {"eta_s", res.report.eta_s},
         {"eta_i", res.report.eta_i},
         {"eta_a", res.report.eta_a},
         {"edge_taper_db", res.report.edge_taper_db},
         {"grid_size", res.grid_size}};
  io::write_json_file(out, j);
  std::cout << j.dump(2) << "\n";
}

void cmd_codebook(double steer_theta_deg, double steer_phi_deg, double freq_ghz,
                  double feed_d, double feed_angle_deg, const std::string& out) {
  auto spec = codebook::characterization_feed(feed_d, deg2rad(feed_angle_deg));
  spec.theta = deg2rad(steer_theta_deg);
  spec.phi = deg2rad(steer_phi_deg);
  spec.frequency = freq_ghz * 1e9;
  spec.validate();
  const auto profile = codebook::ideal_phase_profile(spec);
  const auto state = codebook::quantize_profile(profile);
  json bits = json::array();
  for (auto b : state.bits) bits.push_back(static_cast<int>(b));
  io::write_json_file(out, bits);
  std::cout << "wrote " << out << "\n";
}

codebook::RisState read_state_file(const std::string& path) {
  const auto j = io::read_json_file(path);
  const auto& arr = j.is_array() ? j : j.at("bits");
  if (!arr.is_array() || arr.size() != codebook::kN * codebook::kN)
    throw DataError(path + ": expected a row-major array of 64 bits");
  codebook::RisState st;
  for (std::size_t i = 0; i < st.bits.size(); ++i) {
    const int v = arr[i].get<int>();
    if (v != 0 && v != 1) throw DataError(path + ": state bits must be 0/1");
    st.bits[i] = static_cast<std::uint8_t>(v);
  }
  return st;
}

void cmd_pattern(const std::string& state_path, double freq_ghz,
                 const std::string& angles, double feed_d, double feed_angle_deg,
                 const std::string& svg_out, const std::string& csv_out) {
  const auto st = read_state_file(state_path);
  const auto feed = codebook::characterization_feed(feed_d, deg2rad(feed_angle_deg));
  const auto grid = range_grid(angles, "--angles");
  const auto pat = codebook::radiation_pattern(st, freq_ghz * 1e9, feed, grid);
  if (!csv_out.empty())
    svg::write_csv(csv_out, {"angle_deg", "gain_db"}, {pat.angles_deg, pat.gain_db});
  if (!svg_out.empty())
    svg::write_line_plot(svg_out, "radiation pattern", "rotor angle [deg]",
                         "gain [dB]", pat.angles_deg, pat.gain_db, -40.0, 0.0);
}

channel::LinkBudget load_link_budget(const std::string& path) {
  if (path.empty()) return channel::default_link_budget();
  return io::link_budget_from_json(io::read_json_file(path));
}

channel::SceneGrid load_scene(const std::string& path) {
  if (path.empty()) return channel::default_scene_grid();
  return io::scene_from_json(io::read_json_file(path));
}

void cmd_sequence(const std::string& mode, std::uint64_t seed, int frames,
                  int restarts, int iters, const std::string& channel_path,
                  const std::string& scene_path, const std::string& out) {
  sequencer::TimeMatrix tm;
  if (mode == "random") {
    tm = sequencer::random_time_matrix(frames, seed);
  } else if (mode == "fcao") {
    const auto lb = load_link_budget(channel_path);
    const auto scene = load_scene(scene_path);
    const auto a = channel::gain_matrix(lb, scene, channel::default_reflection_table(),
                                        5.91e9);
    sequencer::FcaoOptions opt;
    opt.frames = frames;
    opt.restarts = restarts;
    opt.max_iters = iters;
    opt.seed = seed;
    tm = sequencer::fcao_optimize(a, opt).t;
  } else {
    throw UsageError("--mode must be random or fcao");
  }
  const auto seq = sequencer::realize_sequence(tm, seed, mode);
  io::write_json_file(out, io::sequence_to_json(seq));
  std::cout << "wrote " << out << "\n";
}

void cmd_coherence(const std::string& seq_path, const std::string& channel_path,
                   const std::string& scene_path, double freq_ghz,
                   const std::string& out) {
  const auto seq = io::sequence_from_json(io::read_json_file(seq_path));
  const auto tm = sequencer::time_matrix_from_sequence(seq);
  const auto lb = load_link_budget(channel_path);
  const auto scene = load_scene(scene_path);
  const auto a = channel::gain_matrix(lb, scene, channel::default_reflection_table(),
                                      freq_ghz * 1e9);
  const auto gamma = sequencer::measurement_matrix(tm, a);
  const auto rep = sequencer::mutual_coherence(gamma, tm.frames, channel::kCuboids);
  json j{{"provenance", seq.provenance},
         {"frames", tm.frames},
         {"max_coherence", rep.max},
         {"avg_coherence", rep.avg}};
  if (!out.empty()) io::write_json_file(out, j);
  std::cout << j.dump(2) << "\n";
}

void cmd_dataset_build(const std::string& seq_path, const std::string& provenance,
                       const std::string& out, std::uint64_t seed, int replicas,
                       double noise_std) {
  const auto seq = io::sequence_from_json(io::read_json_file(seq_path));
  const sensing::FrequencySweepChannel sweep(channel::default_link_budget(),
                                             channel::default_scene_grid(),
                                             channel::default_reflection_table());
  io::BuildOptions opt;
  opt.provenance = provenance.empty() ? seq.provenance : provenance;
  opt.master_seed = seed;
  opt.replicas = replicas;
  opt.base_noise_std = noise_std;
  const auto m = io::build_dataset(out, seq, sweep, opt);
  std::cout << "dataset: " << m.base_runs.size() << " base runs, "
            << m.sample_count() << " samples (" << m.samples_for(m.base_runs[0].label)
            << " per gesture) under " << out << "\n";
}

void copy_dataset(const io::DatasetManifest& m, const fs::path& out) {
  fs::create_directories(out / "runs");
  for (const auto& r : m.base_runs) {
    fs::copy_file(m.root / r.file, out / r.file, fs::copy_options::overwrite_existing);
    fs::copy_file(m.root / (r.file + ".json"), out / (r.file + ".json"),
                  fs::copy_options::overwrite_existing);
  }
  io::write_json_file(out / "manifest.json", io::manifest_to_json(m));
}

void cmd_dataset_import(const std::string& path, const std::string& out) {
  const auto m = io::load_external_dataset(path);
  for (const auto& w : m.warnings) std::cerr << "warning: " << w << "\n";
  copy_dataset(m, out);
  std::cout << "imported " << m.base_runs.size() << " base runs ("
            << m.sample_count() << " samples) into " << out << "\n";
}

void cmd_dataset_export(const std::string& data, const std::string& out) {
  const auto m = io::load_external_dataset(data);
  if (m.base_runs.empty() && !m.warnings.empty())
    throw DataError("dataset export: no dataset found under " + data);
  copy_dataset(m, out);
  std::cout << "exported " << m.base_runs.size() << " base runs to " << out << "\n";
}

json report_to_json(const classifier::EvalReport& rep, const std::string& model,
                    std::uint64_t seed) {
  json confusion = json::array();
  for (const auto& row : rep.confusion) confusion.push_back(row);
  json order = json::array();
  for (auto g : sensing::kClassOrder) order.push_back(sensing::to_string(g));
  return json{{"model", model},
              {"seed", seed},
              {"class_order", order},
              {"accuracy", rep.accuracy},
              {"confusion", confusion},
              {"precision", rep.precision},
              {"recall", rep.recall},
              {"test_count", rep.test_count},
              {"train_loss", rep.train_loss},
              {"val_loss", rep.val_loss}};
}

io::DatasetManifest open_dataset(const std::string& data,
                                 const std::string& provenance) {
  fs::path dir = data;
  if (!provenance.empty() && !fs::exists(dir / "manifest.json") &&
      fs::exists(dir / provenance / "manifest.json"))
    dir /= provenance;
  auto m = io::load_external_dataset(dir);
  for (const auto& w : m.warnings) std::cerr << "warning: " << w << "\n";
  if (m.base_runs.empty()) throw DataError("no dataset under " + data);
  if (!provenance.empty() && m.provenance != provenance)
    throw DataError("dataset provenance is '" + m.provenance + "', requested '" +
                    provenance + "'");
  return m;
}

void cmd_train(const std::string& model, const std::string& data,
               const std::string& provenance, std::uint64_t seed, int epochs,
               int batch, double lr, int max_per_run, const std::string& out,
               const std::string& report_path) {
  const auto spec = classifier::model_from_string(model);
  const auto m = open_dataset(data, provenance);
  classifier::TrainOptions opt;
  opt.seed = seed;
  opt.epochs = epochs;
  opt.batch_size = batch;
  opt.learning_rate = lr;
  classifier::TrainResult res;
  if (spec == classifier::ModelSpec::M1) {
    res = classifier::train(spec, m, opt);
  } else {
    const auto feats = classifier::extract_features_m2(m, max_per_run);
    res = classifier::train_on_features(spec, feats, opt, sensing::kFreqPoints,
                                        sensing::kConfigs);
  }
  if (!out.empty()) classifier::save_model(out, res.params);
  const auto j = report_to_json(res.report, model, seed);
  if (!report_path.empty()) io::write_json_file(report_path, j);
  std::cout << "accuracy " << res.report.accuracy << " on " << res.report.test_count
            << " held-out samples\n";
}

void cmd_evaluate(const std::string& model_path, const std::string& data,
                  const std::string& provenance, std::optional<std::uint64_t> seed,
                  const std::string& report_path) {
  const auto mp = classifier::load_model(model_path);
  const auto m = open_dataset(data, provenance);
  const std::uint64_t split_seed = seed.value_or(mp.seed);
  classifier::LabeledFeatures feats;
  if (mp.spec == classifier::ModelSpec::M1)
    feats = classifier::extract_features_m1(m);
  else
    feats = classifier::extract_features_m2(m);
  const auto split = classifier::stratified_split(feats.y, 0.8, 0.1, split_seed);
  const auto rep = classifier::evaluate(mp, feats, split.test);
  const auto j = report_to_json(
      rep, mp.spec == classifier::ModelSpec::M1 ? "m1" : "m2", split_seed);
  if (!report_path.empty()) io::write_json_file(report_path, j);
  std::cout << j.dump(2) << "\n";
}

void cmd_plot(const std::string& kind, const std::string& input,
              const std::string& svg_out, std::string csv_out) {
  if (csv_out.empty())
    csv_out = fs::path(svg_out).replace_extension(".csv").string();
  if (kind == "pattern") {
    std::ifstream in(input);
    if (!in) throw DataError("cannot open " + input);
    std::string line;
    std::vector<double> angles, gains;
    bool first = true;
    while (std::getline(in, line)) {
      if (first) {  // header
        first = false;
        if (line.find("angle") == std::string::npos)
          throw DataError(input + ": not a pattern CSV (missing angle header)");
        continue;
      }
      double a, g;
      if (std::sscanf(line.c_str(), "%lf,%lf", &a, &g) != 2)
        throw DataError(input + ": malformed pattern CSV row: " + line);
      angles.push_back(a);
      gains.push_back(g);
    }
    if (angles.empty()) throw DataError(input + ": empty pattern CSV");
    svg::write_line_plot(svg_out, "radiation pattern", "rotor angle [deg]",
                         "gain [dB]", angles, gains, -40.0, 0.0);
    svg::write_csv(csv_out, {"angle_deg", "gain_db"}, {angles, gains});
  } else if (kind == "s21-heatmap") {
    const fs::path bin = input;
    const auto rec =
        io::read_record(bin, io::read_json_file(fs::path(bin.string() + ".json")));
    const auto img = classifier::features_m2(rec);
    svg::write_heatmap_pair(svg_out, "S21 magnitude / phase", img.rows, img.cols,
                            img.magnitude, img.phase);
    std::vector<double> rows, cols;
    rows.reserve(img.magnitude.size());
    cols.reserve(img.magnitude.size());
    for (int r = 0; r < img.rows; ++r)
      for (int c = 0; c < img.cols; ++c) {
        rows.push_back(r);
        cols.push_back(c);
      }
    svg::write_csv(csv_out, {"row", "col", "magnitude", "phase"},
                   {rows, cols, img.magnitude, img.phase});
  } else if (kind == "loss-curves") {
    const auto j = io::read_json_file(input);
    if (!j.contains("train_loss") || j.at("train_loss").empty())
      throw DataError(input + ": not a training report (no loss curves)");
    const auto train = j.at("train_loss").get<std::vector<double>>();
    const auto val = j.at("val_loss").get<std::vector<double>>();
    svg::write_curves(svg_out, "loss curves", "epoch", "cross-entropy",
                      {train, val}, {"train", "validation"});
    svg::write_csv(csv_out, {"train_loss", "val_loss"}, {train, val});
  } else if (kind == "confusion") {
    const auto j = io::read_json_file(input);
    if (!j.contains("confusion"))
      throw DataError(input + ": not an evaluation report (no confusion matrix)");
    std::array<std::array<int, 3>, 3> confusion{};
    std::vector<double> flat;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) {
        confusion[r][c] = j.at("confusion")[r][c].get<int>();
        flat.push_back(confusion[r][c]);
      }
    std::array<std::string, 3> labels;
    for (int c = 0; c < 3; ++c)
      labels[c] = j.at("class_order")[c].get<std::string>();
    svg::write_confusion(svg_out, "confusion matrix", confusion, labels);
    svg::write_csv(csv_out, {"count"}, {flat});
  } else {
    throw UsageError("unknown plot kind: " + kind);
  }
}

// ---------------------------------------------------------------------------
// Recipes.
// ---------------------------------------------------------------------------

int run_cli(const std::vector<std::string>& args);

json builtin_paper_repro(std::uint64_t seed) {
  const auto s = std::to_string(seed);
  json steps = json::array();
  auto step = [&](std::vector<std::string> cmd, std::vector<std::string> outputs) {
    steps.push_back({{"command", cmd}, {"outputs", outputs}});
  };
  step({"geometry", "sweep", "--theta0", "0:50:5", "--h", "0.20:1.80:0.05",
        "--y0", "-0.15:0.15:0.05", "--h-min", "0.33", "--out", "geometry.json"},
       {"geometry.json"});
  step({"codebook", "--steer-theta", "20", "--freq-ghz", "5.91", "--feed-d",
        "0.40", "--feed-angle", "0", "--out", "state.json"},
       {"state.json"});
  step({"pattern", "--state", "state.json", "--freq-ghz", "5.91", "--angles",
        "-60:60:2", "--svg", "pattern.svg", "--csv", "pattern.csv"},
       {"pattern.svg", "pattern.csv"});
  step({"sequence", "--mode", "random", "--seed", s, "--out", "seq_random.json"},
       {"seq_random.json"});
  step({"sequence", "--mode", "fcao", "--seed", s, "--out", "seq_fcao.json"},
       {"seq_fcao.json"});
  step({"dataset", "build", "--seq", "seq_random.json", "--provenance", "random",
        "--out", "data_random", "--seed", s},
       {"data_random/manifest.json"});
  step({"dataset", "build", "--seq", "seq_fcao.json", "--provenance", "fcao",
        "--out", "data_fcao", "--seed", s},
       {"data_fcao/manifest.json"});
  step({"train", "--model", "m1", "--data", "data_random", "--provenance",
        "random", "--seed", s, "--epochs", "60", "--out", "m1_random.bin",
        "--report", "report_random.json"},
       {"m1_random.bin", "report_random.json"});
  step({"train", "--model", "m1", "--data", "data_fcao", "--provenance", "fcao",
        "--seed", s, "--epochs", "60", "--out", "m1_fcao.bin", "--report",
        "report_fcao.json"},
       {"m1_fcao.bin", "report_fcao.json"});
  step({"compare", "report_random.json", "report_fcao.json", "comparison.txt"},
       {"comparison.txt"});
  return json{{"master_seed", seed}, {"steps", steps}};
}

void run_compare(const std::vector<std::string>& args) {
  if (args.size() != 3)
    throw UsageError("compare: expected <report_a> <report_b> <out_table>");
  const auto a = io::read_json_file(args[0]);
  const auto b = io::read_json_file(args[1]);
  std::ostringstream table;
  table << "arm        accuracy   test_count\n";
  for (const auto* j : {&a, &b}) {
    std::string name = j->contains("model") ? j->at("model").get<std::string>() : "?";
    table << name << "-" << (j == &a ? "random" : "fcao") << "  "
          << j->at("accuracy").get<double>() << "  "
          << j->at("test_count").get<int>() << "\n";
  }
  std::ofstream out(args[2]);
  if (!out) throw DataError("cannot write " + args[2]);
  out << table.str();
  std::cout << table.str();
}

void cmd_recipe(const std::string& file, const std::string& out_dir,
                std::uint64_t seed) {
  json recipe;
  if (file == "paper-repro") {
    recipe = builtin_paper_repro(seed);
  } else {
    recipe = io::read_json_file(file);
  }
  if (!recipe.contains("steps") || !recipe.at("steps").is_array())
    throw DataError("recipe: schema violation (missing steps array)");
  fs::create_directories(out_dir);
  const fs::path out_abs = fs::absolute(out_dir);
  const fs::path prev = fs::current_path();
  fs::current_path(out_abs);
  json manifest{{"steps", json::array()}};
  const auto flush = [&] {
    io::write_json_file(out_abs / "recipe-manifest.json", manifest);
  };
  int index = 0;
  try {
    for (const auto& step : recipe.at("steps")) {
      const auto cmd = step.at("command").get<std::vector<std::string>>();
      if (cmd.empty()) throw DataError("recipe: empty command in step");
      if (cmd[0] == "compare") {
        run_compare({cmd.begin() + 1, cmd.end()});
      } else {
        const int rc = run_cli(cmd);
        if (rc != 0)
          throw DataError("recipe: step " + std::to_string(index) +
                          " failed with exit code " + std::to_string(rc));
      }
      json outputs = json::array();
      if (step.contains("outputs"))
        for (const auto& o : step.at("outputs")) {
          const std::string path = o.get<std::string>();
          if (!fs::exists(path))
            throw DataError("recipe: step " + std::to_string(index) +
                            " did not produce " + path);
          outputs.push_back({{"file", path}, {"checksum_fnv1a64", io::file_checksum(path)}});
        }
      manifest["steps"].push_back(
          {{"index", index}, {"command", cmd}, {"status", "ok"}, {"outputs", outputs}});
      flush();
      ++index;
    }
  } catch (...) {
    manifest["steps"].push_back({{"index", index}, {"status", "failed"}});
    flush();
    fs::current_path(prev);
    throw;
  }
  flush();
  fs::current_path(prev);
  std::cout << "recipe complete: " << index << " steps, manifest at "
            << (out_abs / "recipe-manifest.json").string() << "\n";
}

// ---------------------------------------------------------------------------
// Argument wiring.
// ---------------------------------------------------------------------------

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"RIS hand-gesture sensing toolkit"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;

  // geometry
  auto* geo = app.add_subcommand("geometry", "feed/aperture efficiency tools");
  geo->require_subcommand(1);
  auto* sweep = geo->add_subcommand("sweep", "grid-search the feed placement");
  // `--h` is a real option here, so this subcommand keeps only the long help flag.
  sweep->set_help_flag("--help", "print this help message and exit");
  std::string theta0 = "0:50:1", h = "0.20:1.80:0.01", y0 = "-0.15:0.15:0.01";
  double h_min = 0.0;
  std::string geo_out = "geometry.json";
  sweep->add_option("--theta0", theta0, "offset angle grid, deg lo:hi:step");
  sweep->add_option("--h", h, "feed height grid, m lo:hi:step");
  sweep->add_option("--y0", y0, "beam point y grid, m lo:hi:step");
  sweep->add_option("--h-min", h_min, "feasibility constraint H >= h_min [m]");
  sweep->add_option("--out", geo_out, "output report JSON");
  sweep->add_option("--seed", seed, "unused; accepted for uniformity");
  sweep->callback([&] { cmd_geometry_sweep(theta0, h, y0, h_min, geo_out); });

  // codebook
  auto* cb = app.add_subcommand("codebook", "1-bit steering state synthesis");
  double steer_theta = 0.0, steer_phi = 0.0, freq_ghz = 5.91, feed_d = 0.40,
         feed_angle = 0.0;
  std::string cb_out = "state.json";
  cb->add_option("--steer-theta", steer_theta, "steering elevation [deg]");
  cb->add_option("--steer-phi", steer_phi, "steering azimuth [deg]");
  cb->add_option("--freq-ghz", freq_ghz, "design frequency [GHz]");
  cb->add_option("--feed-d", feed_d, "feed distance [m]");
  cb->add_option("--feed-angle", feed_angle, "feed offset angle [deg]");
  cb->add_option("--out", cb_out, "output state JSON (64 row-major bits)");
  cb->add_option("--seed", seed, "unused; accepted for uniformity");
  cb->callback([&] {
    cmd_codebook(steer_theta, steer_phi, freq_ghz, feed_d, feed_angle, cb_out);
  });

  // pattern
  auto* pat = app.add_subcommand("pattern", "far-field pattern of a state");
  std::string pat_state, pat_angles = "-60:60:2", pat_svg, pat_csv;
  double pat_freq = 5.91, pat_feed_d = 0.40, pat_feed_angle = 0.0;
  pat->add_option("--state", pat_state, "state JSON from `codebook`")->required();
  pat->add_option("--freq-ghz", pat_freq, "evaluation frequency [GHz]");
  pat->add_option("--angles", pat_angles, "rotor angle grid, deg lo:hi:step");
  pat->add_option("--feed-d", pat_feed_d, "feed distance [m]");
  pat->add_option("--feed-angle", pat_feed_angle, "feed offset angle [deg]");
  pat->add_option("--svg", pat_svg, "output SVG plot");
  pat->add_option("--csv", pat_csv, "output CSV (angle_deg, gain_db)");
  pat->add_option("--seed", seed, "unused; accepted for uniformity");
  pat->callback([&] {
    cmd_pattern(pat_state, pat_freq, pat_angles, pat_feed_d, pat_feed_angle,
                pat_svg, pat_csv);
  });

  // sequence
  auto* sq = app.add_subcommand("sequence", "generate a configuration sequence");
  std::string sq_mode = "random", sq_channel, sq_scene, sq_out = "seq.json";
  int sq_frames = sequencer::kDefaultFrames, sq_restarts = 4, sq_iters = 25;
  sq->add_option("--mode", sq_mode, "random or fcao");
  sq->add_option("--seed", seed, "master seed");
  sq->add_option("--frames", sq_frames, "frames K");
  sq->add_option("--restarts", sq_restarts, "fcao restarts");
  sq->add_option("--iters", sq_iters, "fcao coordinate sweeps per restart");
  sq->add_option("--channel", sq_channel, "link-budget JSON (default built-in)");
  sq->add_option("--scene", sq_scene, "scene JSON (default built-in)");
  sq->add_option("--out", sq_out, "output sequence JSON");
  sq->callback([&] {
    cmd_sequence(sq_mode, seed, sq_frames, sq_restarts, sq_iters, sq_channel,
                 sq_scene, sq_out);
  });

  // coherence
  auto* coh = app.add_subcommand("coherence", "mutual coherence of T*A");
  std::string coh_seq, coh_channel, coh_scene, coh_out;
  double coh_freq = 5.91;
  coh->add_option("--seq", coh_seq, "sequence JSON")->required();
  coh->add_option("--channel", coh_channel, "link-budget JSON (default built-in)");
  coh->add_option("--scene", coh_scene, "scene JSON (default built-in)");
  coh->add_option("--freq-ghz", coh_freq, "evaluation frequency [GHz]");
  coh->add_option("--out", coh_out, "optional output JSON");
  coh->add_option("--seed", seed, "unused; accepted for uniformity");
  coh->callback(
      [&] { cmd_coherence(coh_seq, coh_channel, coh_scene, coh_freq, coh_out); });

  // dataset
  auto* ds = app.add_subcommand("dataset", "synthetic dataset tools");
  ds->require_subcommand(1);
  auto* dsb = ds->add_subcommand("build", "synthesize a dataset");
  std::string dsb_seq, dsb_prov, dsb_out = "data";
  int dsb_replicas = 115;
  double dsb_noise = 0.0;
  dsb->add_option("--seq", dsb_seq, "sequence JSON")->required();
  dsb->add_option("--provenance", dsb_prov, "label (default: the sequence's)");
  dsb->add_option("--out", dsb_out, "output directory");
  dsb->add_option("--seed", seed, "master seed");
  dsb->add_option("--replicas", dsb_replicas, "noise replicas per base run");
  dsb->add_option("--noise", dsb_noise, "base-run measurement noise std");
  dsb->callback([&] {
    cmd_dataset_build(dsb_seq, dsb_prov, dsb_out, seed, dsb_replicas, dsb_noise);
  });
  auto* dsi = ds->add_subcommand("import", "validate and import a dataset");
  std::string dsi_path, dsi_out = "data";
  dsi->add_option("--path", dsi_path, "source directory")->required();
  dsi->add_option("--out", dsi_out, "destination directory");
  dsi->add_option("--seed", seed, "unused; accepted for uniformity");
  dsi->callback([&] { cmd_dataset_import(dsi_path, dsi_out); });
  auto* dse = ds->add_subcommand("export", "re-emit a dataset directory");
  std::string dse_data = "data", dse_out;
  dse->add_option("--data", dse_data, "source dataset directory");
  dse->add_option("--out", dse_out, "destination directory")->required();
  dse->add_option("--seed", seed, "unused; accepted for uniformity");
  dse->callback([&] { cmd_dataset_export(dse_data, dse_out); });

  // train
  auto* tr = app.add_subcommand("train", "train a classifier");
  std::string tr_model = "m1", tr_data = "data", tr_prov, tr_out, tr_report;
  int tr_epochs = 200, tr_batch = 32, tr_max_per_run = -1;
  double tr_lr = 1e-3;
  tr->add_option("--model", tr_model, "m1 or m2");
  tr->add_option("--data", tr_data, "dataset directory");
  tr->add_option("--provenance", tr_prov, "expected dataset provenance");
  tr->add_option("--seed", seed, "training seed");
  tr->add_option("--epochs", tr_epochs, "training epochs");
  tr->add_option("--batch", tr_batch, "mini-batch size");
  tr->add_option("--lr", tr_lr, "Adam learning rate");
  tr->add_option("--max-per-run", tr_max_per_run,
                 "cap replicas per base run (m2 only; -1 = all)");
  tr->add_option("--out", tr_out, "output model file");
  tr->add_option("--report", tr_report, "output report JSON");
  tr->callback([&] {
    cmd_train(tr_model, tr_data, tr_prov, seed, tr_epochs, tr_batch, tr_lr,
              tr_max_per_run, tr_out, tr_report);
  });

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "evaluate a saved model");
  std::string ev_model, ev_data = "data", ev_prov, ev_report;
  bool ev_seed_set = false;
  ev->add_option("--model", ev_model, "model file from `train`")->required();
  ev->add_option("--data", ev_data, "dataset directory");
  ev->add_option("--provenance", ev_prov, "expected dataset provenance");
  ev->add_option("--seed", seed, "split seed (default: the model's)")
      ->each([&](const std::string&) { ev_seed_set = true; });
  ev->add_option("--report", ev_report, "output report JSON");
  ev->callback([&] {
    cmd_evaluate(ev_model, ev_data, ev_prov,
                 ev_seed_set ? std::optional<std::uint64_t>(seed) : std::nullopt,
                 ev_report);
  });

  // plot
  auto* pl = app.add_subcommand("plot", "render SVG figures with CSV twins");
  std::string pl_kind, pl_input, pl_svg, pl_csv;
  pl->add_option("--kind", pl_kind,
                 "pattern | s21-heatmap | loss-curves | confusion")
      ->required();
  pl->add_option("--input", pl_input, "input file for the chosen kind")->required();
  pl->add_option("--svg", pl_svg, "output SVG")->required();
  pl->add_option("--csv", pl_csv, "output CSV twin (default: alongside SVG)");
  pl->add_option("--seed", seed, "unused; accepted for uniformity");
  pl->callback([&] { cmd_plot(pl_kind, pl_input, pl_svg, pl_csv); });

  // recipe
  auto* rc = app.add_subcommand("recipe", "run an experiment recipe");
  std::string rc_file = "paper-repro", rc_out = "recipe-out";
  rc->add_option("--file", rc_file, "recipe JSON, or 'paper-repro'");
  rc->add_option("--out", rc_out, "output directory");
  rc->add_option("--seed", seed, "master seed for built-in recipes");
  rc->callback([&] { cmd_recipe(rc_file, rc_out, seed == 0 ? 42 : seed); });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    return run_cli(args);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
