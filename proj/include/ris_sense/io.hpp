#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "ris_sense/channel.hpp"
#include "ris_sense/common.hpp"
#include "ris_sense/sensing.hpp"
#include "ris_sense/sequencer.hpp"

namespace ris_sense::io {

using json = nlohmann::json;
namespace fs = std::filesystem;

inline json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw DataError("invalid JSON in " + path.string() + ": " + e.what());
  }
  return j;
}

inline void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

inline std::string file_checksum(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
    h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

// ---------------------------------------------------------------------------
// Configuration sequences.
// ---------------------------------------------------------------------------

inline json sequence_to_json(const sequencer::ConfigSequence& seq) {
  json frames = json::array();
  for (const auto& frame : seq.frames) {
    json f = json::array();
    for (const auto& cfg : frame) {
      json groups = json::array();
      for (auto b : cfg) groups.push_back(static_cast<int>(b));
      f.push_back(json{{"groups", groups}});
    }
    frames.push_back(f);
  }
  return json{{"provenance", seq.provenance},
              {"seed", seq.seed},
              {"delta", seq.delta},
              {"frames", frames}};
}

inline sequencer::ConfigSequence sequence_from_json(const json& j) {
  sequencer::ConfigSequence seq;
  try {
    seq.provenance = j.at("provenance").get<std::string>();
    seq.seed = j.at("seed").get<std::uint64_t>();
    seq.delta = j.at("delta").get<double>();
    for (const auto& frame : j.at("frames")) {
      std::vector<std::array<std::uint8_t, sequencer::kGroups>> f;
      for (const auto& cfg : frame) {
        const auto& groups = cfg.at("groups");
        if (groups.size() != sequencer::kGroups)
          throw DataError("sequence: expected 16 group bits");
        std::array<std::uint8_t, sequencer::kGroups> g{};
        for (std::size_t i = 0; i < g.size(); ++i) {
          const int v = groups[i].get<int>();
          if (v != 0 && v != 1) throw DataError("sequence: group bits must be 0/1");
          g[i] = static_cast<std::uint8_t>(v);
        }
        f.push_back(g);
      }
      seq.frames.push_back(std::move(f));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("sequence: malformed JSON: ") + e.what());
  }
  seq.validate();
  return seq;
}

// ---------------------------------------------------------------------------
// Scenes and link budgets.
// ---------------------------------------------------------------------------

inline json scene_to_json(const channel::SceneGrid& grid) {
  json cuboids = json::array();
  for (int m = 0; m < channel::kCuboids; ++m) {
    cuboids.push_back(
        {{"center_m", {grid.centers[m].x, grid.centers[m].y, grid.centers[m].z}},
         {"size_m", {grid.sizes[m].x, grid.sizes[m].y, grid.sizes[m].z}},
         {"eta_re", grid.eta[m].real()},
         {"eta_im", grid.eta[m].imag()}});
  }
  return json{{"cuboids", cuboids}};
}

inline channel::SceneGrid scene_from_json(const json& j) {
  channel::SceneGrid grid;
  try {
    const auto& cuboids = j.at("cuboids");
    if (cuboids.size() != channel::kCuboids)
      throw DataError("scene: expected exactly 32 cuboids");
    for (int m = 0; m < channel::kCuboids; ++m) {
      const auto& c = cuboids[m];
      grid.centers[m] = {c.at("center_m")[0], c.at("center_m")[1], c.at("center_m")[2]};
      grid.sizes[m] = {c.at("size_m")[0], c.at("size_m")[1], c.at("size_m")[2]};
      grid.eta[m] = {c.at("eta_re").get<double>(), c.at("eta_im").get<double>()};
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("scene: malformed JSON: ") + e.what());
  }
  return grid;
}

inline json link_budget_to_json(const channel::LinkBudget& lb) {
  json elements = json::array();
  for (const auto& e : lb.elements) elements.push_back({e.x, e.y, e.z});
  return json{{"pt", lb.pt},
              {"gt", lb.gt},
              {"gr", lb.gr},
              {"tx_m", {lb.tx.x, lb.tx.y, lb.tx.z}},
              {"rx_m", {lb.rx.x, lb.rx.y, lb.rx.z}},
              {"elements_m", elements}};
}

inline channel::LinkBudget link_budget_from_json(const json& j) {
  channel::LinkBudget lb;
  try {
    lb.pt = j.at("pt").get<double>();
    lb.gt = j.at("gt").get<double>();
    lb.gr = j.at("gr").get<double>();
    lb.tx = {j.at("tx_m")[0], j.at("tx_m")[1], j.at("tx_m")[2]};
    lb.rx = {j.at("rx_m")[0], j.at("rx_m")[1], j.at("rx_m")[2]};
    const auto& elements = j.at("elements_m");
    if (elements.size() != channel::kElements)
      throw DataError("link budget: expected 64 element positions");
    for (int n = 0; n < channel::kElements; ++n)
      lb.elements[n] = {elements[n][0], elements[n][1], elements[n][2]};
  } catch (const json::exception& e) {
    throw DataError(std::string("link budget: malformed JSON: ") + e.what());
  }
  lb.validate();
  return lb;
}

// ---------------------------------------------------------------------------
// Sample records: binary little-endian complex64 (float32 re/im pairs),
// frequency-major 201 x configs, with a JSON metadata sidecar.
// ---------------------------------------------------------------------------

inline void write_record_binary(const fs::path& path,
                                const sensing::SampleRecord& rec) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  std::vector<float> buf;
  buf.reserve(rec.s21.size() * 2);
  for (const auto& v : rec.s21) {
    buf.push_back(static_cast<float>(v.real()));
    buf.push_back(static_cast<float>(v.imag()));
  }
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(float)));
}

inline json record_sidecar(const sensing::SampleRecord& rec,
                           const std::string& bin_name,
                           const std::string& checksum) {
  return json{{"file", bin_name},
              {"label", sensing::to_string(rec.label)},
              {"provenance", rec.provenance},
              {"orientation_id", rec.orientation_id},
              {"run_id", rec.run_id},
              {"seed", rec.seed},
              {"rows", sensing::kFreqPoints},
              {"cols", rec.configs},
              {"dtype", "complex64-le"},
              {"checksum_fnv1a64", checksum}};
}

inline sensing::SampleRecord read_record(const fs::path& bin_path,
                                         const json& sidecar) {
  sensing::SampleRecord rec;
  try {
    const int rows = sidecar.at("rows").get<int>();
    const int cols = sidecar.at("cols").get<int>();
    if (rows != sensing::kFreqPoints)
      throw DataError(bin_path.string() + ": expected 201 frequency rows, got " +
                      std::to_string(rows));
    if (cols != sensing::kConfigs)
      throw DataError(bin_path.string() + ": expected 390 configuration columns, got " +
                      std::to_string(cols));
    rec.configs = cols;
    rec.label = sensing::gesture_from_string(sidecar.at("label").get<std::string>());
    rec.provenance = sidecar.at("provenance").get<std::string>();
    rec.orientation_id = sidecar.at("orientation_id").get<int>();
    rec.run_id = sidecar.at("run_id").get<int>();
    rec.seed = sidecar.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw DataError(bin_path.string() + ": malformed sidecar, first offending field: " +
                    e.what());
  }
  std::ifstream in(bin_path, std::ios::binary);
  if (!in) throw DataError("cannot open " + bin_path.string());
  const std::size_t count =
      static_cast<std::size_t>(sensing::kFreqPoints) * rec.configs;
  std::vector<float> buf(count * 2);
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(float)));
  if (static_cast<std::size_t>(in.gcount()) != buf.size() * sizeof(float))
    throw DataError(bin_path.string() + ": truncated record (expected " +
                    std::to_string(buf.size() * sizeof(float)) + " bytes)");
  rec.s21.resize(count);
  for (std::size_t i = 0; i < count; ++i)
    rec.s21[i] = cplx(buf[2 * i], buf[2 * i + 1]);
  return rec;
}

// ---------------------------------------------------------------------------
// Dataset manifests. A dataset directory holds manifest.json plus one binary
// file + sidecar per base run; augmented samples are (base run, replica
// index) pairs materialized deterministically from the recorded seeds.
// ---------------------------------------------------------------------------

inline constexpr const char* kDatasetSchema = "ris-sense-dataset-v1";

struct BaseRunEntry {
  std::string file;  // relative path of the .bin
  sensing::Gesture label = sensing::Gesture::Empty;
  int orientation_id = 0;
  int run_id = 0;
  std::uint64_t seed = 0;
  std::string checksum;
};

struct DatasetManifest {
  std::string provenance;
  std::uint64_t master_seed = 0;
  int replicas = 115;
  std::vector<double> std_set{sensing::kAugmentStdSet.begin(),
                              sensing::kAugmentStdSet.end()};
  std::string noise_note =
      "augmentation noise applied to unit-normalized real/imaginary channels";
  std::vector<BaseRunEntry> base_runs;
  fs::path root;  // directory the manifest was loaded from / written to
  std::vector<std::string> warnings;

  std::size_t sample_count() const {
    return base_runs.size() * static_cast<std::size_t>(replicas);
  }
  std::size_t samples_for(sensing::Gesture g) const {
    std::size_t n = 0;
    for (const auto& r : base_runs)
      if (r.label == g) n += replicas;
    return n;
  }
};

inline json manifest_to_json(const DatasetManifest& m) {
  json runs = json::array();
  for (const auto& r : m.base_runs)
    runs.push_back({{"file", r.file},
                    {"label", sensing::to_string(r.label)},
                    {"orientation_id", r.orientation_id},
                    {"run_id", r.run_id},
                    {"seed", r.seed},
                    {"checksum_fnv1a64", r.checksum}});
  json counts = json::object();
  for (auto g : {sensing::Gesture::OpenHand, sensing::Gesture::TwoFingers,
                 sensing::Gesture::ClosedHand})
    counts[sensing::to_string(g)] = m.samples_for(g);
  return json{{"schema", kDatasetSchema},
              {"provenance", m.provenance},
              {"master_seed", m.master_seed},
              {"augmentation",
               {{"replicas", m.replicas},
                {"std_set", m.std_set},
                {"note", m.noise_note}}},
              {"base_runs", runs},
              {"counts", counts},
              {"total_samples", m.sample_count()}};
}

inline DatasetManifest manifest_from_json(const json& j, const fs::path& root) {
  DatasetManifest m;
  m.root = root;
  try {
    if (j.at("schema").get<std::string>() != kDatasetSchema)
      throw DataError("dataset: unknown schema, first offending field: schema");
    m.provenance = j.at("provenance").get<std::string>();
    m.master_seed = j.at("master_seed").get<std::uint64_t>();
    m.replicas = j.at("augmentation").at("replicas").get<int>();
    m.std_set = j.at("augmentation").at("std_set").get<std::vector<double>>();
    for (const auto& r : j.at("base_runs")) {
      BaseRunEntry e;
      e.file = r.at("file").get<std::string>();
      e.label = sensing::gesture_from_string(r.at("label").get<std::string>());
      e.orientation_id = r.at("orientation_id").get<int>();
      e.run_id = r.at("run_id").get<int>();
      e.seed = r.at("seed").get<std::uint64_t>();
      e.checksum = r.at("checksum_fnv1a64").get<std::string>();
      m.base_runs.push_back(std::move(e));
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("dataset: unknown schema, first offending field: ") +
                    e.what());
  }
  return m;
}

struct BuildOptions {
  std::string provenance = "random";
  std::uint64_t master_seed = 42;
  int replicas = 115;
  double base_noise_std = 0.0;  // measurement noise on the synthetic base runs
  channel::Vec3 soi_center{0.0, 0.08, 0.25};
};

/// Synthesize the full dataset: 3 gestures x 9 orientations of base runs,
/// each expanded to `replicas` noise replicas in the manifest (1035 samples
/// per gesture, 3105 per provenance at the defaults).
inline DatasetManifest build_dataset(const fs::path& out_dir,
                                     const sequencer::ConfigSequence& seq,
                                     const sensing::FrequencySweepChannel& sweep,
                                     const BuildOptions& opt = {}) {
  fs::create_directories(out_dir / "runs");
  DatasetManifest m;
  m.provenance = opt.provenance;
  m.master_seed = opt.master_seed;
  m.replicas = opt.replicas;
  m.root = out_dir;
  int run_id = 0;
  for (auto label : sensing::kClassOrder) {
    for (int orientation = 0; orientation <= 8; ++orientation, ++run_id) {
      const auto scene = sensing::gesture_scene(label, orientation, opt.soi_center);
      const std::uint64_t run_seed =
          derive_seed(opt.master_seed, static_cast<std::uint64_t>(run_id));
      auto rec = sensing::synth_run(scene, seq, sweep, opt.base_noise_std, run_seed);
      rec.run_id = run_id;
      std::ostringstream name;
      name << opt.provenance << "_" << sensing::to_string(label) << "_o"
           << orientation << ".bin";
      const fs::path bin = out_dir / "runs" / name.str();
      write_record_binary(bin, rec);
      const std::string checksum = file_checksum(bin);
      write_json_file(bin.string() + ".json",
                      record_sidecar(rec, name.str(), checksum));
      m.base_runs.push_back({"runs/" + name.str(), label, orientation, rec.run_id,
                             run_seed, checksum});
    }
  }
  const std::size_t per_gesture =
      static_cast<std::size_t>(9) * static_cast<std::size_t>(m.replicas);
  for (auto g : sensing::kClassOrder)
    if (m.samples_for(g) != per_gesture)
      throw DataError("dataset build: per-gesture sample count mismatch");
  write_json_file(out_dir / "manifest.json", manifest_to_json(m));
  return m;
}

/// Load a dataset directory produced by build_dataset (or the documented
/// external layout, which is the same schema). Malformed runs are rejected
/// with per-file diagnostics; an empty directory yields an empty manifest
/// with a warning.
inline DatasetManifest load_external_dataset(const fs::path& dir) {
  DatasetManifest m;
  m.root = dir;
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) {
    m.warnings.push_back("no manifest.json under " + dir.string() +
                         "; returning empty manifest");
    return m;
  }
  m = manifest_from_json(read_json_file(manifest_path), dir);
  for (const auto& r : m.base_runs) {
    const fs::path bin = dir / r.file;
    if (!fs::exists(bin))
      throw DataError("dataset: missing run file " + bin.string());
    const fs::path sidecar = bin.string() + ".json";
    if (!fs::exists(sidecar))
      throw DataError("dataset: missing sidecar " + sidecar.string());
    const auto side = read_json_file(sidecar);
    // Validates dimensions and shape; throws a per-file diagnostic otherwise.
    (void)read_record(bin, side);
    if (file_checksum(bin) != r.checksum)
      throw DataError("dataset: checksum mismatch for " + bin.string());
  }
  return m;
}

/// Materialize augmented sample `replica` of base run `run_index`.
inline sensing::SampleRecord materialize_sample(const DatasetManifest& m,
                                                std::size_t run_index,
                                                int replica) {
  const auto& entry = m.base_runs.at(run_index);
  const fs::path bin = m.root / entry.file;
  const auto side = read_json_file(fs::path(bin.string() + ".json"));
  const auto base = read_record(bin, side);
  return sensing::augment_one(base, entry.seed, replica, m.std_set);
}

}  // namespace ris_sense::io
