#include "wi2vi/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "wi2vi/errors.hpp"
#include "wi2vi/json_fields.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace wi2vi {
namespace {

std::string mode_name(DatasetMode m) { return m == DatasetMode::full_scene ? "full_scene" : "dynamics"; }

json rect_json(const MaskRect& r) { return {{"x", r.x}, {"y", r.y}, {"w", r.w}, {"h", r.h}, {"weight", r.weight}}; }

MaskRect rect_from_json(const json& j, const std::string& path) {
  MaskRect r;
  JsonFields f(j, path);
  f.required("x", r.x);
  f.required("y", r.y);
  f.required("w", r.w);
  f.required("h", r.h);
  f.required("weight", r.weight);
  f.finish();
  return r;
}

std::string frame_name(std::int64_t ts) { return "frames/frame_" + std::to_string(ts) + ".pgm"; }

struct FrameEntry {
  fs::path file;
  std::int64_t ts = 0;
  json extra;
};

std::vector<FrameEntry> read_index(const fs::path& dir) {
  const auto path = dir / "frames.jsonl";
  std::ifstream is(path);
  if (!is) throw DataError("missing frame index " + path.string());
  std::vector<FrameEntry> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = json::parse(line);
      FrameEntry e{dir / j.at("path").get<std::string>(), j.at("timestamp_us").get<std::int64_t>(), j};
      out.push_back(std::move(e));
    } catch (const json::exception& e) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  std::sort(out.begin(), out.end(), [](const FrameEntry& a, const FrameEntry& b) { return a.ts < b.ts; });
  return out;
}

void write_index_line(std::ofstream& os, const json& j) { os << j.dump() << '\n'; }

GrayFrame read_any(const fs::path& p, std::int64_t ts) {
  if (!fs::exists(p)) throw DataError("missing frame file " + p.string());
  GrayFrame g = p.extension() == ".ppm" ? to_gray(read_ppm(p)) : read_pgm(p);
  g.timestamp_us = ts;
  return g;
}

void write_frames(const fs::path& dir, const std::vector<GrayFrame>& frames) {
  fs::create_directories(dir / "frames");
  std::ofstream idx(dir / "frames.jsonl");
  for (const auto& f : frames) {
    const auto name = frame_name(f.timestamp_us);
    write_pgm(dir / name, f);
    write_index_line(idx, {{"path", name}, {"timestamp_us", f.timestamp_us}});
  }
  if (!idx) throw DataError("cannot write " + (dir / "frames.jsonl").string());
}

void write_json_file(const fs::path& p, const json& j) {
  std::ofstream os(p);
  os << j.dump(2) << '\n';
  if (!os) throw DataError("cannot write " + p.string());
}

// Fills a derived field, or checks an explicit one against the derived value.
template <class V>
void derive(json& obj, const char* key, V value, const std::string& path) {
  if (!obj.contains(key)) {
    obj[key] = value;
    return;
  }
  V given{};
  try {
    given = obj.at(key).get<V>();
  } catch (const json::exception& e) {
    throw ConfigError(path + "." + key + ": " + e.what());
  }
  if (given != value) {
    throw ConfigError(path + "." + key + ": " + std::to_string(given) + " disagrees with the implied value " +
                      std::to_string(value));
  }
}

}  // namespace

void RunConfig::validate() const {
  scene.validate();
  sim.validate();
  model.validate();
  train.validate();
  if (!(duration_s > 0.0) || !std::isfinite(duration_s)) throw ConfigError("duration_s must be positive");
  if (!(camera.fps > 0.0)) throw ConfigError("camera.fps must be positive");
  if (camera.width == 0 || camera.height == 0) throw ConfigError("camera size must be positive");
  if (preprocess.downsample == 0) throw ConfigError("preprocess.downsample must be positive");
  if (preprocess.width == 0 || preprocess.height == 0) throw ConfigError("preprocess size must be positive");
  if (!(preprocess.threshold >= 0.0 && preprocess.threshold < 1.0)) {
    throw ConfigError("preprocess.threshold must lie in [0, 1)");
  }
  for (const auto& r : preprocess.mask_rects) {
    if (r.x + r.w > preprocess.width || r.y + r.h > preprocess.height) {
      throw ConfigError("preprocess.mask_rects: rectangle outside the frame");
    }
    if (!(r.weight >= 0.0 && r.weight <= 1.0)) throw ConfigError("preprocess.mask_rects: weight outside [0, 1]");
  }
  if (sync.k == 0 || sync.k > sync.n) throw ConfigError("sync: need 0 < k <= n");
  if (!(sync.train_fraction > 0.0 && sync.train_fraction < 1.0)) {
    throw ConfigError("sync.train_fraction must lie in (0, 1)");
  }
  const CsiShape shape{sim.F, sim.T, sim.R};
  if (model.in_channels != shape.channels() || model.subcarriers != sim.F || model.k != sync.k ||
      train.k != sync.k || model.out_h != preprocess.height || model.out_w != preprocess.width) {
    throw ConfigError("model, train, sim, sync and preprocess settings disagree");
  }
}

void to_json(json& j, const RunConfig& c) {
  json rects = json::array();
  for (const auto& r : c.preprocess.mask_rects) rects.push_back(rect_json(r));
  j = json{{"mode", mode_name(c.mode)},
           {"duration_s", c.duration_s},
           {"scene", c.scene},
           {"sim", c.sim},
           {"camera",
            {{"fps", c.camera.fps},
             {"width", c.camera.width},
             {"height", c.camera.height},
             {"background_frames", c.camera.background_frames}}},
           {"preprocess",
            {{"downsample", c.preprocess.downsample},
             {"width", c.preprocess.width},
             {"height", c.preprocess.height},
             {"threshold", c.preprocess.threshold},
             {"mask_rects", rects},
             {"background_clip", c.preprocess.background_clip}}},
           {"sync", {{"n", c.sync.n}, {"k", c.sync.k}, {"train_fraction", c.sync.train_fraction}}},
           {"model", c.model},
           {"train", c.train}};
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  JsonFields f(j, "");
  std::string mode = "dynamics";
  f.optional("mode", mode);
  if (mode == "dynamics" || mode == "background_removed") {
    c.mode = DatasetMode::background_removed;
  } else if (mode == "full_scene") {
    c.mode = DatasetMode::full_scene;
  } else {
    f.fail("mode", "expected dynamics or full_scene");
  }
  f.optional("duration_s", c.duration_s);
  if (const auto* s = f.child("scene")) c.scene = scene_from_json(*s, "scene");
  if (const auto* s = f.child("sim")) c.sim = sim_config_from_json(*s, "sim");
  if (const auto* s = f.child("camera")) {
    JsonFields cf(*s, "camera");
    cf.optional("fps", c.camera.fps);
    cf.optional("width", c.camera.width);
    cf.optional("height", c.camera.height);
    cf.optional("background_frames", c.camera.background_frames);
    cf.finish();
  }
  if (const auto* s = f.child("preprocess")) {
    JsonFields pf(*s, "preprocess");
    pf.optional("downsample", c.preprocess.downsample);
    pf.optional("width", c.preprocess.width);
    pf.optional("height", c.preprocess.height);
    pf.optional("threshold", c.preprocess.threshold);
    pf.optional("background_clip", c.preprocess.background_clip);
    if (const auto* rects = pf.child("mask_rects")) {
      if (!rects->is_array()) pf.fail("mask_rects", "expected an array");
      for (std::size_t i = 0; i < rects->size(); ++i) {
        c.preprocess.mask_rects.push_back(rect_from_json((*rects)[i], "preprocess.mask_rects[" + std::to_string(i) + "]"));
      }
    }
    pf.finish();
  }
  if (const auto* s = f.child("sync")) {
    JsonFields sf(*s, "sync");
    sf.optional("n", c.sync.n);
    sf.optional("k", c.sync.k);
    sf.optional("train_fraction", c.sync.train_fraction);
    sf.finish();
  }
  json model = json::object();
  if (const auto* s = f.child("model")) model = *s;
  if (!model.is_object()) throw ConfigError("model: expected an object");
  const CsiShape shape{c.sim.F, c.sim.T, c.sim.R};
  derive<std::size_t>(model, "in_channels", shape.channels(), "model");
  derive<std::size_t>(model, "subcarriers", c.sim.F, "model");
  derive<std::size_t>(model, "k", c.sync.k, "model");
  derive<std::size_t>(model, "out_h", c.preprocess.height, "model");
  derive<std::size_t>(model, "out_w", c.preprocess.width, "model");
  c.model = model_config_from_json(model);
  json train = json::object();
  if (const auto* s = f.child("train")) train = *s;
  if (!train.is_object()) throw ConfigError("train: expected an object");
  derive<std::size_t>(train, "k", c.sync.k, "train");
  c.train = train_config_from_json(train, "train");
  f.finish();
  c.validate();
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

void override_seed(RunConfig& cfg, std::uint64_t seed) {
  cfg.sim.rng_seed = seed;
  cfg.train.seed = seed;
}

SimulateReport cmd_simulate(const RunConfig& cfg, const fs::path& out_dir) {
  cfg.validate();
  const auto duration_us = static_cast<std::int64_t>(std::llround(cfg.duration_s * 1e6));
  const auto trace = simulate_csi(cfg.scene, cfg.sim, duration_us);
  const auto frames = render_frames(cfg.scene, cfg.camera.fps, cfg.camera.width, cfg.camera.height, duration_us);

  fs::create_directories(out_dir);
  write_csit(out_dir / "trace.csit", trace);
  write_frames(out_dir, frames);
  if (cfg.camera.background_frames > 0) {
    const auto bg = render_background(cfg.scene, cfg.camera.width, cfg.camera.height);
    std::vector<GrayFrame> clip;
    for (std::size_t i = 0; i < cfg.camera.background_frames; ++i) {
      auto f = bg;
      f.timestamp_us = std::llround(static_cast<double>(i) * 1e6 / cfg.camera.fps);
      clip.push_back(std::move(f));
    }
    write_frames(out_dir / cfg.preprocess.background_clip, clip);
  }
  json meta = cfg;
  write_json_file(out_dir / "config.json", meta);
  return {trace.samples.size(), frames.size()};
}

PreprocessReport cmd_preprocess(const RunConfig& cfg, const fs::path& in_dir, const fs::path& out_dir) {
  cfg.validate();
  const auto& pp = cfg.preprocess;
  const auto index = read_index(in_dir);
  if (index.empty()) throw DataError("no frames listed in " + (in_dir / "frames.jsonl").string());
  if (!fs::exists(in_dir / "trace.csit")) throw DataError("missing " + (in_dir / "trace.csit").string());

  std::vector<GrayFrame> frames;
  for (std::size_t i = 0; i < index.size(); i += pp.downsample) {
    frames.push_back(resize(read_any(index[i].file, index[i].ts), pp.width, pp.height));
  }

  PreprocessReport report;
  GrayFrame bg;
  const auto clip_dir = in_dir / pp.background_clip;
  if (!pp.background_clip.empty() && fs::exists(clip_dir / "frames.jsonl")) {
    std::vector<GrayFrame> clip;
    for (const auto& e : read_index(clip_dir)) clip.push_back(resize(read_any(e.file, e.ts), pp.width, pp.height));
    if (clip.empty()) throw DataError("background clip " + clip_dir.string() + " is empty");
    bg = background_estimate(clip);
    report.background_from_clip = true;
  } else {
    bg = background_estimate(frames);
  }

  fs::create_directories(out_dir / "frames");
  std::ofstream idx(out_dir / "frames.jsonl");
  json rects = json::array();
  for (const auto& r : pp.mask_rects) rects.push_back(rect_json(r));
  for (const auto& f : frames) {
    GrayFrame out = f;
    double weight = 1.0;
    const bool removed = cfg.mode == DatasetMode::background_removed;
    if (removed) {
      out = background_subtract(f, bg, pp.threshold);
      weight = frame_weight(out);
    }
    const auto name = frame_name(out.timestamp_us);
    write_pgm(out_dir / name, out);
    write_index_line(idx, {{"path", name},
                           {"timestamp_us", out.timestamp_us},
                           {"weight", weight},
                           {"background_removed", removed},
                           {"mask_rects", rects}});
  }
  if (!idx) throw DataError("cannot write " + (out_dir / "frames.jsonl").string());
  write_pgm(out_dir / "background.pgm", bg);
  fs::copy_file(in_dir / "trace.csit", out_dir / "trace.csit", fs::copy_options::overwrite_existing);
  report.frames = frames.size();
  return report;
}

SyncReport cmd_sync(const RunConfig& cfg, const fs::path& in_dir, const fs::path& out_dir) {
  cfg.validate();
  auto trace = std::make_shared<const CsiTrace>(read_csit(in_dir / "trace.csit"));
  std::vector<WeightedFrame> frames;
  for (const auto& e : read_index(in_dir)) {
    WeightedFrame wf;
    wf.frame = read_any(e.file, e.ts);
    try {
      wf.weight = e.extra.value("weight", 1.0);
      wf.background_removed = e.extra.value("background_removed", false);
      if (e.extra.contains("mask_rects")) {
        for (const auto& r : e.extra.at("mask_rects")) wf.mask_rects.push_back(rect_from_json(r, "mask_rects"));
      }
    } catch (const json::exception& ex) {
      throw DataError("frame index entry for " + e.file.string() + ": " + ex.what());
    } catch (const ConfigError& ex) {
      throw DataError(std::string("frame index: ") + ex.what());
    }
    frames.push_back(std::move(wf));
  }
  BuildReport br;
  auto ds = build_dataset(frames, trace, cfg.sync.n, cfg.mode, &br);
  ds.k_default = cfg.sync.k;
  ds.train_fraction = cfg.sync.train_fraction;
  if (fs::exists(in_dir / "background.pgm")) ds.background = read_pgm(in_dir / "background.pgm");
  const auto [tr, te] = split(ds, cfg.sync.train_fraction);
  ds.normalization_stats = tr.normalization_stats;
  save_dataset(ds, out_dir);
  return {ds.size(), tr.size(), te.size(), br.dropped, ds.n};
}

TrainResult cmd_train(const RunConfig& cfg, const fs::path& dataset_dir, const fs::path& out_dir,
                      const fs::path& resume) {
  cfg.validate();
  const auto ds = load_dataset(dataset_dir);
  const auto [tr, te] = split(ds, ds.train_fraction);
  TrainOptions opts;
  opts.out_dir = out_dir;
  opts.resume = resume;
  auto result = train(cfg.model, tr, te, cfg.train, opts);
  json meta = cfg;
  write_json_file(out_dir / "config.json", meta);
  return result;
}

std::size_t cmd_generate(const fs::path& checkpoint, const fs::path& dataset_dir, const fs::path& out_dir) {
  const auto ck = load_checkpoint(checkpoint);
  const auto ds = load_dataset(dataset_dir);
  const auto [tr, te] = split(ds, ds.train_fraction);
  if (te.samples.empty()) throw DataError("generate: the test split is empty");
  const auto ev = evaluate_as(ck.model, te, ck.meta.train, true);
  fs::create_directories(out_dir);
  std::ofstream idx(out_dir / "frames.jsonl");
  for (std::size_t i = 0; i < te.size(); ++i) {
    auto pred = ev.predictions[i];
    for (auto& v : pred.pixels) v = std::clamp(v, 0.0, 1.0);
    const auto& truth = te.samples[i].frame.frame;
    GrayFrame overlay = pred;
    for (std::size_t p = 0; p < overlay.size(); ++p) overlay.pixels[p] = std::abs(pred.pixels[p] - truth.pixels[p]);
    const auto ts = std::to_string(te.samples[i].frame_timestamp_us);
    write_pgm(out_dir / ("pred_" + ts + ".pgm"), pred);
    write_pgm(out_dir / ("truth_" + ts + ".pgm"), truth);
    write_pgm(out_dir / ("overlay_" + ts + ".pgm"), overlay);
    write_index_line(idx, {{"timestamp_us", te.samples[i].frame_timestamp_us},
                           {"pred", "pred_" + ts + ".pgm"},
                           {"truth", "truth_" + ts + ".pgm"},
                           {"overlay", "overlay_" + ts + ".pgm"},
                           {"weighted_l1", ev.per_sample[i]}});
  }
  return te.size();
}

EvalReport evaluate_report(const Wi2ViModel& model, const TrainConfig& train_cfg, const Dataset& train_set,
                           const Dataset& test_set) {
  if (test_set.samples.empty()) throw DataError("eval: the test split is empty");
  const auto ev = evaluate_as(model, test_set, train_cfg, true);
  EvalReport r;
  r.samples = test_set.size();
  r.mean_l1 = ev.mean_l1;
  r.p50 = percentile(ev.per_sample, 50.0);
  r.p90 = percentile(ev.per_sample, 90.0);
  r.max_l1 = *std::max_element(ev.per_sample.begin(), ev.per_sample.end());
  if (!train_set.samples.empty()) r.baseline_l1 = constant_frame_l1(median_target(train_set), test_set);
  r.centroid = centroid_score(ev.predictions, test_set);
  if (test_set.mode == DatasetMode::full_scene && test_set.background) {
    r.empty_scene_l1 = empty_scene_l1(ev.predictions, test_set, *test_set.background);
  }
  return r;
}

EvalReport cmd_eval(const fs::path& checkpoint, const fs::path& dataset_dir) {
  const auto ck = load_checkpoint(checkpoint);
  const auto ds = load_dataset(dataset_dir);
  const auto [tr, te] = split(ds, ds.train_fraction);
  return evaluate_report(ck.model, ck.meta.train, tr, te);
}

std::string format_report(const EvalReport& r) {
  char buf[512];
  std::ostringstream os;
  std::snprintf(buf, sizeof buf, "test samples      %zu\n", r.samples);
  os << buf;
  std::snprintf(buf, sizeof buf, "weighted L1       mean %.6f  p50 %.6f  p90 %.6f  max %.6f\n", r.mean_l1, r.p50,
                r.p90, r.max_l1);
  os << buf;
  std::snprintf(buf, sizeof buf, "median baseline   %.6f\n", r.baseline_l1);
  os << buf;
  std::snprintf(buf, sizeof buf, "centroid hits     %zu / %zu (%.1f%%), mean error %.2f px\n", r.centroid.hits,
                r.centroid.counted, 100.0 * r.centroid.rate, r.centroid.mean_error);
  os << buf;
  if (r.empty_scene_l1) {
    std::snprintf(buf, sizeof buf, "empty-scene L1    %.6f\n", *r.empty_scene_l1);
    os << buf;
  }
  return os.str();
}

}  // namespace wi2vi
