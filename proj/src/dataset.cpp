#include "wi2vi/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>

#include <nlohmann/json.hpp>

#include "wi2vi/chan_sim.hpp"
#include "wi2vi/errors.hpp"

namespace wi2vi {
namespace {

constexpr int kManifestVersion = 1;
constexpr const char* kManifestFormat = "wi2vi-dataset";

double quantize(double v) { return std::lround(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0; }

std::string frame_file(std::int64_t ts) { return "frames/frame_" + std::to_string(ts) + ".pgm"; }

}  // namespace

std::string to_string(DatasetMode mode) {
  return mode == DatasetMode::full_scene ? "full_scene" : "background_removed";
}

DatasetMode dataset_mode_from_string(const std::string& s) {
  if (s == "background_removed" || s == "dynamics") return DatasetMode::background_removed;
  if (s == "full_scene") return DatasetMode::full_scene;
  throw ConfigError("unknown mode '" + s + "' (expected dynamics, background_removed or full_scene)");
}

std::vector<std::size_t> build_ftn(std::int64_t frame_ts, const CsiTrace& trace, std::size_t n) {
  const auto& s = trace.samples;
  if (n == 0) throw std::invalid_argument("build_ftn: n must be positive");
  if (s.size() < n) {
    throw DataError("build_ftn: trace has " + std::to_string(s.size()) + " samples, need " + std::to_string(n));
  }
  // Grow a window outward from the insertion point, preferring the earlier
  // side when distances tie.
  auto hi = static_cast<std::size_t>(
      std::lower_bound(s.begin(), s.end(), frame_ts,
                       [](const CsiSample& a, std::int64_t t) { return a.timestamp_us < t; }) -
      s.begin());
  std::size_t lo = hi;  // window is [lo, hi)
  while (hi - lo < n) {
    if (lo == 0) {
      ++hi;
    } else if (hi == s.size()) {
      --lo;
    } else {
      const auto dl = frame_ts - s[lo - 1].timestamp_us;
      const auto dr = s[hi].timestamp_us - frame_ts;
      if (dl <= dr) {
        --lo;
      } else {
        ++hi;
      }
    }
  }
  std::vector<std::size_t> out(n);
  std::iota(out.begin(), out.end(), lo);
  return out;
}

AmplitudeStats dataset_amplitude_stats(const Dataset& ds) {
  std::set<std::size_t> used;
  for (const auto& smp : ds.samples) used.insert(smp.csi_indices.begin(), smp.csi_indices.end());
  std::vector<const CsiSample*> ptrs;
  for (auto i : used) ptrs.push_back(&ds.trace->samples.at(i));
  return amplitude_stats(ptrs);
}

Dataset build_dataset(const std::vector<WeightedFrame>& frames, std::shared_ptr<const CsiTrace> trace,
                      std::size_t n, DatasetMode mode, BuildReport* report) {
  if (frames.empty()) throw DataError("build_dataset: no frames");
  if (!trace || trace->samples.empty()) throw DataError("build_dataset: empty trace");
  Dataset ds;
  ds.trace = trace;
  ds.n = n;
  ds.mode = mode;
  const auto t0 = trace->start_us();
  const auto t1 = trace->end_us();
  BuildReport rep;
  for (const auto& wf : frames) {
    const auto ts = wf.frame.timestamp_us;
    auto ftn = build_ftn(ts, *trace, n);
    std::int64_t radius = 0;
    for (auto i : ftn) radius = std::max(radius, std::abs(trace->samples[i].timestamp_us - ts));
    if (ts - radius < t0 || ts + radius > t1) {
      ++rep.dropped;
      continue;
    }
    DatasetSample smp;
    smp.frame = wf;
    for (auto& v : smp.frame.frame.pixels) v = quantize(v);
    smp.csi_indices = std::move(ftn);
    smp.frame_timestamp_us = ts;
    ds.samples.push_back(std::move(smp));
  }
  std::stable_sort(ds.samples.begin(), ds.samples.end(),
                   [](const DatasetSample& a, const DatasetSample& b) { return a.frame_timestamp_us < b.frame_timestamp_us; });
  rep.kept = ds.samples.size();
  if (report) *report = rep;
  if (ds.samples.empty()) throw DataError("build_dataset: every frame was dropped at the trace boundary");
  ds.normalization_stats = dataset_amplitude_stats(ds);
  return ds;
}

std::size_t split_point(std::size_t n, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("split: train_fraction must lie in (0, 1)");
  }
  // The epsilon keeps exact products such as 0.95 * 8300 from rounding down.
  return static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n) + 1e-9));
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction) {
  const std::size_t cut = split_point(ds.size(), train_fraction);
  if (cut == 0 || cut >= ds.size()) {
    throw DataError("split: fraction " + std::to_string(train_fraction) + " of " + std::to_string(ds.size()) +
                    " samples leaves one side empty");
  }
  Dataset train = ds, test = ds;
  train.samples.assign(ds.samples.begin(), ds.samples.begin() + static_cast<std::ptrdiff_t>(cut));
  test.samples.assign(ds.samples.begin() + static_cast<std::ptrdiff_t>(cut), ds.samples.end());
  train.train_fraction = test.train_fraction = train_fraction;
  train.normalization_stats = dataset_amplitude_stats(train);
  test.normalization_stats = train.normalization_stats;
  return {std::move(train), std::move(test)};
}

std::vector<std::size_t> dropin_select_indices(std::size_t n, std::size_t k, std::mt19937_64& rng) {
  if (k == 0 || k > n) {
    throw std::invalid_argument("dropin: need 1 <= k <= n (k=" + std::to_string(k) + ", n=" + std::to_string(n) + ")");
  }
  // Partial Fisher-Yates.
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::vector<int> dropin_matrix(const std::vector<std::size_t>& selection, std::size_t n) {
  const std::size_t k = selection.size();
  std::vector<int> m(n * k, 0);
  for (std::size_t c = 0; c < k; ++c) {
    if (selection[c] >= n) throw std::invalid_argument("dropin_matrix: index out of range");
    m[selection[c] * k + c] = 1;
  }
  return m;
}

std::vector<const CsiSample*> dropin_select(const Dataset& ds, const DatasetSample& sample, std::size_t k,
                                            std::mt19937_64& rng) {
  const auto sel = dropin_select_indices(sample.csi_indices.size(), k, rng);
  std::vector<const CsiSample*> out;
  out.reserve(k);
  for (auto i : sel) out.push_back(&ds.trace->samples.at(sample.csi_indices[i]));
  return out;
}

std::vector<std::size_t> strided_indices(std::size_t n, std::size_t k) {
  if (k == 0 || k > n) throw std::invalid_argument("strided_indices: need 1 <= k <= n");
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = k == 1 ? (n - 1) / 2 : i * (n - 1) / (k - 1);
  return out;
}

std::uint64_t fetch_seed(std::uint64_t global_seed, std::uint64_t epoch, std::uint64_t sample_index) {
  return mix_seed(mix_seed(global_seed, epoch), sample_index);
}

void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!ds.trace) throw DataError("save_dataset: dataset has no trace");
  fs::create_directories(dir / "frames");
  write_csit(dir / "trace.csit", *ds.trace);
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : ds.samples) {
    const auto file = frame_file(s.frame_timestamp_us);
    write_pgm(dir / file, s.frame.frame);
    nlohmann::json rects = nlohmann::json::array();
    for (const auto& r : s.frame.mask_rects) {
      rects.push_back({{"x", r.x}, {"y", r.y}, {"w", r.w}, {"h", r.h}, {"weight", r.weight}});
    }
    samples.push_back({{"frame", file},
                       {"weight", s.frame.weight},
                       {"background_removed", s.frame.background_removed},
                       {"mask_rects", rects},
                       {"frame_timestamp_us", s.frame_timestamp_us},
                       {"csi_indices", s.csi_indices}});
  }
  nlohmann::json manifest = {
      {"format", kManifestFormat},
      {"version", kManifestVersion},
      {"n", ds.n},
      {"k_default", ds.k_default},
      {"mode", to_string(ds.mode)},
      {"train_fraction", ds.train_fraction},
      {"normalization_stats", {{"amp_mean", ds.normalization_stats.mean}, {"amp_std", ds.normalization_stats.std}}},
      {"trace", "trace.csit"},
      {"samples", samples}};
  if (ds.background) {
    write_pgm(dir / "background.pgm", *ds.background);
    manifest["background"] = "background.pgm";
  }
  std::ofstream os(dir / "manifest.json");
  os << manifest.dump(1) << '\n';
  if (!os) throw DataError("save_dataset: cannot write manifest in " + dir.string());
}

Dataset load_dataset(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  std::ifstream is(manifest_path);
  if (!is) throw DataError("load_dataset: cannot open " + manifest_path.string());
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("load_dataset: " + manifest_path.string() + ": " + e.what());
  }
  try {
    if (m.value("format", std::string()) != kManifestFormat) {
      throw DataError("load_dataset: " + manifest_path.string() + " is not a dataset manifest");
    }
    if (m.at("version").get<int>() != kManifestVersion) {
      throw DataError("load_dataset: unsupported manifest version " + m.at("version").dump());
    }
    Dataset ds;
    ds.n = m.at("n").get<std::size_t>();
    ds.k_default = m.at("k_default").get<std::size_t>();
    ds.mode = dataset_mode_from_string(m.at("mode").get<std::string>());
    ds.train_fraction = m.at("train_fraction").get<double>();
    ds.normalization_stats.mean = m.at("normalization_stats").at("amp_mean").get<double>();
    ds.normalization_stats.std = m.at("normalization_stats").at("amp_std").get<double>();
    auto trace = std::make_shared<CsiTrace>(read_csit(dir / m.at("trace").get<std::string>()));
    ds.trace = trace;
    if (m.contains("background")) {
      const auto p = dir / m.at("background").get<std::string>();
      if (!std::filesystem::exists(p)) throw DataError("load_dataset: missing background file " + p.string());
      ds.background = read_pgm(p);
    }
    for (const auto& js : m.at("samples")) {
      DatasetSample s;
      const auto file = dir / js.at("frame").get<std::string>();
      if (!std::filesystem::exists(file)) throw DataError("load_dataset: missing frame file " + file.string());
      s.frame.frame = read_pgm(file);
      s.frame_timestamp_us = js.at("frame_timestamp_us").get<std::int64_t>();
      s.frame.frame.timestamp_us = s.frame_timestamp_us;
      s.frame.weight = js.at("weight").get<double>();
      s.frame.background_removed = js.value("background_removed", ds.mode == DatasetMode::background_removed);
      for (const auto& r : js.at("mask_rects")) {
        s.frame.mask_rects.push_back({r.at("x").get<std::size_t>(), r.at("y").get<std::size_t>(),
                                      r.at("w").get<std::size_t>(), r.at("h").get<std::size_t>(),
                                      r.at("weight").get<double>()});
      }
      s.csi_indices = js.at("csi_indices").get<std::vector<std::size_t>>();
      if (s.csi_indices.size() != ds.n) throw DataError("load_dataset: FTN width differs from n");
      for (auto i : s.csi_indices) {
        if (i >= trace->samples.size()) throw DataError("load_dataset: csi index out of range");
      }
      ds.samples.push_back(std::move(s));
    }
    return ds;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("load_dataset: malformed manifest " + manifest_path.string() + ": " + e.what());
  }
}

}  // namespace wi2vi
