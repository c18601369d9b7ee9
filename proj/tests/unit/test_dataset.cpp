#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "../common/oracles.hpp"
#include "test_util.hpp"
#include "wi2vi/chan_sim.hpp"
#include "wi2vi/dataset.hpp"
#include "wi2vi/errors.hpp"

using namespace wi2vi;

namespace {

std::shared_ptr<CsiTrace> trace_at(const std::vector<std::int64_t>& ts, CsiShape shape = {2, 1, 1}) {
  auto tr = std::make_shared<CsiTrace>();
  tr->shape = shape;
  double v = 0.1;
  for (auto t : ts) {
    CsiSample s;
    s.timestamp_us = t;
    s.shape = shape;
    s.h.assign(shape.size(), cplx(v, 0.5 * v));
    v += 0.1;
    tr->samples.push_back(s);
  }
  return tr;
}

WeightedFrame frame_at(std::int64_t ts, double v = 0.5) {
  WeightedFrame f;
  f.frame = GrayFrame::filled(2, 3, v, ts);
  return f;
}

}  // namespace

TEST_CASE("FTN hand examples") {
  const auto tr = trace_at({0, 10, 20, 30});
  CHECK(build_ftn(10, *tr, 1) == std::vector<std::size_t>{1});
  CHECK(build_ftn(15, *tr, 2) == std::vector<std::size_t>{1, 2});
  CHECK(build_ftn(15, *tr, 1) == std::vector<std::size_t>{1});  // tie goes earlier
  CHECK(build_ftn(-100, *tr, 2) == std::vector<std::size_t>{0, 1});
  CHECK(build_ftn(100, *tr, 3) == std::vector<std::size_t>{1, 2, 3});
  CHECK(build_ftn(12, *tr, 4) == std::vector<std::size_t>{0, 1, 2, 3});
  CHECK_THROWS_AS(build_ftn(12, *tr, 5), DataError);
}

TEST_CASE("FTN equals brute-force nearest-n") {
  std::mt19937_64 rng(21);
  for (int rep = 0; rep < 300; ++rep) {
    std::uniform_int_distribution<int> len(1, 200), gap(1, 30);
    std::vector<std::int64_t> ts;
    std::int64_t t = std::uniform_int_distribution<int>(-50, 50)(rng);
    for (int i = 0, m = len(rng); i < m; ++i) ts.push_back(t += gap(rng));
    const auto tr = trace_at(ts);
    const auto n = std::uniform_int_distribution<std::size_t>(1, ts.size())(rng);
    const auto q = std::uniform_int_distribution<std::int64_t>(ts.front() - 100, ts.back() + 100)(rng);
    CHECK(build_ftn(q, *tr, n) == oracle::nearest_n(q, *tr, n));
  }
}

TEST_CASE("FTN lag and overlap at 100 packets/s and 6 fps") {
  Scene scene;
  SimConfig cfg;
  cfg.F = 4;
  cfg.T = cfg.R = 1;
  cfg.jitter_us = 1000;
  const auto tr = simulate_csi(scene, cfg, 20000000);
  std::int64_t max_lag = 0;
  std::vector<std::size_t> prev;
  for (int i = 6; i < 110; ++i) {
    const std::int64_t ts = std::llround(i * 1e6 / 6.0);
    const auto f = build_ftn(ts, tr, 29);
    for (auto j : f) max_lag = std::max(max_lag, std::abs(tr.samples[j].timestamp_us - ts));
    if (!prev.empty()) {
      std::vector<std::size_t> both;
      std::set_intersection(prev.begin(), prev.end(), f.begin(), f.end(), std::back_inserter(both));
      const double overlap = static_cast<double>(both.size()) / 29.0;
      CHECK(overlap >= 0.4);
      CHECK(overlap <= 0.6);
    }
    prev = f;
  }
  CHECK(max_lag <= 160000);
}

TEST_CASE("build_dataset drops frames without a full neighborhood") {
  auto tr = trace_at({0, 10, 20, 30, 40, 50, 60});
  std::vector<WeightedFrame> frames{frame_at(0), frame_at(15), frame_at(30), frame_at(45), frame_at(60)};
  BuildReport rep;
  const auto ds = build_dataset(frames, tr, 3, DatasetMode::background_removed, &rep);
  CHECK(rep.kept == 3);
  CHECK(rep.dropped == 2);
  REQUIRE(ds.size() == 3);
  CHECK(ds.samples[0].frame_timestamp_us == 15);
  CHECK(ds.samples[0].csi_indices == std::vector<std::size_t>{0, 1, 2});
  CHECK(ds.samples[2].frame_timestamp_us == 45);
  CHECK(ds.n == 3);
  CHECK_THROWS_AS(build_dataset({frame_at(0)}, tr, 3, DatasetMode::full_scene), DataError);
}

TEST_CASE("one frame and n equal to the trace length uses the whole trace") {
  auto tr = trace_at({0, 10, 20, 30, 40});
  const auto ds = build_dataset({frame_at(20)}, tr, 5, DatasetMode::full_scene);
  REQUIRE(ds.size() == 1);
  CHECK(ds.samples[0].csi_indices == std::vector<std::size_t>{0, 1, 2, 3, 4});
}

TEST_CASE("build_dataset quantizes frames and orders samples") {
  auto tr = trace_at({0, 10, 20, 30, 40, 50, 60});
  std::vector<WeightedFrame> frames{frame_at(40, 0.3333), frame_at(20, 0.7)};
  const auto ds = build_dataset(frames, tr, 3, DatasetMode::background_removed);
  REQUIRE(ds.size() == 2);
  CHECK(ds.samples[0].frame_timestamp_us == 20);
  for (const auto& s : ds.samples)
    for (double v : s.frame.frame.pixels) CHECK(v * 255.0 == doctest::Approx(std::round(v * 255.0)).epsilon(1e-12));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& s = ds.samples[i];
    // nearest-n property
    std::int64_t worst_in = 0, best_out = std::numeric_limits<std::int64_t>::max();
    for (std::size_t j = 0; j < tr->samples.size(); ++j) {
      const auto d = std::abs(tr->samples[j].timestamp_us - s.frame_timestamp_us);
      if (std::count(s.csi_indices.begin(), s.csi_indices.end(), j)) {
        worst_in = std::max(worst_in, d);
      } else {
        best_out = std::min(best_out, d);
      }
    }
    CHECK(worst_in <= best_out);
  }
}

TEST_CASE("split follows the floor rule") {
  CHECK(split_point(8300, 0.95) == 7885);
  CHECK(split_point(20, 0.5) == 10);
  CHECK(split_point(100, 0.999) == 99);
  CHECK_THROWS_AS(split_point(10, 1.0), ConfigError);
  CHECK_THROWS_AS(split_point(10, 0.0), ConfigError);

  std::vector<std::int64_t> ts;
  for (int i = 0; i < 40; ++i) ts.push_back(i * 10);
  auto tr = trace_at(ts);
  std::vector<WeightedFrame> frames;
  for (int i = 2; i < 38; ++i) frames.push_back(frame_at(i * 10));
  const auto ds = build_dataset(frames, tr, 3, DatasetMode::full_scene);
  REQUIRE(ds.size() == 36);
  const auto [a, b] = split(ds, 0.5);
  CHECK(a.size() == 18);
  CHECK(b.size() == 18);
  CHECK(a.samples.back().frame_timestamp_us < b.samples.front().frame_timestamp_us);
  CHECK(a.normalization_stats.mean == b.normalization_stats.mean);
  CHECK(a.normalization_stats.mean == dataset_amplitude_stats(a).mean);
  CHECK(a.normalization_stats.mean != dataset_amplitude_stats(ds).mean);
  CHECK_THROWS_AS(split(ds, 0.01), DataError);
}

TEST_CASE("dropin draws are distinct, sorted and uniform") {
  std::mt19937_64 rng(5);
  std::vector<int> count(5, 0);
  for (int d = 0; d < 10000; ++d) {
    const auto s = dropin_select_indices(5, 2, rng);
    REQUIRE(s.size() == 2);
    CHECK(s[0] < s[1]);
    CHECK(s[1] < 5);
    for (auto i : s) ++count[i];
  }
  for (int c : count) CHECK(std::abs(c / 10000.0 - 0.4) < 0.02);
  std::mt19937_64 r1(9), r2(9);
  CHECK(dropin_select_indices(29, 8, r1) == dropin_select_indices(29, 8, r2));
  const auto all = dropin_select_indices(6, 6, r1);
  CHECK(all == std::vector<std::size_t>{0, 1, 2, 3, 4, 5});
  CHECK_THROWS(dropin_select_indices(3, 4, r1));
  CHECK_THROWS(dropin_select_indices(3, 0, r1));
}

TEST_CASE("dropin matrix is one-hot per column") {
  const auto m = dropin_matrix({0, 2}, 3);
  CHECK(m == std::vector<int>{1, 0, 0, 0, 0, 1});
  CHECK(dropin_matrix({0, 1}, 3) == std::vector<int>{1, 0, 0, 1, 0, 0});
}

TEST_CASE("dropin_select returns trace samples in time order") {
  std::vector<std::int64_t> ts;
  for (int i = 0; i < 50; ++i) ts.push_back(i * 10);
  auto tr = trace_at(ts);
  const auto ds = build_dataset({frame_at(250)}, tr, 29, DatasetMode::full_scene);
  std::mt19937_64 rng(1);
  const auto sel = dropin_select(ds, ds.samples[0], 8, rng);
  REQUIRE(sel.size() == 8);
  for (std::size_t i = 1; i < sel.size(); ++i) CHECK(sel[i - 1]->timestamp_us < sel[i]->timestamp_us);
  for (const auto* p : sel) CHECK(std::abs(p->timestamp_us - 250) <= 140);
}

TEST_CASE("strided indices and fetch seeds") {
  CHECK(strided_indices(29, 8) == std::vector<std::size_t>{0, 4, 8, 12, 16, 20, 24, 28});
  CHECK(strided_indices(5, 1) == std::vector<std::size_t>{2});  // the middle sample
  CHECK(strided_indices(4, 4) == std::vector<std::size_t>{0, 1, 2, 3});
  CHECK(fetch_seed(1, 2, 3) == fetch_seed(1, 2, 3));
  CHECK(fetch_seed(1, 2, 3) != fetch_seed(1, 3, 2));
  CHECK(fetch_seed(1, 0, 0) != fetch_seed(2, 0, 0));
}

TEST_CASE("dataset save and load round trip") {
  TempDir dir("ds");
  std::vector<std::int64_t> ts;
  for (int i = 0; i < 30; ++i) ts.push_back(i * 10);
  auto tr = trace_at(ts, {4, 1, 2});
  std::vector<WeightedFrame> frames;
  for (int i = 3; i < 27; i += 2) {
    auto f = frame_at(i * 10, 0.01 * i);
    f.weight = 0.9;
    f.background_removed = true;
    f.mask_rects = {{0, 0, 1, 1, 0.25}};
    frames.push_back(f);
  }
  auto ds = build_dataset(frames, tr, 5, DatasetMode::background_removed);
  ds.background = GrayFrame::filled(2, 3, 0.2);
  ds.k_default = 3;
  ds.normalization_stats = {0.3, 0.2};
  save_dataset(ds, dir.path);
  const auto back = load_dataset(dir.path);
  REQUIRE(back.size() == ds.size());
  CHECK(back.n == 5);
  CHECK(back.k_default == 3);
  CHECK(back.mode == ds.mode);
  CHECK(back.normalization_stats.mean == 0.3);
  CHECK(back.normalization_stats.std == 0.2);
  REQUIRE(back.background.has_value());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& a = ds.samples[i];
    const auto& b = back.samples[i];
    CHECK(a.frame.frame.pixels == b.frame.frame.pixels);
    CHECK(a.frame.weight == b.frame.weight);
    CHECK(a.frame.mask_rects == b.frame.mask_rects);
    CHECK(a.frame.background_removed == b.frame.background_removed);
    CHECK(a.csi_indices == b.csi_indices);
    CHECK(a.frame_timestamp_us == b.frame_timestamp_us);
  }
  for (std::size_t i = 0; i < tr->samples.size(); ++i) CHECK(back.trace->samples[i].h == tr->samples[i].h);
}

TEST_CASE("damaged datasets fail with explicit errors") {
  TempDir dir("dsbad");
  std::vector<std::int64_t> ts;
  for (int i = 0; i < 10; ++i) ts.push_back(i * 10);
  auto ds = build_dataset({frame_at(40), frame_at(50)}, trace_at(ts), 3, DatasetMode::full_scene);
  save_dataset(ds, dir.path);
  std::filesystem::remove(dir / "frames/frame_50.pgm");
  try {
    load_dataset(dir.path);
    FAIL("expected a DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("frame_50.pgm") != std::string::npos);
  }
  {
    std::ofstream os(dir / "trace.csit", std::ios::binary);
    os << "BROKEN__";
  }
  save_dataset(ds, dir / "b");
  {
    std::ofstream os(dir / "b/trace.csit", std::ios::binary);
    os << "BROKEN__";
  }
  CHECK_THROWS_AS(load_dataset(dir / "b"), DataError);
  save_dataset(ds, dir / "c");
  {
    auto m = nlohmann::json::parse(std::ifstream(dir / "c/manifest.json"));
    m["version"] = 99;
    std::ofstream(dir / "c/manifest.json") << m.dump();
  }
  CHECK_THROWS_AS(load_dataset(dir / "c"), DataError);
  CHECK_THROWS_AS(load_dataset(dir / "nothing"), DataError);
}

TEST_CASE("mode names") {
  CHECK(dataset_mode_from_string("dynamics") == DatasetMode::background_removed);
  CHECK(dataset_mode_from_string("background_removed") == DatasetMode::background_removed);
  CHECK(dataset_mode_from_string("full_scene") == DatasetMode::full_scene);
  CHECK_THROWS(dataset_mode_from_string("other"));
}
