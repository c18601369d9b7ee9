#include "wi2vi/chan_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <nlohmann/json.hpp>

#include "wi2vi/errors.hpp"
#include "wi2vi/json_fields.hpp"

namespace wi2vi {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kLight = 299792458.0;

double dist(const Point2& a, const Point2& b) { return std::hypot(a[0] - b[0], a[1] - b[1]); }

bool inside(const Scene& s, const Point2& p) {
  return p[0] >= 0.0 && p[0] <= s.width_m && p[1] >= 0.0 && p[1] <= s.depth_m;
}

// Antenna element offsets along the array axis (x), centred on the AP position.
Point2 element(const Point2& base, std::size_t i, std::size_t count, double spacing) {
  const double off = (static_cast<double>(i) - 0.5 * static_cast<double>(count - 1)) * spacing;
  return {base[0] + off, base[1]};
}

Point2 point_from_json(const nlohmann::json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ConfigError(path + ": expected [x, y]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

void read_point(JsonFields& f, const std::string& key, Point2& out) {
  if (const auto* v = f.child(key)) out = point_from_json(*v, f.path(key));
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

void Scene::validate() const {
  if (!(width_m > 0.0 && depth_m > 0.0)) throw ConfigError("scene.room: dimensions must be positive");
  for (const auto& [name, p] : {std::pair{"tx_pos", tx_pos}, {"rx_pos", rx_pos}, {"cam_pos", cam_pos}}) {
    if (!inside(*this, p)) throw ConfigError(std::string("scene.") + name + ": outside the room");
  }
  for (const auto& sp : static_paths) {
    if (!(sp.alpha > 0.0 && sp.alpha <= 1.0)) throw ConfigError("scene.static_paths: alpha must lie in (0, 1]");
    if (!(sp.tau_ns >= 0.0)) throw ConfigError("scene.static_paths: tau_ns must be non-negative");
  }
  if (!(ref_depth_m > 0.0)) throw ConfigError("scene.camera.ref_depth_m must be positive");
  if (mover) {
    const auto& m = *mover;
    if (!(m.extent_m > 0.0)) throw ConfigError("scene.mover.extent_m must be positive");
    if (!(m.reflectivity > 0.0 && m.reflectivity <= 1.0)) {
      throw ConfigError("scene.mover.reflectivity must lie in (0, 1]");
    }
    if (!(m.gray >= 0.0 && m.gray <= 1.0)) throw ConfigError("scene.mover.gray must lie in [0, 1]");
    if (m.trajectory.empty()) throw ConfigError("scene.mover.trajectory must not be empty");
    for (std::size_t i = 0; i < m.trajectory.size(); ++i) {
      if (i > 0 && m.trajectory[i].time_us <= m.trajectory[i - 1].time_us) {
        throw ConfigError("scene.mover.trajectory: times must strictly increase");
      }
      if (!inside(*this, m.trajectory[i].pos)) {
        throw ConfigError("scene.mover.trajectory[" + std::to_string(i) + "]: outside the room");
      }
      if (dist(m.trajectory[i].pos, cam_pos) <= 0.0) {
        throw ConfigError("scene.mover.trajectory: mover may not coincide with the camera");
      }
    }
    if (m.loop && m.trajectory.back().time_us <= 0) {
      throw ConfigError("scene.mover.loop needs a positive final waypoint time");
    }
  }
  if (!(background_base >= 0.0 && background_base <= 1.0)) {
    throw ConfigError("scene.background.base must lie in [0, 1]");
  }
  for (const auto& r : background_rects) {
    if (r.x < 0.0 || r.y < 0.0 || r.w < 0.0 || r.h < 0.0 || r.x + r.w > 1.0 || r.y + r.h > 1.0) {
      throw ConfigError("scene.background.rects: rectangles must lie within [0, 1]^2");
    }
    if (!(r.value >= 0.0 && r.value <= 1.0)) throw ConfigError("scene.background.rects: value must lie in [0, 1]");
  }
}

MoverState mover_state(const Scene& scene, std::int64_t t_us) {
  if (!scene.mover) return {};
  const auto& traj = scene.mover->trajectory;
  if (scene.mover->loop) {
    const auto period = traj.back().time_us;
    t_us %= period;
    if (t_us < 0) t_us += period;
  }
  if (t_us <= traj.front().time_us) return {traj.front().present, traj.front().pos};
  if (t_us >= traj.back().time_us) return {traj.back().present, traj.back().pos};
  const auto it = std::upper_bound(traj.begin(), traj.end(), t_us,
                                   [](std::int64_t t, const Waypoint& w) { return t < w.time_us; });
  const auto& b = *it;
  const auto& a = *(it - 1);
  const double u = static_cast<double>(t_us - a.time_us) / static_cast<double>(b.time_us - a.time_us);
  return {a.present, {a.pos[0] + u * (b.pos[0] - a.pos[0]), a.pos[1] + u * (b.pos[1] - a.pos[1])}};
}

void SimConfig::validate() const {
  if (F < 2) throw ConfigError("sim.F must be >= 2");
  if (T == 0 || R == 0) throw ConfigError("sim.T and sim.R must be positive");
  if (!(subcarrier_spacing_hz > 0.0) || !(carrier_hz > 0.0)) {
    throw ConfigError("sim: carrier and subcarrier spacing must be positive");
  }
  if (!(antenna_spacing_m >= 0.0)) throw ConfigError("sim.antenna_spacing_m must be non-negative");
  if (jitter_us < 0) throw ConfigError("sim.jitter_us must be non-negative");
  if (packet_interval_us <= 2 * jitter_us) throw ConfigError("sim.packet_interval_us must exceed 2 * jitter_us");
  if (!(drop_prob >= 0.0 && drop_prob < 1.0)) throw ConfigError("sim.drop_prob must lie in [0, 1)");
  if (!(noise_sigma >= 0.0)) throw ConfigError("sim.noise_sigma must be non-negative");
}

double SimConfig::subcarrier_hz(std::size_t f) const {
  return carrier_hz + (static_cast<double>(f) - 0.5 * static_cast<double>(F - 1)) * subcarrier_spacing_hz;
}

void to_json(nlohmann::json& j, const Scene& s) {
  j = nlohmann::json{{"room", {{"width_m", s.width_m}, {"depth_m", s.depth_m}}},
                     {"tx_pos", s.tx_pos},
                     {"rx_pos", s.rx_pos},
                     {"cam_pos", s.cam_pos},
                     {"include_direct_path", s.include_direct_path},
                     {"camera", {{"ref_depth_m", s.ref_depth_m}}}};
  auto paths = nlohmann::json::array();
  for (const auto& p : s.static_paths) {
    paths.push_back({{"alpha", p.alpha}, {"tau_ns", p.tau_ns}, {"aod_deg", p.aod_deg}, {"aoa_deg", p.aoa_deg}});
  }
  j["static_paths"] = paths;
  auto rects = nlohmann::json::array();
  for (const auto& r : s.background_rects) {
    rects.push_back({{"x", r.x}, {"y", r.y}, {"w", r.w}, {"h", r.h}, {"value", r.value}});
  }
  j["background"] = {{"base", s.background_base}, {"rects", rects}};
  if (s.mover) {
    auto traj = nlohmann::json::array();
    for (const auto& w : s.mover->trajectory) {
      traj.push_back({{"time_us", w.time_us}, {"pos", w.pos}, {"present", w.present}});
    }
    j["mover"] = {{"extent_m", s.mover->extent_m},
                  {"reflectivity", s.mover->reflectivity},
                  {"gray", s.mover->gray},
                  {"loop", s.mover->loop},
                  {"trajectory", traj}};
  }
}

void to_json(nlohmann::json& j, const SimConfig& c) {
  j = nlohmann::json{{"F", c.F},
                     {"subcarrier_spacing_hz", c.subcarrier_spacing_hz},
                     {"carrier_hz", c.carrier_hz},
                     {"T", c.T},
                     {"R", c.R},
                     {"antenna_spacing_m", c.antenna_spacing_m},
                     {"packet_interval_us", c.packet_interval_us},
                     {"jitter_us", c.jitter_us},
                     {"drop_prob", c.drop_prob},
                     {"noise_sigma", c.noise_sigma},
                     {"inject_linear_phase", c.inject_linear_phase},
                     {"rssi_normalize", c.rssi_normalize},
                     {"rng_seed", c.rng_seed}};
}

Scene scene_from_json(const nlohmann::json& j, const std::string& path) {
  Scene s;
  JsonFields f(j, path);
  if (const auto* room = f.child("room")) {
    JsonFields rf(*room, f.path("room"));
    rf.optional("width_m", s.width_m);
    rf.optional("depth_m", s.depth_m);
    rf.finish();
  }
  read_point(f, "tx_pos", s.tx_pos);
  read_point(f, "rx_pos", s.rx_pos);
  read_point(f, "cam_pos", s.cam_pos);
  f.optional("include_direct_path", s.include_direct_path);
  if (const auto* paths = f.child("static_paths")) {
    if (!paths->is_array()) throw ConfigError(f.path("static_paths") + ": expected an array");
    for (std::size_t i = 0; i < paths->size(); ++i) {
      JsonFields pf((*paths)[i], f.path("static_paths") + "[" + std::to_string(i) + "]");
      StaticPath p;
      pf.required("alpha", p.alpha);
      pf.required("tau_ns", p.tau_ns);
      pf.optional("aod_deg", p.aod_deg);
      pf.optional("aoa_deg", p.aoa_deg);
      pf.finish();
      s.static_paths.push_back(p);
    }
  }
  if (const auto* cam = f.child("camera")) {
    JsonFields cf(*cam, f.path("camera"));
    cf.optional("ref_depth_m", s.ref_depth_m);
    cf.finish();
  }
  if (const auto* bg = f.child("background")) {
    JsonFields bf(*bg, f.path("background"));
    bf.optional("base", s.background_base);
    if (const auto* rects = bf.child("rects")) {
      if (!rects->is_array()) throw ConfigError(bf.path("rects") + ": expected an array");
      for (std::size_t i = 0; i < rects->size(); ++i) {
        JsonFields rf((*rects)[i], bf.path("rects") + "[" + std::to_string(i) + "]");
        BackgroundRect r;
        rf.required("x", r.x);
        rf.required("y", r.y);
        rf.required("w", r.w);
        rf.required("h", r.h);
        rf.required("value", r.value);
        rf.finish();
        s.background_rects.push_back(r);
      }
    }
    bf.finish();
  }
  if (const auto* mv = f.child("mover"); mv && !mv->is_null()) {
    JsonFields mf(*mv, f.path("mover"));
    Mover m;
    mf.optional("extent_m", m.extent_m);
    mf.optional("reflectivity", m.reflectivity);
    mf.optional("gray", m.gray);
    mf.optional("loop", m.loop);
    const auto* traj = mf.child("trajectory");
    if (!traj || !traj->is_array()) throw ConfigError(mf.path("trajectory") + ": expected an array");
    for (std::size_t i = 0; i < traj->size(); ++i) {
      JsonFields wf((*traj)[i], mf.path("trajectory") + "[" + std::to_string(i) + "]");
      Waypoint w;
      wf.required("time_us", w.time_us);
      if (const auto* p = wf.child("pos")) {
        w.pos = point_from_json(*p, wf.path("pos"));
      } else {
        throw ConfigError(wf.path("pos") + ": missing required field");
      }
      wf.optional("present", w.present);
      wf.finish();
      m.trajectory.push_back(w);
    }
    mf.finish();
    s.mover = m;
  }
  f.finish();
  s.validate();
  return s;
}

SimConfig sim_config_from_json(const nlohmann::json& j, const std::string& path) {
  SimConfig c;
  JsonFields f(j, path);
  f.optional("F", c.F);
  f.optional("subcarrier_spacing_hz", c.subcarrier_spacing_hz);
  f.optional("carrier_hz", c.carrier_hz);
  f.optional("T", c.T);
  f.optional("R", c.R);
  f.optional("antenna_spacing_m", c.antenna_spacing_m);
  f.optional("packet_interval_us", c.packet_interval_us);
  f.optional("jitter_us", c.jitter_us);
  f.optional("drop_prob", c.drop_prob);
  f.optional("noise_sigma", c.noise_sigma);
  f.optional("inject_linear_phase", c.inject_linear_phase);
  f.optional("rssi_normalize", c.rssi_normalize);
  f.optional("rng_seed", c.rng_seed);
  f.finish();
  c.validate();
  return c;
}

CsiSample channel_response(const Scene& scene, const SimConfig& cfg, std::int64_t t_us) {
  CsiSample s;
  s.timestamp_us = t_us;
  s.shape = {cfg.F, cfg.T, cfg.R};
  s.h.assign(s.shape.size(), cplx(0.0, 0.0));

  struct Path {
    double alpha;
    std::vector<double> tau;  // seconds, [T][R]
  };
  std::vector<Path> paths;
  const std::size_t TR = cfg.T * cfg.R;
  const auto pair_delays = [&](auto&& delay) {
    std::vector<double> tau(TR);
    for (std::size_t t = 0; t < cfg.T; ++t) {
      for (std::size_t r = 0; r < cfg.R; ++r) tau[t * cfg.R + r] = delay(t, r);
    }
    return tau;
  };
  const auto tx = [&](std::size_t t) { return element(scene.tx_pos, t, cfg.T, cfg.antenna_spacing_m); };
  const auto rx = [&](std::size_t r) { return element(scene.rx_pos, r, cfg.R, cfg.antenna_spacing_m); };

  if (scene.include_direct_path) {
    const double len = std::max(dist(scene.tx_pos, scene.rx_pos), 1e-3);
    paths.push_back({std::min(1.0, 1.0 / (len * len)),
                     pair_delays([&](std::size_t t, std::size_t r) { return dist(tx(t), rx(r)) / kLight; })});
  }
  for (const auto& sp : scene.static_paths) {
    const double sd = std::sin(sp.aod_deg * kPi / 180.0);
    const double sa = std::sin(sp.aoa_deg * kPi / 180.0);
    paths.push_back({sp.alpha, pair_delays([&](std::size_t t, std::size_t r) {
                       const double dt = (static_cast<double>(t) - 0.5 * static_cast<double>(cfg.T - 1)) * sd;
                       const double dr = (static_cast<double>(r) - 0.5 * static_cast<double>(cfg.R - 1)) * sa;
                       return sp.tau_ns * 1e-9 + (dt + dr) * cfg.antenna_spacing_m / kLight;
                     })});
  }
  const auto ms = mover_state(scene, t_us);
  if (ms.present) {
    const double len = std::max(dist(scene.tx_pos, ms.pos) + dist(ms.pos, scene.rx_pos), 1e-3);
    paths.push_back({std::min(1.0, scene.mover->reflectivity / (len * len)),
                     pair_delays([&](std::size_t t, std::size_t r) {
                       return (dist(tx(t), ms.pos) + dist(ms.pos, rx(r))) / kLight;
                     })});
  }

  for (std::size_t f = 0; f < cfg.F; ++f) {
    const double fhz = cfg.subcarrier_hz(f);
    for (std::size_t pr = 0; pr < TR; ++pr) {
      cplx acc(0.0, 0.0);
      for (const auto& p : paths) acc += std::polar(p.alpha, -2.0 * kPi * fhz * p.tau[pr]);
      s.h[f * TR + pr] = acc;
    }
  }
  return s;
}

CsiTrace simulate_csi(const Scene& scene, const SimConfig& cfg, std::int64_t duration_us) {
  scene.validate();
  cfg.validate();
  if (duration_us < cfg.packet_interval_us) {
    throw ConfigError("simulate: duration shorter than one packet interval");
  }
  CsiTrace trace;
  trace.shape = {cfg.F, cfg.T, cfg.R};
  const std::int64_t packets = (duration_us + cfg.packet_interval_us - 1) / cfg.packet_interval_us;
  for (std::int64_t k = 0; k < packets; ++k) {
    // Draw order is fixed: drop, jitter, injection, noise.
    std::mt19937_64 rng(mix_seed(cfg.rng_seed, static_cast<std::uint64_t>(k)));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const bool dropped = unit(rng) < cfg.drop_prob;
    std::uniform_int_distribution<std::int64_t> jit(-cfg.jitter_us, cfg.jitter_us);
    const std::int64_t ts = k * cfg.packet_interval_us + cfg.jitter_us + jit(rng);
    if (dropped) continue;

    CsiSample s = channel_response(scene, cfg, ts);
    if (cfg.inject_linear_phase) {
      const double a = std::uniform_real_distribution<double>(-0.05, 0.05)(rng);
      const double b = std::uniform_real_distribution<double>(-kPi, kPi)(rng);
      const std::size_t TR = cfg.T * cfg.R;
      for (std::size_t f = 0; f < cfg.F; ++f) {
        const cplx rot = std::polar(1.0, a * static_cast<double>(f) + b);
        for (std::size_t pr = 0; pr < TR; ++pr) s.h[f * TR + pr] *= rot;
      }
    }
    if (cfg.noise_sigma > 0.0) {
      // Complex Gaussian with E|n|^2 = sigma^2.
      std::normal_distribution<double> noise(0.0, cfg.noise_sigma / std::sqrt(2.0));
      for (auto& z : s.h) z += cplx(noise(rng), noise(rng));
    }
    if (cfg.rssi_normalize) {
      double power = 0.0;
      for (const auto& z : s.h) power += std::norm(z);
      const double g = std::sqrt(power / static_cast<double>(s.h.size()));
      if (g > 0.0) {
        for (auto& z : s.h) z /= g;
      }
      s.rssi_norm = g;
    }
    trace.samples.push_back(std::move(s));
  }
  if (trace.samples.empty()) throw DataError("simulate: every packet was dropped");
  return trace;
}

GrayFrame render_background(const Scene& scene, std::size_t width, std::size_t height) {
  if (width == 0 || height == 0) throw ConfigError("render: resolution must be positive");
  GrayFrame bg = GrayFrame::filled(height, width, scene.background_base);
  for (const auto& r : scene.background_rects) {
    for (std::size_t y = 0; y < height; ++y) {
      const double v = (static_cast<double>(y) + 0.5) / static_cast<double>(height);
      if (v < r.y || v >= r.y + r.h) continue;
      for (std::size_t x = 0; x < width; ++x) {
        const double u = (static_cast<double>(x) + 0.5) / static_cast<double>(width);
        if (u >= r.x && u < r.x + r.w) bg.at(y, x) = r.value;
      }
    }
  }
  return bg;
}

Silhouette silhouette_geometry(const Scene& scene, const Point2& pos, std::size_t width, std::size_t height) {
  const double px_per_m = static_cast<double>(width) / scene.width_m;
  const double scale = scene.ref_depth_m / std::max(dist(pos, scene.cam_pos), 1e-6);
  const double extent = scene.mover ? scene.mover->extent_m : 0.0;
  Silhouette s;
  s.cx = 0.5 * static_cast<double>(width) + (pos[0] - scene.cam_pos[0]) * px_per_m;
  s.cy = 0.5 * static_cast<double>(height);
  s.ax = 0.5 * extent * scale * px_per_m;
  s.ay = extent * scale * px_per_m;
  return s;
}

GrayFrame render_frame(const Scene& scene, const GrayFrame& background, std::int64_t t_us) {
  GrayFrame out = background;
  out.timestamp_us = t_us;
  const auto ms = mover_state(scene, t_us);
  if (!ms.present) return out;
  const auto g = silhouette_geometry(scene, ms.pos, background.w, background.h);
  for (std::size_t y = 0; y < out.h; ++y) {
    const double dy = (static_cast<double>(y) + 0.5 - g.cy) / g.ay;
    if (dy * dy > 1.0) continue;
    for (std::size_t x = 0; x < out.w; ++x) {
      const double dx = (static_cast<double>(x) + 0.5 - g.cx) / g.ax;
      if (dx * dx + dy * dy <= 1.0) out.at(y, x) = scene.mover->gray;
    }
  }
  return out;
}

std::vector<GrayFrame> render_frames(const Scene& scene, double fps, std::size_t width, std::size_t height,
                                     std::int64_t duration_us) {
  if (!(fps > 0.0)) throw ConfigError("render: fps must be positive");
  scene.validate();
  const auto bg = render_background(scene, width, height);
  std::vector<GrayFrame> frames;
  for (std::int64_t i = 0;; ++i) {
    const auto t = static_cast<std::int64_t>(std::llround(static_cast<double>(i) * 1e6 / fps));
    if (t >= duration_us) break;
    frames.push_back(render_frame(scene, bg, t));
  }
  return frames;
}

}  // namespace wi2vi
