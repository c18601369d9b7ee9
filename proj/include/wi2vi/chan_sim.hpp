#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "wi2vi/csi.hpp"
#include "wi2vi/video.hpp"

namespace wi2vi {

using Point2 = std::array<double, 2>;  // floor-plan metres: x across the room, y in depth

struct StaticPath {
  double alpha = 0.1;
  double tau_ns = 20.0;
  double aod_deg = 0.0;  // departure angle across the tx array
  double aoa_deg = 0.0;  // arrival angle across the rx array
};

struct Waypoint {
  std::int64_t time_us = 0;
  Point2 pos{0.0, 0.0};
  bool present = true;  // holds until the next waypoint
};

struct Mover {
  double extent_m = 0.5;
  double reflectivity = 1.0;
  double gray = 0.9;
  bool loop = false;  // repeat the trajectory with period = last waypoint time
  std::vector<Waypoint> trajectory;
};

// Normalized background rectangle, coordinates as fractions of the frame.
struct BackgroundRect {
  double x = 0.0, y = 0.0, w = 0.0, h = 0.0;
  double value = 0.5;
};

struct Scene {
  double width_m = 6.0;
  double depth_m = 4.0;
  Point2 tx_pos{0.5, 2.0};
  Point2 rx_pos{5.5, 2.0};
  Point2 cam_pos{3.0, 0.0};
  bool include_direct_path = true;
  std::vector<StaticPath> static_paths;
  std::optional<Mover> mover;
  double ref_depth_m = 2.0;  // depth at which the mover has its nominal size
  double background_base = 0.3;
  std::vector<BackgroundRect> background_rects;

  // Throws ConfigError when an invariant is violated.
  void validate() const;
};

struct MoverState {
  bool present = false;
  Point2 pos{0.0, 0.0};
};

// Linear interpolation between waypoints; presence follows the segment start.
MoverState mover_state(const Scene& scene, std::int64_t t_us);

struct SimConfig {
  std::size_t F = 56;
  double subcarrier_spacing_hz = 312.5e3;
  double carrier_hz = 2.437e9;
  std::size_t T = 3;
  std::size_t R = 3;
  double antenna_spacing_m = 0.06;
  std::int64_t packet_interval_us = 10000;
  std::int64_t jitter_us = 1000;
  double drop_prob = 0.0;
  double noise_sigma = 0.0;
  bool inject_linear_phase = false;
  bool rssi_normalize = false;  // scale each packet to unit mean power, recording the factor
  std::uint64_t rng_seed = 1;

  void validate() const;
  double subcarrier_hz(std::size_t f) const;
};

void to_json(nlohmann::json& j, const Scene& s);
void to_json(nlohmann::json& j, const SimConfig& c);
// Strict: unknown keys raise ConfigError.
Scene scene_from_json(const nlohmann::json& j, const std::string& path = "scene");
SimConfig sim_config_from_json(const nlohmann::json& j, const std::string& path = "sim");

// Noise-free channel response of one packet at time t_us.
CsiSample channel_response(const Scene& scene, const SimConfig& cfg, std::int64_t t_us);

// Packet k nominally at k * interval (offset by jitter_us so timestamps stay
// non-negative); each packet draws from its own stream seeded by (rng_seed, k).
CsiTrace simulate_csi(const Scene& scene, const SimConfig& cfg, std::int64_t duration_us);

GrayFrame render_background(const Scene& scene, std::size_t width, std::size_t height);
// Frame i at round(i * 1e6 / fps) microseconds, for every such time < duration_us.
std::vector<GrayFrame> render_frames(const Scene& scene, double fps, std::size_t width, std::size_t height,
                                     std::int64_t duration_us);
GrayFrame render_frame(const Scene& scene, const GrayFrame& background, std::int64_t t_us);

// Ellipse centre (column, row) and semi-axes in pixels for a mover at pos.
struct Silhouette {
  double cx = 0.0, cy = 0.0, ax = 0.0, ay = 0.0;
};
Silhouette silhouette_geometry(const Scene& scene, const Point2& pos, std::size_t width, std::size_t height);

// splitmix64 finalizer over (seed, index); used for per-item rng streams.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace wi2vi
