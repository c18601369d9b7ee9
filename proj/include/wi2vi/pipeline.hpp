#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "wi2vi/chan_sim.hpp"
#include "wi2vi/dataset.hpp"
#include "wi2vi/metrics.hpp"
#include "wi2vi/model.hpp"
#include "wi2vi/trainer.hpp"

namespace wi2vi {

struct CameraConfig {
  double fps = 30.0;
  std::size_t width = 64;
  std::size_t height = 48;
  std::size_t background_frames = 5;  // length of the empty-room clip
};

struct PreprocessConfig {
  std::size_t downsample = 5;
  std::size_t width = 32;
  std::size_t height = 24;
  double threshold = 0.05;
  std::vector<MaskRect> mask_rects;
  std::string background_clip = "background_clip";  // directory under the simulate output
};

struct SyncConfig {
  std::size_t n = 29;
  std::size_t k = 8;
  double train_fraction = 0.95;
};

struct RunConfig {
  DatasetMode mode = DatasetMode::background_removed;
  double duration_s = 300.0;
  Scene scene;
  SimConfig sim;
  CameraConfig camera;
  PreprocessConfig preprocess;
  SyncConfig sync;
  ModelConfig model;
  TrainConfig train;

  void validate() const;
};

void to_json(nlohmann::json& j, const RunConfig& c);
// Strict. model.in_channels, model.subcarriers, model.k, model.out_h/out_w and
// train.k default to the values implied by sim, sync and preprocess; explicit
// values that disagree raise ConfigError.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);
// Replaces sim.rng_seed and train.seed.
void override_seed(RunConfig& cfg, std::uint64_t seed);

struct SimulateReport {
  std::size_t packets = 0;
  std::size_t frames = 0;
};
SimulateReport cmd_simulate(const RunConfig& cfg, const std::filesystem::path& out_dir);

struct PreprocessReport {
  std::size_t frames = 0;
  bool background_from_clip = false;
};
PreprocessReport cmd_preprocess(const RunConfig& cfg, const std::filesystem::path& in_dir,
                                const std::filesystem::path& out_dir);

struct SyncReport {
  std::size_t samples = 0;
  std::size_t train = 0;
  std::size_t test = 0;
  std::size_t dropped = 0;
  std::size_t n = 0;
};
SyncReport cmd_sync(const RunConfig& cfg, const std::filesystem::path& in_dir, const std::filesystem::path& out_dir);

TrainResult cmd_train(const RunConfig& cfg, const std::filesystem::path& dataset_dir,
                      const std::filesystem::path& out_dir, const std::filesystem::path& resume = {});

// Writes pred_/truth_/overlay_<timestamp>.pgm per test sample; returns the count.
std::size_t cmd_generate(const std::filesystem::path& checkpoint, const std::filesystem::path& dataset_dir,
                         const std::filesystem::path& out_dir);

struct EvalReport {
  std::size_t samples = 0;
  double mean_l1 = 0.0;
  double p50 = 0.0;
  double p90 = 0.0;
  double max_l1 = 0.0;
  double baseline_l1 = 0.0;  // per-pixel median of the training targets
  CentroidScore centroid;
  std::optional<double> empty_scene_l1;  // full-scene datasets with empty test frames
};
EvalReport cmd_eval(const std::filesystem::path& checkpoint, const std::filesystem::path& dataset_dir);
// Same metrics for a model already in memory.
EvalReport evaluate_report(const Wi2ViModel& model, const TrainConfig& train_cfg, const Dataset& train_set,
                           const Dataset& test_set);
std::string format_report(const EvalReport& r);

}  // namespace wi2vi
