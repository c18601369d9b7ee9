#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "wi2vi/dataset.hpp"
#include "wi2vi/model.hpp"

namespace wi2vi {

enum class Precision { float32, float64 };

struct TrainConfig {
  double lr0 = 0.002;
  double lr_decay = 0.045;  // multiplicative, once per decay_every epochs
  std::size_t decay_every = 5;
  std::size_t epochs = 200;
  std::size_t batch_size = 32;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.0;
  std::uint64_t seed = 1;  // model init and dropin streams
  std::size_t k = 8;       // dropin width
  bool shuffle = false;
  Precision precision = Precision::float32;
  std::size_t checkpoint_every = 0;  // 0: final checkpoint only
  bool eval_dropin = true;           // false: evenly strided k of n
  std::uint64_t eval_seed = 0;
  std::size_t eval_batch = 32;
  bool eval_every_epoch = true;
  bool verbose = true;

  void validate() const;
};

void to_json(nlohmann::json& j, const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j, const std::string& path = "train");
std::string to_string(Precision p);

// lr0 * (1 - lr_decay)^floor(epoch / decay_every)
double lr_at(std::size_t epoch, const TrainConfig& cfg);

template <class T>
struct OptimizerState {
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;
  std::uint64_t t = 0;

  static OptimizerState zeros_like(const std::vector<NamedTensorT<T>>& params);
};

// Bias-corrected Adam with decoupled weight decay, reading each parameter's gradient.
template <class T>
void adam_step(const std::vector<NamedTensorT<T>>& params, OptimizerState<T>& state, double lr,
               const TrainConfig& cfg);

// How the k inputs of each sample are picked from its FTN.
struct FetchPolicy {
  bool dropin = true;
  std::uint64_t seed = 0;
  std::uint64_t epoch = 0;
};

template <class T>
struct Batch {
  ad::BasicTensor<T> inputs;   // [N][2TR][k][F]
  ad::BasicTensor<T> targets;  // [N][H][W]
  ad::BasicTensor<T> masks;    // [N][H][W]
  std::vector<double> weights;
};

template <class T>
Batch<T> make_batch(const Dataset& ds, std::span<const std::size_t> indices, std::size_t k, const FetchPolicy& policy);

// Mean weighted L1 of the batch before the update.
template <class T>
double train_step(Wi2ViModelT<T>& model, const Dataset& ds, std::span<const std::size_t> indices,
                  std::size_t epoch, OptimizerState<T>& opt, const TrainConfig& cfg);

struct EvalResult {
  double mean_l1 = 0.0;
  std::vector<double> per_sample;
  std::vector<GrayFrame> predictions;  // filled when requested, unclamped
};

// Weighted L1 of each sample, w * sum(mask |pred - target|) / sum(mask), with w clamped below.
double sample_weighted_l1(const GrayFrame& pred, const WeightedFrame& target);

template <class T>
EvalResult evaluate(const Wi2ViModelT<T>& model, const Dataset& ds, const TrainConfig& cfg,
                    bool keep_predictions = false);

struct HistoryRow {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_l1 = 0.0;
  double eval_l1 = 0.0;  // NaN when there is no test set
};

void write_history_csv(const std::filesystem::path& path, const std::vector<HistoryRow>& rows);

struct CheckpointMeta {
  ModelConfig model;
  TrainConfig train;
  std::size_t epochs_done = 0;
  std::vector<HistoryRow> history;
};

// Model plus optional optimizer state in W2VP1, with a JSON sidecar (same stem, .json).
template <class T>
void save_checkpoint(const std::filesystem::path& path, const Wi2ViModelT<T>& model, const OptimizerState<T>* opt,
                     const CheckpointMeta& meta);

struct LoadedCheckpoint {
  Wi2ViModel model;  // parameters widened to double
  CheckpointMeta meta;
  std::optional<OptimizerState<double>> optimizer;
};
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);
std::filesystem::path checkpoint_sidecar(const std::filesystem::path& path);

struct TrainOptions {
  std::filesystem::path out_dir;  // empty: no files written
  std::filesystem::path resume;   // checkpoint to continue from
  std::function<void(const HistoryRow&)> on_epoch;
};

struct TrainResult {
  Wi2ViModel model;
  std::vector<HistoryRow> history;
  std::filesystem::path final_checkpoint;
};

// Runs the epoch loop in cfg.precision. Model init uses cfg.seed.
TrainResult train(const ModelConfig& model_cfg, const Dataset& train_set, const Dataset& test_set,
                  const TrainConfig& cfg, const TrainOptions& opts = {});

// Evaluates in the requested precision.
EvalResult evaluate_as(const Wi2ViModel& model, const Dataset& ds, const TrainConfig& cfg, bool keep_predictions);

// Large allocations reuse the heap instead of mmap round-trips; glibc only.
void tune_allocator();

}  // namespace wi2vi
