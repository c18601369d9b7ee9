#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "wi2vi/csi.hpp"
#include "wi2vi/video.hpp"

namespace wi2vi {

enum class DatasetMode { background_removed, full_scene };

std::string to_string(DatasetMode mode);
// Accepts "background_removed" (alias "dynamics") and "full_scene".
DatasetMode dataset_mode_from_string(const std::string& s);

// Indices of the n trace samples nearest in time to frame_ts, sorted by
// timestamp. Ties go to the earlier sample. Throws DataError if the trace
// holds fewer than n samples.
std::vector<std::size_t> build_ftn(std::int64_t frame_ts, const CsiTrace& trace, std::size_t n);

struct DatasetSample {
  WeightedFrame frame;
  std::vector<std::size_t> csi_indices;  // FTN, sorted by timestamp
  std::int64_t frame_timestamp_us = 0;
};

struct Dataset {
  std::vector<DatasetSample> samples;  // ordered by frame timestamp
  std::shared_ptr<const CsiTrace> trace;
  AmplitudeStats normalization_stats;
  std::size_t n = 29;
  std::size_t k_default = 8;
  DatasetMode mode = DatasetMode::background_removed;
  double train_fraction = 0.95;
  std::optional<GrayFrame> background;  // static background, when known

  std::size_t size() const { return samples.size(); }
};

// Amplitude statistics over every trace sample referenced by the dataset.
AmplitudeStats dataset_amplitude_stats(const Dataset& ds);

struct BuildReport {
  std::size_t kept = 0;
  std::size_t dropped = 0;
};

// One sample per frame. A frame is dropped when its FTN reaches further from
// the frame time than the trace extends on either side. Frame pixels are
// quantized to the 8-bit grid used on disk. Throws DataError if nothing is left.
Dataset build_dataset(const std::vector<WeightedFrame>& frames, std::shared_ptr<const CsiTrace> trace,
                      std::size_t n, DatasetMode mode, BuildReport* report = nullptr);

// First floor(fraction * N) samples train, the rest test. Normalization stats
// are recomputed on the train part and copied to test.
std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction);
std::size_t split_point(std::size_t n, double train_fraction);

// k distinct indices drawn uniformly from [0, n), returned ascending.
std::vector<std::size_t> dropin_select_indices(std::size_t n, std::size_t k, std::mt19937_64& rng);

// The n x k one-hot selection matrix (row-major) for a selection.
std::vector<int> dropin_matrix(const std::vector<std::size_t>& selection, std::size_t n);

// The k selected trace samples of an FTN.
std::vector<const CsiSample*> dropin_select(const Dataset& ds, const DatasetSample& sample, std::size_t k,
                                            std::mt19937_64& rng);

// k of n positions spread evenly, used when dropin is disabled.
std::vector<std::size_t> strided_indices(std::size_t n, std::size_t k);

// Seed of the rng stream owned by one data fetch.
std::uint64_t fetch_seed(std::uint64_t global_seed, std::uint64_t epoch, std::uint64_t sample_index);

// Dataset directory: manifest.json, trace.csit, frames/*.pgm, background.pgm.
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace wi2vi
