#pragma once

#include <optional>
#include <vector>

#include "wi2vi/dataset.hpp"
#include "wi2vi/video.hpp"

namespace wi2vi {

// |target - background| above this marks silhouette pixels in full-scene frames.
inline constexpr double kSilhouetteThreshold = 0.05;

struct Centroid {
  bool valid = false;
  double x = 0.0;  // column
  double y = 0.0;  // row
};

// Pixels >= half the maximum, 4-connected to the argmax (first in raster
// order on ties), averaged unweighted. Invalid when the maximum is <= 0.
Centroid brightest_blob_centroid(const GrayFrame& frame);

// Unweighted mean position of the pixels where mask is nonzero.
Centroid mask_centroid(const std::vector<bool>& mask, std::size_t h, std::size_t w);

// Silhouette pixels of a target: nonzero pixels of a background-removed frame,
// or pixels that differ from the background by more than kSilhouetteThreshold.
std::vector<bool> silhouette_mask(const WeightedFrame& target, const GrayFrame* background);

// |frame - background|, or the frame itself without a background.
GrayFrame deviation(const GrayFrame& frame, const GrayFrame* background);

struct CentroidScore {
  std::size_t counted = 0;  // test frames that contain a silhouette
  std::size_t hits = 0;
  double rate = 0.0;
  double mean_error = 0.0;  // in pixels, over counted frames
  std::vector<double> errors;
};

// Frames whose target holds a silhouette are scored. A hit is a predicted blob
// centroid within radius_frac of the frame diagonal of the target's blob
// centroid, both found by brightest_blob_centroid on the deviation frame. Full-scene datasets compare deviations from
// ds.background, which must then be present.
CentroidScore centroid_score(const std::vector<GrayFrame>& predictions, const Dataset& ds, double radius_frac = 0.3);

// Mean |prediction - background| over samples whose target has no silhouette.
// Empty when every sample contains one.
std::optional<double> empty_scene_l1(const std::vector<GrayFrame>& predictions, const Dataset& ds,
                                     const GrayFrame& background);

// Per-pixel median of the targets of a dataset.
GrayFrame median_target(const Dataset& ds);

// Mean weighted L1 of predicting the same frame for every sample.
double constant_frame_l1(const GrayFrame& frame, const Dataset& ds);

// Linear-interpolated percentile, q in [0, 100].
double percentile(std::vector<double> values, double q);

}  // namespace wi2vi
