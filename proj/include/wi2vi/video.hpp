#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace wi2vi {

// Grayscale image with values in [0, 1], row-major [h][w].
struct GrayFrame {
  std::int64_t timestamp_us = 0;
  std::size_t h = 0;
  std::size_t w = 0;
  std::vector<double> pixels;

  static GrayFrame filled(std::size_t h, std::size_t w, double value, std::int64_t ts = 0);
  double& at(std::size_t y, std::size_t x) { return pixels[y * w + x]; }
  double at(std::size_t y, std::size_t x) const { return pixels[y * w + x]; }
  std::size_t size() const { return h * w; }
};

// Planar RGB, [3][h][w], values in [0, 1].
struct RgbFrame {
  std::int64_t timestamp_us = 0;
  std::size_t h = 0;
  std::size_t w = 0;
  std::vector<double> planes;
};

// Axis-aligned pixel rectangle with its loss weight.
struct MaskRect {
  std::size_t x = 0;
  std::size_t y = 0;
  std::size_t w = 0;
  std::size_t h = 0;
  double weight = 0.0;
  bool operator==(const MaskRect&) const = default;
};

// A preprocessed training target.
struct WeightedFrame {
  GrayFrame frame;
  double weight = 1.0;
  std::vector<MaskRect> mask_rects;
  bool background_removed = false;
};

// Binary 8-bit PGM (P5) and PPM (P6). Writing rounds v * 255 after clamping to [0, 1].
void write_pgm(const std::filesystem::path& path, const GrayFrame& frame);
GrayFrame read_pgm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const RgbFrame& frame);
RgbFrame read_ppm(const std::filesystem::path& path);

// Luma 0.299 R + 0.587 G + 0.114 B.
GrayFrame to_gray(const RgbFrame& rgb);

// Keeps frames 0, factor, 2 factor, ... Throws std::invalid_argument for factor 0.
std::vector<GrayFrame> downsample_time(const std::vector<GrayFrame>& frames, std::size_t factor);

// Area-average resampling to out_w x out_h.
GrayFrame resize(const GrayFrame& frame, std::size_t out_w, std::size_t out_h);

// Per-pixel median of equally sized frames (mean of the middle pair for even counts).
GrayFrame background_estimate(const std::vector<GrayFrame>& frames);

// |frame - bg| where it exceeds threshold, else 0. Keeps frame's timestamp.
GrayFrame background_subtract(const GrayFrame& frame, const GrayFrame& bg, double threshold);

// Fraction of strictly positive pixels.
double object_spread(const GrayFrame& bframe);
double frame_weight(const GrayFrame& bframe);

// Lower bound applied to frame weights before they enter the loss.
inline constexpr double kMinFrameWeight = 1e-3;

// Ones everywhere, each rectangle set to its weight, overlaps take the minimum.
std::vector<double> build_mask(const std::vector<MaskRect>& rects, std::size_t h, std::size_t w);

}  // namespace wi2vi
