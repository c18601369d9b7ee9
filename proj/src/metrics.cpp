#include "wi2vi/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "wi2vi/errors.hpp"
#include "wi2vi/trainer.hpp"

namespace wi2vi {

Centroid brightest_blob_centroid(const GrayFrame& frame) {
  Centroid c;
  if (frame.pixels.empty()) return c;
  const auto best = std::max_element(frame.pixels.begin(), frame.pixels.end());
  const double peak = *best;
  if (!(peak > 0.0)) return c;
  const double cut = 0.5 * peak;
  std::vector<char> seen(frame.size(), 0);
  std::vector<std::size_t> stack{static_cast<std::size_t>(best - frame.pixels.begin())};
  seen[stack[0]] = 1;
  double sx = 0.0, sy = 0.0;
  std::size_t count = 0;
  while (!stack.empty()) {
    const auto p = stack.back();
    stack.pop_back();
    const auto y = p / frame.w, x = p % frame.w;
    sx += static_cast<double>(x);
    sy += static_cast<double>(y);
    ++count;
    const auto visit = [&](std::size_t q) {
      if (!seen[q] && frame.pixels[q] >= cut) {
        seen[q] = 1;
        stack.push_back(q);
      }
    };
    if (x > 0) visit(p - 1);
    if (x + 1 < frame.w) visit(p + 1);
    if (y > 0) visit(p - frame.w);
    if (y + 1 < frame.h) visit(p + frame.w);
  }
  c.valid = true;
  c.x = sx / static_cast<double>(count);
  c.y = sy / static_cast<double>(count);
  return c;
}

Centroid mask_centroid(const std::vector<bool>& mask, std::size_t h, std::size_t w) {
  if (mask.size() != h * w) throw std::invalid_argument("mask_centroid: size mismatch");
  Centroid c;
  double sx = 0.0, sy = 0.0;
  std::size_t count = 0;
  for (std::size_t p = 0; p < mask.size(); ++p) {
    if (!mask[p]) continue;
    sx += static_cast<double>(p % w);
    sy += static_cast<double>(p / w);
    ++count;
  }
  if (count == 0) return c;
  c.valid = true;
  c.x = sx / static_cast<double>(count);
  c.y = sy / static_cast<double>(count);
  return c;
}

std::vector<bool> silhouette_mask(const WeightedFrame& target, const GrayFrame* background) {
  const auto& f = target.frame;
  std::vector<bool> m(f.size(), false);
  if (target.background_removed || !background) {
    for (std::size_t p = 0; p < f.size(); ++p) m[p] = f.pixels[p] > 0.0;
    return m;
  }
  if (background->h != f.h || background->w != f.w) throw DataError("silhouette: background size mismatch");
  for (std::size_t p = 0; p < f.size(); ++p) m[p] = std::abs(f.pixels[p] - background->pixels[p]) > kSilhouetteThreshold;
  return m;
}

GrayFrame deviation(const GrayFrame& frame, const GrayFrame* background) {
  if (!background) return frame;
  if (background->h != frame.h || background->w != frame.w) throw DataError("deviation: background size mismatch");
  GrayFrame d = frame;
  for (std::size_t p = 0; p < d.size(); ++p) d.pixels[p] = std::abs(frame.pixels[p] - background->pixels[p]);
  return d;
}

CentroidScore centroid_score(const std::vector<GrayFrame>& predictions, const Dataset& ds, double radius_frac) {
  if (predictions.size() != ds.size()) throw std::invalid_argument("centroid_score: one prediction per sample");
  const GrayFrame* bg = nullptr;
  if (ds.mode == DatasetMode::full_scene) {
    if (!ds.background) throw DataError("centroid_score: full-scene dataset has no background");
    bg = &*ds.background;
  }
  CentroidScore s;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& t = ds.samples[i].frame;
    const auto mask = silhouette_mask(t, bg);
    if (std::find(mask.begin(), mask.end(), true) == mask.end()) continue;
    // Same blob rule as the prediction, so anti-aliased edges weigh in identically.
    const auto truth = brightest_blob_centroid(deviation(t.frame, bg));
    if (!truth.valid) continue;
    ++s.counted;
    const double diag = std::hypot(static_cast<double>(t.frame.h), static_cast<double>(t.frame.w));
    const auto pred = brightest_blob_centroid(deviation(predictions[i], bg));
    const double err = pred.valid ? std::hypot(pred.x - truth.x, pred.y - truth.y) : diag;
    s.errors.push_back(err);
    if (pred.valid && err <= radius_frac * diag) ++s.hits;
  }
  if (s.counted) {
    s.rate = static_cast<double>(s.hits) / static_cast<double>(s.counted);
    double sum = 0.0;
    for (double e : s.errors) sum += e;
    s.mean_error = sum / static_cast<double>(s.counted);
  }
  return s;
}

std::optional<double> empty_scene_l1(const std::vector<GrayFrame>& predictions, const Dataset& ds,
                                     const GrayFrame& background) {
  if (predictions.size() != ds.size()) throw std::invalid_argument("empty_scene_l1: one prediction per sample");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto m = silhouette_mask(ds.samples[i].frame, &background);
    if (std::find(m.begin(), m.end(), true) != m.end()) continue;
    const auto& p = predictions[i];
    if (p.size() != background.size()) throw DataError("empty_scene_l1: size mismatch");
    double l = 0.0;
    for (std::size_t q = 0; q < p.size(); ++q) l += std::abs(p.pixels[q] - background.pixels[q]);
    sum += l / static_cast<double>(p.size());
    ++count;
  }
  if (!count) return std::nullopt;
  return sum / static_cast<double>(count);
}

GrayFrame median_target(const Dataset& ds) {
  std::vector<GrayFrame> frames;
  frames.reserve(ds.size());
  for (const auto& s : ds.samples) frames.push_back(s.frame.frame);
  return background_estimate(frames);
}

double constant_frame_l1(const GrayFrame& frame, const Dataset& ds) {
  if (ds.samples.empty()) throw DataError("constant_frame_l1: empty dataset");
  double sum = 0.0;
  for (const auto& s : ds.samples) sum += sample_weighted_l1(frame, s.frame);
  return sum / static_cast<double>(ds.size());
}

double percentile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("percentile: no values");
  if (!(q >= 0.0 && q <= 100.0)) throw std::invalid_argument("percentile: q outside [0, 100]");
  std::sort(values.begin(), values.end());
  const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

}  // namespace wi2vi
