#include "wi2vi/video.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "wi2vi/errors.hpp"

namespace wi2vi {
namespace {

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

// Reads a netpbm header token, skipping whitespace and comments.
std::string token(std::istream& is, const std::string& file) {
  std::string tok;
  int c;
  while ((c = is.get()) != EOF) {
    if (c == '#') {
      while ((c = is.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) return tok;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  if (tok.empty()) throw DataError("pnm: truncated header in " + file);
  return tok;
}

std::size_t header_number(std::istream& is, const std::string& file) {
  const auto tok = token(is, file);
  try {
    std::size_t pos = 0;
    const auto v = std::stoul(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw DataError("pnm: bad header field '" + tok + "' in " + file);
  }
}

std::vector<std::uint8_t> read_pnm(const std::filesystem::path& path, const char* magic,
                                   std::size_t channels, std::size_t& h, std::size_t& w) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("pnm: cannot open " + path.string());
  const auto file = path.string();
  if (token(is, file) != magic) throw DataError("pnm: expected " + std::string(magic) + " in " + file);
  w = header_number(is, file);
  h = header_number(is, file);
  const auto maxval = header_number(is, file);
  if (w == 0 || h == 0) throw DataError("pnm: zero size in " + file);
  if (maxval != 255) throw DataError("pnm: only 8-bit files are supported: " + file);
  std::vector<std::uint8_t> raw(channels * h * w);
  if (!is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
    throw DataError("pnm: truncated pixel data in " + file);
  }
  return raw;
}

void write_pnm(const std::filesystem::path& path, const char* magic, std::size_t h, std::size_t w,
               const std::vector<std::uint8_t>& raw) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("pnm: cannot open " + path.string() + " for writing");
  os << magic << '\n' << w << ' ' << h << "\n255\n";
  os.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!os) throw DataError("pnm: write failed for " + path.string());
}

void require_same_size(const GrayFrame& a, const GrayFrame& b, const char* op) {
  if (a.h != b.h || a.w != b.w) {
    throw std::invalid_argument(std::string(op) + ": frame sizes differ (" + std::to_string(a.h) + "x" +
                                std::to_string(a.w) + " vs " + std::to_string(b.h) + "x" +
                                std::to_string(b.w) + ")");
  }
}

// Row-stochastic [out][in] box-filter weights for area averaging along one axis.
std::vector<double> area_weights(std::size_t in, std::size_t out) {
  std::vector<double> wts(out * in, 0.0);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t o = 0; o < out; ++o) {
    const double lo = static_cast<double>(o) * scale;
    const double hi = static_cast<double>(o + 1) * scale;
    const auto first = static_cast<std::size_t>(std::floor(lo));
    const auto last = std::min(in, static_cast<std::size_t>(std::ceil(hi)));
    for (std::size_t i = first; i < last; ++i) {
      const double overlap = std::min(hi, static_cast<double>(i + 1)) - std::max(lo, static_cast<double>(i));
      if (overlap > 0.0) wts[o * in + i] = overlap / scale;
    }
  }
  return wts;
}

}  // namespace

GrayFrame GrayFrame::filled(std::size_t h, std::size_t w, double value, std::int64_t ts) {
  GrayFrame f;
  f.timestamp_us = ts;
  f.h = h;
  f.w = w;
  f.pixels.assign(h * w, value);
  return f;
}

void write_pgm(const std::filesystem::path& path, const GrayFrame& frame) {
  std::vector<std::uint8_t> raw(frame.pixels.size());
  std::transform(frame.pixels.begin(), frame.pixels.end(), raw.begin(), to_byte);
  write_pnm(path, "P5", frame.h, frame.w, raw);
}

GrayFrame read_pgm(const std::filesystem::path& path) {
  GrayFrame f;
  const auto raw = read_pnm(path, "P5", 1, f.h, f.w);
  f.pixels.resize(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) f.pixels[i] = raw[i] / 255.0;
  return f;
}

void write_ppm(const std::filesystem::path& path, const RgbFrame& frame) {
  const std::size_t n = frame.h * frame.w;
  std::vector<std::uint8_t> raw(3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < 3; ++c) raw[3 * i + c] = to_byte(frame.planes[c * n + i]);
  }
  write_pnm(path, "P6", frame.h, frame.w, raw);
}

RgbFrame read_ppm(const std::filesystem::path& path) {
  RgbFrame f;
  const auto raw = read_pnm(path, "P6", 3, f.h, f.w);
  const std::size_t n = f.h * f.w;
  f.planes.resize(3 * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < 3; ++c) f.planes[c * n + i] = raw[3 * i + c] / 255.0;
  }
  return f;
}

GrayFrame to_gray(const RgbFrame& rgb) {
  const std::size_t n = rgb.h * rgb.w;
  if (rgb.planes.size() != 3 * n) throw std::invalid_argument("to_gray: expected [3][H][W] planes");
  GrayFrame g = GrayFrame::filled(rgb.h, rgb.w, 0.0, rgb.timestamp_us);
  for (std::size_t i = 0; i < n; ++i) {
    g.pixels[i] = 0.299 * rgb.planes[i] + 0.587 * rgb.planes[n + i] + 0.114 * rgb.planes[2 * n + i];
  }
  return g;
}

std::vector<GrayFrame> downsample_time(const std::vector<GrayFrame>& frames, std::size_t factor) {
  if (factor == 0) throw std::invalid_argument("downsample_time: factor must be >= 1");
  std::vector<GrayFrame> out;
  for (std::size_t i = 0; i < frames.size(); i += factor) out.push_back(frames[i]);
  return out;
}

GrayFrame resize(const GrayFrame& frame, std::size_t out_w, std::size_t out_h) {
  if (out_w == 0 || out_h == 0) throw std::invalid_argument("resize: output size must be positive");
  if (frame.h == 0 || frame.w == 0) throw std::invalid_argument("resize: empty input frame");
  const auto wy = area_weights(frame.h, out_h);
  const auto wx = area_weights(frame.w, out_w);
  // Columns first, then rows.
  std::vector<double> tmp(frame.h * out_w, 0.0);
  for (std::size_t y = 0; y < frame.h; ++y) {
    for (std::size_t ox = 0; ox < out_w; ++ox) {
      double s = 0.0;
      for (std::size_t x = 0; x < frame.w; ++x) s += wx[ox * frame.w + x] * frame.at(y, x);
      tmp[y * out_w + ox] = s;
    }
  }
  GrayFrame out = GrayFrame::filled(out_h, out_w, 0.0, frame.timestamp_us);
  for (std::size_t oy = 0; oy < out_h; ++oy) {
    for (std::size_t y = 0; y < frame.h; ++y) {
      const double wgt = wy[oy * frame.h + y];
      if (wgt == 0.0) continue;
      for (std::size_t ox = 0; ox < out_w; ++ox) out.at(oy, ox) += wgt * tmp[y * out_w + ox];
    }
  }
  return out;
}

GrayFrame background_estimate(const std::vector<GrayFrame>& frames) {
  if (frames.empty()) throw std::invalid_argument("background_estimate: no frames");
  for (const auto& f : frames) require_same_size(frames.front(), f, "background_estimate");
  GrayFrame bg = GrayFrame::filled(frames.front().h, frames.front().w, 0.0);
  std::vector<double> column(frames.size());
  const std::size_t mid = frames.size() / 2;
  for (std::size_t i = 0; i < bg.size(); ++i) {
    for (std::size_t j = 0; j < frames.size(); ++j) column[j] = frames[j].pixels[i];
    std::sort(column.begin(), column.end());
    bg.pixels[i] = frames.size() % 2 ? column[mid] : 0.5 * (column[mid - 1] + column[mid]);
  }
  return bg;
}

GrayFrame background_subtract(const GrayFrame& frame, const GrayFrame& bg, double threshold) {
  require_same_size(frame, bg, "background_subtract");
  if (!(threshold >= 0.0 && threshold < 1.0)) {
    throw std::invalid_argument("background_subtract: threshold must lie in [0, 1)");
  }
  GrayFrame out = GrayFrame::filled(frame.h, frame.w, 0.0, frame.timestamp_us);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double d = std::abs(frame.pixels[i] - bg.pixels[i]);
    if (d > threshold) out.pixels[i] = d;
  }
  return out;
}

double object_spread(const GrayFrame& bframe) {
  if (bframe.size() == 0) throw std::invalid_argument("object_spread: empty frame");
  const auto on = std::count_if(bframe.pixels.begin(), bframe.pixels.end(), [](double v) { return v > 0.0; });
  return static_cast<double>(on) / static_cast<double>(bframe.size());
}

double frame_weight(const GrayFrame& bframe) { return 1.0 - object_spread(bframe); }

std::vector<double> build_mask(const std::vector<MaskRect>& rects, std::size_t h, std::size_t w) {
  std::vector<double> mask(h * w, 1.0);
  for (const auto& r : rects) {
    if (r.x + r.w > w || r.y + r.h > h) {
      throw std::invalid_argument("build_mask: rectangle (" + std::to_string(r.x) + ", " + std::to_string(r.y) +
                                  ", " + std::to_string(r.w) + ", " + std::to_string(r.h) +
                                  ") exceeds the " + std::to_string(w) + "x" + std::to_string(h) + " frame");
    }
    if (!(r.weight >= 0.0 && r.weight <= 1.0)) throw std::invalid_argument("build_mask: weight must lie in [0, 1]");
    for (std::size_t y = r.y; y < r.y + r.h; ++y) {
      for (std::size_t x = r.x; x < r.x + r.w; ++x) mask[y * w + x] = std::min(mask[y * w + x], r.weight);
    }
  }
  return mask;
}

}  // namespace wi2vi
