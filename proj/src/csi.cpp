#include "wi2vi/csi.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "wi2vi/errors.hpp"

namespace wi2vi {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr char kCsitMagic[8] = {'C', 'S', 'I', 'T', 'R', 'C', '0', '1'};

static_assert(std::endian::native == std::endian::little, "CSIT1 I/O assumes a little-endian host");

template <class V>
void put(std::ostream& os, V v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(V));
}

template <class V>
V get(std::istream& is, const std::string& what) {
  V v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(V))) {
    throw DataError("csit: truncated file while reading " + what);
  }
  return v;
}

}  // namespace

void CsiTrace::validate() const {
  if (shape.F < 2 || shape.T == 0 || shape.R == 0) throw DataError("csit: invalid shape");
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (s.shape != shape || s.h.size() != shape.size()) {
      throw DataError("csit: sample " + std::to_string(i) + " does not match the trace shape");
    }
    if (i > 0 && s.timestamp_us <= samples[i - 1].timestamp_us) {
      throw DataError("csit: timestamps not strictly increasing at sample " + std::to_string(i));
    }
    for (const auto& z : s.h) {
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
        throw DataError("csit: non-finite value in sample " + std::to_string(i));
      }
    }
  }
}

std::int64_t CsiTrace::start_us() const {
  if (samples.empty()) throw DataError("csit: empty trace");
  return samples.front().timestamp_us;
}

std::int64_t CsiTrace::end_us() const {
  if (samples.empty()) throw DataError("csit: empty trace");
  return samples.back().timestamp_us;
}

double phase_of(cplx z) {
  if (z.real() == 0.0 && z.imag() == 0.0) return 0.0;
  const double p = std::atan2(z.imag(), z.real());
  return p <= -kPi ? kPi : p;
}

AmpPhase amplitude_phase(const CsiSample& sample) {
  AmpPhase out;
  out.amp.resize(sample.h.size());
  out.phase.resize(sample.h.size());
  for (std::size_t i = 0; i < sample.h.size(); ++i) {
    out.amp[i] = std::abs(sample.h[i]);
    out.phase[i] = phase_of(sample.h[i]);
  }
  return out;
}

std::vector<double> unwrap_phase(std::span<const double> phase) {
  std::vector<double> out(phase.begin(), phase.end());
  double offset = 0.0;
  for (std::size_t i = 1; i < phase.size(); ++i) {
    const double d = phase[i] - phase[i - 1];
    if (d > kPi) {
      offset -= 2.0 * kPi * std::ceil((d - kPi) / (2.0 * kPi));
    } else if (d < -kPi) {
      offset += 2.0 * kPi * std::ceil((-d - kPi) / (2.0 * kPi));
    }
    out[i] = phase[i] + offset;
  }
  return out;
}

std::vector<double> sanitize_phase(std::span<const double> phase) {
  const std::size_t F = phase.size();
  if (F < 2) throw std::invalid_argument("sanitize_phase: need at least 2 subcarriers");
  auto phi = unwrap_phase(phase);
  const double a1 = (phi[F - 1] - phi[0]) / (2.0 * kPi * static_cast<double>(F));
  double a0 = 0.0;
  for (double p : phi) a0 += p;
  a0 /= static_cast<double>(F);
  for (std::size_t i = 0; i < F; ++i) phi[i] -= a1 * static_cast<double>(i + 1) + a0;
  return phi;
}

CsiSample sanitize_sample(const CsiSample& sample) {
  const auto& s = sample.shape;
  CsiSample out = sample;
  std::vector<double> phase(s.F);
  for (std::size_t t = 0; t < s.T; ++t) {
    for (std::size_t r = 0; r < s.R; ++r) {
      for (std::size_t f = 0; f < s.F; ++f) phase[f] = phase_of(sample.at(f, t, r));
      const auto clean = sanitize_phase(phase);
      for (std::size_t f = 0; f < s.F; ++f) out.at(f, t, r) = std::polar(std::abs(sample.at(f, t, r)), clean[f]);
    }
  }
  return out;
}

AmplitudeStats amplitude_stats(std::span<const CsiSample* const> samples) {
  double sum = 0.0, sum_sq = 0.0;
  std::size_t n = 0;
  for (const auto* s : samples) {
    for (const auto& z : s->h) {
      const double a = std::abs(z);
      sum += a;
      sum_sq += a * a;
      ++n;
    }
  }
  if (n == 0) throw DataError("amplitude_stats: no samples");
  AmplitudeStats st;
  st.mean = sum / static_cast<double>(n);
  const double var = std::max(0.0, sum_sq / static_cast<double>(n) - st.mean * st.mean);
  st.std = std::sqrt(var);
  if (!(st.std > 0.0)) st.std = 1.0;
  return st;
}

template <class T>
void feature_stack_into(std::span<const CsiSample* const> samples, const AmplitudeStats& stats,
                        std::span<T> out) {
  if (samples.empty()) throw std::invalid_argument("feature_stack: no samples");
  const CsiShape s = samples.front()->shape;
  const std::size_t k = samples.size();
  if (out.size() != s.channels() * k * s.F) throw std::invalid_argument("feature_stack: output size mismatch");
  std::vector<double> phase(s.F);
  for (std::size_t i = 0; i < k; ++i) {
    const auto& smp = *samples[i];
    if (smp.shape != s || smp.h.size() != s.size()) {
      throw std::invalid_argument("feature_stack: samples differ in (F, T, R)");
    }
    for (std::size_t t = 0; t < s.T; ++t) {
      for (std::size_t r = 0; r < s.R; ++r) {
        const std::size_t ch = 2 * (t * s.R + r);
        T* amp_row = out.data() + (ch * k + i) * s.F;
        T* phase_row = out.data() + ((ch + 1) * k + i) * s.F;
        for (std::size_t f = 0; f < s.F; ++f) {
          const cplx z = smp.at(f, t, r);
          amp_row[f] = static_cast<T>((std::abs(z) - stats.mean) / stats.std);
          phase[f] = phase_of(z);
        }
        const auto clean = sanitize_phase(phase);
        for (std::size_t f = 0; f < s.F; ++f) phase_row[f] = static_cast<T>(clean[f]);
      }
    }
  }
}

template void feature_stack_into<float>(std::span<const CsiSample* const>, const AmplitudeStats&,
                                        std::span<float>);
template void feature_stack_into<double>(std::span<const CsiSample* const>, const AmplitudeStats&,
                                         std::span<double>);

ad::Tensor feature_stack(std::span<const CsiSample> samples, const AmplitudeStats& stats) {
  if (samples.empty()) throw std::invalid_argument("feature_stack: no samples");
  std::vector<const CsiSample*> ptrs;
  for (const auto& s : samples) ptrs.push_back(&s);
  const auto& sh = samples.front().shape;
  auto out = ad::Tensor::zeros({sh.channels(), samples.size(), sh.F});
  feature_stack_into<double>(ptrs, stats, out.data());
  return out;
}

void write_csit(const std::filesystem::path& path, const CsiTrace& trace) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw DataError("csit: cannot open " + path.string() + " for writing");
  os.write(kCsitMagic, sizeof(kCsitMagic));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(trace.shape.F));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(trace.shape.T));
  put<std::uint32_t>(os, static_cast<std::uint32_t>(trace.shape.R));
  put<std::uint64_t>(os, trace.samples.size());
  for (const auto& s : trace.samples) {
    if (s.shape != trace.shape || s.h.size() != trace.shape.size()) {
      throw DataError("csit: sample shape does not match the trace shape");
    }
    put<std::uint64_t>(os, static_cast<std::uint64_t>(s.timestamp_us));
    put<double>(os, s.rssi_norm.value_or(std::numeric_limits<double>::quiet_NaN()));
    for (const auto& z : s.h) {
      put<double>(os, z.real());
      put<double>(os, z.imag());
    }
  }
  if (!os) throw DataError("csit: write failed for " + path.string());
}

CsiTrace read_csit(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("csit: cannot open " + path.string());
  char magic[8];
  if (!is.read(magic, sizeof(magic)) || std::memcmp(magic, kCsitMagic, sizeof(magic)) != 0) {
    throw DataError("csit: bad magic in " + path.string());
  }
  CsiTrace trace;
  trace.shape.F = get<std::uint32_t>(is, "header");
  trace.shape.T = get<std::uint32_t>(is, "header");
  trace.shape.R = get<std::uint32_t>(is, "header");
  const auto count = get<std::uint64_t>(is, "header");
  if (trace.shape.F < 2 || trace.shape.T == 0 || trace.shape.R == 0) {
    throw DataError("csit: invalid shape in " + path.string());
  }
  // Guard the allocation against a corrupt count.
  const auto here = is.tellg();
  is.seekg(0, std::ios::end);
  const auto remaining = static_cast<std::uint64_t>(is.tellg() - here);
  is.seekg(here);
  const std::uint64_t per_sample = 16 + 16 * trace.shape.size();
  if (count > remaining / per_sample) throw DataError("csit: truncated file " + path.string());

  trace.samples.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    auto& s = trace.samples[i];
    s.shape = trace.shape;
    s.timestamp_us = static_cast<std::int64_t>(get<std::uint64_t>(is, "timestamp"));
    const double rssi = get<double>(is, "rssi_norm");
    if (!std::isnan(rssi)) s.rssi_norm = rssi;
    s.h.resize(trace.shape.size());
    std::vector<double> raw(2 * trace.shape.size());
    if (!is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size() * 8))) {
      throw DataError("csit: truncated file " + path.string());
    }
    for (std::size_t j = 0; j < s.h.size(); ++j) s.h[j] = {raw[2 * j], raw[2 * j + 1]};
  }
  trace.validate();
  return trace;
}

}  // namespace wi2vi
