#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wi2vi/tensor.hpp"

namespace wi2vi {

using cplx = std::complex<double>;

struct CsiShape {
  std::size_t F = 56;  // subcarriers
  std::size_t T = 3;   // tx antennas
  std::size_t R = 3;   // rx antennas

  std::size_t size() const { return F * T * R; }
  std::size_t channels() const { return 2 * T * R; }
  bool operator==(const CsiShape&) const = default;
};

// One channel snapshot. h is stored (f, t, r) row-major.
struct CsiSample {
  std::int64_t timestamp_us = 0;
  CsiShape shape;
  std::vector<cplx> h;
  std::optional<double> rssi_norm;

  std::size_t index(std::size_t f, std::size_t t, std::size_t r) const {
    return (f * shape.T + t) * shape.R + r;
  }
  cplx& at(std::size_t f, std::size_t t, std::size_t r) { return h[index(f, t, r)]; }
  const cplx& at(std::size_t f, std::size_t t, std::size_t r) const { return h[index(f, t, r)]; }
};

struct CsiTrace {
  CsiShape shape;
  std::vector<CsiSample> samples;

  // Throws DataError on a shape mismatch, non-finite entry or non-increasing timestamp.
  void validate() const;
  std::int64_t start_us() const;
  std::int64_t end_us() const;
};

// Phase in (-pi, pi]; the phase of 0 is 0.
double phase_of(cplx z);

struct AmpPhase {
  std::vector<double> amp;    // [F][T][R]
  std::vector<double> phase;  // [F][T][R]
};

AmpPhase amplitude_phase(const CsiSample& sample);

// Adds multiples of 2*pi so successive differences stay within [-pi, pi].
std::vector<double> unwrap_phase(std::span<const double> phase);

// Linear phase removal along subcarriers. Input is indexed 0..F-1 in storage,
// f = 1..F in the model: after unwrapping,
//   a1 = (phi_F - phi_1) / (2 pi F),  a0 = mean(phi),  out_f = phi_f - (a1 f + a0).
// Throws std::invalid_argument when F < 2.
std::vector<double> sanitize_phase(std::span<const double> phase);

// Replaces each antenna pair's phase with its sanitized version, keeping amplitudes.
CsiSample sanitize_sample(const CsiSample& sample);

// Amplitude standardization applied by feature_stack.
struct AmplitudeStats {
  double mean = 0.0;
  double std = 1.0;
};

// Mean and population std of every amplitude in the given samples.
AmplitudeStats amplitude_stats(std::span<const CsiSample* const> samples);

// Writes the [2TR][k][F] network input for k samples into out (numel 2TR*k*F).
// Channel 2(tR+r) is the standardized amplitude, 2(tR+r)+1 the sanitized phase.
template <class T>
void feature_stack_into(std::span<const CsiSample* const> samples, const AmplitudeStats& stats,
                        std::span<T> out);

ad::Tensor feature_stack(std::span<const CsiSample> samples, const AmplitudeStats& stats = {});

// CSIT1 binary trace format.
void write_csit(const std::filesystem::path& path, const CsiTrace& trace);
CsiTrace read_csit(const std::filesystem::path& path);

}  // namespace wi2vi
