#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "../common/oracles.hpp"
#include "test_util.hpp"
#include "wi2vi/csi.hpp"
#include "wi2vi/errors.hpp"

using namespace wi2vi;
constexpr double pi = std::numbers::pi;

namespace {

CsiSample random_sample(std::mt19937_64& rng, CsiShape shape, std::int64_t ts = 0) {
  std::normal_distribution<double> g(0.0, 1.0);
  CsiSample s;
  s.timestamp_us = ts;
  s.shape = shape;
  s.h.resize(shape.size());
  for (auto& v : s.h) v = {g(rng), g(rng)};
  return s;
}

}  // namespace

TEST_CASE("amplitude and phase of axis values") {
  CsiSample s;
  s.shape = {2, 1, 1};
  s.h = {{1.0, 0.0}, {0.0, -1.0}};
  const auto ap = amplitude_phase(s);
  CHECK(ap.amp[0] == 1.0);
  CHECK(ap.phase[0] == 0.0);
  CHECK(ap.amp[1] == 1.0);
  CHECK(ap.phase[1] == doctest::Approx(-pi / 2).epsilon(1e-15));
  CHECK(phase_of({0.0, 0.0}) == 0.0);
  CHECK(phase_of({-1.0, 0.0}) == pi);
  CHECK(phase_of({-1.0, -0.0}) == pi);
}

TEST_CASE("amplitude and phase reconstruct the sample") {
  std::mt19937_64 rng(3);
  const auto s = random_sample(rng, {56, 3, 3});
  const auto ap = amplitude_phase(s);
  for (std::size_t i = 0; i < s.h.size(); ++i) {
    const auto back = std::polar(ap.amp[i], ap.phase[i]);
    CHECK(std::abs(back - s.h[i]) / std::abs(s.h[i]) < 1e-12);
    CHECK(ap.phase[i] > -pi);
    CHECK(ap.phase[i] <= pi);
  }
}

TEST_CASE("unwrap keeps successive differences within pi") {
  const std::vector<double> raw{3.0, -3.0, 3.1, -3.1, 0.0};
  const auto u = unwrap_phase(raw);
  for (std::size_t i = 1; i < u.size(); ++i) CHECK(std::abs(u[i] - u[i - 1]) <= pi);
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double k = (u[i] - raw[i]) / (2 * pi);
    CHECK(std::abs(k - std::round(k)) < 1e-12);
  }
}

TEST_CASE("sanitize: constant phase maps to zero") {
  for (double d : {-3.0, -0.5, 0.0, 1.0, 3.1}) {
    const std::vector<double> phi(56, d);
    for (double v : sanitize_phase(phi)) CHECK(std::abs(v) < 1e-12);
  }
}

TEST_CASE("sanitize: four-point hand example") {
  const std::vector<double> phi{0, pi / 2, pi, 3 * pi / 2};
  // already unwrapped: differences are pi/2
  const auto out = sanitize_phase(phi);
  for (int f = 1; f <= 4; ++f) {
    const double expect = phi[f - 1] - (3.0 * f / 16.0 + 3 * pi / 4);
    CHECK(out[f - 1] == doctest::Approx(expect).epsilon(1e-14));
  }
}

TEST_CASE("sanitize: linear ramp keeps the documented residual") {
  const double c = 0.01, d = 0.5;
  const std::size_t F = 56;
  std::vector<double> phi(F);
  for (std::size_t i = 0; i < F; ++i) phi[i] = c * static_cast<double>(i + 1) + d;
  const auto out = sanitize_phase(phi);
  const auto ref = oracle::sanitize(phi);
  // a1 = c (F-1) / (2 pi F) and a0 = c (F+1) / 2 + d, so the residual is
  // c f (1 - (F-1)/(2 pi F)) - c (F+1) / 2
  const double slope = c * (1.0 - (F - 1.0) / (2 * pi * F));
  for (std::size_t i = 0; i < F; ++i) {
    CHECK(std::abs(out[i] - ref[i]) < 1e-12);
    CHECK(out[i] == doctest::Approx(slope * static_cast<double>(i + 1) - c * (F + 1.0) / 2).epsilon(1e-10));
  }
}

TEST_CASE("sanitize matches the literal oracle on random wrapped phase") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-pi, pi);
  for (std::size_t F : {2u, 8u, 56u}) {
    for (int rep = 0; rep < 100; ++rep) {
      std::vector<double> phi(F);
      for (auto& p : phi) p = u(rng);
      const auto a = sanitize_phase(phi);
      const auto b = oracle::sanitize(phi);
      for (std::size_t i = 0; i < F; ++i) CHECK(std::abs(a[i] - b[i]) <= 1e-12 * std::max(1.0, std::abs(b[i])));
    }
  }
}

TEST_CASE("sanitize rejects fewer than two subcarriers") {
  const std::vector<double> one{0.3};
  CHECK_THROWS_AS(sanitize_phase(one), std::invalid_argument);
  CHECK_THROWS_AS(sanitize_phase(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("sanitize is idempotent on the zero vector") {
  const std::vector<double> z(8, 0.0);
  const auto once = sanitize_phase(z);
  const auto twice = sanitize_phase(once);
  for (double v : twice) CHECK(std::abs(v) < 1e-9);
}

TEST_CASE("sanitize_sample: positive real input is unchanged") {
  CsiSample s;
  s.shape = {8, 2, 2};
  for (std::size_t i = 0; i < s.shape.size(); ++i) s.h.push_back({0.5 + 0.1 * static_cast<double>(i), 0.0});
  const auto out = sanitize_sample(s);
  for (std::size_t i = 0; i < s.h.size(); ++i) CHECK(out.h[i] == s.h[i]);
}

TEST_CASE("sanitize_sample: per-pair constant offsets vanish, amplitudes kept") {
  std::mt19937_64 rng(5);
  CsiSample s;
  s.shape = {56, 3, 3};
  s.h.resize(s.shape.size());
  std::uniform_real_distribution<double> u(-pi, pi), a(0.1, 2.0);
  std::vector<double> theta(9);
  for (auto& t : theta) t = u(rng);
  for (std::size_t f = 0; f < 56; ++f)
    for (std::size_t t = 0; t < 3; ++t)
      for (std::size_t r = 0; r < 3; ++r) s.at(f, t, r) = std::polar(a(rng), theta[t * 3 + r]);
  const auto out = sanitize_sample(s);
  const auto before = amplitude_phase(s);
  const auto after = amplitude_phase(out);
  for (std::size_t i = 0; i < s.h.size(); ++i) {
    CHECK(std::abs(after.phase[i]) < 1e-12);
    CHECK(std::abs(before.amp[i] - after.amp[i]) <= 1e-15 * before.amp[i]);
  }
}

TEST_CASE("feature_stack: tiny hand example") {
  std::vector<CsiSample> s(1);
  s[0].shape = {2, 1, 1};
  s[0].h = {{1.0, 0.0}, {0.0, 1.0}};
  const auto x = feature_stack(s);
  REQUIRE(x.shape() == ad::Shape{2, 1, 2});
  const auto d = x.data();
  CHECK(d[0] == 1.0);
  CHECK(d[1] == 1.0);
  const double a1 = (pi / 2) / (2 * pi * 2), a0 = pi / 4;
  CHECK(d[2] == doctest::Approx(0.0 - (a1 * 1 + a0)).epsilon(1e-15));
  CHECK(d[3] == doctest::Approx(pi / 2 - (a1 * 2 + a0)).epsilon(1e-15));
}

TEST_CASE("feature_stack: default shape and degenerate input") {
  std::vector<CsiSample> s(8);
  for (auto& x : s) {
    x.shape = {56, 3, 3};
    x.h.assign(x.shape.size(), {0.0, 0.0});
  }
  const auto t = feature_stack(s);
  CHECK(t.shape() == ad::Shape{18, 8, 56});
  for (double v : t.data()) CHECK(v == 0.0);
}

TEST_CASE("feature_stack: every entry maps to one (f, t, r, k)") {
  std::mt19937_64 rng(9);
  const CsiShape shape{6, 2, 3};
  std::vector<CsiSample> s;
  for (int k = 0; k < 4; ++k) s.push_back(random_sample(rng, shape, k));
  const AmplitudeStats stats{0.7, 1.3};
  const auto x = feature_stack(s, stats);
  const auto d = x.data();
  for (std::size_t k = 0; k < 4; ++k) {
    const auto ap = amplitude_phase(s[k]);
    for (std::size_t t = 0; t < 2; ++t)
      for (std::size_t r = 0; r < 3; ++r) {
        std::vector<double> raw(6);
        for (std::size_t f = 0; f < 6; ++f) raw[f] = ap.phase[s[k].index(f, t, r)];
        const auto clean = oracle::sanitize(raw);
        for (std::size_t f = 0; f < 6; ++f) {
          const std::size_t ch = 2 * (t * 3 + r);
          const auto src = s[k].index(f, t, r);
          CHECK(d[(ch * 4 + k) * 6 + f] == doctest::Approx((std::abs(s[k].h[src]) - 0.7) / 1.3).epsilon(1e-13));
          CHECK(d[((ch + 1) * 4 + k) * 6 + f] == doctest::Approx(clean[f]).epsilon(1e-12));
        }
      }
  }
}

TEST_CASE("feature_stack rejects mixed shapes") {
  std::mt19937_64 rng(1);
  std::vector<CsiSample> s{random_sample(rng, {4, 1, 1}), random_sample(rng, {4, 1, 2})};
  CHECK_THROWS(feature_stack(s));
}

TEST_CASE("amplitude_stats uses the population std") {
  CsiSample a, b;
  a.shape = b.shape = {2, 1, 1};
  a.h = {{1, 0}, {3, 0}};
  b.h = {{0, 5}, {0, -7}};
  const CsiSample* ptrs[] = {&a, &b};
  const auto st = amplitude_stats(ptrs);
  CHECK(st.mean == doctest::Approx(4.0));
  CHECK(st.std == doctest::Approx(std::sqrt(5.0)));
}

TEST_CASE("CSIT1 round trip") {
  TempDir dir("csit");
  std::mt19937_64 rng(2);
  CsiTrace tr;
  tr.shape = {8, 2, 3};
  for (int i = 0; i < 5; ++i) {
    auto s = random_sample(rng, tr.shape, 100 + 10000 * i);
    if (i % 2) s.rssi_norm = 0.25 * i;
    tr.samples.push_back(s);
  }
  write_csit(dir / "t.csit", tr);
  const auto back = read_csit(dir / "t.csit");
  REQUIRE(back.samples.size() == 5);
  CHECK(back.shape == tr.shape);
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(back.samples[i].timestamp_us == tr.samples[i].timestamp_us);
    CHECK(back.samples[i].rssi_norm == tr.samples[i].rssi_norm);
    CHECK(back.samples[i].h == tr.samples[i].h);
  }
  std::ifstream is(dir / "t.csit", std::ios::binary);
  char magic[8];
  is.read(magic, 8);
  CHECK(std::string(magic, 8) == "CSITRC01");
}

TEST_CASE("CSIT1 rejects damaged files") {
  TempDir dir("csit_bad");
  std::mt19937_64 rng(2);
  CsiTrace tr;
  tr.shape = {4, 1, 1};
  tr.samples.push_back(random_sample(rng, tr.shape, 0));
  tr.samples.push_back(random_sample(rng, tr.shape, 10));
  write_csit(dir / "t.csit", tr);
  const auto size = std::filesystem::file_size(dir / "t.csit");
  std::filesystem::resize_file(dir / "t.csit", size - 5);
  CHECK_THROWS_AS(read_csit(dir / "t.csit"), DataError);
  {
    std::ofstream os(dir / "m.csit", std::ios::binary);
    os << "NOTATRACE_______________";
  }
  CHECK_THROWS_AS(read_csit(dir / "m.csit"), DataError);
  CHECK_THROWS_AS(read_csit(dir / "missing.csit"), DataError);
}

TEST_CASE("trace validation catches non-increasing timestamps") {
  std::mt19937_64 rng(2);
  CsiTrace tr;
  tr.shape = {4, 1, 1};
  tr.samples.push_back(random_sample(rng, tr.shape, 10));
  tr.samples.push_back(random_sample(rng, tr.shape, 10));
  CHECK_THROWS_AS(tr.validate(), DataError);
}
