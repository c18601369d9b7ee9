#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "wi2vi/ops.hpp"
#include "wi2vi/tensor.hpp"

namespace gradcheck {

using wi2vi::ad::Tensor;

// Central differences of f with respect to every entry of t, in place.
inline std::vector<double> numeric_grad(Tensor& t, const std::function<double()>& f, double h = 1e-4) {
  auto d = t.data();
  std::vector<double> g(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double keep = d[i];
    d[i] = keep + h;
    const double up = f();
    d[i] = keep - h;
    const double down = f();
    d[i] = keep;
    g[i] = (up - down) / (2 * h);
  }
  return g;
}

// max |a - n| over max(|a|, |n|), taken across the whole tensor. Zero when
// both gradients vanish.
inline double rel_error(std::span<const double> analytic, std::span<const double> numeric) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff = std::max(diff, std::abs(analytic[i] - numeric[i]));
    scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric[i])});
  }
  if (scale < 1e-14) return diff;
  return diff / scale;
}

inline Tensor random_tensor(std::mt19937_64& rng, wi2vi::ad::Shape shape, double lo = -1.0, double hi = 1.0,
                            bool requires_grad = true, double avoid = 0.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(wi2vi::ad::shape_numel(shape));
  for (auto& x : v) {
    do {
      x = u(rng);
    } while (std::abs(x) < avoid);
  }
  return Tensor::from(std::move(shape), std::move(v), requires_grad);
}

struct Result {
  double worst = 0.0;
  std::string where;
};

// Builds loss = <build(), coeffs> on a recording tape, backpropagates, and
// compares the gradient of every listed input against central differences.
inline Result check(const std::function<Tensor(wi2vi::ad::Tape&)>& build, std::vector<std::pair<std::string, Tensor>> inputs,
                    std::uint64_t seed = 1, double h = 1e-4) {
  using namespace wi2vi::ad;
  Tape probe = Tape::inference();
  const auto shape = build(probe).shape();
  std::mt19937_64 rng(seed);
  const auto coeffs = random_tensor(rng, shape, -1.0, 1.0, false);
  for (auto& [name, t] : inputs) t.zero_grad();
  Tape tape;
  const auto loss = inner(tape, build(tape), coeffs);
  backward(loss, tape);
  const auto f = [&] {
    Tape t = Tape::inference();
    return inner(t, build(t), coeffs).item();
  };
  Result r;
  for (auto& [name, t] : inputs) {
    const auto g = t.grad();
    const std::vector<double> analytic(g.begin(), g.end());
    const auto numeric = numeric_grad(t, f, h);
    const double e = rel_error(analytic, numeric);
    if (e >= r.worst) {
      r.worst = e;
      r.where = name;
    }
  }
  return r;
}

}  // namespace gradcheck
