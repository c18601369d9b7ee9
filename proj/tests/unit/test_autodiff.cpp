#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "../common/gradcheck.hpp"
#include "wi2vi/ops.hpp"

using namespace wi2vi::ad;
using gradcheck::random_tensor;

namespace {

// Direct 6-loop cross-correlation, single sample.
std::vector<double> naive_conv(const Tensor& x, const Tensor& w, const Tensor& b, const Conv2dParams& p) {
  const auto C = x.dim(0), H = x.dim(1), W = x.dim(2);
  const auto O = w.dim(0), KH = w.dim(2), KW = w.dim(3);
  const auto OH = (H + 2 * p.pad_h - KH) / p.stride_h + 1;
  const auto OW = (W + 2 * p.pad_w - KW) / p.stride_w + 1;
  std::vector<double> out(O * OH * OW);
  const auto xv = x.data();
  const auto wv = w.data();
  for (std::size_t o = 0; o < O; ++o)
    for (std::size_t i = 0; i < OH; ++i)
      for (std::size_t j = 0; j < OW; ++j) {
        double acc = b.data()[o];
        for (std::size_t c = 0; c < C; ++c)
          for (std::size_t u = 0; u < KH; ++u)
            for (std::size_t v = 0; v < KW; ++v) {
              const long y = static_cast<long>(i * p.stride_h + u) - static_cast<long>(p.pad_h);
              const long z = static_cast<long>(j * p.stride_w + v) - static_cast<long>(p.pad_w);
              if (y < 0 || z < 0 || y >= static_cast<long>(H) || z >= static_cast<long>(W)) continue;
              acc += wv[((o * C + c) * KH + u) * KW + v] * xv[(c * H + y) * W + z];
            }
        out[(o * OH + i) * OW + j] = acc;
      }
  return out;
}

std::vector<double> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

}  // namespace

TEST_CASE("conv2d: identity and box kernels") {
  Tape tape = Tape::inference();
  std::mt19937_64 rng(1);
  const auto x = random_tensor(rng, {1, 4, 5}, -1, 1, false);
  const auto y = conv2d(tape, x, Tensor::full({1, 1, 1, 1}, 1.0), Tensor::zeros({1}), {});
  CHECK(values(y) == values(x));
  const auto c = conv2d(tape, Tensor::full({1, 5, 5}, 0.3), Tensor::full({1, 1, 3, 3}, 1.0), Tensor::zeros({1}), {});
  CHECK(c.shape() == Shape{1, 3, 3});
  for (double v : c.data()) CHECK(v == doctest::Approx(2.7).epsilon(1e-14));
}

TEST_CASE("conv2d matches the naive loop") {
  std::mt19937_64 rng(2);
  Tape tape = Tape::inference();
  const Conv2dParams cases[] = {{1, 1, 0, 0}, {1, 1, 1, 1}, {2, 1, 1, 1}, {2, 2, 1, 0}, {1, 2, 0, 1}};
  for (const auto& p : cases) {
    const auto x = random_tensor(rng, {2, 5, 5}, -1, 1, false);
    const auto w = random_tensor(rng, {3, 2, 3, 3}, -1, 1, false);
    const auto b = random_tensor(rng, {3}, -1, 1, false);
    const auto y = conv2d(tape, x, w, b, p);
    const auto ref = naive_conv(x, w, b, p);
    REQUIRE(y.numel() == ref.size());
    for (std::size_t i = 0; i < ref.size(); ++i) CHECK(std::abs(y.data()[i] - ref[i]) < 1e-12);
  }
}

TEST_CASE("conv2d: batch equals per-sample, linearity, shape errors") {
  std::mt19937_64 rng(3);
  Tape tape = Tape::inference();
  const auto w = random_tensor(rng, {4, 3, 3, 3}, -1, 1, false);
  const auto b = random_tensor(rng, {4}, -1, 1, false);
  const auto xb = random_tensor(rng, {2, 3, 6, 7}, -1, 1, false);
  const Conv2dParams p{1, 2, 1, 1};
  const auto yb = conv2d(tape, xb, w, b, p);
  for (std::size_t n = 0; n < 2; ++n) {
    const auto xs = Tensor::from({3, 6, 7}, std::vector<double>(xb.data().begin() + n * 126, xb.data().begin() + (n + 1) * 126));
    const auto ys = conv2d(tape, xs, w, b, p);
    for (std::size_t i = 0; i < ys.numel(); ++i) CHECK(std::abs(ys.data()[i] - yb.data()[n * ys.numel() + i]) < 1e-12);
  }
  const auto x1 = random_tensor(rng, {3, 6, 6}, -1, 1, false);
  const auto x2 = random_tensor(rng, {3, 6, 6}, -1, 1, false);
  auto mix = x1.clone();
  for (std::size_t i = 0; i < mix.numel(); ++i) mix.data()[i] = 2.5 * x1.data()[i] - 0.7 * x2.data()[i];
  const auto zb = Tensor::zeros({4});
  const auto a = conv2d(tape, x1, w, zb, p);
  const auto c = conv2d(tape, x2, w, zb, p);
  const auto m = conv2d(tape, mix, w, zb, p);
  for (std::size_t i = 0; i < m.numel(); ++i) CHECK(std::abs(m.data()[i] - (2.5 * a.data()[i] - 0.7 * c.data()[i])) < 1e-10);
  CHECK(conv_out_extent(7, 3, 2, 1) == 4);
  CHECK(conv_out_extent(8, 3, 2, 1) == 4);
  CHECK_THROWS(conv_out_extent(2, 5, 1, 0));
  CHECK_THROWS(conv2d(tape, random_tensor(rng, {2, 5, 5}, -1, 1, false), w, b, p));
}

TEST_CASE("instance norm statistics") {
  std::mt19937_64 rng(4);
  Tape tape = Tape::inference();
  const auto g1 = Tensor::full({2}, 1.0), b0 = Tensor::zeros({2});
  const auto c = instance_norm(tape, Tensor::full({2, 3, 3}, 0.4), g1, b0);
  for (double v : c.data()) CHECK(std::abs(v) < 1e-12);
  const auto x = random_tensor(rng, {2, 8, 9}, -30, 30, false);
  const auto y = instance_norm(tape, x, g1, b0);
  for (std::size_t ch = 0; ch < 2; ++ch) {
    double m = 0, v = 0;
    for (std::size_t i = 0; i < 72; ++i) m += y.data()[ch * 72 + i];
    m /= 72;
    for (std::size_t i = 0; i < 72; ++i) v += std::pow(y.data()[ch * 72 + i] - m, 2);
    v /= 72;
    CHECK(std::abs(m) < 1e-9);
    CHECK(std::abs(v - 1.0) < 1e-4);
  }
  auto ax = x.clone();
  for (auto& v : ax.data()) v = 3.0 * v + 1.5;
  const auto ya = instance_norm(tape, ax, g1, b0);
  for (std::size_t i = 0; i < y.numel(); ++i) CHECK(std::abs(y.data()[i] - ya.data()[i]) < 1e-6);
  const auto z = instance_norm(tape, x, Tensor::zeros({2}), Tensor::from({2}, {0.25, -1.0}));
  for (std::size_t i = 0; i < 72; ++i) CHECK(z.data()[i] == 0.25);
  for (std::size_t i = 72; i < 144; ++i) CHECK(z.data()[i] == -1.0);
}

TEST_CASE("rectifiers") {
  Tape tape;
  auto x = Tensor::from({3}, {-1.0, 0.0, 2.0}, true);
  CHECK(values(relu(tape, x)) == std::vector<double>{0, 0, 2});
  const auto l = leaky_relu(tape, x, 0.2);
  CHECK(l.data()[0] == doctest::Approx(-0.2));
  CHECK(l.data()[1] == 0.0);
  CHECK(l.data()[2] == 2.0);
  Tape t2;
  auto n = Tensor::from({2}, {-3.0, 0.0}, true);
  backward(sum(t2, leaky_relu(t2, n, 0.2)), t2);
  CHECK(n.grad()[0] == doctest::Approx(0.2));
  CHECK(n.grad()[1] == doctest::Approx(0.2));
  Tape t3;
  auto r = Tensor::from({2}, {-3.0, 0.0}, true);
  backward(sum(t3, relu(t3, r)), t3);
  CHECK(r.grad()[0] == 0.0);
  CHECK(r.grad()[1] == 0.0);
}

TEST_CASE("linear layer") {
  Tape tape = Tape::inference();
  const auto x = Tensor::from({3}, {1.0, -2.0, 0.5});
  const auto eye = Tensor::from({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  CHECK(values(linear(tape, x, eye, Tensor::zeros({3}))) == values(x));
  const auto bias = Tensor::from({2}, {0.3, -0.4});
  CHECK(values(linear(tape, x, Tensor::zeros({2, 3}), bias)) == values(bias));
  std::mt19937_64 rng(6);
  const auto x4 = random_tensor(rng, {4}, -1, 1, false);
  const auto w = random_tensor(rng, {3, 4}, -1, 1, false);
  const auto b = random_tensor(rng, {3}, -1, 1, false);
  const auto y = linear(tape, x4, w, b);
  for (std::size_t o = 0; o < 3; ++o) {
    double acc = b.data()[o];
    for (std::size_t i = 0; i < 4; ++i) acc += w.data()[o * 4 + i] * x4.data()[i];
    CHECK(y.data()[o] == doctest::Approx(acc).epsilon(1e-14));
  }
}

TEST_CASE("nearest-neighbour upsampling") {
  Tape tape;
  auto one = Tensor::from({1, 1, 1}, {0.7}, true);
  const auto u = upsample2x(tape, one);
  CHECK(u.shape() == Shape{1, 2, 2});
  for (double v : u.data()) CHECK(v == 0.7);
  backward(sum(tape, u), tape);
  CHECK(one.grad()[0] == 4.0);
  Tape t2 = Tape::inference();
  const auto cb = upsample2x(t2, Tensor::from({1, 2, 2}, {1, 0, 0, 1}));
  CHECK(values(cb) == std::vector<double>{1, 1, 0, 0, 1, 1, 0, 0, 0, 0, 1, 1, 0, 0, 1, 1});
}

TEST_CASE("weighted L1") {
  Tape tape = Tape::inference();
  const auto t = Tensor::from({2, 2}, {0.1, 0.2, 0.3, 0.4});
  const auto ones = Tensor::full({2, 2}, 1.0);
  CHECK(weighted_l1(tape, t, t, 1.0, ones).item() == 0.0);
  auto p = t.clone();
  for (auto& v : p.data()) v += 0.25;
  CHECK(weighted_l1(tape, p, t, 1.0, ones).item() == doctest::Approx(0.25));
  const auto half = Tensor::from({2, 2}, {1, 0, 1, 0});
  const auto q = Tensor::from({2, 2}, {0.3, 9.0, 0.3, 9.0});
  // masked pixels leave numerator and denominator: (0.2 + 0.0) / 2
  CHECK(weighted_l1(tape, q, t, 0.5, half).item() == doctest::Approx(0.5 * 0.2 / 2));
  CHECK_THROWS(weighted_l1(tape, q, t, 1.0, Tensor::zeros({2, 2})));
  const std::vector<double> w{1.0, 0.5};
  const auto pb = Tensor::from({2, 2, 2}, {0.1, 0.2, 0.3, 0.4, 0.5, 0.5, 0.5, 0.5});
  const auto tb = Tensor::from({2, 2, 2}, {0.1, 0.2, 0.3, 0.5, 0.0, 0.0, 0.0, 0.0});
  const auto mb = Tensor::full({2, 2, 2}, 1.0);
  CHECK(weighted_l1_batch(tape, pb, tb, w, mb).item() == doctest::Approx((0.1 / 4 + 0.5 * 0.5) / 2));
}

TEST_CASE("backward basics") {
  Tape tape;
  auto x = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6}, true);
  backward(sum(tape, x), tape);
  for (double g : x.grad()) CHECK(g == 1.0);
  Tape t2;
  auto y = Tensor::from({2}, {1, 2}, true);
  CHECK_THROWS(backward(relu(t2, y), t2));
  Tape inf = Tape::inference();
  relu(inf, y);
  CHECK(inf.size() == 0);
  Tape rec;
  relu(rec, Tensor::from({2}, {1, 2}, false));
  CHECK(rec.size() == 0);
}

TEST_CASE("finite-difference checks of every primitive") {
  std::mt19937_64 rng(7);
  auto x = random_tensor(rng, {2, 2, 5, 6}, -1, 1, true, 1e-3);
  auto w = random_tensor(rng, {3, 2, 3, 3});
  auto b = random_tensor(rng, {3});
  const Conv2dParams p{2, 1, 1, 1};
  auto r = gradcheck::check([&](Tape& t) { return conv2d(t, x, w, b, p); }, {{"x", x}, {"w", w}, {"b", b}});
  CHECK_MESSAGE(r.worst < 1e-4, "conv2d ", r.where, " ", r.worst);

  auto xs = random_tensor(rng, {3, 4, 4}, -2, 2, true);
  auto gm = random_tensor(rng, {3}, 0.5, 1.5);
  auto bt = random_tensor(rng, {3});
  r = gradcheck::check([&](Tape& t) { return instance_norm(t, xs, gm, bt); }, {{"x", xs}, {"gamma", gm}, {"beta", bt}});
  CHECK_MESSAGE(r.worst < 1e-4, "instance_norm ", r.where, " ", r.worst);

  auto xr = random_tensor(rng, {4, 5}, -1, 1, true, 1e-3);
  r = gradcheck::check([&](Tape& t) { return relu(t, xr); }, {{"x", xr}});
  CHECK(r.worst < 1e-4);
  r = gradcheck::check([&](Tape& t) { return leaky_relu(t, xr, 0.2); }, {{"x", xr}});
  CHECK(r.worst < 1e-4);

  auto xl = random_tensor(rng, {3, 5});
  auto wl = random_tensor(rng, {4, 5});
  auto bl = random_tensor(rng, {4});
  r = gradcheck::check([&](Tape& t) { return linear(t, xl, wl, bl); }, {{"x", xl}, {"w", wl}, {"b", bl}});
  CHECK(r.worst < 1e-4);

  auto xu = random_tensor(rng, {2, 3, 2, 3});
  r = gradcheck::check([&](Tape& t) { return upsample2x(t, xu); }, {{"x", xu}});
  CHECK(r.worst < 1e-4);

  auto a1 = random_tensor(rng, {2, 3});
  auto a2 = random_tensor(rng, {2, 3});
  r = gradcheck::check([&](Tape& t) { return add(t, a1, a2); }, {{"a", a1}, {"b", a2}});
  CHECK(r.worst < 1e-4);
  r = gradcheck::check([&](Tape& t) { return reshape(t, a1, {3, 2}); }, {{"a", a1}});
  CHECK(r.worst < 1e-4);
  r = gradcheck::check([&](Tape& t) { return sum(t, a1); }, {{"a", a1}});
  CHECK(r.worst < 1e-4);

  auto pr = random_tensor(rng, {2, 3, 4});
  const auto tg = random_tensor(rng, {2, 3, 4}, -1, 1, false);
  auto mk = random_tensor(rng, {2, 3, 4}, 0, 1, false);
  for (std::size_t i = 0; i < pr.numel(); ++i)
    if (std::abs(pr.data()[i] - tg.data()[i]) < 1e-3) pr.data()[i] += 0.01;
  const std::vector<double> ws{0.8, 0.3};
  r = gradcheck::check([&](Tape& t) { return weighted_l1_batch(t, pr, tg, ws, mk); }, {{"pred", pr}});
  CHECK(r.worst < 1e-4);
}

TEST_CASE("composed conv, norm, relu, linear chain") {
  std::mt19937_64 rng(8);
  auto x = random_tensor(rng, {2, 6, 6});
  auto w = random_tensor(rng, {3, 2, 3, 3});
  auto b = random_tensor(rng, {3});
  auto g = random_tensor(rng, {3}, 0.5, 1.5);
  auto be = random_tensor(rng, {3}, 0.2, 0.6);
  auto wl = random_tensor(rng, {4, 27});
  auto bl = random_tensor(rng, {4});
  const auto build = [&](Tape& t) {
    auto h = conv2d(t, x, w, b, {2, 2, 1, 1});
    h = relu(t, instance_norm(t, h, g, be));
    return linear(t, reshape(t, h, {27}), wl, bl);
  };
  const auto r = gradcheck::check(build, {{"x", x}, {"w", w}, {"gamma", g}, {"beta", be}, {"wl", wl}, {"bl", bl}});
  CHECK_MESSAGE(r.worst < 1e-4, r.where, " ", r.worst);
  // A per-channel bias in front of instance norm cancels exactly, so its
  // gradient is zero and a relative comparison would only measure noise.
  for (double v : b.grad()) CHECK(std::abs(v) < 1e-9);
}

TEST_CASE("float and double agree, runs are bit-identical") {
  std::mt19937_64 rng(9);
  const auto x = random_tensor(rng, {2, 3, 6, 6}, -1, 1, false);
  const auto w = random_tensor(rng, {4, 3, 3, 3}, -1, 1, false);
  const auto b = random_tensor(rng, {4}, -1, 1, false);
  const auto cast = [](const Tensor& t) {
    return TensorF::from(t.shape(), std::vector<float>(t.data().begin(), t.data().end()));
  };
  Tape td = Tape::inference();
  Tape tf = Tape::inference();
  const auto yd = conv2d(td, x, w, b, {1, 1, 1, 1});
  const auto yd2 = conv2d(td, x, w, b, {1, 1, 1, 1});
  const auto yf = conv2d(tf, cast(x), cast(w), cast(b), {1, 1, 1, 1});
  CHECK(values(yd) == values(yd2));
  for (std::size_t i = 0; i < yd.numel(); ++i) CHECK(std::abs(yd.data()[i] - yf.data()[i]) < 1e-5);
}
