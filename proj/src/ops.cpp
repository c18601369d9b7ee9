#include "wi2vi/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wi2vi::ad {
namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using RowMap = Eigen::Map<RowMat<T>>;
template <class T>
using ConstRowMap = Eigen::Map<const RowMat<T>>;

struct ImageDims {
  std::size_t n = 1, c = 0, h = 0, w = 0;
  bool batched = false;
};

template <class T>
ImageDims image_dims(const BasicTensor<T>& x, const char* op) {
  const auto& s = x.shape();
  if (s.size() == 3) return {1, s[0], s[1], s[2], false};
  if (s.size() == 4) return {s[0], s[1], s[2], s[3], true};
  throw std::invalid_argument(std::string(op) + ": expected [C][H][W] or [N][C][H][W], got " +
                              shape_str(s));
}

Shape image_shape(const ImageDims& d, std::size_t c, std::size_t h, std::size_t w) {
  if (d.batched) return {d.n, c, h, w};
  return {c, h, w};
}

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

template <class T>
T sign(T v) {
  return v > T(0) ? T(1) : (v < T(0) ? T(-1) : T(0));
}

struct ConvGeometry {
  ImageDims in;
  Conv2dParams p;
  std::size_t c_out, kh, kw, ho, wo;
  std::size_t P() const { return ho * wo; }
  std::size_t K() const { return in.c * kh * kw; }
  std::size_t in_size() const { return in.c * in.h * in.w; }
};

// Writes every entry of the [K][ld] column block for sample xn starting at
// column col0; padding positions become zero.
template <class T>
void im2col(const ConvGeometry& g, const T* xn, T* cols, std::size_t ld, std::size_t col0) {
  const auto& d = g.in;
  for (std::size_t c = 0; c < d.c; ++c) {
    for (std::size_t ki = 0; ki < g.kh; ++ki) {
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        T* row = cols + ((c * g.kh + ki) * g.kw + kj) * ld + col0;
        for (std::size_t oh = 0; oh < g.ho; ++oh) {
          const auto ih = static_cast<std::ptrdiff_t>(oh * g.p.stride_h + ki) -
                          static_cast<std::ptrdiff_t>(g.p.pad_h);
          T* dst = row + oh * g.wo;
          if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(d.h)) {
            std::fill(dst, dst + g.wo, T(0));
            continue;
          }
          const T* xrow = xn + (c * d.h + static_cast<std::size_t>(ih)) * d.w;
          for (std::size_t ow = 0; ow < g.wo; ++ow) {
            const auto iw = static_cast<std::ptrdiff_t>(ow * g.p.stride_w + kj) -
                            static_cast<std::ptrdiff_t>(g.p.pad_w);
            dst[ow] = (iw < 0 || iw >= static_cast<std::ptrdiff_t>(d.w)) ? T(0) : xrow[iw];
          }
        }
      }
    }
  }
}

// Scatter-adds a [K][ld] column-gradient block back onto gxn.
template <class T>
void col2im(const ConvGeometry& g, const T* cols, std::size_t ld, std::size_t col0, T* gxn) {
  const auto& d = g.in;
  for (std::size_t c = 0; c < d.c; ++c) {
    for (std::size_t ki = 0; ki < g.kh; ++ki) {
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        const T* row = cols + ((c * g.kh + ki) * g.kw + kj) * ld + col0;
        for (std::size_t oh = 0; oh < g.ho; ++oh) {
          const auto ih = static_cast<std::ptrdiff_t>(oh * g.p.stride_h + ki) -
                          static_cast<std::ptrdiff_t>(g.p.pad_h);
          if (ih < 0 || ih >= static_cast<std::ptrdiff_t>(d.h)) continue;
          T* grow = gxn + (c * d.h + static_cast<std::size_t>(ih)) * d.w;
          const T* src = row + oh * g.wo;
          for (std::size_t ow = 0; ow < g.wo; ++ow) {
            const auto iw = static_cast<std::ptrdiff_t>(ow * g.p.stride_w + kj) -
                            static_cast<std::ptrdiff_t>(g.p.pad_w);
            if (iw < 0 || iw >= static_cast<std::ptrdiff_t>(d.w)) continue;
            grow[iw] += src[ow];
          }
        }
      }
    }
  }
}

// Spatial maps at least this large are lowered one sample at a time, keeping
// the column buffer cache-resident and recomputing it during backward.
constexpr std::size_t kPerSampleMinPixels = 256;

template <class T>
BasicTensor<T> piecewise_linear(Tape& tape, const BasicTensor<T>& x, T neg_slope, const char* name) {
  auto out = BasicTensor<T>::zeros(x.shape());
  const auto xs = x.data();
  auto os = out.data();
  for (std::size_t i = 0; i < xs.size(); ++i) os[i] = xs[i] > T(0) ? xs[i] : neg_slope * xs[i];
  if (!tape.wants<T>({&x})) return out;
  out.set_requires_grad(true);
  tape.record(name, [x, out, neg_slope]() {
    if (!out.has_grad()) return;
    const auto go = out.grad();
    const auto xs = x.data();
    auto gx = x.grad();
    for (std::size_t i = 0; i < xs.size(); ++i) gx[i] += go[i] * (xs[i] > T(0) ? T(1) : neg_slope);
  });
  return out;
}

}  // namespace

std::size_t conv_out_extent(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t pad) {
  if (stride == 0) throw std::invalid_argument("conv2d: stride must be positive");
  if (kernel == 0 || in + 2 * pad < kernel) {
    throw std::invalid_argument("conv2d: kernel " + std::to_string(kernel) +
                                " does not fit padded input " + std::to_string(in + 2 * pad));
  }
  return (in + 2 * pad - kernel) / stride + 1;
}

template <class T>
BasicTensor<T> conv2d(Tape& tape, const BasicTensor<T>& x, const BasicTensor<T>& weight,
                      const BasicTensor<T>& bias, const Conv2dParams& params) {
  const auto d = image_dims(x, "conv2d");
  require(weight.rank() == 4, "conv2d: weight must be [C_out][C_in][kh][kw]");
  require(weight.dim(1) == d.c, "conv2d: weight expects " + std::to_string(weight.dim(1)) +
                                    " input channels, input has " + std::to_string(d.c));
  require(bias.numel() == weight.dim(0), "conv2d: bias size must equal C_out");

  ConvGeometry g{d, params, weight.dim(0), weight.dim(2), weight.dim(3), 0, 0};
  g.ho = conv_out_extent(d.h, g.kh, params.stride_h, params.pad_h);
  g.wo = conv_out_extent(d.w, g.kw, params.stride_w, params.pad_w);
  const std::size_t P = g.P(), K = g.K(), c_out = g.c_out, in_size = g.in_size();
  const bool per_sample = P >= kPerSampleMinPixels || d.n == 1;

  auto out = BasicTensor<T>::zeros(image_shape(d, c_out, g.ho, g.wo));
  auto os = out.data();
  const auto xs = x.data();
  const auto bs = bias.data();
  const ConstRowMap<T> wmat(weight.data().data(), c_out, K);

  // Batched lowering keeps its columns for the backward pass.
  std::shared_ptr<std::vector<T>> cols;
  if (per_sample) {
    std::vector<T> buf(K * P);
    for (std::size_t n = 0; n < d.n; ++n) {
      im2col(g, xs.data() + n * in_size, buf.data(), P, 0);
      RowMap<T> on(os.data() + n * c_out * P, c_out, P);
      on.noalias() = wmat * ConstRowMap<T>(buf.data(), K, P);
      for (std::size_t co = 0; co < c_out; ++co) on.row(co).array() += bs[co];
    }
  } else {
    const std::size_t NP = d.n * P;
    cols = std::make_shared<std::vector<T>>(K * NP);
    for (std::size_t n = 0; n < d.n; ++n) im2col(g, xs.data() + n * in_size, cols->data(), NP, n * P);
    RowMat<T> out_mat(c_out, NP);
    out_mat.noalias() = wmat * ConstRowMap<T>(cols->data(), K, NP);
    for (std::size_t n = 0; n < d.n; ++n) {
      for (std::size_t co = 0; co < c_out; ++co) {
        T* dst = os.data() + (n * c_out + co) * P;
        const T* src = out_mat.data() + co * NP + n * P;
        for (std::size_t q = 0; q < P; ++q) dst[q] = src[q] + bs[co];
      }
    }
  }

  if (!tape.wants<T>({&x, &weight, &bias})) return out;
  out.set_requires_grad(true);
  tape.record("conv2d", [x, weight, bias, out, cols, g, per_sample]() {
    if (!out.has_grad()) return;
    const std::size_t P = g.P(), K = g.K(), c_out = g.c_out, in_size = g.in_size(), N = g.in.n;
    const auto go = out.grad();
    const ConstRowMap<T> wmat(weight.data().data(), c_out, K);
    if (bias.requires_grad()) {
      auto gb = bias.grad();
      for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t co = 0; co < c_out; ++co) {
          const T* src = go.data() + (n * c_out + co) * P;
          double s = 0.0;
          for (std::size_t q = 0; q < P; ++q) s += src[q];
          gb[co] += static_cast<T>(s);
        }
      }
    }
    const bool need_w = weight.requires_grad(), need_x = x.requires_grad();
    if (!need_w && !need_x) return;

    if (per_sample) {
      std::vector<T> buf(K * P);
      const auto xs = x.data();
      for (std::size_t n = 0; n < N; ++n) {
        const ConstRowMap<T> dout(go.data() + n * c_out * P, c_out, P);
        if (need_w) {
          im2col(g, xs.data() + n * in_size, buf.data(), P, 0);
          RowMap<T>(weight.grad().data(), c_out, K).noalias() +=
              dout * ConstRowMap<T>(buf.data(), K, P).transpose();
        }
        if (need_x) {
          RowMap<T>(buf.data(), K, P).noalias() = wmat.transpose() * dout;
          col2im(g, buf.data(), P, 0, x.grad().data() + n * in_size);
        }
      }
      return;
    }

    const std::size_t NP = N * P;
    RowMat<T> dout(c_out, NP);
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t co = 0; co < c_out; ++co) {
        const T* src = go.data() + (n * c_out + co) * P;
        std::copy(src, src + P, dout.data() + co * NP + n * P);
      }
    }
    if (need_w) {
      RowMap<T>(weight.grad().data(), c_out, K).noalias() +=
          dout * ConstRowMap<T>(cols->data(), K, NP).transpose();
    }
    if (need_x) {
      RowMat<T> dcols(K, NP);
      dcols.noalias() = wmat.transpose() * dout;
      auto gx = x.grad();
      for (std::size_t n = 0; n < N; ++n) col2im(g, dcols.data(), NP, n * P, gx.data() + n * in_size);
    }
  });
  return out;
}

template <class T>
BasicTensor<T> instance_norm(Tape& tape, const BasicTensor<T>& x, const BasicTensor<T>& gamma,
                             const BasicTensor<T>& beta, double eps) {
  const auto d = image_dims(x, "instance_norm");
  require(gamma.numel() == d.c && beta.numel() == d.c,
          "instance_norm: gamma/beta must have one entry per channel");
  const std::size_t M = d.h * d.w;
  require(M >= 1, "instance_norm: empty spatial extent");

  auto xhat = std::make_shared<std::vector<T>>(x.numel());
  auto inv_std = std::make_shared<std::vector<double>>(d.n * d.c);
  auto out = BasicTensor<T>::zeros(x.shape());
  const auto xs = x.data();
  auto os = out.data();
  const auto g = gamma.data();
  const auto b = beta.data();
  for (std::size_t nc = 0; nc < d.n * d.c; ++nc) {
    const std::size_t c = nc % d.c;
    const T* src = xs.data() + nc * M;
    double mean = 0.0;
    for (std::size_t i = 0; i < M; ++i) mean += src[i];
    mean /= static_cast<double>(M);
    double var = 0.0;
    for (std::size_t i = 0; i < M; ++i) var += (src[i] - mean) * (src[i] - mean);
    var /= static_cast<double>(M);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[nc] = is;
    T* xh = xhat->data() + nc * M;
    T* dst = os.data() + nc * M;
    for (std::size_t i = 0; i < M; ++i) {
      xh[i] = static_cast<T>((src[i] - mean) * is);
      dst[i] = g[c] * xh[i] + b[c];
    }
  }

  if (!tape.wants<T>({&x, &gamma, &beta})) return out;
  out.set_requires_grad(true);
  tape.record("instance_norm", [x, gamma, beta, out, xhat, inv_std, d, M]() {
    if (!out.has_grad()) return;
    const auto go = out.grad();
    const auto g = gamma.data();
    const double m = static_cast<double>(M);
    for (std::size_t nc = 0; nc < d.n * d.c; ++nc) {
      const std::size_t c = nc % d.c;
      const T* dy = go.data() + nc * M;
      const T* xh = xhat->data() + nc * M;
      double sum_dy = 0.0, sum_dy_xh = 0.0;
      for (std::size_t i = 0; i < M; ++i) {
        sum_dy += dy[i];
        sum_dy_xh += static_cast<double>(dy[i]) * xh[i];
      }
      if (gamma.requires_grad()) gamma.grad()[c] += static_cast<T>(sum_dy_xh);
      if (beta.requires_grad()) beta.grad()[c] += static_cast<T>(sum_dy);
      if (x.requires_grad()) {
        T* gx = x.grad().data() + nc * M;
        const double scale = g[c] * (*inv_std)[nc] / m;
        for (std::size_t i = 0; i < M; ++i) {
          gx[i] += static_cast<T>(scale * (m * dy[i] - sum_dy - xh[i] * sum_dy_xh));
        }
      }
    }
  });
  return out;
}

template <class T>
BasicTensor<T> relu(Tape& tape, const BasicTensor<T>& x) {
  return piecewise_linear(tape, x, T(0), "relu");
}

template <class T>
BasicTensor<T> leaky_relu(Tape& tape, const BasicTensor<T>& x, double slope) {
  return piecewise_linear(tape, x, static_cast<T>(slope), "leaky_relu");
}

template <class T>
BasicTensor<T> linear(Tape& tape, const BasicTensor<T>& x, const BasicTensor<T>& weight,
                      const BasicTensor<T>& bias) {
  require(x.rank() == 1 || x.rank() == 2, "linear: expected [D_in] or [N][D_in]");
  require(weight.rank() == 2, "linear: weight must be [D_out][D_in]");
  const bool batched = x.rank() == 2;
  const std::size_t n = batched ? x.dim(0) : 1;
  const std::size_t d_in = batched ? x.dim(1) : x.dim(0);
  const std::size_t d_out = weight.dim(0);
  require(weight.dim(1) == d_in, "linear: weight expects " + std::to_string(weight.dim(1)) +
                                     " inputs, got " + std::to_string(d_in));
  require(bias.numel() == d_out, "linear: bias size must equal D_out");

  auto out = BasicTensor<T>::zeros(batched ? Shape{n, d_out} : Shape{d_out});
  RowMap<T> om(out.data().data(), n, d_out);
  om.noalias() = ConstRowMap<T>(x.data().data(), n, d_in) *
                 ConstRowMap<T>(weight.data().data(), d_out, d_in).transpose();
  const auto bs = bias.data();
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < d_out; ++j) om(r, j) += bs[j];
  }

  if (!tape.wants<T>({&x, &weight, &bias})) return out;
  out.set_requires_grad(true);
  tape.record("linear", [x, weight, bias, out, n, d_in, d_out]() {
    if (!out.has_grad()) return;
    const ConstRowMap<T> dout(out.grad().data(), n, d_out);
    if (weight.requires_grad()) {
      RowMap<T>(weight.grad().data(), d_out, d_in).noalias() +=
          dout.transpose() * ConstRowMap<T>(x.data().data(), n, d_in);
    }
    if (bias.requires_grad()) {
      auto gb = bias.grad();
      for (std::size_t j = 0; j < d_out; ++j) gb[j] += dout.col(j).sum();
    }
    if (x.requires_grad()) {
      RowMap<T>(x.grad().data(), n, d_in).noalias() +=
          dout * ConstRowMap<T>(weight.data().data(), d_out, d_in);
    }
  });
  return out;
}

template <class T>
BasicTensor<T> upsample2x(Tape& tape, const BasicTensor<T>& x) {
  const auto d = image_dims(x, "upsample2x");
  const std::size_t h2 = 2 * d.h, w2 = 2 * d.w;
  auto out = BasicTensor<T>::zeros(image_shape(d, d.c, h2, w2));
  const auto xs = x.data();
  auto os = out.data();
  for (std::size_t nc = 0; nc < d.n * d.c; ++nc) {
    const T* src = xs.data() + nc * d.h * d.w;
    T* dst = os.data() + nc * h2 * w2;
    for (std::size_t i = 0; i < h2; ++i) {
      for (std::size_t j = 0; j < w2; ++j) dst[i * w2 + j] = src[(i / 2) * d.w + j / 2];
    }
  }
  if (!tape.wants<T>({&x})) return out;
  out.set_requires_grad(true);
  tape.record("upsample2x", [x, out, d, h2, w2]() {
    if (!out.has_grad()) return;
    const auto go = out.grad();
    auto gx = x.grad();
    for (std::size_t nc = 0; nc < d.n * d.c; ++nc) {
      const T* src = go.data() + nc * h2 * w2;
      T* dst = gx.data() + nc * d.h * d.w;
      for (std::size_t i = 0; i < h2; ++i) {
        for (std::size_t j = 0; j < w2; ++j) dst[(i / 2) * d.w + j / 2] += src[i * w2 + j];
      }
    }
  });
  return out;
}

template <class T>
BasicTensor<T> add(Tape& tape, const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require(a.shape() == b.shape(), "add: shape mismatch " + shape_str(a.shape()) + " vs " +
                                      shape_str(b.shape()));
  auto out = BasicTensor<T>::zeros(a.shape());
  const auto as = a.data();
  const auto bs = b.data();
  auto os = out.data();
  for (std::size_t i = 0; i < os.size(); ++i) os[i] = as[i] + bs[i];
  if (!tape.wants<T>({&a, &b})) return out;
  out.set_requires_grad(true);
  tape.record("add", [a, b, out]() {
    if (!out.has_grad()) return;
    const auto go = out.grad();
    for (const auto* t : {&a, &b}) {
      if (!t->requires_grad()) continue;
      auto g = t->grad();
      for (std::size_t i = 0; i < go.size(); ++i) g[i] += go[i];
    }
  });
  return out;
}

template <class T>
BasicTensor<T> reshape(Tape& tape, const BasicTensor<T>& x, Shape shape) {
  require(shape_numel(shape) == x.numel(), "reshape: cannot view " + shape_str(x.shape()) +
                                               " as " + shape_str(shape));
  auto out = BasicTensor<T>::from(std::move(shape), std::vector<T>(x.data().begin(), x.data().end()));
  if (!tape.wants<T>({&x})) return out;
  out.set_requires_grad(true);
  tape.record("reshape", [x, out]() {
    if (!out.has_grad()) return;
    const auto go = out.grad();
    auto gx = x.grad();
    for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i];
  });
  return out;
}

template <class T>
BasicTensor<T> sum(Tape& tape, const BasicTensor<T>& x) {
  double s = 0.0;
  for (T v : x.data()) s += v;
  auto out = BasicTensor<T>::scalar(static_cast<T>(s));
  if (!tape.wants<T>({&x})) return out;
  out.set_requires_grad(true);
  tape.record("sum", [x, out]() {
    if (!out.has_grad()) return;
    const T g = out.grad()[0];
    for (T& v : x.grad()) v += g;
  });
  return out;
}

template <class T>
BasicTensor<T> inner(Tape& tape, const BasicTensor<T>& x, const BasicTensor<T>& coeffs) {
  require(x.numel() == coeffs.numel(), "inner: size mismatch");
  double s = 0.0;
  const auto xs = x.data();
  const auto cs = coeffs.data();
  for (std::size_t i = 0; i < xs.size(); ++i) s += static_cast<double>(xs[i]) * cs[i];
  auto out = BasicTensor<T>::scalar(static_cast<T>(s));
  if (!tape.wants<T>({&x})) return out;
  out.set_requires_grad(true);
  tape.record("inner", [x, coeffs, out]() {
    if (!out.has_grad()) return;
    const T g = out.grad()[0];
    const auto cs = coeffs.data();
    auto gx = x.grad();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g * cs[i];
  });
  return out;
}

template <class T>
BasicTensor<T> weighted_l1(Tape& tape, const BasicTensor<T>& pred, const BasicTensor<T>& target,
                           double weight, const BasicTensor<T>& mask) {
  require(pred.numel() == target.numel() && mask.numel() == target.numel(),
          "weighted_l1: pred, target and mask must have the same size");
  const double w[] = {weight};
  const Shape s{1, target.numel()};
  // One frame is a batch of one.
  auto t = BasicTensor<T>::from(s, std::vector<T>(target.data().begin(), target.data().end()));
  auto m = BasicTensor<T>::from(s, std::vector<T>(mask.data().begin(), mask.data().end()));
  return weighted_l1_batch(tape, pred, t, w, m);
}

template <class T>
BasicTensor<T> weighted_l1_batch(Tape& tape, const BasicTensor<T>& pred,
                                 const BasicTensor<T>& target, std::span<const double> weights,
                                 const BasicTensor<T>& mask) {
  require(target.rank() >= 1, "weighted_l1: target must be batched");
  const std::size_t n = target.dim(0);
  require(n > 0 && weights.size() == n, "weighted_l1: one weight per batch item required");
  require(pred.numel() == target.numel() && mask.numel() == target.numel(),
          "weighted_l1: pred, target and mask must have the same size");
  const std::size_t per = target.numel() / n;
  const auto ps = pred.data();
  const auto ts = target.data();
  const auto ms = mask.data();

  auto scale = std::make_shared<std::vector<double>>(n);
  double loss = 0.0;
  for (std::size_t b = 0; b < n; ++b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = b * per; i < (b + 1) * per; ++i) {
      num += static_cast<double>(ms[i]) * std::abs(static_cast<double>(ps[i]) - ts[i]);
      den += ms[i];
    }
    if (!(den > 0.0)) throw std::invalid_argument("weighted_l1: mask sums to zero");
    (*scale)[b] = weights[b] / (den * static_cast<double>(n));
    loss += weights[b] * num / den;
  }
  auto out = BasicTensor<T>::scalar(static_cast<T>(loss / static_cast<double>(n)));
  if (!tape.wants<T>({&pred})) return out;
  out.set_requires_grad(true);
  tape.record("weighted_l1", [pred, target, mask, out, scale, per, n]() {
    if (!out.has_grad()) return;
    const double g = out.grad()[0];
    const auto ps = pred.data();
    const auto ts = target.data();
    const auto ms = mask.data();
    auto gp = pred.grad();
    for (std::size_t b = 0; b < n; ++b) {
      const double s = g * (*scale)[b];
      for (std::size_t i = b * per; i < (b + 1) * per; ++i) {
        gp[i] += static_cast<T>(s * ms[i] * sign(ps[i] - ts[i]));
      }
    }
  });
  return out;
}

#define WI2VI_INSTANTIATE_OPS(T)                                                                  \
  template BasicTensor<T> conv2d(Tape&, const BasicTensor<T>&, const BasicTensor<T>&,            \
                                 const BasicTensor<T>&, const Conv2dParams&);                    \
  template BasicTensor<T> instance_norm(Tape&, const BasicTensor<T>&, const BasicTensor<T>&,     \
                                        const BasicTensor<T>&, double);                          \
  template BasicTensor<T> relu(Tape&, const BasicTensor<T>&);                                    \
  template BasicTensor<T> leaky_relu(Tape&, const BasicTensor<T>&, double);                      \
  template BasicTensor<T> linear(Tape&, const BasicTensor<T>&, const BasicTensor<T>&,            \
                                 const BasicTensor<T>&);                                         \
  template BasicTensor<T> upsample2x(Tape&, const BasicTensor<T>&);                              \
  template BasicTensor<T> add(Tape&, const BasicTensor<T>&, const BasicTensor<T>&);              \
  template BasicTensor<T> reshape(Tape&, const BasicTensor<T>&, Shape);                          \
  template BasicTensor<T> sum(Tape&, const BasicTensor<T>&);                                     \
  template BasicTensor<T> inner(Tape&, const BasicTensor<T>&, const BasicTensor<T>&);            \
  template BasicTensor<T> weighted_l1(Tape&, const BasicTensor<T>&, const BasicTensor<T>&,       \
                                      double, const BasicTensor<T>&);                            \
  template BasicTensor<T> weighted_l1_batch(Tape&, const BasicTensor<T>&, const BasicTensor<T>&, \
                                            std::span<const double>, const BasicTensor<T>&);

WI2VI_INSTANTIATE_OPS(float)
WI2VI_INSTANTIATE_OPS(double)

#undef WI2VI_INSTANTIATE_OPS

}  // namespace wi2vi::ad
