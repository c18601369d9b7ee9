#pragma once

#include <cstddef>
#include <span>

#include "wi2vi/tensor.hpp"

// Layer primitives with reverse-mode rules, instantiated for float and
// double. Image ops accept a single [C][H][W] tensor or a batch
// [N][C][H][W]; outputs keep the input rank. Reductions accumulate in double.
namespace wi2vi::ad {

struct Conv2dParams {
  std::size_t stride_h = 1;
  std::size_t stride_w = 1;
  std::size_t pad_h = 0;
  std::size_t pad_w = 0;
};

// floor((in + 2*pad - kernel) / stride) + 1; throws when the kernel does not
// fit the padded input.
std::size_t conv_out_extent(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t pad);

// Cross-correlation plus bias. weight [C_out][C_in][kh][kw], bias [C_out].
template <class T>
BasicTensor<T> conv2d(Tape& tape, const BasicTensor<T>& x, const BasicTensor<T>& weight,
                      const BasicTensor<T>& bias, const Conv2dParams& params);

// Per-sample, per-channel normalization over H*W, then gamma * x + beta.
template <class T>
BasicTensor<T> instance_norm(Tape& tape, const BasicTensor<T>& x, const BasicTensor<T>& gamma,
                             const BasicTensor<T>& beta, double eps = 1e-5);

// Subgradient at 0 is 0 for relu and `slope` for leaky_relu.
template <class T>
BasicTensor<T> relu(Tape& tape, const BasicTensor<T>& x);
template <class T>
BasicTensor<T> leaky_relu(Tape& tape, const BasicTensor<T>& x, double slope = 0.2);

// x [D_in] or [N][D_in]; weight [D_out][D_in]; bias [D_out].
template <class T>
BasicTensor<T> linear(Tape& tape, const BasicTensor<T>& x, const BasicTensor<T>& weight,
                      const BasicTensor<T>& bias);

// Nearest-neighbour 2x upsampling along H and W.
template <class T>
BasicTensor<T> upsample2x(Tape& tape, const BasicTensor<T>& x);

template <class T>
BasicTensor<T> add(Tape& tape, const BasicTensor<T>& a, const BasicTensor<T>& b);
template <class T>
BasicTensor<T> reshape(Tape& tape, const BasicTensor<T>& x, Shape shape);
template <class T>
BasicTensor<T> sum(Tape& tape, const BasicTensor<T>& x);
// sum(x * coeffs) against a constant coefficient tensor of the same size.
template <class T>
BasicTensor<T> inner(Tape& tape, const BasicTensor<T>& x, const BasicTensor<T>& coeffs);

// weight * sum(mask * |pred - target|) / sum(mask) for one frame. target and
// mask are constants. Throws when sum(mask) == 0.
template <class T>
BasicTensor<T> weighted_l1(Tape& tape, const BasicTensor<T>& pred, const BasicTensor<T>& target,
                           double weight, const BasicTensor<T>& mask);

// Mean of weighted_l1 over a batch. target and mask are [N][...] with
// pred.numel() == target.numel(); weights has N entries.
template <class T>
BasicTensor<T> weighted_l1_batch(Tape& tape, const BasicTensor<T>& pred,
                                 const BasicTensor<T>& target, std::span<const double> weights,
                                 const BasicTensor<T>& mask);

}  // namespace wi2vi::ad
