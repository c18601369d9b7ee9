#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "wi2vi/ops.hpp"
#include "wi2vi/tensor.hpp"

namespace wi2vi {

// Architecture of the CSI-to-frame network. All layers use "same"-style
// padding (kernel / 2), so only strides change spatial extents.
struct ModelConfig {
  std::size_t in_channels = 18;  // 2 * T * R
  std::size_t k = 8;             // CSI samples per input (dropin width)
  std::size_t subcarriers = 56;

  std::vector<std::size_t> encoder_channels{32, 48, 64, 96, 128};
  std::vector<std::array<std::size_t, 2>> encoder_kernels{{3, 3}, {3, 3}, {3, 3}, {3, 3}, {3, 3}};
  std::vector<std::array<std::size_t, 2>> encoder_strides{{1, 1}, {1, 2}, {1, 2}, {2, 2}, {2, 2}};

  std::size_t bottleneck_dim = 0;  // 0 selects round(latent_dim / 3)
  std::size_t translator_conv_blocks = 3;
  std::size_t translator_channels = 64;

  std::size_t decoder_channels = 64;  // C0 of the translated base map
  std::size_t resnet_blocks = 3;
  std::size_t upsample_stages = 2;
  std::vector<std::size_t> upsample_channels{32, 16};

  std::size_t out_h = 24;
  std::size_t out_w = 32;

  double leaky_slope = 0.2;
  double norm_eps = 1e-5;
  bool clamp_output = false;  // clamp to [0, 1] in predict(), never in training

  // Derived quantities. validate() throws ConfigError on any inconsistency.
  std::vector<std::array<std::size_t, 2>> encoder_shape_chain() const;  // (H, W) after each layer
  std::size_t latent_dim() const;
  std::size_t effective_bottleneck() const;
  std::size_t base_h() const;
  std::size_t base_w() const;
  void validate() const;
};

void to_json(nlohmann::json& j, const ModelConfig& cfg);
// Strict: unknown keys raise ConfigError.
ModelConfig model_config_from_json(const nlohmann::json& j);

template <class T>
struct ConvLayerT {
  ad::BasicTensor<T> weight;
  ad::BasicTensor<T> bias;
  ad::Conv2dParams params;
};

template <class T>
struct NormLayerT {
  ad::BasicTensor<T> gamma;
  ad::BasicTensor<T> beta;
};

template <class T>
struct ConvBlockT {
  ConvLayerT<T> conv;
  NormLayerT<T> norm;
};

template <class T>
struct ResidualBlockT {
  ConvBlockT<T> first;
  ConvLayerT<T> second;
  NormLayerT<T> second_norm;
};

template <class T>
struct LinearLayerT {
  ad::BasicTensor<T> weight;
  ad::BasicTensor<T> bias;
};

template <class T>
struct NamedTensorT {
  std::string name;
  ad::BasicTensor<T> tensor;
};

// Parameters of the three stages. Tensors are shared handles: copying a
// model aliases its parameters, use clone() for an independent copy.
template <class T>
struct Wi2ViModelT {
  using Scalar = T;
  using TensorT = ad::BasicTensor<T>;

  ModelConfig config;
  std::vector<ConvBlockT<T>> encoder;
  LinearLayerT<T> squeeze;  // latent_dim -> bottleneck
  LinearLayerT<T> expand;   // bottleneck -> C0 * H0 * W0
  std::vector<ConvBlockT<T>> translator;
  std::vector<ResidualBlockT<T>> residual;
  std::vector<ConvBlockT<T>> upsample;
  ConvLayerT<T> output;

  // Stable order, used by checkpoints and the optimizer.
  std::vector<NamedTensorT<T>> parameters() const;
  std::size_t parameter_count() const;
  Wi2ViModelT clone() const;
  void zero_grad();
};

using Wi2ViModel = Wi2ViModelT<double>;
using Wi2ViModelF = Wi2ViModelT<float>;
using NamedTensor = NamedTensorT<double>;

// Glorot-uniform weights drawn in double in creation order, zero biases,
// unit gammas. The same seed gives the same values (up to rounding) for
// either scalar type.
template <class T = double>
Wi2ViModelT<T> init_model(const ModelConfig& cfg, std::uint64_t seed);

// Copies every parameter into a model of another scalar type.
template <class To, class From>
Wi2ViModelT<To> convert_model(const Wi2ViModelT<From>& model);

struct ForwardOptions {
  bool residual_skip = true;  // false drops the identity sum (testing only)
};

// x: [C_in][k][F] or [N][C_in][k][F] -> [N][C][h][w] latent map.
template <class T>
ad::BasicTensor<T> encoder_forward(const Wi2ViModelT<T>& model, ad::Tape& tape,
                                   const ad::BasicTensor<T>& x);
// latent -> [N][C0][H0][W0].
template <class T>
ad::BasicTensor<T> translator_forward(const Wi2ViModelT<T>& model, ad::Tape& tape,
                                      const ad::BasicTensor<T>& latent);
// visual latent -> [N][out_h][out_w].
template <class T>
ad::BasicTensor<T> decoder_forward(const Wi2ViModelT<T>& model, ad::Tape& tape,
                                   const ad::BasicTensor<T>& visual, const ForwardOptions& opts = {});
// Full map; returns [out_h][out_w] for unbatched input, [N][out_h][out_w] otherwise.
template <class T>
ad::BasicTensor<T> forward(const Wi2ViModelT<T>& model, ad::Tape& tape, const ad::BasicTensor<T>& x,
                           const ForwardOptions& opts = {});
// Inference without a tape, honouring config.clamp_output.
template <class T>
ad::BasicTensor<T> predict(const Wi2ViModelT<T>& model, const ad::BasicTensor<T>& x);

}  // namespace wi2vi
