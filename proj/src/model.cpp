#include "wi2vi/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "wi2vi/errors.hpp"
#include "wi2vi/json_fields.hpp"

namespace wi2vi {

std::vector<std::array<std::size_t, 2>> ModelConfig::encoder_shape_chain() const {
  std::vector<std::array<std::size_t, 2>> chain;
  std::size_t h = k, w = subcarriers;
  for (std::size_t i = 0; i < encoder_channels.size(); ++i) {
    const auto [kh, kw] = encoder_kernels.at(i);
    const auto [sh, sw] = encoder_strides.at(i);
    h = ad::conv_out_extent(h, kh, sh, kh / 2);
    w = ad::conv_out_extent(w, kw, sw, kw / 2);
    chain.push_back({h, w});
  }
  return chain;
}

std::size_t ModelConfig::latent_dim() const {
  const auto chain = encoder_shape_chain();
  if (chain.empty()) return in_channels * k * subcarriers;
  return encoder_channels.back() * chain.back()[0] * chain.back()[1];
}

std::size_t ModelConfig::effective_bottleneck() const {
  if (bottleneck_dim != 0) return bottleneck_dim;
  return static_cast<std::size_t>(std::lround(static_cast<double>(latent_dim()) / 3.0));
}

std::size_t ModelConfig::base_h() const { return out_h >> upsample_stages; }
std::size_t ModelConfig::base_w() const { return out_w >> upsample_stages; }

void ModelConfig::validate() const {
  if (in_channels == 0 || k == 0 || subcarriers == 0) {
    throw ConfigError("model: input dimensions must be positive");
  }
  if (encoder_channels.empty()) throw ConfigError("model: encoder needs at least one layer");
  if (encoder_kernels.size() != encoder_channels.size() ||
      encoder_strides.size() != encoder_channels.size()) {
    throw ConfigError("model: encoder_channels, encoder_kernels and encoder_strides differ in length");
  }
  for (std::size_t i = 0; i < encoder_channels.size(); ++i) {
    if (encoder_channels[i] == 0) throw ConfigError("model: encoder channel count must be positive");
    for (std::size_t a = 0; a < 2; ++a) {
      if (encoder_kernels[i][a] == 0 || encoder_strides[i][a] == 0) {
        throw ConfigError("model: encoder kernels and strides must be positive");
      }
    }
  }
  try {
    (void)encoder_shape_chain();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("model: encoder shape chain invalid: ") + e.what());
  }
  const double latent = static_cast<double>(latent_dim());
  const double bottleneck = static_cast<double>(effective_bottleneck());
  if (bottleneck < latent / 4.0 || bottleneck > latent / 2.0) {
    throw ConfigError("model: bottleneck_dim " + std::to_string(effective_bottleneck()) +
                      " outside [latent_dim/4, latent_dim/2] for latent_dim " +
                      std::to_string(latent_dim()));
  }
  if (upsample_channels.size() != upsample_stages) {
    throw ConfigError("model: upsample_channels must list one width per upsample stage");
  }
  const std::size_t scale = std::size_t{1} << upsample_stages;
  if (out_h == 0 || out_w == 0 || out_h % scale != 0 || out_w % scale != 0) {
    throw ConfigError("model: output size must be a positive multiple of 2^upsample_stages");
  }
  if (decoder_channels == 0 || translator_channels == 0) {
    throw ConfigError("model: translator/decoder channel counts must be positive");
  }
  if (translator_conv_blocks == 0 && translator_channels != decoder_channels) {
    throw ConfigError("model: translator_channels must equal decoder_channels without translator blocks");
  }
  if (!(norm_eps > 0.0)) throw ConfigError("model: norm_eps must be positive");
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"in_channels", c.in_channels},
                     {"k", c.k},
                     {"subcarriers", c.subcarriers},
                     {"encoder_channels", c.encoder_channels},
                     {"encoder_kernels", c.encoder_kernels},
                     {"encoder_strides", c.encoder_strides},
                     {"bottleneck_dim", c.bottleneck_dim},
                     {"translator_conv_blocks", c.translator_conv_blocks},
                     {"translator_channels", c.translator_channels},
                     {"decoder_channels", c.decoder_channels},
                     {"resnet_blocks", c.resnet_blocks},
                     {"upsample_stages", c.upsample_stages},
                     {"upsample_channels", c.upsample_channels},
                     {"out_h", c.out_h},
                     {"out_w", c.out_w},
                     {"leaky_slope", c.leaky_slope},
                     {"norm_eps", c.norm_eps},
                     {"clamp_output", c.clamp_output}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  JsonFields f(j, "model");
  f.optional("in_channels", c.in_channels);
  f.optional("k", c.k);
  f.optional("subcarriers", c.subcarriers);
  f.optional("encoder_channels", c.encoder_channels);
  f.optional("encoder_kernels", c.encoder_kernels);
  f.optional("encoder_strides", c.encoder_strides);
  f.optional("bottleneck_dim", c.bottleneck_dim);
  f.optional("translator_conv_blocks", c.translator_conv_blocks);
  f.optional("translator_channels", c.translator_channels);
  f.optional("decoder_channels", c.decoder_channels);
  f.optional("resnet_blocks", c.resnet_blocks);
  f.optional("upsample_stages", c.upsample_stages);
  f.optional("upsample_channels", c.upsample_channels);
  f.optional("out_h", c.out_h);
  f.optional("out_w", c.out_w);
  f.optional("leaky_slope", c.leaky_slope);
  f.optional("norm_eps", c.norm_eps);
  f.optional("clamp_output", c.clamp_output);
  f.finish();
  c.validate();
  return c;
}

namespace {

template <class T>
class ParamFactory {
 public:
  using TensorT = ad::BasicTensor<T>;
  explicit ParamFactory(std::uint64_t seed) : rng_(seed) {}

  TensorT glorot(ad::Shape shape, std::size_t fan_in, std::size_t fan_out) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-a, a);
    std::vector<T> v(ad::shape_numel(shape));
    for (T& x : v) x = static_cast<T>(dist(rng_));
    return TensorT::from(std::move(shape), std::move(v), true);
  }

  ConvLayerT<T> conv(std::size_t c_in, std::size_t c_out, std::size_t kh, std::size_t kw,
                     std::size_t sh = 1, std::size_t sw = 1) {
    ConvLayerT<T> l;
    l.weight = glorot({c_out, c_in, kh, kw}, c_in * kh * kw, c_out * kh * kw);
    l.bias = TensorT::zeros({c_out}, true);
    l.params = {sh, sw, kh / 2, kw / 2};
    return l;
  }

  NormLayerT<T> norm(std::size_t c) {
    return {TensorT::full({c}, T(1), true), TensorT::zeros({c}, true)};
  }

  ConvBlockT<T> block(std::size_t c_in, std::size_t c_out, std::size_t kh = 3, std::size_t kw = 3,
                      std::size_t sh = 1, std::size_t sw = 1) {
    ConvBlockT<T> b;
    b.conv = conv(c_in, c_out, kh, kw, sh, sw);
    b.norm = norm(c_out);
    return b;
  }

  LinearLayerT<T> linear(std::size_t d_in, std::size_t d_out) {
    return {glorot({d_out, d_in}, d_in, d_out), TensorT::zeros({d_out}, true)};
  }

 private:
  std::mt19937_64 rng_;
};

template <class T>
void push_conv(std::vector<NamedTensorT<T>>& out, const std::string& prefix, const ConvLayerT<T>& l) {
  out.push_back({prefix + ".weight", l.weight});
  out.push_back({prefix + ".bias", l.bias});
}

template <class T>
void push_norm(std::vector<NamedTensorT<T>>& out, const std::string& prefix, const NormLayerT<T>& l) {
  out.push_back({prefix + ".gamma", l.gamma});
  out.push_back({prefix + ".beta", l.beta});
}

template <class T>
void push_block(std::vector<NamedTensorT<T>>& out, const std::string& prefix, const ConvBlockT<T>& b) {
  push_conv(out, prefix + ".conv", b.conv);
  push_norm(out, prefix + ".norm", b.norm);
}

template <class T>
ad::BasicTensor<T> run_block(ad::Tape& tape, const ConvBlockT<T>& b, const ad::BasicTensor<T>& x,
                             double eps) {
  auto y = ad::conv2d(tape, x, b.conv.weight, b.conv.bias, b.conv.params);
  y = ad::instance_norm(tape, y, b.norm.gamma, b.norm.beta, eps);
  return ad::relu(tape, y);
}

template <class T>
ad::BasicTensor<T> as_batch(ad::Tape& tape, const ad::BasicTensor<T>& x, std::size_t rank) {
  if (x.rank() == rank) return x;
  if (x.rank() + 1 == rank) {
    ad::Shape s{1};
    s.insert(s.end(), x.shape().begin(), x.shape().end());
    return ad::reshape(tape, x, std::move(s));
  }
  throw std::invalid_argument("model: unexpected input rank " + ad::shape_str(x.shape()));
}

// Visits every parameter tensor slot of a pair of same-shaped models.
template <class A, class B, class F>
void zip_params(A& a, B& b, F&& f) {
  auto conv = [&](auto& x, auto& y) { f(x.weight, y.weight), f(x.bias, y.bias); };
  auto norm = [&](auto& x, auto& y) { f(x.gamma, y.gamma), f(x.beta, y.beta); };
  auto block = [&](auto& x, auto& y) { conv(x.conv, y.conv), norm(x.norm, y.norm); };
  for (std::size_t i = 0; i < a.encoder.size(); ++i) block(a.encoder[i], b.encoder[i]);
  conv(a.squeeze, b.squeeze);
  conv(a.expand, b.expand);
  for (std::size_t i = 0; i < a.translator.size(); ++i) block(a.translator[i], b.translator[i]);
  for (std::size_t i = 0; i < a.residual.size(); ++i) {
    block(a.residual[i].first, b.residual[i].first);
    conv(a.residual[i].second, b.residual[i].second);
    norm(a.residual[i].second_norm, b.residual[i].second_norm);
  }
  for (std::size_t i = 0; i < a.upsample.size(); ++i) block(a.upsample[i], b.upsample[i]);
  conv(a.output, b.output);
}

}  // namespace

template <class T>
std::vector<NamedTensorT<T>> Wi2ViModelT<T>::parameters() const {
  std::vector<NamedTensorT<T>> out;
  for (std::size_t i = 0; i < encoder.size(); ++i) push_block(out, "encoder." + std::to_string(i), encoder[i]);
  out.push_back({"translator.squeeze.weight", squeeze.weight});
  out.push_back({"translator.squeeze.bias", squeeze.bias});
  out.push_back({"translator.expand.weight", expand.weight});
  out.push_back({"translator.expand.bias", expand.bias});
  for (std::size_t i = 0; i < translator.size(); ++i) {
    push_block(out, "translator.block" + std::to_string(i), translator[i]);
  }
  for (std::size_t i = 0; i < residual.size(); ++i) {
    const auto p = "decoder.res" + std::to_string(i);
    push_block(out, p + ".first", residual[i].first);
    push_conv(out, p + ".second.conv", residual[i].second);
    push_norm(out, p + ".second.norm", residual[i].second_norm);
  }
  for (std::size_t i = 0; i < upsample.size(); ++i) push_block(out, "decoder.up" + std::to_string(i), upsample[i]);
  push_conv(out, "decoder.out", output);
  return out;
}

template <class T>
std::size_t Wi2ViModelT<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : parameters()) n += p.tensor.numel();
  return n;
}

template <class T>
Wi2ViModelT<T> Wi2ViModelT<T>::clone() const {
  Wi2ViModelT m = *this;
  zip_params(m, *this, [](TensorT& dst, const TensorT& src) {
    dst = src.clone();
    dst.set_requires_grad(src.requires_grad());
  });
  return m;
}

template <class T>
void Wi2ViModelT<T>::zero_grad() {
  for (auto& p : parameters()) p.tensor.zero_grad();
}

template <class To, class From>
Wi2ViModelT<To> convert_model(const Wi2ViModelT<From>& model) {
  Wi2ViModelT<To> m;
  m.config = model.config;
  m.encoder.resize(model.encoder.size());
  m.translator.resize(model.translator.size());
  m.residual.resize(model.residual.size());
  m.upsample.resize(model.upsample.size());
  auto copy_params = [](auto& dst, const auto& src) { dst.params = src.params; };
  for (std::size_t i = 0; i < m.encoder.size(); ++i) copy_params(m.encoder[i].conv, model.encoder[i].conv);
  for (std::size_t i = 0; i < m.translator.size(); ++i) copy_params(m.translator[i].conv, model.translator[i].conv);
  for (std::size_t i = 0; i < m.residual.size(); ++i) {
    copy_params(m.residual[i].first.conv, model.residual[i].first.conv);
    copy_params(m.residual[i].second, model.residual[i].second);
  }
  for (std::size_t i = 0; i < m.upsample.size(); ++i) copy_params(m.upsample[i].conv, model.upsample[i].conv);
  copy_params(m.output, model.output);
  zip_params(m, model, [](ad::BasicTensor<To>& dst, const ad::BasicTensor<From>& src) {
    const auto s = src.data();
    dst = ad::BasicTensor<To>::from(src.shape(), std::vector<To>(s.begin(), s.end()),
                                    src.requires_grad());
  });
  return m;
}

template <class T>
Wi2ViModelT<T> init_model(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  ParamFactory<T> make(seed);
  Wi2ViModelT<T> m;
  m.config = cfg;

  std::size_t c = cfg.in_channels;
  for (std::size_t i = 0; i < cfg.encoder_channels.size(); ++i) {
    const auto [kh, kw] = cfg.encoder_kernels[i];
    const auto [sh, sw] = cfg.encoder_strides[i];
    m.encoder.push_back(make.block(c, cfg.encoder_channels[i], kh, kw, sh, sw));
    c = cfg.encoder_channels[i];
  }

  const std::size_t base = cfg.decoder_channels * cfg.base_h() * cfg.base_w();
  m.squeeze = make.linear(cfg.latent_dim(), cfg.effective_bottleneck());
  m.expand = make.linear(cfg.effective_bottleneck(), base);

  c = cfg.decoder_channels;
  for (std::size_t i = 0; i < cfg.translator_conv_blocks; ++i) {
    m.translator.push_back(make.block(c, cfg.translator_channels));
    c = cfg.translator_channels;
  }
  for (std::size_t i = 0; i < cfg.resnet_blocks; ++i) {
    ResidualBlockT<T> r;
    r.first = make.block(c, c);
    r.second = make.conv(c, c, 3, 3);
    r.second_norm = make.norm(c);
    m.residual.push_back(std::move(r));
  }
  for (std::size_t i = 0; i < cfg.upsample_stages; ++i) {
    m.upsample.push_back(make.block(c, cfg.upsample_channels[i]));
    c = cfg.upsample_channels[i];
  }
  m.output = make.conv(c, 1, 3, 3);
  return m;
}

template <class T>
ad::BasicTensor<T> encoder_forward(const Wi2ViModelT<T>& model, ad::Tape& tape,
                                   const ad::BasicTensor<T>& x) {
  const auto& cfg = model.config;
  auto h = as_batch(tape, x, 4);
  if (h.dim(1) != cfg.in_channels || h.dim(2) != cfg.k || h.dim(3) != cfg.subcarriers) {
    throw std::invalid_argument("encoder: input " + ad::shape_str(x.shape()) + " does not match [" +
                                std::to_string(cfg.in_channels) + "][" + std::to_string(cfg.k) +
                                "][" + std::to_string(cfg.subcarriers) + "]");
  }
  for (const auto& b : model.encoder) h = run_block(tape, b, h, cfg.norm_eps);
  return h;
}

template <class T>
ad::BasicTensor<T> translator_forward(const Wi2ViModelT<T>& model, ad::Tape& tape,
                                      const ad::BasicTensor<T>& latent) {
  const auto& cfg = model.config;
  auto h = as_batch(tape, latent, 4);
  const std::size_t n = h.dim(0);
  if (h.numel() != n * cfg.latent_dim()) {
    throw std::invalid_argument("translator: latent " + ad::shape_str(latent.shape()) +
                                " does not hold latent_dim " + std::to_string(cfg.latent_dim()));
  }
  h = ad::reshape(tape, h, {n, cfg.latent_dim()});
  h = ad::linear(tape, h, model.squeeze.weight, model.squeeze.bias);
  h = ad::leaky_relu(tape, h, cfg.leaky_slope);
  h = ad::linear(tape, h, model.expand.weight, model.expand.bias);
  h = ad::reshape(tape, h, {n, cfg.decoder_channels, cfg.base_h(), cfg.base_w()});
  for (const auto& b : model.translator) h = run_block(tape, b, h, cfg.norm_eps);
  return h;
}

template <class T>
ad::BasicTensor<T> decoder_forward(const Wi2ViModelT<T>& model, ad::Tape& tape,
                                   const ad::BasicTensor<T>& visual, const ForwardOptions& opts) {
  const auto& cfg = model.config;
  auto h = as_batch(tape, visual, 4);
  if (h.dim(2) != cfg.base_h() || h.dim(3) != cfg.base_w()) {
    throw std::invalid_argument("decoder: input " + ad::shape_str(visual.shape()) +
                                " does not match the base resolution");
  }
  const std::size_t n = h.dim(0);
  for (const auto& r : model.residual) {
    auto y = run_block(tape, r.first, h, cfg.norm_eps);
    y = ad::conv2d(tape, y, r.second.weight, r.second.bias, r.second.params);
    y = ad::instance_norm(tape, y, r.second_norm.gamma, r.second_norm.beta, cfg.norm_eps);
    if (opts.residual_skip) y = ad::add(tape, y, h);
    h = ad::relu(tape, y);
  }
  for (const auto& b : model.upsample) {
    h = ad::upsample2x(tape, h);
    h = run_block(tape, b, h, cfg.norm_eps);
  }
  h = ad::conv2d(tape, h, model.output.weight, model.output.bias, model.output.params);
  return ad::reshape(tape, h, {n, cfg.out_h, cfg.out_w});
}

template <class T>
ad::BasicTensor<T> forward(const Wi2ViModelT<T>& model, ad::Tape& tape, const ad::BasicTensor<T>& x,
                           const ForwardOptions& opts) {
  const bool single = x.rank() == 3;
  auto latent = encoder_forward(model, tape, x);
  auto visual = translator_forward(model, tape, latent);
  auto frame = decoder_forward(model, tape, visual, opts);
  if (single) return ad::reshape(tape, frame, {model.config.out_h, model.config.out_w});
  return frame;
}

template <class T>
ad::BasicTensor<T> predict(const Wi2ViModelT<T>& model, const ad::BasicTensor<T>& x) {
  auto tape = ad::Tape::inference();
  auto y = forward(model, tape, x);
  if (model.config.clamp_output) {
    for (T& v : y.data()) v = std::clamp(v, T(0), T(1));
  }
  return y;
}

#define WI2VI_INSTANTIATE_MODEL(T)                                                                \
  template struct Wi2ViModelT<T>;                                                                 \
  template Wi2ViModelT<T> init_model<T>(const ModelConfig&, std::uint64_t);                       \
  template ad::BasicTensor<T> encoder_forward(const Wi2ViModelT<T>&, ad::Tape&,                   \
                                              const ad::BasicTensor<T>&);                         \
  template ad::BasicTensor<T> translator_forward(const Wi2ViModelT<T>&, ad::Tape&,                \
                                                 const ad::BasicTensor<T>&);                      \
  template ad::BasicTensor<T> decoder_forward(const Wi2ViModelT<T>&, ad::Tape&,                   \
                                              const ad::BasicTensor<T>&, const ForwardOptions&);  \
  template ad::BasicTensor<T> forward(const Wi2ViModelT<T>&, ad::Tape&, const ad::BasicTensor<T>&, \
                                      const ForwardOptions&);                                     \
  template ad::BasicTensor<T> predict(const Wi2ViModelT<T>&, const ad::BasicTensor<T>&);

WI2VI_INSTANTIATE_MODEL(float)
WI2VI_INSTANTIATE_MODEL(double)
#undef WI2VI_INSTANTIATE_MODEL

template Wi2ViModelT<float> convert_model<float, double>(const Wi2ViModelT<double>&);
template Wi2ViModelT<double> convert_model<double, float>(const Wi2ViModelT<float>&);
template Wi2ViModelT<double> convert_model<double, double>(const Wi2ViModelT<double>&);
template Wi2ViModelT<float> convert_model<float, float>(const Wi2ViModelT<float>&);

}  // namespace wi2vi
