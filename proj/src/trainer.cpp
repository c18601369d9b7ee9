#include "wi2vi/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "wi2vi/chan_sim.hpp"
#include "wi2vi/checkpoint.hpp"
#include "wi2vi/errors.hpp"
#include "wi2vi/json_fields.hpp"

namespace wi2vi {

void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
  mallopt(M_TOP_PAD, 64 << 20);
#endif
}

std::string to_string(Precision p) { return p == Precision::float64 ? "float64" : "float32"; }

void TrainConfig::validate() const {
  if (!(lr0 > 0.0)) throw ConfigError("train.lr0 must be positive");
  if (!(lr_decay >= 0.0 && lr_decay < 1.0)) throw ConfigError("train.lr_decay must lie in [0, 1)");
  if (decay_every == 0) throw ConfigError("train.decay_every must be positive");
  if (batch_size == 0) throw ConfigError("train.batch_size must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("train: adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ConfigError("train.adam_eps must be positive");
  if (!(weight_decay >= 0.0)) throw ConfigError("train.weight_decay must be non-negative");
  if (k == 0) throw ConfigError("train.k must be positive");
  if (eval_batch == 0) throw ConfigError("train.eval_batch must be positive");
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"lr0", c.lr0},
                     {"lr_decay", c.lr_decay},
                     {"decay_every", c.decay_every},
                     {"epochs", c.epochs},
                     {"batch_size", c.batch_size},
                     {"adam", {{"beta1", c.beta1}, {"beta2", c.beta2}, {"eps", c.adam_eps}}},
                     {"weight_decay", c.weight_decay},
                     {"seed", c.seed},
                     {"k", c.k},
                     {"shuffle", c.shuffle},
                     {"precision", to_string(c.precision)},
                     {"checkpoint_every", c.checkpoint_every},
                     {"eval_dropin", c.eval_dropin},
                     {"eval_seed", c.eval_seed},
                     {"eval_batch", c.eval_batch},
                     {"eval_every_epoch", c.eval_every_epoch},
                     {"verbose", c.verbose}};
}

TrainConfig train_config_from_json(const nlohmann::json& j, const std::string& path) {
  TrainConfig c;
  JsonFields f(j, path);
  f.optional("lr0", c.lr0);
  f.optional("lr_decay", c.lr_decay);
  f.optional("decay_every", c.decay_every);
  f.optional("epochs", c.epochs);
  f.optional("batch_size", c.batch_size);
  if (const auto* adam = f.child("adam")) {
    JsonFields af(*adam, f.path("adam"));
    af.optional("beta1", c.beta1);
    af.optional("beta2", c.beta2);
    af.optional("eps", c.adam_eps);
    af.finish();
  }
  f.optional("weight_decay", c.weight_decay);
  f.optional("seed", c.seed);
  f.optional("k", c.k);
  f.optional("shuffle", c.shuffle);
  std::string precision = to_string(c.precision);
  f.optional("precision", precision);
  if (precision == "float32") {
    c.precision = Precision::float32;
  } else if (precision == "float64") {
    c.precision = Precision::float64;
  } else {
    f.fail("precision", "expected float32 or float64");
  }
  f.optional("checkpoint_every", c.checkpoint_every);
  f.optional("eval_dropin", c.eval_dropin);
  f.optional("eval_seed", c.eval_seed);
  f.optional("eval_batch", c.eval_batch);
  f.optional("eval_every_epoch", c.eval_every_epoch);
  f.optional("verbose", c.verbose);
  f.finish();
  c.validate();
  return c;
}

double lr_at(std::size_t epoch, const TrainConfig& cfg) {
  return cfg.lr0 * std::pow(1.0 - cfg.lr_decay, static_cast<double>(epoch / cfg.decay_every));
}

template <class T>
OptimizerState<T> OptimizerState<T>::zeros_like(const std::vector<NamedTensorT<T>>& params) {
  OptimizerState s;
  for (const auto& p : params) {
    s.m.emplace_back(p.tensor.numel(), T(0));
    s.v.emplace_back(p.tensor.numel(), T(0));
  }
  return s;
}

template <class T>
void adam_step(const std::vector<NamedTensorT<T>>& params, OptimizerState<T>& state, double lr,
               const TrainConfig& cfg) {
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw std::invalid_argument("adam_step: optimizer state does not match the parameter list");
  }
  ++state.t;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = params[i].tensor;
    auto& m = state.m[i];
    auto& v = state.v[i];
    if (m.size() != p.numel() || v.size() != p.numel()) {
      throw std::invalid_argument("adam_step: state shape mismatch for " + params[i].name);
    }
    auto values = const_cast<ad::BasicTensor<T>&>(p).data();
    const bool has_grad = p.has_grad();
    const auto g = has_grad ? p.grad() : std::span<T>();
    for (std::size_t e = 0; e < values.size(); ++e) {
      const double ge = has_grad ? static_cast<double>(g[e]) : 0.0;
      const double me = cfg.beta1 * m[e] + (1.0 - cfg.beta1) * ge;
      const double ve = cfg.beta2 * v[e] + (1.0 - cfg.beta2) * ge * ge;
      m[e] = static_cast<T>(me);
      v[e] = static_cast<T>(ve);
      const double mhat = me / c1;
      const double vhat = ve / c2;
      const double pe = values[e];
      values[e] = static_cast<T>(pe - lr * mhat / (std::sqrt(vhat) + cfg.adam_eps) - lr * cfg.weight_decay * pe);
    }
  }
}

template <class T>
Batch<T> make_batch(const Dataset& ds, std::span<const std::size_t> indices, std::size_t k, const FetchPolicy& policy) {
  if (indices.empty()) throw std::invalid_argument("make_batch: empty batch");
  const auto& shape = ds.trace->shape;
  const std::size_t N = indices.size();
  const auto& first = ds.samples.at(indices[0]).frame.frame;
  const std::size_t H = first.h, W = first.w;
  const std::size_t per_input = shape.channels() * k * shape.F;

  Batch<T> b;
  b.inputs = ad::BasicTensor<T>::zeros({N, shape.channels(), k, shape.F});
  b.targets = ad::BasicTensor<T>::zeros({N, H, W});
  b.masks = ad::BasicTensor<T>::zeros({N, H, W});
  b.weights.resize(N);
  auto in = b.inputs.data();
  auto tg = b.targets.data();
  auto mk = b.masks.data();
  std::vector<const CsiSample*> chosen(k);
  for (std::size_t bi = 0; bi < N; ++bi) {
    const auto idx = indices[bi];
    const auto& s = ds.samples.at(idx);
    const std::size_t n = s.csi_indices.size();
    std::vector<std::size_t> sel;
    if (policy.dropin) {
      std::mt19937_64 rng(fetch_seed(policy.seed, policy.epoch, idx));
      sel = dropin_select_indices(n, k, rng);
    } else {
      sel = strided_indices(n, k);
    }
    for (std::size_t j = 0; j < k; ++j) chosen[j] = &ds.trace->samples.at(s.csi_indices[sel[j]]);
    feature_stack_into<T>(chosen, ds.normalization_stats, in.subspan(bi * per_input, per_input));

    const auto& fr = s.frame.frame;
    if (fr.h != H || fr.w != W) throw DataError("make_batch: frames differ in size");
    const auto mask = build_mask(s.frame.mask_rects, H, W);
    for (std::size_t p = 0; p < H * W; ++p) {
      tg[bi * H * W + p] = static_cast<T>(fr.pixels[p]);
      mk[bi * H * W + p] = static_cast<T>(mask[p]);
    }
    b.weights[bi] = std::max(s.frame.weight, kMinFrameWeight);
  }
  return b;
}

namespace {

// Same value as weighted_l1_batch, accumulated in double from the stored values.
template <class T>
double batch_loss(const ad::BasicTensor<T>& pred, const Batch<T>& b) {
  const std::size_t N = b.weights.size();
  const std::size_t per = b.targets.numel() / N;
  const auto p = pred.data();
  const auto t = b.targets.data();
  const auto m = b.masks.data();
  double loss = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    double num = 0.0, den = 0.0;
    for (std::size_t e = i * per; e < (i + 1) * per; ++e) {
      num += static_cast<double>(m[e]) * std::abs(static_cast<double>(p[e]) - static_cast<double>(t[e]));
      den += m[e];
    }
    loss += b.weights[i] * num / den;
  }
  return loss / static_cast<double>(N);
}

GrayFrame frame_from(std::span<const double> v, std::size_t h, std::size_t w, std::int64_t ts) {
  GrayFrame f;
  f.timestamp_us = ts;
  f.h = h;
  f.w = w;
  f.pixels.assign(v.begin(), v.end());
  return f;
}

}  // namespace

template <class T>
double train_step(Wi2ViModelT<T>& model, const Dataset& ds, std::span<const std::size_t> indices,
                  std::size_t epoch, OptimizerState<T>& opt, const TrainConfig& cfg) {
  const auto batch = make_batch<T>(ds, indices, cfg.k, {true, cfg.seed, epoch});
  ad::Tape tape;
  auto pred = forward(model, tape, batch.inputs);
  auto loss = ad::weighted_l1_batch(tape, pred, batch.targets, batch.weights, batch.masks);
  const double value = batch_loss(pred, batch);
  model.zero_grad();
  ad::backward(loss, tape);
  adam_step(model.parameters(), opt, lr_at(epoch, cfg), cfg);
  return value;
}

double sample_weighted_l1(const GrayFrame& pred, const WeightedFrame& target) {
  const auto& t = target.frame;
  if (pred.h != t.h || pred.w != t.w) throw std::invalid_argument("weighted_l1: size mismatch");
  const auto mask = build_mask(target.mask_rects, t.h, t.w);
  double num = 0.0, den = 0.0;
  for (std::size_t p = 0; p < t.size(); ++p) {
    num += mask[p] * std::abs(pred.pixels[p] - t.pixels[p]);
    den += mask[p];
  }
  if (!(den > 0.0)) throw std::invalid_argument("weighted_l1: mask sums to zero");
  return std::max(target.weight, kMinFrameWeight) * num / den;
}

template <class T>
EvalResult evaluate(const Wi2ViModelT<T>& model, const Dataset& ds, const TrainConfig& cfg, bool keep_predictions) {
  if (ds.samples.empty()) throw DataError("evaluate: empty dataset");
  EvalResult r;
  const std::size_t H = model.config.out_h, W = model.config.out_w;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < ds.size(); start += cfg.eval_batch) {
    idx.clear();
    for (std::size_t i = start; i < std::min(ds.size(), start + cfg.eval_batch); ++i) idx.push_back(i);
    const auto batch = make_batch<T>(ds, idx, cfg.k, {cfg.eval_dropin, cfg.eval_seed, 0});
    auto tape = ad::Tape::inference();
    const auto pred = forward(model, tape, batch.inputs);
    const auto pv = pred.data();
    std::vector<double> buf(H * W);
    for (std::size_t bi = 0; bi < idx.size(); ++bi) {
      for (std::size_t p = 0; p < H * W; ++p) buf[p] = static_cast<double>(pv[bi * H * W + p]);
      const auto& s = ds.samples[idx[bi]];
      auto frame = frame_from(buf, H, W, s.frame_timestamp_us);
      r.per_sample.push_back(sample_weighted_l1(frame, s.frame));
      if (keep_predictions) r.predictions.push_back(std::move(frame));
    }
  }
  double sum = 0.0;
  for (double v : r.per_sample) sum += v;
  r.mean_l1 = sum / static_cast<double>(r.per_sample.size());
  return r;
}

EvalResult evaluate_as(const Wi2ViModel& model, const Dataset& ds, const TrainConfig& cfg, bool keep_predictions) {
  if (cfg.precision == Precision::float32) {
    return evaluate(convert_model<float>(model), ds, cfg, keep_predictions);
  }
  return evaluate(model, ds, cfg, keep_predictions);
}

void write_history_csv(const std::filesystem::path& path, const std::vector<HistoryRow>& rows) {
  std::FILE* fp = std::fopen(path.c_str(), "w");
  if (!fp) throw DataError("history: cannot open " + path.string());
  std::fprintf(fp, "epoch,lr,train_l1,eval_l1\n");
  for (const auto& r : rows) {
    std::fprintf(fp, "%zu,%.17g,%.17g,%.17g\n", r.epoch, r.lr, r.train_l1, r.eval_l1);
  }
  const bool ok = std::fclose(fp) == 0;
  if (!ok) throw DataError("history: write failed for " + path.string());
}

std::filesystem::path checkpoint_sidecar(const std::filesystem::path& path) {
  auto p = path;
  p.replace_extension(".json");
  return p;
}

template <class T>
void save_checkpoint(const std::filesystem::path& path, const Wi2ViModelT<T>& model, const OptimizerState<T>* opt,
                     const CheckpointMeta& meta) {
  std::vector<CheckpointEntry> entries;
  const auto params = model.parameters();
  for (const auto& p : params) {
    const auto d = p.tensor.data();
    entries.push_back({p.name, p.tensor.shape(), std::vector<double>(d.begin(), d.end())});
  }
  if (opt) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      entries.push_back({"adam.m." + params[i].name, params[i].tensor.shape(),
                         std::vector<double>(opt->m[i].begin(), opt->m[i].end())});
      entries.push_back({"adam.v." + params[i].name, params[i].tensor.shape(),
                         std::vector<double>(opt->v[i].begin(), opt->v[i].end())});
    }
    entries.push_back({"adam.t", {}, {static_cast<double>(opt->t)}});
  }
  write_w2vp_atomic(path, entries);

  nlohmann::json hist = nlohmann::json::array();
  for (const auto& r : meta.history) {
    hist.push_back({{"epoch", r.epoch},
                    {"lr", r.lr},
                    {"train_l1", r.train_l1},
                    {"eval_l1", std::isnan(r.eval_l1) ? nlohmann::json(nullptr) : nlohmann::json(r.eval_l1)}});
  }
  nlohmann::json side = {{"format", "wi2vi-checkpoint"},
                         {"model", meta.model},
                         {"train", meta.train},
                         {"epochs_done", meta.epochs_done},
                         {"weights", path.filename().string()},
                         {"history", hist}};
  const auto sp = checkpoint_sidecar(path);
  auto tmp = sp;
  tmp += ".tmp";
  {
    std::ofstream os(tmp);
    os << side.dump(1) << '\n';
    if (!os) throw DataError("checkpoint: cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, sp);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  const auto sp = checkpoint_sidecar(path);
  std::ifstream is(sp);
  if (!is) throw DataError("checkpoint: missing sidecar " + sp.string());
  nlohmann::json side;
  try {
    side = nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint: " + sp.string() + ": " + e.what());
  }
  LoadedCheckpoint out;
  try {
    out.meta.model = model_config_from_json(side.at("model"));
    out.meta.train = train_config_from_json(side.at("train"));
    out.meta.epochs_done = side.at("epochs_done").get<std::size_t>();
    for (const auto& r : side.at("history")) {
      HistoryRow row;
      row.epoch = r.at("epoch").get<std::size_t>();
      row.lr = r.at("lr").get<double>();
      row.train_l1 = r.at("train_l1").get<double>();
      row.eval_l1 = r.at("eval_l1").is_null() ? std::numeric_limits<double>::quiet_NaN() : r.at("eval_l1").get<double>();
      out.meta.history.push_back(row);
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint: malformed sidecar " + sp.string() + ": " + e.what());
  }

  const auto entries = read_w2vp(path);
  std::map<std::string, const CheckpointEntry*> by_name;
  for (const auto& e : entries) by_name[e.name] = &e;
  const auto take = [&](const std::string& name, const ad::Shape& shape) -> const CheckpointEntry& {
    const auto it = by_name.find(name);
    if (it == by_name.end()) throw DataError("checkpoint: " + path.string() + " lacks " + name);
    if (it->second->shape != shape) {
      throw DataError("checkpoint: " + name + " has shape " + ad::shape_str(it->second->shape) + ", expected " +
                      ad::shape_str(shape));
    }
    return *it->second;
  };

  out.model = init_model<double>(out.meta.model, 0);
  const auto params = out.model.parameters();
  for (const auto& p : params) {
    const auto& e = take(p.name, p.tensor.shape());
    std::copy(e.data.begin(), e.data.end(), const_cast<ad::Tensor&>(p.tensor).data().begin());
  }
  if (by_name.count("adam.t")) {
    OptimizerState<double> opt;
    for (const auto& p : params) {
      opt.m.push_back(take("adam.m." + p.name, p.tensor.shape()).data);
      opt.v.push_back(take("adam.v." + p.name, p.tensor.shape()).data);
    }
    opt.t = static_cast<std::uint64_t>(take("adam.t", {}).data.at(0));
    out.optimizer = std::move(opt);
  }
  return out;
}

namespace {

void check_compatible(const ModelConfig& mc, const Dataset& ds, const TrainConfig& cfg) {
  if (!ds.trace) throw DataError("train: dataset has no trace");
  const auto& sh = ds.trace->shape;
  if (mc.in_channels != sh.channels() || mc.subcarriers != sh.F) {
    throw ConfigError("model input (" + std::to_string(mc.in_channels) + " channels, " +
                      std::to_string(mc.subcarriers) + " subcarriers) does not match the trace (" +
                      std::to_string(sh.channels()) + ", " + std::to_string(sh.F) + ")");
  }
  if (mc.k != cfg.k) throw ConfigError("model.k and train.k differ");
  if (cfg.k > ds.n) throw ConfigError("train.k exceeds the FTN width n");
  for (const auto& s : ds.samples) {
    if (s.frame.frame.h != mc.out_h || s.frame.frame.w != mc.out_w) {
      throw ConfigError("dataset frames are " + std::to_string(s.frame.frame.w) + "x" +
                        std::to_string(s.frame.frame.h) + ", model output is " + std::to_string(mc.out_w) + "x" +
                        std::to_string(mc.out_h));
    }
  }
}

template <class T>
OptimizerState<T> narrow(const OptimizerState<double>& s) {
  OptimizerState<T> o;
  for (const auto& m : s.m) o.m.emplace_back(m.begin(), m.end());
  for (const auto& v : s.v) o.v.emplace_back(v.begin(), v.end());
  o.t = s.t;
  return o;
}

template <class T>
TrainResult train_impl(const ModelConfig& model_cfg, const Dataset& train_set, const Dataset& test_set,
                       const TrainConfig& cfg, const TrainOptions& opts) {
  Wi2ViModelT<T> model;
  OptimizerState<T> opt;
  std::vector<HistoryRow> history;
  std::size_t start = 0;
  if (!opts.resume.empty()) {
    auto lc = load_checkpoint(opts.resume);
    if (nlohmann::json(lc.meta.model) != nlohmann::json(model_cfg)) {
      throw ConfigError("resume: checkpoint model config differs from the run config");
    }
    model = convert_model<T>(lc.model);
    opt = lc.optimizer ? narrow<T>(*lc.optimizer) : OptimizerState<T>::zeros_like(model.parameters());
    start = lc.meta.epochs_done;
    history = lc.meta.history;
    history.resize(std::min(history.size(), start));
  } else {
    model = init_model<T>(model_cfg, cfg.seed);
    opt = OptimizerState<T>::zeros_like(model.parameters());
  }

  const std::size_t N = train_set.size();
  std::vector<std::size_t> order(N);
  TrainResult result;
  const auto save = [&](std::size_t epochs_done) {
    const auto p = opts.out_dir / ("ckpt_" + std::to_string(epochs_done) + ".w2vp");
    save_checkpoint(p, model, &opt, {model_cfg, cfg, epochs_done, history});
    result.final_checkpoint = p;
  };

  for (std::size_t epoch = start; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (cfg.shuffle) {
      std::mt19937_64 rng(fetch_seed(cfg.seed, epoch, std::numeric_limits<std::uint64_t>::max()));
      std::shuffle(order.begin(), order.end(), rng);
    }
    double sum = 0.0;
    for (std::size_t b = 0; b < N; b += cfg.batch_size) {
      const std::span<const std::size_t> idx(order.data() + b, std::min(cfg.batch_size, N - b));
      sum += train_step(model, train_set, idx, epoch, opt, cfg) * static_cast<double>(idx.size());
    }
    HistoryRow row{epoch, lr_at(epoch, cfg), sum / static_cast<double>(N), std::numeric_limits<double>::quiet_NaN()};
    if (!test_set.samples.empty() && (cfg.eval_every_epoch || epoch + 1 == cfg.epochs)) {
      row.eval_l1 = evaluate(model, test_set, cfg).mean_l1;
    }
    history.push_back(row);
    if (cfg.verbose) {
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::printf("epoch %zu lr %.6g train_l1 %.6f eval_l1 %.6f (%.1f s)\n", epoch, row.lr, row.train_l1,
                  row.eval_l1, secs);
      std::fflush(stdout);
    }
    if (opts.on_epoch) opts.on_epoch(row);
    if (!opts.out_dir.empty()) {
      write_history_csv(opts.out_dir / "history.csv", history);
      const bool last = epoch + 1 == cfg.epochs;
      if (last || (cfg.checkpoint_every && (epoch + 1) % cfg.checkpoint_every == 0)) save(epoch + 1);
    }
  }
  if (!opts.out_dir.empty() && result.final_checkpoint.empty()) save(cfg.epochs);
  result.model = convert_model<double>(model);
  result.history = std::move(history);
  return result;
}

}  // namespace

TrainResult train(const ModelConfig& model_cfg, const Dataset& train_set, const Dataset& test_set,
                  const TrainConfig& cfg, const TrainOptions& opts) {
  cfg.validate();
  model_cfg.validate();
  if (train_set.samples.empty()) throw DataError("train: empty training set");
  check_compatible(model_cfg, train_set, cfg);
  if (!test_set.samples.empty()) check_compatible(model_cfg, test_set, cfg);
  tune_allocator();
  if (!opts.out_dir.empty()) std::filesystem::create_directories(opts.out_dir);
  if (cfg.precision == Precision::float32) return train_impl<float>(model_cfg, train_set, test_set, cfg, opts);
  return train_impl<double>(model_cfg, train_set, test_set, cfg, opts);
}

#define WI2VI_INSTANTIATE_TRAINER(T)                                                                        \
  template struct OptimizerState<T>;                                                                        \
  template void adam_step(const std::vector<NamedTensorT<T>>&, OptimizerState<T>&, double, const TrainConfig&); \
  template Batch<T> make_batch<T>(const Dataset&, std::span<const std::size_t>, std::size_t, const FetchPolicy&); \
  template double train_step(Wi2ViModelT<T>&, const Dataset&, std::span<const std::size_t>, std::size_t,     \
                             OptimizerState<T>&, const TrainConfig&);                                       \
  template EvalResult evaluate(const Wi2ViModelT<T>&, const Dataset&, const TrainConfig&, bool);            \
  template void save_checkpoint(const std::filesystem::path&, const Wi2ViModelT<T>&, const OptimizerState<T>*, \
                                const CheckpointMeta&);

WI2VI_INSTANTIATE_TRAINER(float)
WI2VI_INSTANTIATE_TRAINER(double)
#undef WI2VI_INSTANTIATE_TRAINER

}  // namespace wi2vi
