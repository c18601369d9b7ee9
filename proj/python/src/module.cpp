// Python bindings: pipeline commands plus the small pure functions that are
// handy from notebooks.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <nlohmann/json.hpp>

#include <random>

#include "wi2vi/errors.hpp"
#include "wi2vi/pipeline.hpp"

namespace py = pybind11;
namespace fs = std::filesystem;
using namespace wi2vi;

namespace {

py::array_t<double> frame_array(const GrayFrame& f) {
  py::array_t<double> a({f.h, f.w});
  std::copy(f.pixels.begin(), f.pixels.end(), a.mutable_data());
  return a;
}

py::dict report_dict(const EvalReport& r) {
  py::dict d;
  d["samples"] = r.samples;
  d["mean_l1"] = r.mean_l1;
  d["p50"] = r.p50;
  d["p90"] = r.p90;
  d["max_l1"] = r.max_l1;
  d["baseline_l1"] = r.baseline_l1;
  d["centroid_hits"] = r.centroid.hits;
  d["centroid_counted"] = r.centroid.counted;
  d["centroid_rate"] = r.centroid.rate;
  d["centroid_mean_error"] = r.centroid.mean_error;
  d["empty_scene_l1"] = r.empty_scene_l1 ? py::cast(*r.empty_scene_l1) : py::none();
  return d;
}

RunConfig load(const fs::path& config, std::optional<std::uint64_t> seed) {
  auto cfg = load_run_config(config);
  if (seed) override_seed(cfg, *seed);
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "WiFi CSI to video frame pipeline";

  static py::exception<ConfigError> config_error(m, "ConfigError", PyExc_ValueError);
  static py::exception<DataError> data_error(m, "DataError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      py::set_error(config_error, e.what());
    } catch (const DataError& e) {
      py::set_error(data_error, e.what());
    }
  });

  m.def(
      "sanitize_phase", [](const std::vector<double>& phase) { return sanitize_phase(phase); }, py::arg("phase"),
      "Unwrap and remove the linear-in-subcarrier phase term.");
  m.def(
      "unwrap_phase", [](const std::vector<double>& phase) { return unwrap_phase(phase); }, py::arg("phase"));
  m.def(
      "lr_at",
      [](std::size_t epoch, double lr0, double lr_decay, std::size_t decay_every) {
        TrainConfig c;
        c.lr0 = lr0;
        c.lr_decay = lr_decay;
        c.decay_every = decay_every;
        c.validate();
        return lr_at(epoch, c);
      },
      py::arg("epoch"), py::arg("lr0") = 0.002, py::arg("lr_decay") = 0.045, py::arg("decay_every") = 5);
  m.def(
      "dropin_select_indices",
      [](std::size_t n, std::size_t k, std::uint64_t seed) {
        std::mt19937_64 rng(seed);
        return dropin_select_indices(n, k, rng);
      },
      py::arg("n"), py::arg("k"), py::arg("seed"));
  m.def(
      "dropin_matrix",
      [](const std::vector<std::size_t>& selection, std::size_t n) {
        const auto flat = dropin_matrix(selection, n);
        py::array_t<int> a({n, selection.size()});
        std::copy(flat.begin(), flat.end(), a.mutable_data());
        return a;
      },
      py::arg("selection"), py::arg("n"));
  m.def("split_point", &split_point, py::arg("n"), py::arg("train_fraction"));
  m.def(
      "parameter_count",
      [](const std::string& model_json) {
        const auto cfg = model_config_from_json(nlohmann::json::parse(model_json));
        cfg.validate();
        return init_model<double>(cfg, 0).parameter_count();
      },
      py::arg("model_json") = "{}", "Parameter count of a model config given as JSON.");
  m.def(
      "read_pgm", [](const fs::path& p) { return frame_array(read_pgm(p)); }, py::arg("path"),
      "8-bit PGM as a float array in [0, 1].");

  m.def(
      "simulate",
      [](const fs::path& config, const fs::path& out, std::optional<std::uint64_t> seed) {
        const auto r = cmd_simulate(load(config, seed), out);
        return py::dict(py::arg("packets") = r.packets, py::arg("frames") = r.frames);
      },
      py::arg("config"), py::arg("out"), py::arg("seed") = py::none());
  m.def(
      "preprocess",
      [](const fs::path& config, const fs::path& in, const fs::path& out) {
        const auto r = cmd_preprocess(load(config, std::nullopt), in, out);
        return py::dict(py::arg("frames") = r.frames, py::arg("background_from_clip") = r.background_from_clip);
      },
      py::arg("config"), py::arg("in_dir"), py::arg("out"));
  m.def(
      "sync",
      [](const fs::path& config, const fs::path& in, const fs::path& out) {
        const auto r = cmd_sync(load(config, std::nullopt), in, out);
        return py::dict(py::arg("samples") = r.samples, py::arg("train") = r.train, py::arg("test") = r.test,
                        py::arg("dropped") = r.dropped, py::arg("n") = r.n);
      },
      py::arg("config"), py::arg("in_dir"), py::arg("out"));
  m.def(
      "train",
      [](const fs::path& config, const fs::path& dataset, const fs::path& out, const std::optional<fs::path>& resume,
         std::optional<std::uint64_t> seed) {
        const auto cfg = load(config, seed);
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = cmd_train(cfg, dataset, out, resume.value_or(fs::path()));
        }
        py::list history;
        for (const auto& h : r.history) {
          history.append(py::dict(py::arg("epoch") = h.epoch, py::arg("lr") = h.lr, py::arg("train_l1") = h.train_l1,
                                  py::arg("eval_l1") = h.eval_l1));
        }
        return py::dict(py::arg("history") = history, py::arg("checkpoint") = r.final_checkpoint);
      },
      py::arg("config"), py::arg("dataset"), py::arg("out"), py::arg("resume") = py::none(),
      py::arg("seed") = py::none());
  m.def("generate", &cmd_generate, py::arg("checkpoint"), py::arg("dataset"), py::arg("out"));
  m.def(
      "evaluate", [](const fs::path& checkpoint, const fs::path& dataset) { return report_dict(cmd_eval(checkpoint, dataset)); },
      py::arg("checkpoint"), py::arg("dataset"));
}
