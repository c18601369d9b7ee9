// wi2vi: simulate -> preprocess -> sync -> train -> generate / eval.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "wi2vi/errors.hpp"
#include "wi2vi/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitRuntime = 4;

struct Args {
  std::string config;
  std::string in;
  std::string out;
  std::string dataset;
  std::string checkpoint;
  std::string resume;
  std::optional<std::uint64_t> seed;
};

wi2vi::RunConfig load(const Args& a) {
  auto cfg = wi2vi::load_run_config(a.config);
  if (a.seed) wi2vi::override_seed(cfg, *a.seed);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"WiFi CSI to video frame pipeline"};
  app.require_subcommand(1);
  Args a;

  auto* sim = app.add_subcommand("simulate", "Simulate a CSI trace and silhouette frames");
  sim->add_option("--config", a.config, "Run config JSON")->required()->check(CLI::ExistingFile);
  sim->add_option("--out", a.out, "Output directory")->required();
  sim->add_option("--seed", a.seed, "Overrides sim and train seeds");

  auto* pre = app.add_subcommand("preprocess", "Downsample, resize and background-process frames");
  pre->add_option("--config", a.config, "Run config JSON")->required()->check(CLI::ExistingFile);
  pre->add_option("--in", a.in, "simulate output directory")->required()->check(CLI::ExistingDirectory);
  pre->add_option("--out", a.out, "Output directory")->required();

  auto* syn = app.add_subcommand("sync", "Pair frames with their CSI neighborhoods");
  syn->add_option("--config", a.config, "Run config JSON")->required()->check(CLI::ExistingFile);
  syn->add_option("--in", a.in, "preprocess output directory")->required()->check(CLI::ExistingDirectory);
  syn->add_option("--out", a.out, "Dataset directory")->required();

  auto* trn = app.add_subcommand("train", "Train a model on a dataset");
  trn->add_option("--config", a.config, "Run config JSON")->required()->check(CLI::ExistingFile);
  trn->add_option("--dataset", a.dataset, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  trn->add_option("--out", a.out, "Run directory")->required();
  trn->add_option("--resume", a.resume, "Checkpoint to continue from")->check(CLI::ExistingFile);
  trn->add_option("--seed", a.seed, "Overrides sim and train seeds");

  auto* gen = app.add_subcommand("generate", "Render predicted test frames as PGM");
  gen->add_option("--checkpoint", a.checkpoint, "Checkpoint .w2vp")->required()->check(CLI::ExistingFile);
  gen->add_option("--dataset", a.dataset, "Dataset directory")->required()->check(CLI::ExistingDirectory);
  gen->add_option("--out", a.out, "Output directory")->required();

  auto* ev = app.add_subcommand("eval", "Print test-split metrics");
  ev->add_option("--checkpoint", a.checkpoint, "Checkpoint .w2vp")->required()->check(CLI::ExistingFile);
  ev->add_option("--dataset", a.dataset, "Dataset directory")->required()->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (*sim) {
      const auto r = wi2vi::cmd_simulate(load(a), a.out);
      std::printf("packets %zu frames %zu -> %s\n", r.packets, r.frames, a.out.c_str());
    } else if (*pre) {
      const auto r = wi2vi::cmd_preprocess(load(a), a.in, a.out);
      std::printf("frames %zu background %s -> %s\n", r.frames, r.background_from_clip ? "clip" : "median", a.out.c_str());
    } else if (*syn) {
      const auto r = wi2vi::cmd_sync(load(a), a.in, a.out);
      std::printf("samples %zu train %zu test %zu n %zu dropped %zu -> %s\n", r.samples, r.train, r.test, r.n,
                  r.dropped, a.out.c_str());
    } else if (*trn) {
      const auto r = wi2vi::cmd_train(load(a), a.dataset, a.out, a.resume);
      if (!r.history.empty()) {
        const auto& last = r.history.back();
        std::printf("final epoch %zu train_l1 %.6f eval_l1 %.6f checkpoint %s\n", last.epoch, last.train_l1,
                    last.eval_l1, r.final_checkpoint.c_str());
      }
    } else if (*gen) {
      const auto n = wi2vi::cmd_generate(a.checkpoint, a.dataset, a.out);
      std::printf("wrote %zu prediction frames -> %s\n", n, a.out.c_str());
    } else if (*ev) {
      std::fputs(wi2vi::format_report(wi2vi::cmd_eval(a.checkpoint, a.dataset)).c_str(), stdout);
    }
  } catch (const wi2vi::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const wi2vi::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return 0;
}
