// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Command-line front end for the experiment pipeline. One subcommand per
// stage plus `run` for the full recipe and `print-config` for a starting
// configuration file. The output root resolves in precedence order:
// --out flag, config file, ASVLAB_OUT environment variable, "./out".

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "asvlab/core/error.h"
#include "asvlab/harness/pipeline.h"

namespace {

asvlab::PipelineConfig BuildConfig(const std::string& config_path,
                                   const std::optional<uint64_t>& seed,
                                   const std::string& out_flag) {
  asvlab::PipelineConfig cfg = asvlab::PipelineConfig::Default();
  bool out_from_file = false;
  if (!config_path.empty()) {
    std::ifstream f(config_path);
    if (!f) {
      throw asvlab::Error(asvlab::ErrorKind::kIo,
                          "cannot open config file " + config_path);
    }
    nlohmann::json j;
    f >> j;
    cfg = asvlab::PipelineConfig::FromJson(j);
    out_from_file = j.contains("out_root");
  }
  if (!out_flag.empty()) {
    cfg.out_root = out_flag;
  } else if (!out_from_file) {
    if (const char* env = std::getenv("ASVLAB_OUT"); env && *env) {
      cfg.out_root = env;
    }
  }
  if (seed) cfg.seed = *seed;
  return cfg;
}

void PrintResult(const asvlab::StageResult& r) {
  if (r.skipped) {
    std::printf("[skip] %-13s  up to date at %s\n",
                asvlab::StageName(r.stage), r.dir.c_str());
  } else {
    std::printf("[done] %-13s  %.1fs  -> %s\n", asvlab::StageName(r.stage),
                r.seconds, r.dir.c_str());
  }
  std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"asvlab: adversarial speaker-verification laboratory"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_flag;
  std::optional<uint64_t> seed;
  app.add_option("--config", config_path, "pipeline configuration JSON")
      ->envname("ASVLAB_CONFIG");
  app.add_option("--out", out_flag, "output root directory");
  app.add_option("--seed", seed, "global experiment seed");

  // Frequently tuned knobs, applied on top of the config file.
  std::optional<int> speakers, utts, steps, nrs_epochs, detect_epochs, ota_trials;
  std::optional<float> eps, alpha;
  app.add_option("--speakers", speakers, "corpus speaker count");
  app.add_option("--utts-per-speaker", utts, "utterances per speaker");
  app.add_option("--eps", eps, "attack perturbation budget");
  app.add_option("--alpha", alpha, "attack step size");
  app.add_option("--steps", steps, "attack iteration budget");
  app.add_option("--ota-trials", ota_trials, "replay trials per profile");
  app.add_option("--nrs-epochs", nrs_epochs, "simulator training epochs");
  app.add_option("--detect-epochs", detect_epochs, "detector training epochs");

  for (asvlab::Stage s : asvlab::AllStages()) {
    app.add_subcommand(asvlab::StageName(s),
                       std::string("run the ") + asvlab::StageName(s) + " stage");
  }
  app.add_subcommand("run", "run every stage in recipe order");
  app.add_subcommand("print-config", "print the default configuration JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    asvlab::PipelineConfig cfg = BuildConfig(config_path, seed, out_flag);
    if (speakers) cfg.corpus.n_speakers = *speakers;
    if (utts) cfg.corpus.utts_per_speaker = *utts;
    if (eps) cfg.pgd.eps = *eps;
    if (alpha) cfg.pgd.alpha = *alpha;
    if (steps) cfg.pgd.max_steps = *steps;
    if (ota_trials) cfg.ota_trials = *ota_trials;
    if (nrs_epochs) cfg.nrs.epochs = *nrs_epochs;
    if (detect_epochs) cfg.detect.epochs = *detect_epochs;

    const CLI::App* sub = app.get_subcommands().front();
    if (sub->get_name() == "print-config") {
      std::cout << cfg.ToJson().dump(2) << "\n";
      return 0;
    }
    if (sub->get_name() == "run") {
      for (const auto& r : asvlab::RunPipeline(cfg)) PrintResult(r);
      return 0;
    }
    PrintResult(asvlab::RunStage(cfg, asvlab::ParseStage(sub->get_name())));
    return 0;
  } catch (const asvlab::Error& e) {
    std::fprintf(stderr, "error [%s]: %s\n", asvlab::ErrorKindName(e.kind()),
                 e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
