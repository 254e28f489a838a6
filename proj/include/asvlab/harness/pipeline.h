// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Experiment pipeline: a fixed recipe of resumable stages
//   corpus-gen -> pairs -> asv-train -> asv-eval -> attack -> channel-apply
//   -> nrs-data -> nrs-train -> nrs-attack -> detect-train -> detect-eval
//   -> report -> plot
// Each stage owns one directory under out_root, writes a frozen copy of
// the resolved configuration plus a stamp (a fingerprint over its own
// config slice, its seed, and its dependencies' fingerprints), and is a
// no-op when the stamp is fresh. A single global seed fans out to stages
// via DeriveSeed(seed, "stage/<name>"). Everything a report states is
// recomputable from per-trial CSV files persisted by earlier stages.

#ifndef ASVLAB_HARNESS_PIPELINE_H_
#define ASVLAB_HARNESS_PIPELINE_H_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "asvlab/asv/train.h"
#include "asvlab/attack/attack.h"
#include "asvlab/channel/channel.h"
#include "asvlab/corpus/synth.h"
#include "asvlab/detect/detect.h"
#include "asvlab/nrs/train.h"

namespace asvlab {

struct ModelSpec {
  std::string id;
  EmbeddingModel::Arch arch;
};

struct PipelineConfig {
  std::string out_root = "out";
  uint64_t seed = 20260101;

  SynthConfig corpus;
  int dev_rounds = 25;     // calibration trial rounds over dev speakers
  int attack_rounds = 40;  // attack trial rounds over eval speakers

  // Model roles: surrogates craft attacks, the victim only receives them,
  // the featurizer feeds detection and never sees any attack.
  std::vector<ModelSpec> models;
  std::vector<std::string> surrogates;
  std::string victim;
  std::string featurizer;
  AsvTrainConfig asv;  // shared hyperparameters; arch/id are per model

  PgdConfig pgd;
  std::vector<std::string> ota_models;  // white-box subjects for replay stages
  int ota_trials = 40;                  // trial budget per profile

  NrsTrainConfig nrs;
  int nrs_utts = 30;  // train-partition utterances in the parallel corpus

  DetectorConfig detect;
  std::string detect_adv = "ensemble";  // attack run feeding detection splits
  DeviceProfile target_aug;             // bona fide target-domain channel

  nlohmann::json ToJson() const;
  static PipelineConfig FromJson(const nlohmann::json& j);
  // Desk-scale recipe sized for a single CPU core.
  static PipelineConfig Default();
};

enum class Stage {
  kCorpusGen,
  kPairs,
  kAsvTrain,
  kAsvEval,
  kAttack,
  kChannelApply,
  kNrsData,
  kNrsTrain,
  kNrsAttack,
  kDetectTrain,
  kDetectEval,
  kReport,
  kPlot,
};

const std::vector<Stage>& AllStages();
const char* StageName(Stage s);
Stage ParseStage(const std::string& name);
const std::vector<Stage>& StageDeps(Stage s);

// out_root plus the stage's own subdirectory.
std::string StageDir(const PipelineConfig& cfg, Stage s);

// Config-derived content hash: stage name, the config slice the stage
// consumes, its derived seed, and its dependencies' fingerprints.
uint64_t StageFingerprint(const PipelineConfig& cfg, Stage s);

// True when the stamp on disk matches the current fingerprint and every
// output it lists still exists.
bool StageFresh(const PipelineConfig& cfg, Stage s);

struct StageResult {
  Stage stage = Stage::kCorpusGen;
  bool skipped = false;
  std::string dir;
  double seconds = 0.0;
};

// Runs one stage. Dependency error naming the first missing or stale
// upstream stage; fresh stamps short-circuit to a no-op. A rerun rebuilds
// the stage directory from scratch, so artifacts are byte-reproducible.
StageResult RunStage(const PipelineConfig& cfg, Stage s);

// All stages in recipe order.
std::vector<StageResult> RunPipeline(const PipelineConfig& cfg);

}  // namespace asvlab

#endif  // ASVLAB_HARNESS_PIPELINE_H_
