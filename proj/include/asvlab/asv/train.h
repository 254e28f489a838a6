// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Speaker-classification training for embedding models. The classifier head
// is discarded after training; verification always scores cosine similarity
// between embeddings and calibrates a threshold on trial pairs.

#ifndef ASVLAB_ASV_TRAIN_H_
#define ASVLAB_ASV_TRAIN_H_

#include <cstdint>
#include <string>
#include <vector>

#include "asvlab/asv/model.h"
#include "asvlab/corpus/manifest.h"
#include "asvlab/harness/metrics.h"

namespace asvlab {

struct AsvTrainConfig {
  EmbeddingModel::Arch arch;
  std::string model_id = "asv";
  std::string train_partition = "train";
  std::string dev_partition = "dev";
  int max_epochs = 48;
  int batch_size = 4;
  float lr = 1e-3f;
  double crop_s = 2.0;
  double target_dev_eer = 0.05;  // early stop once dev EER reaches this
  int eval_every = 4;
  int dev_rounds = 25;           // trial rounds per dev speaker
};

struct AsvTrainResult {
  EmbeddingModel model;
  bool converged = false;
  double dev_eer = 1.0;
  double dev_auc = 0.0;
  int epochs_run = 0;
  double final_loss = 0.0;
  std::string message;
};

// Trains on the manifest's train-partition speakers (all speakers when the
// partition is undeclared); precondition error with fewer than 2 speakers.
// Deterministic for a fixed (manifest, config, seed).
AsvTrainResult TrainAsv(const CorpusManifest& manifest, const AsvTrainConfig& cfg,
                        uint64_t seed);

// EER-calibrated threshold over the given trials, scored by the model.
// Returns the metrics bundle at the calibrated point; tau is metrics.threshold.
Metrics CalibrateThresholdOnTrials(const EmbeddingModel& model,
                                   const CorpusManifest& manifest,
                                   const std::vector<TrialPair>& trials);

}  // namespace asvlab

#endif  // ASVLAB_ASV_TRAIN_H_
