// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Training for the neural replay simulator: regress NRS(clean) onto the
// replayed signal with the multi-scale spectral loss over a parallel
// corpus. Every replay id present in the data becomes covered; a held-out
// slice per id reports how far the simulator improves on the do-nothing
// baseline (clean vs replayed).

#ifndef ASVLAB_NRS_TRAIN_H_
#define ASVLAB_NRS_TRAIN_H_

#include <cstdint>
#include <vector>

#include "asvlab/channel/channel.h"
#include "asvlab/nrs/mssl.h"
#include "asvlab/nrs/nrs.h"

namespace asvlab {

struct NrsTrainConfig {
  NrsConfig arch;
  MsslConfig loss;
  int epochs = 24;
  int batch_pairs = 8;       // crops accumulated per optimizer step
  int crop_samples = 16384;  // aligned random crop; shorter pairs use all
  float lr = 1e-3f;
  float holdout_frac = 0.2f;  // per-id evaluation slice
};

struct NrsHoldoutStat {
  int replay_id = 0;
  int n_pairs = 0;
  int n_improved = 0;          // held-out pairs where the model beats identity
  double baseline_mssl = 0.0;  // loss of the identity map: Mssl(clean, replayed)
  double model_mssl = 0.0;     // Mssl(NRS(clean), replayed)
};

struct NrsTrainResult {
  NrsModel model;
  int epochs_run = 0;
  double final_loss = 0.0;  // mean training loss of the last epoch
  std::vector<NrsHoldoutStat> holdout;
};

// Configuration error when the corpus contains the identity id 0 (the
// passthrough is hard-wired, fitting it is meaningless) or ids outside the
// embedding table, and when no trainable pairs remain.
NrsTrainResult TrainNrs(const ParallelCorpus& data, const NrsTrainConfig& cfg,
                        uint64_t seed);

}  // namespace asvlab

#endif  // ASVLAB_NRS_TRAIN_H_
