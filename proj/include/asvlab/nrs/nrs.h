// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Neural replay simulator: a small conditioned U-Net over waveforms that
// imitates a loudspeaker-to-microphone channel, selected by replay id via a
// learned embedding (FiLM at the bottleneck). The output is the input plus
// a learned residual, soft-clamped into the valid amplitude range.
// Replay id 0 is a hard-wired exact passthrough.

#ifndef ASVLAB_NRS_NRS_H_
#define ASVLAB_NRS_NRS_H_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "asvlab/attack/attack.h"
#include "asvlab/core/waveform.h"
#include "asvlab/nn/nn.h"

namespace asvlab {

struct NrsConfig {
  std::vector<int> channels = {16, 24, 32, 48};  // one entry per U-Net level
  int replay_embed_dim = 16;
  int n_replay_ids = 10;  // embedding rows; id 0 stays unused (identity)
  float leaky_slope = 0.2f;
  float clamp_knee = 0.85f;  // exact identity inside [-knee, +knee]
};

// C1 soft limiter: identity inside [-knee, knee], tanh-saturating outside,
// image inside [-1, +1] (the bound is reached only where float tanh rounds
// to one).
float SoftClamp(float v, float knee);
float SoftClampGrad(float v, float knee);

class NrsModel {
 public:
  NrsModel(const NrsConfig& cfg, uint64_t seed);
  static NrsModel Load(const std::string& path);
  void Save(const std::string& path) const;

  const NrsConfig& config() const { return cfg_; }
  const std::vector<int>& covered_ids() const { return covered_ids_; }
  void set_covered_ids(std::vector<int> ids) { covered_ids_ = std::move(ids); }
  const nlohmann::json& training_meta() const { return training_meta_; }
  void set_training_meta(nlohmann::json meta) { training_meta_ = std::move(meta); }

  // Replay simulation for attack and evaluation use. Id 0 returns the input
  // unchanged; other ids must have been covered by training (lookup error).
  Waveform Simulate(const Waveform& x, int replay_id) const;

  struct Cache {
    int orig_len = 0;
    int padded = 0;
    int replay_id = 0;
    nn::Mat x;
    std::vector<nn::Conv1d::Cache> down;
    std::vector<nn::Mat> down_pre;
    std::vector<nn::Mat> down_act;
    nn::Vec film_in;
    nn::Dense::Cache film;
    nn::Vec film_scale;
    nn::Mat bott_act;  // bottleneck activations before FiLM
    std::vector<nn::ConvTranspose1d::Cache> up;
    std::vector<nn::Conv1d::Cache> fuse;
    std::vector<nn::Mat> fuse_pre;
    nn::Conv1d::Cache head;
    nn::Mat sum;  // residual + input, before the clamp
  };

  // Training entry points; Forward accepts any in-range id (training data
  // decides coverage), pads internally and crops the output back.
  Waveform Forward(const Waveform& x, int replay_id, Cache* cache = nullptr) const;
  // Accumulates parameter gradients from dL/d(output); input grads are
  // never propagated (attacks keep the simulator outside the gradient).
  void Backward(const Cache& cache, const std::vector<float>& gy);
  std::vector<nn::ParamRef> Params();

 private:
  NrsConfig cfg_;
  std::vector<nn::Conv1d> down_;
  nn::Mat embed_;  // n_replay_ids x replay_embed_dim
  nn::Mat gembed_;
  nn::Dense film_;
  std::vector<nn::ConvTranspose1d> up_;
  std::vector<nn::Conv1d> fuse_;
  nn::Conv1d head_;
  std::vector<int> covered_ids_;
  nlohmann::json training_meta_;
};

struct NrsAttackConfig {
  PgdConfig pgd;
  // Project onto a ball around the raw victim audio instead of around the
  // simulator's own output (the default reference is the attack's start).
  bool project_to_clean = false;
};

// Over-the-air variants: the iterate starts from the simulated replay of
// the victim audio, success is judged on the simulated replay of the
// iterate, and gradients never flow through the simulator.
AdversarialExample NrsPgdAttack(const Scorer& scorer, const Waveform& x_v,
                                const NrsModel& nrs, int replay_id,
                                const NrsAttackConfig& cfg);
AdversarialExample NrsEnsemblePgdAttack(const std::vector<const Scorer*>& scorers,
                                        const Waveform& x_v, const NrsModel& nrs,
                                        int replay_id, const NrsAttackConfig& cfg);

}  // namespace asvlab

#endif  // ASVLAB_NRS_NRS_H_
