// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "asvlab/nrs/train.h"

#include <algorithm>
#include <map>
#include <utility>

#include "asvlab/core/error.h"
#include "asvlab/core/rng.h"
#include "asvlab/core/wav_io.h"

namespace asvlab {

namespace {

struct Pair {
  Waveform clean;
  Waveform replayed;
  int replay_id = 0;
};

Waveform Crop(const Waveform& w, int start, int len) {
  Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples.assign(w.samples.begin() + start, w.samples.begin() + start + len);
  return out;
}

}  // namespace

NrsTrainResult TrainNrs(const ParallelCorpus& data, const NrsTrainConfig& cfg,
                        uint64_t seed) {
  ValidateMsslConfig(cfg.loss);
  if (cfg.epochs < 1 || cfg.batch_pairs < 1 || cfg.crop_samples < 1 ||
      !(cfg.lr > 0.0f) || cfg.holdout_frac < 0.0f || cfg.holdout_frac >= 1.0f) {
    throw Error(ErrorKind::kConfig, "nrs: bad training hyperparameters");
  }
  if (data.items.empty()) {
    throw Error(ErrorKind::kConfig, "nrs: empty parallel corpus");
  }

  std::vector<Pair> pairs;
  pairs.reserve(data.items.size());
  for (const auto& item : data.items) {
    if (item.replay_id == 0) {
      throw Error(ErrorKind::kConfig,
                  "nrs: identity pairs (replay id 0) are not trainable; the "
                  "passthrough is built in");
    }
    if (item.replay_id < 1 || item.replay_id >= cfg.arch.n_replay_ids) {
      throw Error(ErrorKind::kConfig,
                  "nrs: replay id " + std::to_string(item.replay_id) +
                      " does not fit the embedding table");
    }
    Pair p;
    p.clean = LoadWaveform(item.clean_path);
    p.replayed = LoadWaveform(item.replayed_path);
    p.replay_id = item.replay_id;
    if (p.clean.size() != p.replayed.size()) {
      throw Error(ErrorKind::kShape,
                  "nrs: clean/replayed length mismatch for " + item.utt_id);
    }
    pairs.push_back(std::move(p));
  }

  // Per-id deterministic holdout split.
  std::map<int, std::vector<size_t>> by_id;
  for (size_t i = 0; i < pairs.size(); ++i) {
    by_id[pairs[i].replay_id].push_back(i);
  }
  std::vector<size_t> train_idx;
  std::map<int, std::vector<size_t>> holdout_idx;
  for (auto& [id, idx] : by_id) {
    Rng split_rng(DeriveSeed(seed, "nrs/split/" + std::to_string(id)));
    for (size_t i = idx.size(); i > 1; --i) {
      std::swap(idx[i - 1], idx[split_rng.Index(i)]);
    }
    size_t n_hold = idx.size() >= 2
                        ? std::max<size_t>(
                              1, static_cast<size_t>(cfg.holdout_frac *
                                                     static_cast<double>(idx.size())))
                        : 0;
    if (n_hold >= idx.size()) n_hold = idx.size() - 1;
    for (size_t i = 0; i < idx.size(); ++i) {
      if (i < n_hold) {
        holdout_idx[id].push_back(idx[i]);
      } else {
        train_idx.push_back(idx[i]);
      }
    }
  }
  if (train_idx.empty()) {
    throw Error(ErrorKind::kConfig, "nrs: no training pairs after the split");
  }

  NrsTrainResult result{NrsModel(cfg.arch, DeriveSeed(seed, "nrs/model"))};
  nn::Adam opt(result.model.Params(), cfg.lr);

  Rng rng(DeriveSeed(seed, "nrs/train"));
  NrsModel::Cache cache;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (size_t i = train_idx.size(); i > 1; --i) {
      std::swap(train_idx[i - 1], train_idx[rng.Index(i)]);
    }
    double epoch_loss = 0.0;
    size_t done = 0;
    while (done < train_idx.size()) {
      const size_t batch =
          std::min<size_t>(cfg.batch_pairs, train_idx.size() - done);
      opt.ZeroGrad();
      for (size_t b = 0; b < batch; ++b) {
        const Pair& p = pairs[train_idx[done + b]];
        const int len =
            std::min<int>(cfg.crop_samples, static_cast<int>(p.clean.size()));
        const int start =
            static_cast<int>(rng.Index(static_cast<uint64_t>(
                static_cast<int>(p.clean.size()) - len + 1)));
        const Waveform cx = Crop(p.clean, start, len);
        const Waveform cy = Crop(p.replayed, start, len);
        const Waveform pred = result.model.Forward(cx, p.replay_id, &cache);
        std::vector<float> gpred;
        epoch_loss += MsslWithGrad(pred, cy, cfg.loss, &gpred);
        const float scale = 1.0f / static_cast<float>(batch);
        for (float& g : gpred) g *= scale;
        result.model.Backward(cache, gpred);
      }
      opt.Step();
      done += batch;
    }
    result.final_loss = epoch_loss / static_cast<double>(train_idx.size());
    result.epochs_run = epoch + 1;
  }

  std::vector<int> covered;
  for (const auto& [id, idx] : by_id) covered.push_back(id);
  result.model.set_covered_ids(covered);

  for (const auto& [id, idx] : holdout_idx) {
    NrsHoldoutStat stat;
    stat.replay_id = id;
    stat.n_pairs = static_cast<int>(idx.size());
    for (size_t i : idx) {
      const Pair& p = pairs[i];
      const double base = Mssl(p.clean, p.replayed, cfg.loss);
      const double model =
          Mssl(result.model.Forward(p.clean, p.replay_id), p.replayed, cfg.loss);
      stat.baseline_mssl += base;
      stat.model_mssl += model;
      if (model < base) ++stat.n_improved;
    }
    stat.baseline_mssl /= static_cast<double>(idx.size());
    stat.model_mssl /= static_cast<double>(idx.size());
    result.holdout.push_back(stat);
  }

  nlohmann::json meta;
  meta["epochs_run"] = result.epochs_run;
  meta["final_loss"] = result.final_loss;
  meta["n_train_pairs"] = train_idx.size();
  meta["seed"] = seed;
  nlohmann::json hj = nlohmann::json::array();
  for (const auto& s : result.holdout) {
    hj.push_back({{"replay_id", s.replay_id},
                  {"n_pairs", s.n_pairs},
                  {"n_improved", s.n_improved},
                  {"baseline_mssl", s.baseline_mssl},
                  {"model_mssl", s.model_mssl}});
  }
  meta["holdout"] = hj;
  result.model.set_training_meta(meta);
  return result;
}

}  // namespace asvlab
