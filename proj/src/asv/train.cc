// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "asvlab/asv/train.h"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <utility>

#include "asvlab/core/error.h"
#include "asvlab/core/rng.h"
#include "asvlab/core/wav_io.h"
#include "asvlab/corpus/pairs.h"

namespace asvlab {

namespace {

// Fisher-Yates on top of the project Rng so epoch order does not depend on
// the standard library's shuffle internals.
template <typename T>
void Shuffle(std::vector<T>* v, Rng& rng) {
  for (size_t i = v->size(); i > 1; --i) {
    const size_t j = static_cast<size_t>(rng.Index(static_cast<int>(i)));
    std::swap((*v)[i - 1], (*v)[j]);
  }
}

Waveform CropWaveform(const Waveform& w, int len, Rng& rng) {
  if (w.size() <= len) return w;
  const int start = rng.Index(w.size() - len + 1);
  Waveform out;
  out.sample_rate = w.sample_rate;
  out.samples.assign(w.samples.begin() + start, w.samples.begin() + start + len);
  return out;
}

}  // namespace

// Private-access shim for the training loop; EmbeddingModel befriends it.
struct AsvTrainer {
  static std::vector<nn::ParamRef> Params(EmbeddingModel* m, nn::Dense* cls) {
    std::vector<nn::ParamRef> refs;
    for (size_t i = 0; i < m->convs_.size(); ++i) {
      m->convs_[i].CollectParams("conv" + std::to_string(i), &refs);
    }
    m->emb_.CollectParams("emb", &refs);
    cls->CollectParams("cls", &refs);
    return refs;
  }

  // One forward/backward pass; accumulates gradients, returns the CE loss.
  static float Step(EmbeddingModel* m, nn::Dense* cls, const Waveform& x, int label) {
    EmbeddingModel::ForwardCache fc;
    nn::Vec e = m->Forward(x, &fc);
    nn::Dense::Cache cc;
    nn::Vec logits = cls->Forward(e, &cc);
    nn::Vec glogits;
    const float loss = nn::SoftmaxCrossEntropy(logits, label, &glogits);
    nn::Vec ge = cls->Backward(cc, glogits);
    nn::Vec gpool = m->emb_.Backward(fc.emb, ge);
    nn::Mat g = nn::MeanPoolTimeBackward(gpool, fc.t_pool);
    for (int i = static_cast<int>(m->convs_.size()) - 1; i >= 0; --i) {
      const size_t li = static_cast<size_t>(i);
      g = nn::ReluBackward(fc.acts[li], g);
      if (i == 0) {
        // Input gradients are not needed during training.
        m->convs_[0].gw.noalias() += g * fc.convs[0].cols.transpose();
        m->convs_[0].gb.col(0) += g.rowwise().sum();
      } else {
        g = m->convs_[li].Backward(fc.convs[li], g);
      }
    }
    return loss;
  }

  static void SetMeta(EmbeddingModel* m, const nlohmann::json& meta) {
    m->training_meta_ = meta;
  }
};

Metrics CalibrateThresholdOnTrials(const EmbeddingModel& model,
                                   const CorpusManifest& manifest,
                                   const std::vector<TrialPair>& trials) {
  if (trials.empty()) {
    throw Error(ErrorKind::kPrecondition, "asv: no trials to calibrate on");
  }
  std::unordered_map<std::string, nn::Vec> cache;
  auto embed = [&](const std::string& id) -> const nn::Vec& {
    auto it = cache.find(id);
    if (it != cache.end()) return it->second;
    const Utterance& u = manifest.UtteranceById(id);
    Waveform w = LoadWaveform(u.waveform_path);
    return cache.emplace(id, model.Embed(w)).first->second;
  };
  std::vector<double> scores;
  std::vector<int> labels;
  scores.reserve(trials.size());
  labels.reserve(trials.size());
  for (const auto& t : trials) {
    scores.push_back(CosineScore(embed(t.enroll), embed(t.eval)));
    labels.push_back(t.label);
  }
  return ComputeMetrics(scores, labels);
}

AsvTrainResult TrainAsv(const CorpusManifest& manifest, const AsvTrainConfig& cfg,
                        uint64_t seed) {
  if (cfg.max_epochs < 1 || cfg.batch_size < 1 || cfg.crop_s <= 0.0 ||
      cfg.eval_every < 1 || cfg.dev_rounds < 1 || !(cfg.lr > 0.0f)) {
    throw Error(ErrorKind::kConfig, "asv: invalid training configuration");
  }
  std::vector<std::string> train_speakers = manifest.PartitionSpeakers(cfg.train_partition);
  if (train_speakers.empty()) train_speakers = manifest.Speakers();
  if (train_speakers.size() < 2) {
    throw Error(ErrorKind::kPrecondition,
                "asv: training requires at least 2 speakers, got " +
                    std::to_string(train_speakers.size()));
  }
  std::unordered_map<std::string, int> class_of;
  for (size_t i = 0; i < train_speakers.size(); ++i) {
    class_of[train_speakers[i]] = static_cast<int>(i);
  }

  struct Sample {
    Waveform wave;
    int label;
  };
  std::vector<Sample> samples;
  for (const auto& u : manifest.utterances) {
    auto it = class_of.find(u.speaker_id);
    if (it == class_of.end()) continue;
    samples.push_back({LoadWaveform(u.waveform_path), it->second});
  }
  if (samples.empty()) {
    throw Error(ErrorKind::kPrecondition, "asv: no training utterances");
  }

  AsvTrainResult result{
      EmbeddingModel(cfg.arch, DeriveSeed(seed, "asv/" + cfg.model_id))};
  nn::Dense cls(result.model.embedding_dim(), static_cast<int>(train_speakers.size()));
  Rng rng(DeriveSeed(seed, "asv/train/" + cfg.model_id));
  cls.Init(rng);
  nn::Adam opt(AsvTrainer::Params(&result.model, &cls), cfg.lr);

  // Dev trials are fixed up front so every evaluation sees the same pairs.
  std::vector<std::string> dev_speakers = manifest.PartitionSpeakers(cfg.dev_partition);
  std::vector<TrialPair> dev_trials;
  if (dev_speakers.size() >= 2) {
    dev_trials = BuildTrialPairs(manifest, DeriveSeed(seed, "asv/dev"),
                                 cfg.dev_rounds, dev_speakers)
                     .pairs;
  }

  const int crop_len = static_cast<int>(std::lround(cfg.crop_s * kDefaultSampleRate));
  std::vector<size_t> order(samples.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  double running_loss = 0.0;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    Shuffle(&order, rng);
    double epoch_loss = 0.0;
    int in_batch = 0;
    opt.ZeroGrad();
    for (size_t idx : order) {
      const Sample& s = samples[idx];
      Waveform crop = CropWaveform(s.wave, crop_len, rng);
      epoch_loss += AsvTrainer::Step(&result.model, &cls, crop, s.label);
      if (++in_batch == cfg.batch_size) {
        opt.Step();
        opt.ZeroGrad();
        in_batch = 0;
      }
    }
    if (in_batch > 0) {
      opt.Step();
      opt.ZeroGrad();
    }
    running_loss = epoch_loss / static_cast<double>(samples.size());
    result.epochs_run = epoch;

    const bool check = !dev_trials.empty() &&
                       (epoch % cfg.eval_every == 0 || epoch == cfg.max_epochs);
    if (check) {
      Metrics m = CalibrateThresholdOnTrials(result.model, manifest, dev_trials);
      result.dev_eer = m.eer;
      result.dev_auc = m.auc;
      if (m.eer <= cfg.target_dev_eer) {
        result.converged = true;
        break;
      }
    }
  }
  result.final_loss = running_loss;
  if (dev_trials.empty()) {
    result.converged = true;  // nothing to validate against
    result.message = "no dev partition; ran full epoch budget";
  } else if (!result.converged) {
    result.message = "dev EER " + std::to_string(result.dev_eer) +
                     " above target after " + std::to_string(result.epochs_run) +
                     " epochs";
  }

  nlohmann::json meta;
  meta["model_id"] = cfg.model_id;
  meta["seed"] = seed;
  meta["epochs_run"] = result.epochs_run;
  meta["dev_eer"] = result.dev_eer;
  meta["dev_auc"] = result.dev_auc;
  meta["final_loss"] = result.final_loss;
  meta["n_classes"] = train_speakers.size();
  meta["converged"] = result.converged;
  AsvTrainer::SetMeta(&result.model, meta);
  return result;
}

}  // namespace asvlab
