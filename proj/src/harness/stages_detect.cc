// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Stage bodies for detector training, calibration, and evaluation. The
// featurizer is a frozen encoder that took part in no attack; the target
// domain is the bona fide corpus pushed through the augmentation channel.
// Successful adversarial clips split by parity: even indices calibrate,
// odd indices evaluate.

#include <filesystem>

#include "asvlab/core/error.h"
#include "asvlab/core/rng.h"
#include "asvlab/core/wav_io.h"
#include "asvlab/harness/csv.h"
#include "harness/stage_internal.h"

namespace fs = std::filesystem;

namespace asvlab {
namespace pipeline_detail {

namespace {

bool NeedsTarget(DetectorVariant v) {
  return v == DetectorVariant::kDaOcc || v == DetectorVariant::kCodaOcc;
}

std::vector<const Utterance*> PartitionUtts(const CorpusManifest& manifest,
                                            const std::string& partition) {
  const std::vector<std::string> speakers = manifest.PartitionSpeakers(partition);
  std::vector<const Utterance*> utts;
  for (const auto& u : manifest.utterances) {
    for (const auto& s : speakers) {
      if (u.speaker_id == s) {
        utts.push_back(&u);
        break;
      }
    }
  }
  return utts;
}

FeatureSet BonaFeatures(const PipelineConfig& cfg, const FeatureExtractor& fx,
                        const std::vector<const Utterance*>& utts, bool augmented,
                        std::vector<std::string>* ids) {
  FeatureSet set;
  for (const Utterance* u : utts) {
    Waveform w = LoadWaveform(u->waveform_path);
    if (augmented) {
      w = ApplyChannel(w, cfg.target_aug, TargetAugSeed(cfg, u->id));
    }
    set.push_back(fx.Extract(w));
    if (ids) ids->push_back((augmented ? "tgt_" : "src_") + u->id);
  }
  return set;
}

std::string AdvRunDir(const PipelineConfig& cfg) {
  const std::string name =
      cfg.detect_adv == "ensemble" ? "ensemble" : "pgd_" + cfg.detect_adv;
  return (fs::path(StageDir(cfg, Stage::kAttack)) / name).string();
}

// parity 0 -> calibration half, parity 1 -> evaluation half.
FeatureSet AdvFeatures(const PipelineConfig& cfg, const FeatureExtractor& fx,
                       int parity, std::vector<std::string>* ids) {
  const std::vector<AdversarialExample> advs = LoadAdversarialSet(AdvRunDir(cfg));
  FeatureSet set;
  int kept = 0;
  for (const auto& ex : advs) {
    if (!ex.success) continue;
    if (kept++ % 2 != parity) continue;
    set.push_back(fx.Extract(ex.adv));
    if (ids) {
      ids->push_back("adv_" + std::to_string(kept - 1) + "_" + ex.trial_eval);
    }
  }
  if (set.empty()) {
    throw Error(ErrorKind::kPrecondition,
                "pipeline: attack run " + AdvRunDir(cfg) +
                    " holds no successful adversarial examples");
  }
  return set;
}

}  // namespace

std::vector<std::string> RunDetectTrain(const StageCtx& ctx) {
  const PipelineConfig& cfg = ctx.cfg;
  const CorpusManifest manifest = LoadPipelineManifest(cfg);
  const EmbeddingModel feat = LoadPipelineModel(cfg, cfg.featurizer);
  const FeatureExtractor fx(&feat);

  const auto train_utts = PartitionUtts(manifest, "train");
  const auto dev_utts = PartitionUtts(manifest, "dev");
  const FeatureSet train_src = BonaFeatures(cfg, fx, train_utts, false, nullptr);
  const FeatureSet train_tgt = BonaFeatures(cfg, fx, train_utts, true, nullptr);
  FeatureSet dev_bona = BonaFeatures(cfg, fx, dev_utts, false, nullptr);
  {
    FeatureSet dev_aug = BonaFeatures(cfg, fx, dev_utts, true, nullptr);
    dev_bona.insert(dev_bona.end(), dev_aug.begin(), dev_aug.end());
  }
  const FeatureSet dev_adv = AdvFeatures(cfg, fx, 0, nullptr);

  nlohmann::json calib = nlohmann::json::object();
  std::vector<std::string> outputs;
  for (const auto& run : DetectorRunNames()) {
    const DetectorConfig dc = DetectorConfigFor(cfg, run);
    Detector det = TrainDetector(train_src,
                                 NeedsTarget(dc.variant) ? &train_tgt : nullptr,
                                 dc, DeriveSeed(ctx.seed, run));
    const double threshold = CalibrateDetector(&det, dev_bona, dev_adv);
    const std::string file = run + ".bin";
    det.Save((fs::path(ctx.dir) / file).string());
    calib[run] = {{"threshold", threshold},
                  {"objective_initial", det.objective_history().front()},
                  {"objective_final", det.objective_history().back()},
                  {"n_dev_bona", dev_bona.size()},
                  {"n_dev_adv", dev_adv.size()}};
    outputs.push_back(file);
  }
  WriteJsonFile((fs::path(ctx.dir) / "calibration.json").string(), calib);
  outputs.push_back("calibration.json");
  return outputs;
}

std::vector<std::string> RunDetectEval(const StageCtx& ctx) {
  const PipelineConfig& cfg = ctx.cfg;
  const CorpusManifest manifest = LoadPipelineManifest(cfg);
  const EmbeddingModel feat = LoadPipelineModel(cfg, cfg.featurizer);
  const FeatureExtractor fx(&feat);

  const auto eval_utts = PartitionUtts(manifest, "eval");
  std::vector<std::string> src_ids, tgt_ids, adv_ids;
  const FeatureSet eval_src = BonaFeatures(cfg, fx, eval_utts, false, &src_ids);
  const FeatureSet eval_tgt = BonaFeatures(cfg, fx, eval_utts, true, &tgt_ids);
  const FeatureSet eval_adv = AdvFeatures(cfg, fx, 1, &adv_ids);

  CsvTable summary;
  summary.header = {"detector", "eer",         "auc", "far_source",
                    "far_target", "far_overall", "frr", "threshold"};
  std::vector<std::string> outputs;

  for (const auto& run : DetectorRunNames()) {
    const Detector det = Detector::Load(
        (fs::path(StageDir(cfg, Stage::kDetectTrain)) / (run + ".bin")).string());

    CsvTable scores;
    scores.header = {"sample", "set", "score"};
    auto emit = [&](const FeatureSet& set, const std::vector<std::string>& ids,
                    const std::string& klass) {
      for (size_t i = 0; i < set.size(); ++i) {
        scores.rows.push_back({ids[i], klass, CsvNum(det.ScoreFeatures(set[i]))});
      }
    };
    emit(eval_src, src_ids, "bona_source");
    emit(eval_tgt, tgt_ids, "bona_target");
    emit(eval_adv, adv_ids, "adv");
    const std::string scores_file = "scores_" + run + ".csv";
    WriteCsv((fs::path(ctx.dir) / scores_file).string(), scores);

    const DetectionMetrics m = EvaluateDetector(
        det, {{"source", eval_src}, {"target", eval_tgt}}, eval_adv);
    const std::string metrics_file = "metrics_" + run + ".json";
    WriteJsonFile((fs::path(ctx.dir) / metrics_file).string(),
                  DetectionMetricsToJson(m));
    summary.rows.push_back({run, CsvNum(m.eer), CsvNum(m.auc),
                            CsvNum(m.far_by_domain.at("source")),
                            CsvNum(m.far_by_domain.at("target")),
                            CsvNum(m.far_overall), CsvNum(m.frr),
                            CsvNum(m.threshold)});
    outputs.push_back(scores_file);
    outputs.push_back(metrics_file);
  }
  WriteCsv((fs::path(ctx.dir) / "metrics.csv").string(), summary);
  outputs.push_back("metrics.csv");
  return outputs;
}

}  // namespace pipeline_detail
}  // namespace asvlab
