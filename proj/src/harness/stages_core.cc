// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Stage bodies: corpus synthesis, trial pairs, model training, threshold
// calibration, plus the helpers every stage shares.

#include <filesystem>
#include <fstream>
#include <sstream>

#include "asvlab/asv/train.h"
#include "asvlab/core/error.h"
#include "asvlab/core/rng.h"
#include "asvlab/corpus/pairs.h"
#include "asvlab/corpus/synth.h"
#include "harness/stage_internal.h"

namespace fs = std::filesystem;

namespace asvlab {
namespace pipeline_detail {

void WriteJsonFile(const std::string& path, const nlohmann::json& j) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::kIo, "pipeline: cannot open for write: " + path);
  f << j.dump(2) << "\n";
  if (!f) throw Error(ErrorKind::kIo, "pipeline: write failed: " + path);
}

nlohmann::json ReadJsonFile(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::kIo, "pipeline: cannot open: " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::kFormat, "pipeline: bad JSON in " + path + ": " + e.what());
  }
  return j;
}

void WriteTextFile(const std::string& path, const std::string& body) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::kIo, "pipeline: cannot open for write: " + path);
  f << body;
  if (!f) throw Error(ErrorKind::kIo, "pipeline: write failed: " + path);
}

CorpusManifest LoadPipelineManifest(const PipelineConfig& cfg) {
  return LoadManifest(
      (fs::path(StageDir(cfg, Stage::kCorpusGen)) / "manifest.json").string());
}

EmbeddingModel LoadPipelineModel(const PipelineConfig& cfg, const std::string& id) {
  return EmbeddingModel::Load(
      (fs::path(StageDir(cfg, Stage::kAsvTrain)) / (id + ".bin")).string());
}

std::map<std::string, double> LoadTaus(const PipelineConfig& cfg) {
  const nlohmann::json j = ReadJsonFile(
      (fs::path(StageDir(cfg, Stage::kAsvEval)) / "systems.json").string());
  std::map<std::string, double> taus;
  for (auto it = j.begin(); it != j.end(); ++it) {
    taus[it.key()] = it.value().at("tau").get<double>();
  }
  return taus;
}

std::vector<TrialPair> LoadTrials(const std::string& path) {
  const nlohmann::json j = ReadJsonFile(path);
  std::vector<TrialPair> trials;
  for (const auto& tj : j) {
    TrialPair t;
    t.enroll = tj.at("enroll").get<std::string>();
    t.eval = tj.at("eval").get<std::string>();
    t.label = tj.at("label").get<int>();
    trials.push_back(std::move(t));
  }
  return trials;
}

void SaveTrials(const std::vector<TrialPair>& trials, const std::string& path) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& t : trials) {
    j.push_back({{"enroll", t.enroll}, {"eval", t.eval}, {"label", t.label}});
  }
  WriteJsonFile(path, j);
}

std::vector<DeviceProfile> LoadGrid(const PipelineConfig& cfg) {
  return LoadProfileGrid(
      (fs::path(StageDir(cfg, Stage::kChannelApply)) / "grid.json").string());
}

const ModelSpec& SpecFor(const PipelineConfig& cfg, const std::string& id) {
  for (const auto& m : cfg.models) {
    if (m.id == id) return m;
  }
  throw Error(ErrorKind::kLookup, "pipeline: no model spec named " + id);
}

uint64_t OtaNoiseSeed(const PipelineConfig& cfg, const std::string& enroll,
                      const std::string& eval, int replay_id, bool adversarial) {
  const uint64_t base = DeriveSeed(cfg.seed, "ota-noise");
  std::ostringstream key;
  key << enroll << "|" << eval << "|" << replay_id
      << (adversarial ? "|adv" : "|clean");
  return DeriveSeed(base, key.str());
}

uint64_t TargetAugSeed(const PipelineConfig& cfg, const std::string& utt_id) {
  return DeriveSeed(DeriveSeed(cfg.seed, "target-aug"), utt_id);
}

const std::vector<std::string>& DetectorRunNames() {
  static const std::vector<std::string> kNames = {
      "occ", "co-occ", "da-occ", "coda-occ", "da-occ-noalign", "da-occ-nommd"};
  return kNames;
}

const std::vector<std::string>& DetectorPlotNames() {
  static const std::vector<std::string> kNames = {"occ", "co-occ", "da-occ",
                                                  "coda-occ"};
  return kNames;
}

DetectorConfig DetectorConfigFor(const PipelineConfig& cfg, const std::string& run) {
  DetectorConfig dc = cfg.detect;
  if (run == "da-occ-noalign") {
    dc.variant = DetectorVariant::kDaOcc;
    dc.align_weight = 0.0f;
  } else if (run == "da-occ-nommd") {
    dc.variant = DetectorVariant::kDaOcc;
    dc.mmd_weight = 0.0f;
  } else {
    dc.variant = ParseDetectorVariant(run);
  }
  return dc;
}

std::vector<std::string> RunCorpusGen(const StageCtx& ctx) {
  const CorpusManifest manifest = SynthesizeCorpus(
      ctx.cfg.corpus, ctx.seed, (fs::path(ctx.dir) / "audio").string());
  manifest.Validate();
  SaveManifest(manifest, (fs::path(ctx.dir) / "manifest.json").string());
  return {"manifest.json"};
}

std::vector<std::string> RunPairs(const StageCtx& ctx) {
  const CorpusManifest manifest = LoadPipelineManifest(ctx.cfg);
  const TrialBuildResult dev =
      BuildTrialPairs(manifest, DeriveSeed(ctx.seed, "dev"), ctx.cfg.dev_rounds,
                      manifest.PartitionSpeakers("dev"));
  const TrialBuildResult atk =
      BuildTrialPairs(manifest, DeriveSeed(ctx.seed, "attack"),
                      ctx.cfg.attack_rounds, manifest.PartitionSpeakers("eval"));
  SaveTrials(dev.pairs, (fs::path(ctx.dir) / "dev_trials.json").string());
  SaveTrials(atk.pairs, (fs::path(ctx.dir) / "attack_trials.json").string());
  return {"dev_trials.json", "attack_trials.json"};
}

std::vector<std::string> RunAsvTrain(const StageCtx& ctx) {
  const CorpusManifest manifest = LoadPipelineManifest(ctx.cfg);
  nlohmann::json log = nlohmann::json::object();
  std::vector<std::string> outputs;
  for (const auto& spec : ctx.cfg.models) {
    AsvTrainConfig tc = ctx.cfg.asv;
    tc.arch = spec.arch;
    tc.model_id = spec.id;
    const AsvTrainResult r = TrainAsv(manifest, tc, DeriveSeed(ctx.seed, spec.id));
    const std::string file = spec.id + ".bin";
    r.model.Save((fs::path(ctx.dir) / file).string());
    log[spec.id] = {{"converged", r.converged}, {"dev_eer", r.dev_eer},
                    {"dev_auc", r.dev_auc},     {"epochs_run", r.epochs_run},
                    {"final_loss", r.final_loss}, {"message", r.message}};
    outputs.push_back(file);
  }
  WriteJsonFile((fs::path(ctx.dir) / "train_log.json").string(), log);
  outputs.push_back("train_log.json");
  return outputs;
}

std::vector<std::string> RunAsvEval(const StageCtx& ctx) {
  const CorpusManifest manifest = LoadPipelineManifest(ctx.cfg);
  const std::vector<TrialPair> trials = LoadTrials(
      (fs::path(StageDir(ctx.cfg, Stage::kPairs)) / "dev_trials.json").string());
  nlohmann::json systems = nlohmann::json::object();
  for (const auto& spec : ctx.cfg.models) {
    const EmbeddingModel model = LoadPipelineModel(ctx.cfg, spec.id);
    const Metrics m = CalibrateThresholdOnTrials(model, manifest, trials);
    systems[spec.id] = {{"tau", m.threshold}, {"dev_eer", m.eer},
                        {"dev_auc", m.auc},   {"dev_far", m.far},
                        {"dev_frr", m.frr}};
  }
  WriteJsonFile((fs::path(ctx.dir) / "systems.json").string(), systems);
  return {"systems.json"};
}

}  // namespace pipeline_detail
}  // namespace asvlab
