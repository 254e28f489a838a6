// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "asvlab/harness/pipeline.h"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "asvlab/core/error.h"
#include "asvlab/core/rng.h"
#include "asvlab/corpus/pairs.h"
#include "harness/stage_internal.h"

namespace fs = std::filesystem;

namespace asvlab {

namespace {

nlohmann::json ArchToJson(const EmbeddingModel::Arch& a) {
  return {{"frontend", FrontendName(a.frontend)},
          {"embedding_dim", a.embedding_dim},
          {"channels", a.channels}};
}

EmbeddingModel::Arch ArchFromJson(const nlohmann::json& j,
                                  EmbeddingModel::Arch a) {
  if (j.contains("frontend")) a.frontend = ParseFrontend(j["frontend"]);
  a.embedding_dim = j.value("embedding_dim", a.embedding_dim);
  if (j.contains("channels")) a.channels = j["channels"].get<std::vector<int>>();
  return a;
}

nlohmann::json AsvToJson(const AsvTrainConfig& c) {
  return {{"train_partition", c.train_partition},
          {"dev_partition", c.dev_partition},
          {"max_epochs", c.max_epochs},
          {"batch_size", c.batch_size},
          {"lr", c.lr},
          {"crop_s", c.crop_s},
          {"target_dev_eer", c.target_dev_eer},
          {"eval_every", c.eval_every},
          {"dev_rounds", c.dev_rounds}};
}

AsvTrainConfig AsvFromJson(const nlohmann::json& j, AsvTrainConfig c) {
  c.train_partition = j.value("train_partition", c.train_partition);
  c.dev_partition = j.value("dev_partition", c.dev_partition);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.lr = j.value("lr", c.lr);
  c.crop_s = j.value("crop_s", c.crop_s);
  c.target_dev_eer = j.value("target_dev_eer", c.target_dev_eer);
  c.eval_every = j.value("eval_every", c.eval_every);
  c.dev_rounds = j.value("dev_rounds", c.dev_rounds);
  return c;
}

nlohmann::json PgdToJson(const PgdConfig& c) {
  return {{"alpha", c.alpha},
          {"eps", c.eps},
          {"max_steps", c.max_steps},
          {"literal_inner_break", c.literal_inner_break},
          {"require_eligible", c.require_eligible}};
}

PgdConfig PgdFromJson(const nlohmann::json& j, PgdConfig c) {
  c.alpha = j.value("alpha", c.alpha);
  c.eps = j.value("eps", c.eps);
  c.max_steps = j.value("max_steps", c.max_steps);
  c.literal_inner_break = j.value("literal_inner_break", c.literal_inner_break);
  c.require_eligible = j.value("require_eligible", c.require_eligible);
  return c;
}

nlohmann::json NrsToJson(const NrsTrainConfig& c) {
  return {{"channels", c.arch.channels},
          {"replay_embed_dim", c.arch.replay_embed_dim},
          {"n_replay_ids", c.arch.n_replay_ids},
          {"leaky_slope", c.arch.leaky_slope},
          {"clamp_knee", c.arch.clamp_knee},
          {"fft_sizes", c.loss.fft_sizes},
          {"hops", c.loss.hops},
          {"win_lengths", c.loss.win_lengths},
          {"mag_floor", c.loss.mag_floor},
          {"epochs", c.epochs},
          {"batch_pairs", c.batch_pairs},
          {"crop_samples", c.crop_samples},
          {"lr", c.lr},
          {"holdout_frac", c.holdout_frac}};
}

NrsTrainConfig NrsFromJson(const nlohmann::json& j, NrsTrainConfig c) {
  if (j.contains("channels")) c.arch.channels = j["channels"].get<std::vector<int>>();
  c.arch.replay_embed_dim = j.value("replay_embed_dim", c.arch.replay_embed_dim);
  c.arch.n_replay_ids = j.value("n_replay_ids", c.arch.n_replay_ids);
  c.arch.leaky_slope = j.value("leaky_slope", c.arch.leaky_slope);
  c.arch.clamp_knee = j.value("clamp_knee", c.arch.clamp_knee);
  if (j.contains("fft_sizes")) c.loss.fft_sizes = j["fft_sizes"].get<std::vector<int>>();
  if (j.contains("hops")) c.loss.hops = j["hops"].get<std::vector<int>>();
  if (j.contains("win_lengths"))
    c.loss.win_lengths = j["win_lengths"].get<std::vector<int>>();
  c.loss.mag_floor = j.value("mag_floor", c.loss.mag_floor);
  c.epochs = j.value("epochs", c.epochs);
  c.batch_pairs = j.value("batch_pairs", c.batch_pairs);
  c.crop_samples = j.value("crop_samples", c.crop_samples);
  c.lr = j.value("lr", c.lr);
  c.holdout_frac = j.value("holdout_frac", c.holdout_frac);
  return c;
}

nlohmann::json DetectToJson(const DetectorConfig& c) {
  return {{"hidden_dim", c.hidden_dim},
          {"out_dim", c.out_dim},
          {"nu", c.nu},
          {"lambda_b", c.lambda_b},
          {"lambda_s", c.lambda_s},
          {"margin", c.margin},
          {"align_weight", c.align_weight},
          {"mmd_weight", c.mmd_weight},
          {"sigma", c.kernel.sigma},
          {"epochs", c.epochs},
          {"lr", c.lr},
          {"score_max", c.score_max},
          {"use_target_sphere", c.use_target_sphere}};
}

DetectorConfig DetectFromJson(const nlohmann::json& j, DetectorConfig c) {
  c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
  c.out_dim = j.value("out_dim", c.out_dim);
  c.nu = j.value("nu", c.nu);
  c.lambda_b = j.value("lambda_b", c.lambda_b);
  c.lambda_s = j.value("lambda_s", c.lambda_s);
  c.margin = j.value("margin", c.margin);
  c.align_weight = j.value("align_weight", c.align_weight);
  c.mmd_weight = j.value("mmd_weight", c.mmd_weight);
  c.kernel.sigma = j.value("sigma", c.kernel.sigma);
  c.epochs = j.value("epochs", c.epochs);
  c.lr = j.value("lr", c.lr);
  c.score_max = j.value("score_max", c.score_max);
  c.use_target_sphere = j.value("use_target_sphere", c.use_target_sphere);
  return c;
}

uint64_t Fnv1a(const std::string& s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string Hex64(uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

// The config slice a stage actually consumes; anything upstream arrives
// through dependency fingerprints instead.
nlohmann::json StageConfigSlice(const PipelineConfig& cfg, Stage s) {
  nlohmann::json j = nlohmann::json::object();
  auto models = [&cfg] {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& m : cfg.models) {
      a.push_back({{"id", m.id}, {"arch", ArchToJson(m.arch)}});
    }
    return a;
  };
  switch (s) {
    case Stage::kCorpusGen:
      j["corpus"] = cfg.corpus.ToJson();
      break;
    case Stage::kPairs:
      j["dev_rounds"] = cfg.dev_rounds;
      j["attack_rounds"] = cfg.attack_rounds;
      break;
    case Stage::kAsvTrain:
      j["models"] = models();
      j["asv"] = AsvToJson(cfg.asv);
      j["surrogates"] = cfg.surrogates;
      j["victim"] = cfg.victim;
      j["featurizer"] = cfg.featurizer;
      break;
    case Stage::kAsvEval:
      break;
    case Stage::kAttack:
      j["pgd"] = PgdToJson(cfg.pgd);
      j["surrogates"] = cfg.surrogates;
      j["victim"] = cfg.victim;
      break;
    case Stage::kChannelApply:
      j["ota_models"] = cfg.ota_models;
      j["ota_trials"] = cfg.ota_trials;
      break;
    case Stage::kNrsData:
      j["nrs_utts"] = cfg.nrs_utts;
      break;
    case Stage::kNrsTrain:
      j["nrs"] = NrsToJson(cfg.nrs);
      break;
    case Stage::kNrsAttack:
      j["pgd"] = PgdToJson(cfg.pgd);
      j["ota_models"] = cfg.ota_models;
      j["ota_trials"] = cfg.ota_trials;
      break;
    case Stage::kDetectTrain:
    case Stage::kDetectEval:
      j["detect"] = DetectToJson(cfg.detect);
      j["detect_adv"] = cfg.detect_adv;
      j["target_aug"] = ProfileToJson(cfg.target_aug);
      j["featurizer"] = cfg.featurizer;
      break;
    case Stage::kReport:
    case Stage::kPlot:
      break;
  }
  return j;
}

void ValidatePipelineConfig(const PipelineConfig& cfg) {
  auto fail = [](const std::string& why) {
    throw Error(ErrorKind::kConfig, "pipeline: " + why);
  };
  if (cfg.out_root.empty()) fail("out_root is empty");
  if (cfg.models.empty()) fail("no models declared");
  std::vector<std::string> ids;
  for (const auto& m : cfg.models) {
    if (m.id.empty()) fail("model with empty id");
    for (const auto& seen : ids) {
      if (seen == m.id) fail("duplicate model id " + m.id);
    }
    ids.push_back(m.id);
  }
  auto known = [&ids](const std::string& id) {
    for (const auto& k : ids) {
      if (k == id) return true;
    }
    return false;
  };
  if (cfg.surrogates.size() < 2) fail("need at least 2 surrogates");
  for (const auto& s : cfg.surrogates) {
    if (!known(s)) fail("surrogate " + s + " is not a declared model");
  }
  if (!known(cfg.victim)) fail("victim " + cfg.victim + " is not a declared model");
  if (!known(cfg.featurizer)) {
    fail("featurizer " + cfg.featurizer + " is not a declared model");
  }
  auto in_surrogates = [&cfg](const std::string& id) {
    for (const auto& s : cfg.surrogates) {
      if (s == id) return true;
    }
    return false;
  };
  if (in_surrogates(cfg.victim)) fail("victim must be held out of the surrogates");
  if (in_surrogates(cfg.featurizer) || cfg.featurizer == cfg.victim) {
    fail("featurizer must be independent of attack surrogates and victim");
  }
  if (cfg.ota_models.empty()) fail("ota_models is empty");
  for (const auto& m : cfg.ota_models) {
    if (!in_surrogates(m)) {
      fail("ota model " + m + " has no white-box attack run (not a surrogate)");
    }
  }
  if (cfg.detect_adv != "ensemble" && !in_surrogates(cfg.detect_adv)) {
    fail("detect_adv must be 'ensemble' or a surrogate id");
  }
  if (cfg.dev_rounds < 1 || cfg.attack_rounds < 1) fail("trial rounds < 1");
  if (cfg.ota_trials < 1) fail("ota_trials < 1");
  if (cfg.nrs_utts < 4) fail("nrs_utts < 4");
  if (cfg.target_aug.identity()) {
    fail("target_aug must not be the identity profile");
  }
  ValidateSynthConfig(cfg.corpus);
  ValidateChannelParams(cfg.target_aug.params, cfg.corpus.sample_rate);
  ValidateMsslConfig(cfg.nrs.loss);
}

struct StageInfo {
  Stage stage;
  const char* name;
  const char* subdir;
  std::vector<Stage> deps;
  std::vector<std::string> (*run)(const pipeline_detail::StageCtx&);
};

const std::vector<StageInfo>& Stages() {
  using namespace pipeline_detail;
  static const std::vector<StageInfo> kStages = {
      {Stage::kCorpusGen, "corpus-gen", "corpus", {}, &RunCorpusGen},
      {Stage::kPairs, "pairs", "pairs", {Stage::kCorpusGen}, &RunPairs},
      {Stage::kAsvTrain, "asv-train", "models", {Stage::kCorpusGen}, &RunAsvTrain},
      {Stage::kAsvEval,
       "asv-eval",
       "systems",
       {Stage::kCorpusGen, Stage::kPairs, Stage::kAsvTrain},
       &RunAsvEval},
      {Stage::kAttack,
       "attack",
       "attack",
       {Stage::kCorpusGen, Stage::kPairs, Stage::kAsvTrain, Stage::kAsvEval},
       &RunAttack},
      {Stage::kChannelApply,
       "channel-apply",
       "ota",
       {Stage::kCorpusGen, Stage::kAsvTrain, Stage::kAsvEval, Stage::kAttack},
       &RunChannelApply},
      {Stage::kNrsData,
       "nrs-data",
       "nrs_data",
       {Stage::kCorpusGen, Stage::kChannelApply},
       &RunNrsData},
      {Stage::kNrsTrain, "nrs-train", "nrs_model", {Stage::kNrsData}, &RunNrsTrain},
      {Stage::kNrsAttack,
       "nrs-attack",
       "nrs_attack",
       {Stage::kCorpusGen, Stage::kPairs, Stage::kAsvTrain, Stage::kAsvEval,
        Stage::kChannelApply, Stage::kNrsTrain},
       &RunNrsAttack},
      {Stage::kDetectTrain,
       "detect-train",
       "detectors",
       {Stage::kCorpusGen, Stage::kAsvTrain, Stage::kAttack},
       &RunDetectTrain},
      {Stage::kDetectEval,
       "detect-eval",
       "detect_eval",
       {Stage::kCorpusGen, Stage::kAsvTrain, Stage::kAttack, Stage::kDetectTrain},
       &RunDetectEval},
      {Stage::kReport,
       "report",
       "report",
       {Stage::kAttack, Stage::kChannelApply, Stage::kNrsTrain, Stage::kNrsAttack,
        Stage::kDetectEval},
       &RunReport},
      {Stage::kPlot, "plot", "plots", {Stage::kDetectEval, Stage::kReport}, &RunPlot},
  };
  return kStages;
}

const StageInfo& InfoOf(Stage s) {
  for (const auto& info : Stages()) {
    if (info.stage == s) return info;
  }
  throw Error(ErrorKind::kArgument, "pipeline: unknown stage");
}

uint64_t StageSeed(const PipelineConfig& cfg, Stage s) {
  return DeriveSeed(cfg.seed, std::string("stage/") + InfoOf(s).name);
}

std::string StampPath(const PipelineConfig& cfg, Stage s) {
  return (fs::path(StageDir(cfg, s)) / "stage.stamp.json").string();
}

}  // namespace

nlohmann::json PipelineConfig::ToJson() const {
  nlohmann::json models_json = nlohmann::json::array();
  for (const auto& m : models) {
    models_json.push_back({{"id", m.id}, {"arch", ArchToJson(m.arch)}});
  }
  return {{"out_root", out_root},
          {"seed", seed},
          {"corpus", corpus.ToJson()},
          {"dev_rounds", dev_rounds},
          {"attack_rounds", attack_rounds},
          {"models", models_json},
          {"surrogates", surrogates},
          {"victim", victim},
          {"featurizer", featurizer},
          {"asv", AsvToJson(asv)},
          {"pgd", PgdToJson(pgd)},
          {"ota_models", ota_models},
          {"ota_trials", ota_trials},
          {"nrs", NrsToJson(nrs)},
          {"nrs_utts", nrs_utts},
          {"detect", DetectToJson(detect)},
          {"detect_adv", detect_adv},
          {"target_aug", ProfileToJson(target_aug)}};
}

PipelineConfig PipelineConfig::FromJson(const nlohmann::json& j) {
  PipelineConfig c = Default();
  c.out_root = j.value("out_root", c.out_root);
  c.seed = j.value("seed", c.seed);
  if (j.contains("corpus")) {
    nlohmann::json merged = c.corpus.ToJson();
    merged.update(j["corpus"]);
    c.corpus = SynthConfig::FromJson(merged);
  }
  c.dev_rounds = j.value("dev_rounds", c.dev_rounds);
  c.attack_rounds = j.value("attack_rounds", c.attack_rounds);
  if (j.contains("models")) {
    c.models.clear();
    for (const auto& mj : j["models"]) {
      ModelSpec spec;
      spec.id = mj.at("id").get<std::string>();
      spec.arch = ArchFromJson(mj.value("arch", nlohmann::json::object()),
                               EmbeddingModel::Arch{});
      c.models.push_back(std::move(spec));
    }
  }
  if (j.contains("surrogates"))
    c.surrogates = j["surrogates"].get<std::vector<std::string>>();
  c.victim = j.value("victim", c.victim);
  c.featurizer = j.value("featurizer", c.featurizer);
  if (j.contains("asv")) c.asv = AsvFromJson(j["asv"], c.asv);
  if (j.contains("pgd")) c.pgd = PgdFromJson(j["pgd"], c.pgd);
  if (j.contains("ota_models"))
    c.ota_models = j["ota_models"].get<std::vector<std::string>>();
  c.ota_trials = j.value("ota_trials", c.ota_trials);
  if (j.contains("nrs")) c.nrs = NrsFromJson(j["nrs"], c.nrs);
  c.nrs_utts = j.value("nrs_utts", c.nrs_utts);
  if (j.contains("detect")) c.detect = DetectFromJson(j["detect"], c.detect);
  c.detect_adv = j.value("detect_adv", c.detect_adv);
  if (j.contains("target_aug")) c.target_aug = ProfileFromJson(j["target_aug"]);
  return c;
}

PipelineConfig PipelineConfig::Default() {
  PipelineConfig c;
  c.corpus.n_speakers = 20;
  c.corpus.utts_per_speaker = 6;
  c.corpus.duration_s = 1.2;
  c.corpus.min_duration_s = 1.0;
  c.corpus.max_duration_s = 1.5;
  c.corpus.train_frac = 0.5;
  c.corpus.dev_frac = 0.2;

  c.dev_rounds = 25;
  c.attack_rounds = 40;

  auto spec_arch = [](std::vector<int> ch, int dim) {
    EmbeddingModel::Arch a;
    a.frontend = Frontend::kSpectral;
    a.channels = std::move(ch);
    a.embedding_dim = dim;
    return a;
  };
  auto raw_arch = [](std::vector<int> ch, int dim) {
    EmbeddingModel::Arch a;
    a.frontend = Frontend::kRaw;
    a.channels = std::move(ch);
    a.embedding_dim = dim;
    return a;
  };
  c.models = {{"spec_s1", spec_arch({12, 16, 24}, 24)},
              {"raw_s2", raw_arch({12, 16, 24, 32}, 24)},
              {"spec_s3", spec_arch({16, 20, 28}, 32)},
              {"raw_v", raw_arch({14, 18, 26, 36}, 28)},
              {"det_feat", spec_arch({8, 8, 12}, 16)}};
  c.surrogates = {"spec_s1", "raw_s2", "spec_s3"};
  c.victim = "raw_v";
  c.featurizer = "det_feat";

  c.asv.max_epochs = 48;
  c.asv.batch_size = 4;
  c.asv.lr = 1e-3f;
  c.asv.crop_s = 1.0;
  c.asv.target_dev_eer = 0.04;
  c.asv.eval_every = 4;
  c.asv.dev_rounds = 25;

  c.pgd.alpha = 0.0005f;
  c.pgd.eps = 0.01f;
  c.pgd.max_steps = 50;

  c.ota_models = {"spec_s1", "raw_s2"};
  c.ota_trials = 32;

  c.nrs.arch.channels = {8, 12, 16};
  c.nrs.arch.replay_embed_dim = 8;
  c.nrs.arch.n_replay_ids = 10;
  c.nrs.loss.fft_sizes = {128, 256, 512, 1024};
  c.nrs.loss.hops = {32, 64, 128, 256};
  c.nrs.loss.win_lengths = {128, 256, 512, 1024};
  c.nrs.epochs = 12;
  c.nrs.batch_pairs = 8;
  c.nrs.crop_samples = 8192;
  c.nrs.lr = 1e-3f;
  c.nrs.holdout_frac = 0.25f;
  c.nrs_utts = 40;

  c.detect.hidden_dim = 32;
  c.detect.out_dim = 16;
  c.detect.nu = 0.1f;
  c.detect.epochs = 60;
  c.detect.lr = 0.05f;
  c.detect_adv = "ensemble";

  c.target_aug.replay_id = 100;
  c.target_aug.playback = "aug";
  c.target_aug.record = "aug";
  c.target_aug.params.gain = 0.85f;
  c.target_aug.params.ir.assign(91, 0.0f);
  c.target_aug.params.ir[0] = 1.0f;
  c.target_aug.params.ir[40] = 0.28f;
  c.target_aug.params.ir[90] = 0.12f;
  c.target_aug.params.softclip_drive = 1.5f;
  c.target_aug.params.band_low_hz = 200.0f;
  c.target_aug.params.band_high_hz = 3600.0f;
  c.target_aug.params.add_noise = true;
  c.target_aug.params.noise_snr_db = 16.0f;
  return c;
}

const std::vector<Stage>& AllStages() {
  static const std::vector<Stage> kAll = [] {
    std::vector<Stage> v;
    for (const auto& info : Stages()) v.push_back(info.stage);
    return v;
  }();
  return kAll;
}

const char* StageName(Stage s) { return InfoOf(s).name; }

Stage ParseStage(const std::string& name) {
  for (const auto& info : Stages()) {
    if (name == info.name) return info.stage;
  }
  throw Error(ErrorKind::kArgument, "pipeline: unknown stage " + name);
}

const std::vector<Stage>& StageDeps(Stage s) { return InfoOf(s).deps; }

std::string StageDir(const PipelineConfig& cfg, Stage s) {
  return (fs::path(cfg.out_root) / InfoOf(s).subdir).string();
}

uint64_t StageFingerprint(const PipelineConfig& cfg, Stage s) {
  const StageInfo& info = InfoOf(s);
  std::string material = std::string(info.name) + '\n';
  material += StageConfigSlice(cfg, s).dump();
  material += '\n';
  material += Hex64(StageSeed(cfg, s));
  for (Stage dep : info.deps) {
    material += '\n';
    material += Hex64(StageFingerprint(cfg, dep));
  }
  return Fnv1a(material);
}

bool StageFresh(const PipelineConfig& cfg, Stage s) {
  const std::string stamp_path = StampPath(cfg, s);
  if (!fs::exists(stamp_path)) return false;
  nlohmann::json stamp;
  try {
    stamp = pipeline_detail::ReadJsonFile(stamp_path);
  } catch (const std::exception&) {
    return false;
  }
  if (stamp.value("stage", "") != StageName(s)) return false;
  if (stamp.value("fingerprint", "") != Hex64(StageFingerprint(cfg, s))) {
    return false;
  }
  const fs::path dir = StageDir(cfg, s);
  if (!stamp.contains("outputs")) return false;
  for (const auto& rel : stamp["outputs"]) {
    if (!fs::exists(dir / rel.get<std::string>())) return false;
  }
  return true;
}

StageResult RunStage(const PipelineConfig& cfg, Stage s) {
  ValidatePipelineConfig(cfg);
  const StageInfo& info = InfoOf(s);
  for (Stage dep : info.deps) {
    if (!StageFresh(cfg, dep)) {
      throw Error(ErrorKind::kDependency,
                  std::string("pipeline: stage '") + info.name +
                      "' requires completed stage '" + StageName(dep) +
                      "' (missing or stale at " + StageDir(cfg, dep) + ")");
    }
  }

  StageResult result;
  result.stage = s;
  result.dir = StageDir(cfg, s);
  if (StageFresh(cfg, s)) {
    result.skipped = true;
    return result;
  }

  const auto t0 = std::chrono::steady_clock::now();
  fs::remove_all(result.dir);
  fs::create_directories(result.dir);

  pipeline_detail::StageCtx ctx{cfg, result.dir, StageSeed(cfg, s)};
  nlohmann::json frozen = cfg.ToJson();
  frozen["stage"] = info.name;
  frozen["stage_seed"] = ctx.seed;
  pipeline_detail::WriteJsonFile(
      (fs::path(result.dir) / "config.resolved.json").string(), frozen);

  std::vector<std::string> outputs = info.run(ctx);
  outputs.push_back("config.resolved.json");

  nlohmann::json stamp = {{"stage", info.name},
                          {"fingerprint", Hex64(StageFingerprint(cfg, s))},
                          {"outputs", outputs}};
  pipeline_detail::WriteJsonFile(StampPath(cfg, s), stamp);

  result.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

std::vector<StageResult> RunPipeline(const PipelineConfig& cfg) {
  std::vector<StageResult> results;
  for (Stage s : AllStages()) results.push_back(RunStage(cfg, s));
  return results;
}

}  // namespace asvlab
