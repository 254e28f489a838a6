// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Stage bodies for attack crafting and the replay-channel experiments.
// Playback-noise seeds derive from (trial, profile, clean|adv) only, so the
// with-simulator and without-simulator runs face identical channel draws.

#include <algorithm>
#include <filesystem>
#include <map>

#include "asvlab/attack/attack.h"
#include "asvlab/core/error.h"
#include "asvlab/core/rng.h"
#include "asvlab/core/wav_io.h"
#include "asvlab/harness/csv.h"
#include "asvlab/nrs/nrs.h"
#include "asvlab/nrs/train.h"
#include "harness/stage_internal.h"

namespace fs = std::filesystem;

namespace asvlab {
namespace pipeline_detail {

namespace {

// Caches utterance audio and per-model enrollment embeddings; the attack
// stages revisit the same enrollments hundreds of times.
class TrialBank {
 public:
  explicit TrialBank(const CorpusManifest* manifest) : manifest_(manifest) {}

  const Waveform& WaveOf(const std::string& utt_id) {
    auto it = waves_.find(utt_id);
    if (it == waves_.end()) {
      it = waves_
               .emplace(utt_id,
                        LoadWaveform(manifest_->UtteranceById(utt_id).waveform_path))
               .first;
    }
    return it->second;
  }

  TrialScorer Make(const EmbeddingModel* model, const std::string& model_id,
                   double tau, const std::string& enroll_utt) {
    const std::string key = model_id + "/" + enroll_utt;
    auto it = embeds_.find(key);
    if (it == embeds_.end()) {
      it = embeds_.emplace(key, model->Embed(WaveOf(enroll_utt))).first;
    }
    return TrialScorer(model, it->second, tau, model_id);
  }

 private:
  const CorpusManifest* manifest_;
  std::map<std::string, Waveform> waves_;
  std::map<std::string, nn::Vec> embeds_;
};

std::vector<TrialPair> DifferentTrials(const PipelineConfig& cfg) {
  const std::vector<TrialPair> all = LoadTrials(
      (fs::path(StageDir(cfg, Stage::kPairs)) / "attack_trials.json").string());
  std::vector<TrialPair> diff;
  for (const auto& t : all) {
    if (t.label == 0) diff.push_back(t);
  }
  if (diff.empty()) {
    throw Error(ErrorKind::kPrecondition,
                "pipeline: no different-speaker trials to attack");
  }
  return diff;
}

std::string JoinScores(const std::vector<double>& xs) {
  std::string out;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (i) out += "|";
    out += CsvNum(xs[i]);
  }
  return out;
}

std::string JoinIds(const std::vector<std::string>& xs) {
  std::string out;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (i) out += "+";
    out += xs[i];
  }
  return out;
}

}  // namespace

std::vector<std::string> RunAttack(const StageCtx& ctx) {
  const PipelineConfig& cfg = ctx.cfg;
  const CorpusManifest manifest = LoadPipelineManifest(cfg);
  const std::vector<TrialPair> trials = DifferentTrials(cfg);
  const std::map<std::string, double> taus = LoadTaus(cfg);
  TrialBank bank(&manifest);

  std::map<std::string, EmbeddingModel> models;
  for (const auto& sid : cfg.surrogates) {
    models.emplace(sid, LoadPipelineModel(cfg, sid));
  }
  const EmbeddingModel victim = LoadPipelineModel(cfg, cfg.victim);
  const double vtau = taus.at(cfg.victim);

  CsvTable csv;
  csv.header = {"method",       "surrogates",   "enroll",
                "eval",         "eligible",     "success",
                "steps",        "delta_inf",    "eps",
                "clean_scores", "final_scores", "victim",
                "victim_clean", "victim_adv",   "victim_eligible",
                "victim_success"};
  std::vector<std::string> outputs;

  // Victim-side clean scores depend only on the trial, not the run.
  std::map<std::string, double> victim_clean;
  auto victim_clean_of = [&](const TrialPair& t) {
    const std::string key = t.enroll + "|" + t.eval;
    auto it = victim_clean.find(key);
    if (it == victim_clean.end()) {
      TrialScorer vs = bank.Make(&victim, cfg.victim, vtau, t.enroll);
      it = victim_clean.emplace(key, vs.Score(bank.WaveOf(t.eval))).first;
    }
    return it->second;
  };

  struct RunSpec {
    std::string dir_name;
    std::vector<std::string> ids;  // one = single-model, several = ensemble
  };
  std::vector<RunSpec> runs;
  for (const auto& sid : cfg.surrogates) runs.push_back({"pgd_" + sid, {sid}});
  runs.push_back({"ensemble", cfg.surrogates});

  for (const auto& run : runs) {
    std::vector<AdversarialExample> examples;
    examples.reserve(trials.size());
    for (const auto& t : trials) {
      std::vector<TrialScorer> scorers;
      scorers.reserve(run.ids.size());
      for (const auto& sid : run.ids) {
        scorers.push_back(bank.Make(&models.at(sid), sid, taus.at(sid), t.enroll));
      }
      AdversarialExample ex;
      if (scorers.size() == 1) {
        ex = PgdAttack(scorers[0], bank.WaveOf(t.eval), cfg.pgd);
      } else {
        std::vector<const Scorer*> ptrs;
        for (const auto& s : scorers) ptrs.push_back(&s);
        ex = EnsemblePgdAttack(ptrs, bank.WaveOf(t.eval), cfg.pgd);
      }
      ex.trial_enroll = t.enroll;
      ex.trial_eval = t.eval;

      TrialScorer vs = bank.Make(&victim, cfg.victim, vtau, t.enroll);
      const double v_clean = victim_clean_of(t);
      const double v_adv = vs.Score(ex.adv);
      const bool v_eligible = v_clean < vtau;
      const bool v_success = v_eligible && v_adv >= vtau;

      csv.rows.push_back({AttackMethodName(ex.method), JoinIds(run.ids),
                          t.enroll, t.eval, ex.eligible ? "1" : "0",
                          ex.success ? "1" : "0", std::to_string(ex.steps_used),
                          CsvNum(ex.delta_inf_norm), CsvNum(ex.eps),
                          JoinScores(ex.clean_scores), JoinScores(ex.final_scores),
                          cfg.victim, CsvNum(v_clean), CsvNum(v_adv),
                          v_eligible ? "1" : "0", v_success ? "1" : "0"});
      examples.push_back(std::move(ex));
    }
    const std::string run_dir = (fs::path(ctx.dir) / run.dir_name).string();
    fs::create_directories(run_dir);
    SaveAdversarialSet(examples, run_dir);
    outputs.push_back(run.dir_name + "/attacks.jsonl");
  }

  WriteCsv((fs::path(ctx.dir) / "attack_trials.csv").string(), csv);
  outputs.push_back("attack_trials.csv");
  return outputs;
}

std::vector<std::string> RunChannelApply(const StageCtx& ctx) {
  const PipelineConfig& cfg = ctx.cfg;
  const CorpusManifest manifest = LoadPipelineManifest(cfg);
  const std::map<std::string, double> taus = LoadTaus(cfg);
  TrialBank bank(&manifest);

  const std::vector<DeviceProfile> grid = MakeProfileGrid(DeriveSeed(ctx.seed, "grid"));
  SaveProfileGrid(grid, (fs::path(ctx.dir) / "grid.json").string());

  CsvTable csv;
  csv.header = {"surrogate", "replay_id", "playback",    "record",
                "enroll",    "eval",      "clean_heard", "adv_heard",
                "eligible",  "success"};

  for (const auto& sid : cfg.ota_models) {
    const EmbeddingModel model = LoadPipelineModel(cfg, sid);
    const double tau = taus.at(sid);
    const std::string run_dir =
        (fs::path(StageDir(cfg, Stage::kAttack)) / ("pgd_" + sid)).string();
    const std::vector<AdversarialExample> advs = LoadAdversarialSet(run_dir);
    const size_t n = std::min<size_t>(advs.size(), static_cast<size_t>(cfg.ota_trials));
    for (size_t i = 0; i < n; ++i) {
      const AdversarialExample& ex = advs[i];
      TrialScorer scorer = bank.Make(&model, sid, tau, ex.trial_enroll);
      const Waveform& clean = bank.WaveOf(ex.trial_eval);
      for (const auto& profile : grid) {
        const Waveform clean_heard = ApplyChannel(
            clean, profile,
            OtaNoiseSeed(cfg, ex.trial_enroll, ex.trial_eval, profile.replay_id,
                         false));
        const Waveform adv_heard = ApplyChannel(
            ex.adv, profile,
            OtaNoiseSeed(cfg, ex.trial_enroll, ex.trial_eval, profile.replay_id,
                         true));
        const double s_clean = scorer.Score(clean_heard);
        const double s_adv = scorer.Score(adv_heard);
        const bool eligible = s_clean < tau;
        const bool success = eligible && s_adv >= tau;
        csv.rows.push_back({sid, std::to_string(profile.replay_id),
                            profile.playback, profile.record, ex.trial_enroll,
                            ex.trial_eval, CsvNum(s_clean), CsvNum(s_adv),
                            eligible ? "1" : "0", success ? "1" : "0"});
      }
    }
  }
  WriteCsv((fs::path(ctx.dir) / "ota_trials.csv").string(), csv);
  return {"grid.json", "ota_trials.csv"};
}

std::vector<std::string> RunNrsData(const StageCtx& ctx) {
  const PipelineConfig& cfg = ctx.cfg;
  const CorpusManifest manifest = LoadPipelineManifest(cfg);
  const std::vector<DeviceProfile> grid = LoadGrid(cfg);
  std::vector<DeviceProfile> replayed;
  for (const auto& p : grid) {
    if (!p.identity()) replayed.push_back(p);
  }

  // The simulator trains on train-partition speech only.
  std::vector<std::string> train_speakers = manifest.PartitionSpeakers("train");
  CorpusManifest sub;
  sub.seed = manifest.seed;
  for (const auto& u : manifest.utterances) {
    if (static_cast<int>(sub.utterances.size()) >= cfg.nrs_utts) break;
    if (std::find(train_speakers.begin(), train_speakers.end(), u.speaker_id) !=
        train_speakers.end()) {
      sub.utterances.push_back(u);
    }
  }
  if (sub.utterances.empty()) {
    throw Error(ErrorKind::kPrecondition,
                "pipeline: no train-partition utterances for the simulator");
  }

  const ParallelCorpus pc = GenerateParallelCorpus(
      sub, replayed, (fs::path(ctx.dir) / "audio").string(),
      DeriveSeed(ctx.seed, "parallel"));
  SaveParallelCorpus(pc, (fs::path(ctx.dir) / "parallel.json").string());
  return {"parallel.json"};
}

std::vector<std::string> RunNrsTrain(const StageCtx& ctx) {
  const ParallelCorpus pc = LoadParallelCorpus(
      (fs::path(StageDir(ctx.cfg, Stage::kNrsData)) / "parallel.json").string());
  const NrsTrainResult res = TrainNrs(pc, ctx.cfg.nrs, DeriveSeed(ctx.seed, "train"));
  res.model.Save((fs::path(ctx.dir) / "nrs.bin").string());

  CsvTable csv;
  csv.header = {"replay_id", "n_pairs", "n_improved", "baseline_mssl",
                "model_mssl"};
  for (const auto& s : res.holdout) {
    csv.rows.push_back({std::to_string(s.replay_id), std::to_string(s.n_pairs),
                        std::to_string(s.n_improved), CsvNum(s.baseline_mssl),
                        CsvNum(s.model_mssl)});
  }
  WriteCsv((fs::path(ctx.dir) / "holdout.csv").string(), csv);
  WriteJsonFile((fs::path(ctx.dir) / "training.json").string(),
                {{"epochs_run", res.epochs_run}, {"final_loss", res.final_loss}});
  return {"nrs.bin", "holdout.csv", "training.json"};
}

std::vector<std::string> RunNrsAttack(const StageCtx& ctx) {
  const PipelineConfig& cfg = ctx.cfg;
  const CorpusManifest manifest = LoadPipelineManifest(cfg);
  const std::vector<TrialPair> trials = DifferentTrials(cfg);
  const std::map<std::string, double> taus = LoadTaus(cfg);
  const std::vector<DeviceProfile> grid = LoadGrid(cfg);
  const NrsModel nrs = NrsModel::Load(
      (fs::path(StageDir(cfg, Stage::kNrsTrain)) / "nrs.bin").string());
  TrialBank bank(&manifest);

  NrsAttackConfig na;
  na.pgd = cfg.pgd;

  CsvTable csv;
  csv.header = {"surrogate",   "replay_id", "playback", "record",
                "enroll",      "eval",      "sim_eligible", "sim_success",
                "clean_heard", "adv_heard", "eligible", "success"};

  const size_t n = std::min<size_t>(trials.size(), static_cast<size_t>(cfg.ota_trials));
  for (const auto& sid : cfg.ota_models) {
    const EmbeddingModel model = LoadPipelineModel(cfg, sid);
    const double tau = taus.at(sid);
    for (size_t i = 0; i < n; ++i) {
      const TrialPair& t = trials[i];
      TrialScorer scorer = bank.Make(&model, sid, tau, t.enroll);
      const Waveform& clean = bank.WaveOf(t.eval);
      for (const auto& profile : grid) {
        if (profile.identity()) continue;
        AdversarialExample ex =
            NrsPgdAttack(scorer, clean, nrs, profile.replay_id, na);
        const Waveform clean_heard = ApplyChannel(
            clean, profile,
            OtaNoiseSeed(cfg, t.enroll, t.eval, profile.replay_id, false));
        const Waveform adv_heard = ApplyChannel(
            ex.adv, profile,
            OtaNoiseSeed(cfg, t.enroll, t.eval, profile.replay_id, true));
        const double s_clean = scorer.Score(clean_heard);
        const double s_adv = scorer.Score(adv_heard);
        const bool eligible = s_clean < tau;
        const bool success = eligible && s_adv >= tau;
        csv.rows.push_back({sid, std::to_string(profile.replay_id),
                            profile.playback, profile.record, t.enroll, t.eval,
                            ex.eligible ? "1" : "0", ex.success ? "1" : "0",
                            CsvNum(s_clean), CsvNum(s_adv), eligible ? "1" : "0",
                            success ? "1" : "0"});
      }
    }
  }
  WriteCsv((fs::path(ctx.dir) / "nrs_trials.csv").string(), csv);
  return {"nrs_trials.csv"};
}

}  // namespace pipeline_detail
}  // namespace asvlab
