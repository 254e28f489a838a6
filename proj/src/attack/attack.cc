// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "asvlab/attack/attack.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "json.hpp"

#include "asvlab/core/error.h"
#include "asvlab/core/wav_io.h"

namespace asvlab {

namespace {

inline float Sign(float v) { return v > 0.0f ? 1.0f : (v < 0.0f ? -1.0f : 0.0f); }

void ValidateConfig(const PgdConfig& cfg) {
  if (!(cfg.alpha > 0.0f)) {
    throw Error(ErrorKind::kConfig, "attack: alpha must be > 0");
  }
  if (cfg.eps < 0.0f) {
    throw Error(ErrorKind::kConfig, "attack: eps must be >= 0");
  }
  if (cfg.max_steps < 1 || cfg.max_steps > 100) {
    throw Error(ErrorKind::kConfig, "attack: max_steps must be in [1, 100]");
  }
}

double HeardScore(const Scorer& s, const Waveform& x, const ReplayFn& replay) {
  if (!replay) return s.Score(x);
  return s.Score(replay(x));
}

}  // namespace

const char* AttackMethodName(AttackMethod m) {
  switch (m) {
    case AttackMethod::kPgd: return "pgd";
    case AttackMethod::kEnsemblePgd: return "ensemble_pgd";
    case AttackMethod::kNrsPgd: return "nrs_pgd";
    case AttackMethod::kNrsEnsemblePgd: return "nrs_ensemble_pgd";
  }
  return "pgd";
}

AttackMethod ParseAttackMethod(const std::string& name) {
  if (name == "pgd") return AttackMethod::kPgd;
  if (name == "ensemble_pgd") return AttackMethod::kEnsemblePgd;
  if (name == "nrs_pgd") return AttackMethod::kNrsPgd;
  if (name == "nrs_ensemble_pgd") return AttackMethod::kNrsEnsemblePgd;
  throw Error(ErrorKind::kConfig, "attack: unknown method '" + name + "'");
}

TrialScorer::TrialScorer(const AsvSystem& system, const Waveform& enroll)
    : model_(system.model), tau_(system.tau), id_(system.id) {
  if (model_ == nullptr) {
    throw Error(ErrorKind::kState, "attack: scorer needs a model");
  }
  e_enroll_ = model_->Embed(enroll);
}

TrialScorer::TrialScorer(const EmbeddingModel* model, nn::Vec enroll_embedding,
                         double tau, std::string id)
    : model_(model), tau_(tau), id_(std::move(id)),
      e_enroll_(std::move(enroll_embedding)) {
  if (model_ == nullptr) {
    throw Error(ErrorKind::kState, "attack: scorer needs a model");
  }
}

double TrialScorer::ScoreWithGrad(const Waveform& x, std::vector<float>* gx) const {
  return model_->CosineGrad(e_enroll_, x, gx);
}

void ClipProject(const std::vector<float>& ref, float eps, std::vector<float>* x) {
  if (eps < 0.0f) throw Error(ErrorKind::kArgument, "attack: eps must be >= 0");
  if (x == nullptr || x->size() != ref.size()) {
    throw Error(ErrorKind::kShape, "attack: projection reference length mismatch");
  }
  for (size_t i = 0; i < ref.size(); ++i) {
    float v = (*x)[i];
    const float lo = ref[i] - eps;
    const float hi = ref[i] + eps;
    v = std::min(std::max(v, lo), hi);
    v = std::min(std::max(v, -1.0f), 1.0f);
    (*x)[i] = v;
  }
}

AdversarialExample RunPgd(const std::vector<const Scorer*>& scorers,
                          const Waveform& clean, const Waveform& init,
                          const Waveform& ref, const PgdConfig& cfg,
                          const ReplayFn& replay, AttackMethod method) {
  ValidateConfig(cfg);
  if (scorers.empty()) {
    throw Error(ErrorKind::kConfig, "attack: need at least one scorer");
  }
  for (const Scorer* s : scorers) {
    if (s == nullptr) throw Error(ErrorKind::kConfig, "attack: null scorer");
    if (!s->has_grad()) {
      throw Error(ErrorKind::kCapability,
                  "attack: scorer '" + s->id() + "' exposes no gradients");
    }
  }
  ValidateWaveform(clean);
  if (init.size() != clean.size() || ref.size() != clean.size()) {
    throw Error(ErrorKind::kShape,
                "attack: clean/init/reference waveforms must share a length");
  }

  const size_t k_models = scorers.size();
  AdversarialExample ex;
  ex.method = method;
  ex.eps = cfg.eps;
  ex.ref = ref;
  for (const Scorer* s : scorers) ex.surrogate_ids.push_back(s->id());

  ex.clean_scores.resize(k_models);
  bool all_pass_clean = true;
  for (size_t k = 0; k < k_models; ++k) {
    ex.clean_scores[k] = HeardScore(*scorers[k], clean, replay);
    all_pass_clean = all_pass_clean && ex.clean_scores[k] >= scorers[k]->tau();
  }
  ex.eligible = !all_pass_clean;

  Waveform x = init;
  // Heard scores are cached per model and invalidated whenever x moves, so
  // a single-model step costs one score plus one gradient evaluation.
  std::vector<double> heard(k_models, 0.0);
  std::vector<bool> fresh(k_models, false);
  auto heard_at = [&](size_t k) {
    if (!fresh[k]) {
      heard[k] = HeardScore(*scorers[k], x, replay);
      fresh[k] = true;
    }
    return heard[k];
  };

  if (ex.eligible || !cfg.require_eligible) {
    std::vector<float> grad;
    for (int step = 1; step <= cfg.max_steps; ++step) {
      for (size_t k = 0; k < k_models; ++k) {
        if (heard_at(k) >= scorers[k]->tau()) {
          if (cfg.literal_inner_break) break;
          continue;
        }
        scorers[k]->ScoreWithGrad(x, &grad);
        for (size_t i = 0; i < x.samples.size(); ++i) {
          x.samples[i] += cfg.alpha * Sign(grad[i]);
        }
        ClipProject(ref.samples, cfg.eps, &x.samples);
        std::fill(fresh.begin(), fresh.end(), false);
      }
      ex.steps_used = step;
      bool all_pass = true;
      for (size_t k = 0; k < k_models; ++k) {
        all_pass = all_pass && heard_at(k) >= scorers[k]->tau();
      }
      if (all_pass) {
        ex.success = true;
        break;
      }
    }
  }

  ex.final_scores.resize(k_models);
  for (size_t k = 0; k < k_models; ++k) ex.final_scores[k] = heard_at(k);
  ex.adv = std::move(x);
  float dmax = 0.0f;
  for (size_t i = 0; i < ex.adv.samples.size(); ++i) {
    dmax = std::max(dmax, std::abs(ex.adv.samples[i] - ref.samples[i]));
  }
  ex.delta_inf_norm = dmax;
  return ex;
}

AdversarialExample PgdAttack(const Scorer& scorer, const Waveform& x_v,
                             const PgdConfig& cfg) {
  return RunPgd({&scorer}, x_v, x_v, x_v, cfg, nullptr, AttackMethod::kPgd);
}

AdversarialExample EnsemblePgdAttack(const std::vector<const Scorer*>& scorers,
                                     const Waveform& x_v, const PgdConfig& cfg) {
  if (scorers.size() < 2) {
    throw Error(ErrorKind::kConfig,
                "attack: the multi-model attack needs at least 2 scorers, got " +
                    std::to_string(scorers.size()));
  }
  return RunPgd(scorers, x_v, x_v, x_v, cfg, nullptr, AttackMethod::kEnsemblePgd);
}

void SaveAdversarialSet(const std::vector<AdversarialExample>& examples,
                        const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::ofstream os(fs::path(dir) / "attacks.jsonl");
  if (!os) throw Error(ErrorKind::kIo, "attack: cannot write manifest in " + dir);
  char buf[32];
  for (size_t i = 0; i < examples.size(); ++i) {
    const AdversarialExample& ex = examples[i];
    std::snprintf(buf, sizeof(buf), "%06zu", i);
    const std::string adv_name = std::string("adv_") + buf + ".wav";
    const std::string ref_name = std::string("ref_") + buf + ".wav";
    SaveWaveform(ex.adv, (fs::path(dir) / adv_name).string(), WavEncoding::kFloat32);
    SaveWaveform(ex.ref, (fs::path(dir) / ref_name).string(), WavEncoding::kFloat32);
    nlohmann::json j = {
        {"adv_path", adv_name},
        {"ref_path", ref_name},
        {"trial_enroll", ex.trial_enroll},
        {"trial_eval", ex.trial_eval},
        {"method", AttackMethodName(ex.method)},
        {"surrogate_ids", ex.surrogate_ids},
        {"replay_id", ex.replay_id},
        {"clean_scores", ex.clean_scores},
        {"final_scores", ex.final_scores},
        {"steps_used", ex.steps_used},
        {"success", ex.success},
        {"eligible", ex.eligible},
        {"delta_inf_norm", ex.delta_inf_norm},
        {"eps", ex.eps},
    };
    os << j.dump() << "\n";
  }
  if (!os) throw Error(ErrorKind::kIo, "attack: failed writing manifest in " + dir);
}

std::vector<AdversarialExample> LoadAdversarialSet(const std::string& dir) {
  namespace fs = std::filesystem;
  std::ifstream is(fs::path(dir) / "attacks.jsonl");
  if (!is) throw Error(ErrorKind::kIo, "attack: cannot open manifest in " + dir);
  std::vector<AdversarialExample> out;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kFormat, "attack: manifest line " +
                                          std::to_string(line_no) + ": " + e.what());
    }
    AdversarialExample ex;
    try {
      ex.trial_enroll = j.at("trial_enroll").get<std::string>();
      ex.trial_eval = j.at("trial_eval").get<std::string>();
      ex.method = ParseAttackMethod(j.at("method").get<std::string>());
      ex.surrogate_ids = j.at("surrogate_ids").get<std::vector<std::string>>();
      ex.replay_id = j.at("replay_id").get<int>();
      ex.clean_scores = j.at("clean_scores").get<std::vector<double>>();
      ex.final_scores = j.at("final_scores").get<std::vector<double>>();
      ex.steps_used = j.at("steps_used").get<int>();
      ex.success = j.at("success").get<bool>();
      ex.eligible = j.at("eligible").get<bool>();
      ex.delta_inf_norm = j.at("delta_inf_norm").get<float>();
      ex.eps = j.at("eps").get<float>();
      ex.adv = LoadWaveform((fs::path(dir) / j.at("adv_path").get<std::string>()).string());
      ex.ref = LoadWaveform((fs::path(dir) / j.at("ref_path").get<std::string>()).string());
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::kFormat, "attack: manifest line " +
                                          std::to_string(line_no) + ": " + e.what());
    }
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace asvlab
