// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Targeted evasion attacks on verification scorers: projected gradient
// ascent on the trial score, single-model and sequential multi-model. One
// shared core runs every variant; over-the-air variants pass a replay hook
// that maps the iterate to what the verifier hears (success is measured
// after the hook, gradients are always taken at the raw iterate).

#ifndef ASVLAB_ATTACK_ATTACK_H_
#define ASVLAB_ATTACK_ATTACK_H_

#include <functional>
#include <string>
#include <vector>

#include "asvlab/asv/model.h"
#include "asvlab/core/waveform.h"

namespace asvlab {

// A fixed-trial score: higher means more enrolled-speaker-like. Implementors
// bind the enrollment embedding; x is the candidate audio.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual const std::string& id() const = 0;
  virtual double tau() const = 0;
  virtual bool has_grad() const { return true; }
  // Returns the score; fills d(score)/dx when gx != nullptr (same length
  // as x). Implementations without gradients throw a capability error.
  virtual double ScoreWithGrad(const Waveform& x, std::vector<float>* gx) const = 0;
  double Score(const Waveform& x) const { return ScoreWithGrad(x, nullptr); }
};

// Cosine score of an embedding model against a fixed enrollment utterance.
class TrialScorer : public Scorer {
 public:
  TrialScorer(const AsvSystem& system, const Waveform& enroll);
  TrialScorer(const EmbeddingModel* model, nn::Vec enroll_embedding, double tau,
              std::string id);

  const std::string& id() const override { return id_; }
  double tau() const override { return tau_; }
  double ScoreWithGrad(const Waveform& x, std::vector<float>* gx) const override;
  const nn::Vec& enroll_embedding() const { return e_enroll_; }

 private:
  const EmbeddingModel* model_;
  double tau_;
  std::string id_;
  nn::Vec e_enroll_;
};

// Two-stage projection: first into the L-inf ball of radius eps around ref,
// then into the valid amplitude range [-1, +1]. Idempotent.
void ClipProject(const std::vector<float>& ref, float eps, std::vector<float>* x);

struct PgdConfig {
  float alpha = 0.0005f;  // per-step L-inf increment
  float eps = 0.01f;      // perturbation budget around the reference
  int max_steps = 20;     // outer iteration budget (1..100)
  // Multi-model sweep behavior when a model is already spoofed: false skips
  // just that model, true abandons the rest of the sweep (the literal
  // reading of the sequential procedure).
  bool literal_inner_break = false;
  // Skip trials whose clean audio already passes every scorer.
  bool require_eligible = true;
};

enum class AttackMethod { kPgd, kEnsemblePgd, kNrsPgd, kNrsEnsemblePgd };
const char* AttackMethodName(AttackMethod m);
AttackMethod ParseAttackMethod(const std::string& name);

struct AdversarialExample {
  std::string trial_enroll;  // utterance ids, filled by the caller
  std::string trial_eval;
  AttackMethod method = AttackMethod::kPgd;
  std::vector<std::string> surrogate_ids;
  int replay_id = -1;  // -1 when no replay hook was involved

  std::vector<double> clean_scores;  // per surrogate, before any steps
  std::vector<double> final_scores;  // per surrogate, at stop
  int steps_used = 0;
  bool success = false;   // every surrogate at/above its tau at stop
  bool eligible = true;   // clean audio failed at least one surrogate
  float delta_inf_norm = 0.0f;  // max |adv - ref|
  float eps = 0.0f;             // budget echoed for projection audits

  Waveform adv;  // crafted audio
  Waveform ref;  // projection reference actually used
};

// Maps the current iterate to what the verifier hears (e.g. a learned
// replay surrogate). Both success tests and clean scoring go through it;
// gradients never do.
using ReplayFn = std::function<Waveform(const Waveform&)>;

// Shared core. clean is the eligibility reference (scored through the
// replay hook when present), init the first iterate, ref the projection
// reference. All three must be the same length.
AdversarialExample RunPgd(const std::vector<const Scorer*>& scorers,
                          const Waveform& clean, const Waveform& init,
                          const Waveform& ref, const PgdConfig& cfg,
                          const ReplayFn& replay, AttackMethod method);

// Single-surrogate attack: clean == init == ref == x_v.
AdversarialExample PgdAttack(const Scorer& scorer, const Waveform& x_v,
                             const PgdConfig& cfg);

// Sequential multi-surrogate attack; configuration error unless K >= 2.
AdversarialExample EnsemblePgdAttack(const std::vector<const Scorer*>& scorers,
                                     const Waveform& x_v, const PgdConfig& cfg);

// JSONL manifest + float32 WAV audio under dir (adv_/ref_ prefixes).
void SaveAdversarialSet(const std::vector<AdversarialExample>& examples,
                        const std::string& dir);
std::vector<AdversarialExample> LoadAdversarialSet(const std::string& dir);

}  // namespace asvlab

#endif  // ASVLAB_ATTACK_ATTACK_H_
