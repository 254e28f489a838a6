// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// One-class adversarial-sample detection. A frozen encoder yields pooled
// per-layer features; a small bias-free map per layer places bona fide
// samples inside minimal hyperspheres. Variants: plain top-layer spheres
// (OCC), per-layer spheres with a shared bona fide center and separated
// layer centers (CO), two-domain training with center alignment and MMD
// (DA), and both combined (CODA). Scores are signed squared distances to
// the sphere boundary; decisions use a threshold calibrated at the EER
// point of development scores.

#ifndef ASVLAB_DETECT_DETECT_H_
#define ASVLAB_DETECT_DETECT_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "asvlab/asv/model.h"
#include "asvlab/core/waveform.h"
#include "asvlab/nn/nn.h"

namespace asvlab {

// Pooled per-layer views of a frozen encoder. Detector training never
// updates the underlying model.
class FeatureExtractor {
 public:
  explicit FeatureExtractor(const EmbeddingModel* model);
  int n_layers() const { return model_->n_layers(); }
  std::vector<nn::Vec> Extract(const Waveform& w) const;

 private:
  const EmbeddingModel* model_;
};

struct MmdKernel {
  float sigma = 0.0f;  // RBF bandwidth; <= 0 selects the median heuristic
};

// Median of pairwise distances over the pooled set; 1 when degenerate.
double MedianHeuristicSigma(const std::vector<nn::Vec>& xs,
                            const std::vector<nn::Vec>& ys);

// Biased (V-statistic) squared maximum mean discrepancy under an RBF
// kernel. Argument error on empty sets; always >= 0 and 0 for X == X.
double Mmd(const std::vector<nn::Vec>& xs, const std::vector<nn::Vec>& ys,
           const MmdKernel& kernel = MmdKernel());

enum class DetectorVariant { kOcc, kCoOcc, kDaOcc, kCodaOcc };
const char* DetectorVariantName(DetectorVariant v);
DetectorVariant ParseDetectorVariant(const std::string& name);

struct Hypersphere {
  nn::Vec center;
  double r2 = 0.0;  // squared radius, >= 0
};

namespace detail {

// Closed-form sphere for the soft-boundary objective at fixed points:
// center = mean, squared radius = k-th smallest squared distance with
// k = n - ceil(nu * n) (zero when the rank vanishes, i.e. nu = 1).
Hypersphere SolveSphere(const std::vector<nn::Vec>& points, float nu);

// R^2 + (1 / (nu n)) sum_i max{0, ||x_i - c||^2 - R^2}.
double SphereObjective(const std::vector<nn::Vec>& points, const Hypersphere& s,
                       float nu);

}  // namespace detail

struct DetectorConfig {
  DetectorVariant variant = DetectorVariant::kOcc;
  int hidden_dim = 32;
  int out_dim = 16;
  float nu = 0.1f;  // fraction left outside the sphere; 1 = literal objective
  // Contrastive terms (CO/CODA): attraction to the shared bona fide center,
  // separation hinge between layer centers, and its margin.
  float lambda_b = 1.0f;
  float lambda_s = 1.0f;
  float margin = 1.0f;
  // Alignment terms (DA/CODA); zero weight disables a term (ablations).
  float align_weight = 1.0f;
  float mmd_weight = 1.0f;
  MmdKernel kernel;  // sigma <= 0: median heuristic on the initial mapping
  int epochs = 80;
  float lr = 0.05f;  // initial step; backtracking halves it per epoch as needed
  bool score_max = false;          // aggregate layers by max instead of mean
  bool use_target_sphere = false;  // DA/CODA inference sphere choice
};

// samples x layers pooled feature vectors.
using FeatureSet = std::vector<std::vector<nn::Vec>>;

struct DetectionScore {
  double value = 0.0;            // higher = more adversarial
  std::vector<double> layer_d;   // distance to each used sphere's center
};

class Detector {
 public:
  Detector() = default;
  static Detector Load(const std::string& path);
  void Save(const std::string& path) const;

  bool trained() const { return trained_; }
  DetectorVariant variant() const { return cfg_.variant; }
  const DetectorConfig& config() const { return cfg_; }
  // Encoder layers feeding the detector: the top layer alone for OCC/DA,
  // every layer for CO/CODA.
  const std::vector<int>& used_layers() const { return used_layers_; }
  const std::vector<Hypersphere>& source_spheres() const { return src_spheres_; }
  const std::vector<Hypersphere>& target_spheres() const { return tgt_spheres_; }
  const std::vector<double>& sigmas() const { return sigma_; }
  // Objective value per epoch, entry 0 before the first step.
  const std::vector<double>& objective_history() const { return history_; }

  double threshold() const { return threshold_; }
  bool calibrated() const { return calibrated_; }
  void set_threshold(double t) {
    threshold_ = t;
    calibrated_ = true;
  }

  // Detector map for the i-th used layer (shared across domains).
  nn::Vec Map(int used_index, const nn::Vec& feat) const;
  // Mean (or max) over used layers of d^2 - R^2 against the source spheres
  // (target on request for DA variants). State error when untrained.
  DetectionScore ScoreDetailed(const std::vector<nn::Vec>& feats) const;
  double ScoreFeatures(const std::vector<nn::Vec>& feats) const {
    return ScoreDetailed(feats).value;
  }
  DetectionScore Score(const FeatureExtractor& ext, const Waveform& w) const {
    return ScoreDetailed(ext.Extract(w));
  }

  friend Detector TrainDetector(const FeatureSet& source,
                                const FeatureSet* target,
                                const DetectorConfig& cfg, uint64_t seed);

 private:
  DetectorConfig cfg_;
  bool trained_ = false;
  std::vector<int> used_layers_;
  std::vector<int> in_dims_;
  std::vector<float> in_scale_;  // per-layer feature normalizer from training
  std::vector<nn::Mat> w1_;      // hidden x in, bias-free
  std::vector<nn::Mat> w2_;      // out x hidden, bias-free
  std::vector<Hypersphere> src_spheres_;
  std::vector<Hypersphere> tgt_spheres_;
  std::vector<double> sigma_;  // per used layer; only DA variants use it
  std::vector<double> history_;
  double threshold_ = 0.0;
  bool calibrated_ = false;
};

// Full-batch descent with a backtracking step so the objective never
// increases across epochs. Centers are closed-form means of the current
// mapping, radii closed-form distance quantiles; the network has no bias
// terms and training fails with diagnostics if the mapping collapses
// (output variance under 1e-8). Target features are required exactly for
// the DA variants; bona fide samples only.
Detector TrainDetector(const FeatureSet& source, const FeatureSet* target,
                       const DetectorConfig& cfg, uint64_t seed);

// EER-point threshold from development scores; stores it in the detector
// and returns it. Calibration error when either set is empty.
double CalibrateDetector(Detector* det, const FeatureSet& dev_bona,
                         const FeatureSet& dev_adv);

struct DetectionMetrics {
  double eer = 0.0;
  double auc = 0.0;
  double far_overall = 0.0;
  std::map<std::string, double> far_by_domain;
  double frr = 0.0;
  double threshold = 0.0;
};

// Adversarial is the positive class; FAR = bona fide flagged adversarial at
// the calibrated threshold (per domain and pooled), FRR = adversarial
// slipping under it. State error when uncalibrated, argument error on
// empty sets.
DetectionMetrics EvaluateDetector(const Detector& det,
                                  const std::map<std::string, FeatureSet>& bona_by_domain,
                                  const FeatureSet& adv);

nlohmann::json DetectionMetricsToJson(const DetectionMetrics& m);

}  // namespace asvlab

#endif  // ASVLAB_DETECT_DETECT_H_
