// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Small speaker-embedding models. Two front-ends share one convolutional
// encoder recipe: `raw` consumes the waveform directly through a strided
// conv stack, `spectral` consumes 64-band log-mel frames. Models are frozen
// after training/loading; all scoring paths are const and re-entrant.

#ifndef ASVLAB_ASV_MODEL_H_
#define ASVLAB_ASV_MODEL_H_

#include <string>
#include <vector>

#include "json.hpp"

#include "asvlab/core/waveform.h"
#include "asvlab/nn/mel.h"
#include "asvlab/nn/nn.h"

namespace asvlab {

enum class Frontend { kRaw, kSpectral };

const char* FrontendName(Frontend f);
Frontend ParseFrontend(const std::string& name);

// Cosine similarity of two embeddings; throws a degenerate-embedding error
// on a zero-norm input.
double CosineScore(const nn::Vec& a, const nn::Vec& b);

class EmbeddingModel {
 public:
  struct Arch {
    Frontend frontend = Frontend::kSpectral;
    int embedding_dim = 64;
    // Conv widths per stage: spectral uses 3 stages, raw uses 4.
    std::vector<int> channels;
  };

  // Uninitialized-parameter model with the given geometry (training entry).
  EmbeddingModel(const Arch& arch, uint64_t init_seed);

  static EmbeddingModel Load(const std::string& path);
  void Save(const std::string& path) const;

  Frontend frontend() const { return arch_.frontend; }
  int embedding_dim() const { return arch_.embedding_dim; }
  int n_layers() const { return static_cast<int>(convs_.size()) + 1; }
  int min_samples() const;
  const nlohmann::json& training_meta() const { return training_meta_; }

  nn::Vec Embed(const Waveform& w) const;

  // Time-pooled activations of every conv stage plus the embedding;
  // n_layers() vectors, used by the detection feature extractor.
  std::vector<nn::Vec> LayerFeatures(const Waveform& w) const;

  // J = cos(e_ref, embed(x)) and, when gx != nullptr, dJ/dx.
  double CosineGrad(const nn::Vec& e_ref, const Waveform& x,
                    std::vector<float>* gx) const;

 private:
  friend struct AsvTrainer;

  struct ForwardCache {
    nn::MelFrontend::Cache mel;
    std::vector<nn::Conv1d::Cache> convs;
    std::vector<nn::Mat> acts;  // post-relu output of each conv stage
    nn::Dense::Cache emb;
    int t_pool = 0;
    int n_samples = 0;
  };

  nn::Mat FrontendMap(const Waveform& w, ForwardCache* cache) const;
  nn::Vec Forward(const Waveform& w, ForwardCache* cache) const;

  Arch arch_;
  nn::MelFrontend mel_;
  std::vector<nn::Conv1d> convs_;
  nn::Dense emb_;
  nlohmann::json training_meta_;
};

// Convenience: cosine similarity of the two utterances' embeddings.
double Score(const EmbeddingModel& model, const Waveform& a, const Waveform& b);

// A calibrated verification system (Eq.-style decision at threshold tau).
struct AsvSystem {
  const EmbeddingModel* model = nullptr;
  double tau = 0.0;
  std::string id;
};

// 1 iff score >= tau.
int Verify(const AsvSystem& system, const Waveform& enroll, const Waveform& eval);

}  // namespace asvlab

#endif  // ASVLAB_ASV_MODEL_H_
