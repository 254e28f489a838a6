// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "asvlab/asv/model.h"

#include <cmath>
#include <cstring>

#include "asvlab/core/archive.h"
#include "asvlab/core/error.h"
#include "asvlab/core/rng.h"

namespace asvlab {

namespace {

constexpr char kSchema[] = "asvlab.asv.v1";

// Stage geometry (kernel, stride, pad) per frontend. The first raw stage is a
// wide strided conv so one sample of input reach stays cheap.
struct StageSpec {
  int k, s, p;
};

std::vector<StageSpec> StagePlan(Frontend f, int n_stages) {
  std::vector<StageSpec> plan;
  if (f == Frontend::kSpectral) {
    plan = {{5, 2, 2}, {3, 2, 1}, {3, 2, 1}};
  } else {
    plan = {{31, 8, 15}, {7, 4, 3}, {5, 4, 2}, {3, 2, 1}};
  }
  if (static_cast<int>(plan.size()) != n_stages) {
    throw Error(ErrorKind::kConfig,
                "asv: " + std::string(FrontendName(f)) + " frontend expects " +
                    std::to_string(plan.size()) + " conv stages, got " +
                    std::to_string(n_stages));
  }
  return plan;
}

std::vector<int> DefaultChannels(Frontend f) {
  if (f == Frontend::kSpectral) return {48, 48, 64};
  return {24, 32, 48, 64};
}

}  // namespace

const char* FrontendName(Frontend f) {
  return f == Frontend::kRaw ? "raw" : "spectral";
}

Frontend ParseFrontend(const std::string& name) {
  if (name == "raw") return Frontend::kRaw;
  if (name == "spectral") return Frontend::kSpectral;
  throw Error(ErrorKind::kConfig, "asv: unknown frontend '" + name + "'");
}

double CosineScore(const nn::Vec& a, const nn::Vec& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::kShape,
                "asv: embedding sizes differ (" + std::to_string(a.size()) +
                    " vs " + std::to_string(b.size()) + ")");
  }
  const double na = a.cast<double>().norm();
  const double nb = b.cast<double>().norm();
  if (na == 0.0 || nb == 0.0) {
    throw Error(ErrorKind::kDegenerate, "asv: zero-norm embedding in cosine score");
  }
  return a.cast<double>().dot(b.cast<double>()) / (na * nb);
}

EmbeddingModel::EmbeddingModel(const Arch& arch, uint64_t init_seed)
    : arch_(arch) {
  if (arch_.channels.empty()) arch_.channels = DefaultChannels(arch_.frontend);
  if (arch_.embedding_dim < 1) {
    throw Error(ErrorKind::kConfig, "asv: embedding_dim must be >= 1");
  }
  for (int c : arch_.channels) {
    if (c < 1) throw Error(ErrorKind::kConfig, "asv: conv width must be >= 1");
  }
  const auto plan = StagePlan(arch_.frontend, static_cast<int>(arch_.channels.size()));
  int in_ch = arch_.frontend == Frontend::kSpectral ? mel_.config().n_mels : 1;
  Rng rng(DeriveSeed(init_seed, "asv/init"));
  for (size_t i = 0; i < plan.size(); ++i) {
    convs_.emplace_back(in_ch, arch_.channels[i], plan[i].k, plan[i].s, plan[i].p);
    convs_.back().Init(rng);
    in_ch = arch_.channels[i];
  }
  emb_ = nn::Dense(in_ch, arch_.embedding_dim);
  emb_.Init(rng);
}

int EmbeddingModel::min_samples() const {
  // Smallest waveform for which every stage produces at least one frame.
  if (arch_.frontend == Frontend::kSpectral) {
    const auto& sc = mel_.config().stft;
    // 5 mel frames feed the k5/s2 first stage without relying on pad-only rows.
    return sc.win_len + 4 * sc.hop;
  }
  return 256;
}

nn::Mat EmbeddingModel::FrontendMap(const Waveform& w, ForwardCache* cache) const {
  ValidateWaveform(w);
  if (w.size() < min_samples()) {
    throw Error(ErrorKind::kLength,
                "asv: waveform too short for " +
                    std::string(FrontendName(arch_.frontend)) + " frontend (" +
                    std::to_string(w.size()) + " < " +
                    std::to_string(min_samples()) + " samples)");
  }
  if (cache != nullptr) cache->n_samples = w.size();
  if (arch_.frontend == Frontend::kSpectral) {
    return mel_.Forward(w.samples.data(), w.size(),
                        cache != nullptr ? &cache->mel : nullptr);
  }
  nn::Mat x(1, w.size());
  for (int i = 0; i < w.size(); ++i) x(0, i) = w.samples[static_cast<size_t>(i)];
  return x;
}

nn::Vec EmbeddingModel::Forward(const Waveform& w, ForwardCache* cache) const {
  nn::Mat h = FrontendMap(w, cache);
  if (cache != nullptr) {
    cache->convs.resize(convs_.size());
    cache->acts.resize(convs_.size());
  }
  for (size_t i = 0; i < convs_.size(); ++i) {
    h = convs_[i].Forward(h, cache != nullptr ? &cache->convs[i] : nullptr);
    h = nn::Relu(h);
    if (cache != nullptr) cache->acts[i] = h;
  }
  if (cache != nullptr) cache->t_pool = static_cast<int>(h.cols());
  nn::Vec pooled = nn::MeanPoolTime(h);
  return emb_.Forward(pooled, cache != nullptr ? &cache->emb : nullptr);
}

nn::Vec EmbeddingModel::Embed(const Waveform& w) const { return Forward(w, nullptr); }

std::vector<nn::Vec> EmbeddingModel::LayerFeatures(const Waveform& w) const {
  ForwardCache cache;
  nn::Vec e = Forward(w, &cache);
  std::vector<nn::Vec> feats;
  feats.reserve(convs_.size() + 1);
  for (const auto& act : cache.acts) feats.push_back(nn::MeanPoolTime(act));
  feats.push_back(e);
  return feats;
}

double EmbeddingModel::CosineGrad(const nn::Vec& e_ref, const Waveform& x,
                                  std::vector<float>* gx) const {
  if (e_ref.size() != arch_.embedding_dim) {
    throw Error(ErrorKind::kShape,
                "asv: reference embedding size " + std::to_string(e_ref.size()) +
                    " != embedding_dim " + std::to_string(arch_.embedding_dim));
  }
  ForwardCache cache;
  nn::Vec e = Forward(x, &cache);
  const double score = CosineScore(e_ref, e);
  if (gx == nullptr) return score;

  // dJ/de for J = cos(a, e): (a_hat - J * e_hat) / ||e||.
  const double na = e_ref.cast<double>().norm();
  const double ne = e.cast<double>().norm();
  nn::Vec gje(e.size());
  for (int i = 0; i < e.size(); ++i) {
    const double ah = e_ref[i] / na;
    const double eh = e[i] / ne;
    gje[i] = static_cast<float>((ah - score * eh) / ne);
  }

  nn::Vec gpool = emb_.BackwardData(gje);
  nn::Mat g = nn::MeanPoolTimeBackward(gpool, cache.t_pool);
  for (int i = static_cast<int>(convs_.size()) - 1; i >= 0; --i) {
    const size_t li = static_cast<size_t>(i);
    g = nn::ReluBackward(cache.acts[li], g);
    g = convs_[li].BackwardData(g, cache.convs[li].t_in);
  }
  gx->assign(static_cast<size_t>(cache.n_samples), 0.0f);
  if (arch_.frontend == Frontend::kSpectral) {
    mel_.BackwardToSignal(cache.mel, g, cache.n_samples, gx->data());
  } else {
    for (int i = 0; i < cache.n_samples; ++i) (*gx)[static_cast<size_t>(i)] = g(0, i);
  }
  return score;
}

void EmbeddingModel::Save(const std::string& path) const {
  nlohmann::json meta;
  meta["frontend"] = FrontendName(arch_.frontend);
  meta["embedding_dim"] = arch_.embedding_dim;
  meta["channels"] = arch_.channels;
  meta["training"] = training_meta_;
  ArchiveWriter writer(kSchema, meta);
  for (size_t i = 0; i < convs_.size(); ++i) {
    const std::string p = "conv" + std::to_string(i);
    writer.AddTensor(p + ".w", convs_[i].w);
    writer.AddTensor(p + ".b", convs_[i].b);
  }
  writer.AddTensor("emb.w", emb_.w);
  writer.AddTensor("emb.b", emb_.b);
  writer.Save(path);
}

EmbeddingModel EmbeddingModel::Load(const std::string& path) {
  ArchiveReader reader = ArchiveReader::Load(path, kSchema);
  const auto& meta = reader.meta();
  Arch arch;
  arch.frontend = ParseFrontend(meta.at("frontend").get<std::string>());
  arch.embedding_dim = meta.at("embedding_dim").get<int>();
  arch.channels = meta.at("channels").get<std::vector<int>>();
  EmbeddingModel model(arch, /*init_seed=*/0);
  for (size_t i = 0; i < model.convs_.size(); ++i) {
    const std::string p = "conv" + std::to_string(i);
    nn::Mat w = reader.Tensor(p + ".w");
    nn::Vec b = reader.TensorVec(p + ".b");
    if (w.rows() != model.convs_[i].w.rows() || w.cols() != model.convs_[i].w.cols()) {
      throw Error(ErrorKind::kFormat, "asv: checkpoint tensor shape mismatch at " + p);
    }
    model.convs_[i].w = std::move(w);
    model.convs_[i].b = std::move(b);
  }
  model.emb_.w = reader.Tensor("emb.w");
  model.emb_.b = reader.TensorVec("emb.b");
  if (meta.contains("training")) model.training_meta_ = meta.at("training");
  return model;
}

double Score(const EmbeddingModel& model, const Waveform& a, const Waveform& b) {
  return CosineScore(model.Embed(a), model.Embed(b));
}

int Verify(const AsvSystem& system, const Waveform& enroll, const Waveform& eval) {
  if (system.model == nullptr) {
    throw Error(ErrorKind::kState, "asv: verification system has no model");
  }
  return Score(*system.model, enroll, eval) >= system.tau ? 1 : 0;
}

}  // namespace asvlab
