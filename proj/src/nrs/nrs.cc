// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "asvlab/nrs/nrs.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include "asvlab/core/archive.h"
#include "asvlab/core/error.h"
#include "asvlab/core/rng.h"

namespace asvlab {

namespace {

constexpr char kSchema[] = "asvlab.nrs.v1";

void ValidateNrsConfig(const NrsConfig& cfg) {
  if (cfg.channels.empty()) {
    throw Error(ErrorKind::kConfig, "nrs: need at least one U-Net level");
  }
  for (int c : cfg.channels) {
    if (c < 1) throw Error(ErrorKind::kConfig, "nrs: channel widths must be >= 1");
  }
  if (cfg.replay_embed_dim < 1 || cfg.n_replay_ids < 2) {
    throw Error(ErrorKind::kConfig, "nrs: embedding table needs >= 2 ids, dim >= 1");
  }
  if (!(cfg.leaky_slope > 0.0f) || cfg.leaky_slope >= 1.0f) {
    throw Error(ErrorKind::kConfig, "nrs: leaky slope must be in (0, 1)");
  }
  if (!(cfg.clamp_knee > 0.0f) || cfg.clamp_knee >= 1.0f) {
    throw Error(ErrorKind::kConfig, "nrs: clamp knee must be in (0, 1)");
  }
}

}  // namespace

float SoftClamp(float v, float knee) {
  const float a = std::abs(v);
  if (a <= knee) return v;
  const float r = 1.0f - knee;
  const float y = knee + r * std::tanh((a - knee) / r);
  return v < 0.0f ? -y : y;
}

float SoftClampGrad(float v, float knee) {
  const float a = std::abs(v);
  if (a <= knee) return 1.0f;
  const float r = 1.0f - knee;
  const float th = std::tanh((a - knee) / r);
  return 1.0f - th * th;
}

NrsModel::NrsModel(const NrsConfig& cfg, uint64_t seed) : cfg_(cfg) {
  ValidateNrsConfig(cfg_);
  const int levels = static_cast<int>(cfg_.channels.size());
  Rng rng(DeriveSeed(seed, "nrs/init"));

  int in_ch = 1;
  for (int l = 0; l < levels; ++l) {
    const int k = l == 0 ? 15 : 5;
    down_.emplace_back(in_ch, cfg_.channels[static_cast<size_t>(l)], k, 2, k / 2);
    down_.back().Init(rng);
    in_ch = cfg_.channels[static_cast<size_t>(l)];
  }

  embed_ = nn::Mat::Zero(cfg_.n_replay_ids, cfg_.replay_embed_dim);
  for (Eigen::Index i = 0; i < embed_.size(); ++i) {
    embed_(i) = static_cast<float>(rng.Gaussian());
  }
  gembed_ = nn::Mat::Zero(embed_.rows(), embed_.cols());
  film_ = nn::Dense(cfg_.replay_embed_dim, 2 * cfg_.channels.back());
  film_.Init(rng, 0.2f);  // weak initial conditioning

  for (int l = 0; l < levels; ++l) {
    const int hi = cfg_.channels[static_cast<size_t>(l)];
    const int lo = l == 0 ? cfg_.channels[0] : cfg_.channels[static_cast<size_t>(l - 1)];
    up_.emplace_back(hi, lo, 4, 2, 1);
    const int cat_ch = l == 0 ? lo + 1 : 2 * lo;
    fuse_.emplace_back(cat_ch, lo, 5, 1, 2);
  }
  for (auto& u : up_) u.Init(rng);
  for (auto& f : fuse_) f.Init(rng);

  head_ = nn::Conv1d(cfg_.channels[0], 1, 5, 1, 2);
  head_.Init(rng, 0.1f);  // small initial residual keeps y ~= x
}

Waveform NrsModel::Forward(const Waveform& x, int replay_id, Cache* cache) const {
  ValidateWaveform(x);
  if (replay_id < 0 || replay_id >= cfg_.n_replay_ids) {
    throw Error(ErrorKind::kLookup,
                "nrs: replay id " + std::to_string(replay_id) + " outside table");
  }
  if (replay_id == 0) return x;

  Cache scratch;
  Cache* c = cache != nullptr ? cache : &scratch;

  const int levels = static_cast<int>(cfg_.channels.size());
  const int block = 1 << levels;
  const int orig = static_cast<int>(x.size());
  const int padded = ((orig + block - 1) / block) * block;

  nn::Mat h = nn::Mat::Zero(1, padded);
  for (int i = 0; i < orig; ++i) h(0, i) = x.samples[static_cast<size_t>(i)];

  c->orig_len = orig;
  c->padded = padded;
  c->replay_id = replay_id;
  c->x = h;
  c->down.resize(static_cast<size_t>(levels));
  c->down_pre.resize(static_cast<size_t>(levels));
  c->down_act.resize(static_cast<size_t>(levels));
  c->up.resize(static_cast<size_t>(levels));
  c->fuse.resize(static_cast<size_t>(levels));
  c->fuse_pre.resize(static_cast<size_t>(levels));

  for (int l = 0; l < levels; ++l) {
    const size_t li = static_cast<size_t>(l);
    c->down_pre[li] = down_[li].Forward(h, &c->down[li]);
    h = nn::LeakyRelu(c->down_pre[li], cfg_.leaky_slope);
    c->down_act[li] = h;
  }

  // FiLM conditioning at the bottleneck: h <- h * (1 + s) + b per channel.
  c->film_in = embed_.row(replay_id).transpose();
  const nn::Vec sb = film_.Forward(c->film_in, &c->film);
  const int cb = cfg_.channels.back();
  c->film_scale = sb.head(cb);
  c->bott_act = h;
  for (int ch = 0; ch < cb; ++ch) {
    h.row(ch) = h.row(ch) * (1.0f + c->film_scale[ch]) +
                nn::Mat::Constant(1, h.cols(), sb[cb + ch]);
  }

  for (int l = levels - 1; l >= 0; --l) {
    const size_t li = static_cast<size_t>(l);
    nn::Mat u = up_[li].Forward(h, &c->up[li]);
    const nn::Mat& skip = l == 0 ? c->x : c->down_act[li - 1];
    nn::Mat cat(u.rows() + skip.rows(), u.cols());
    cat.topRows(u.rows()) = u;
    cat.bottomRows(skip.rows()) = skip;
    c->fuse_pre[li] = fuse_[li].Forward(cat, &c->fuse[li]);
    h = nn::LeakyRelu(c->fuse_pre[li], cfg_.leaky_slope);
  }

  const nn::Mat hd = head_.Forward(h, &c->head);
  c->sum = hd + c->x;

  Waveform y;
  y.sample_rate = x.sample_rate;
  y.samples.resize(static_cast<size_t>(orig));
  for (int i = 0; i < orig; ++i) {
    y.samples[static_cast<size_t>(i)] = SoftClamp(c->sum(0, i), cfg_.clamp_knee);
  }
  return y;
}

void NrsModel::Backward(const Cache& cache, const std::vector<float>& gy) {
  if (static_cast<int>(gy.size()) != cache.orig_len) {
    throw Error(ErrorKind::kShape,
                "nrs: output grad length " + std::to_string(gy.size()) +
                    " != forward length " + std::to_string(cache.orig_len));
  }
  const int levels = static_cast<int>(cfg_.channels.size());

  nn::Mat g = nn::Mat::Zero(1, cache.padded);
  for (int i = 0; i < cache.orig_len; ++i) {
    g(0, i) = gy[static_cast<size_t>(i)] *
              SoftClampGrad(cache.sum(0, i), cfg_.clamp_knee);
  }

  // Residual head; the direct x branch carries no parameters.
  nn::Mat cur = head_.Backward(cache.head, g);

  // Decode stack bottom-up; skip branches feed the encoder activations.
  std::vector<nn::Mat> gdown(static_cast<size_t>(levels));
  auto add_slot = [](nn::Mat* slot, const nn::Mat& v) {
    if (slot->size() == 0) {
      *slot = v;
    } else {
      *slot += v;
    }
  };
  for (int l = 0; l < levels; ++l) {
    const size_t li = static_cast<size_t>(l);
    const nn::Mat gpre =
        nn::LeakyReluBackward(cache.fuse_pre[li], cur, cfg_.leaky_slope);
    const nn::Mat gcat = fuse_[li].Backward(cache.fuse[li], gpre);
    const Eigen::Index skip_rows =
        l == 0 ? 1 : cfg_.channels[static_cast<size_t>(l - 1)];
    const Eigen::Index u_rows = gcat.rows() - skip_rows;
    if (l > 0) add_slot(&gdown[li - 1], gcat.bottomRows(skip_rows));
    cur = up_[li].Backward(cache.up[li], gcat.topRows(u_rows));
  }

  // FiLM: out = a * (1 + s) + b per channel, a = pre-FiLM bottleneck.
  const int cb = cfg_.channels.back();
  nn::Vec gsb = nn::Vec::Zero(2 * cb);
  for (int ch = 0; ch < cb; ++ch) {
    gsb[ch] = cur.row(ch).cwiseProduct(cache.bott_act.row(ch)).sum();
    gsb[cb + ch] = cur.row(ch).sum();
  }
  const nn::Vec ge = film_.Backward(cache.film, gsb);
  gembed_.row(cache.replay_id) += ge.transpose();
  for (int ch = 0; ch < cb; ++ch) {
    cur.row(ch) *= 1.0f + cache.film_scale[ch];
  }
  add_slot(&gdown[static_cast<size_t>(levels - 1)], cur);

  for (int l = levels - 1; l >= 0; --l) {
    const size_t li = static_cast<size_t>(l);
    const nn::Mat gpre =
        nn::LeakyReluBackward(cache.down_pre[li], gdown[li], cfg_.leaky_slope);
    const nn::Mat gin = down_[li].Backward(cache.down[li], gpre);
    if (l > 0) add_slot(&gdown[li - 1], gin);
  }
}

std::vector<nn::ParamRef> NrsModel::Params() {
  std::vector<nn::ParamRef> refs;
  refs.push_back({"embed", &embed_, &gembed_});
  for (size_t l = 0; l < down_.size(); ++l) {
    down_[l].CollectParams("down" + std::to_string(l), &refs);
    up_[l].CollectParams("up" + std::to_string(l), &refs);
    fuse_[l].CollectParams("fuse" + std::to_string(l), &refs);
  }
  film_.CollectParams("film", &refs);
  head_.CollectParams("head", &refs);
  return refs;
}

Waveform NrsModel::Simulate(const Waveform& x, int replay_id) const {
  if (replay_id == 0) return x;
  if (replay_id < 0 || replay_id >= cfg_.n_replay_ids ||
      std::find(covered_ids_.begin(), covered_ids_.end(), replay_id) ==
          covered_ids_.end()) {
    throw Error(ErrorKind::kLookup,
                "nrs: replay id " + std::to_string(replay_id) +
                    " is not covered by this simulator");
  }
  return Forward(x, replay_id, nullptr);
}

void NrsModel::Save(const std::string& path) const {
  nlohmann::json meta;
  meta["channels"] = cfg_.channels;
  meta["replay_embed_dim"] = cfg_.replay_embed_dim;
  meta["n_replay_ids"] = cfg_.n_replay_ids;
  meta["leaky_slope"] = cfg_.leaky_slope;
  meta["clamp_knee"] = cfg_.clamp_knee;
  meta["covered_ids"] = covered_ids_;
  meta["training"] = training_meta_;
  ArchiveWriter writer(kSchema, meta);
  writer.AddTensor("embed", embed_);
  for (size_t l = 0; l < down_.size(); ++l) {
    const std::string i = std::to_string(l);
    writer.AddTensor("down" + i + ".w", down_[l].w);
    writer.AddTensor("down" + i + ".b", down_[l].b);
    writer.AddTensor("up" + i + ".w", up_[l].w);
    writer.AddTensor("up" + i + ".b", up_[l].b);
    writer.AddTensor("fuse" + i + ".w", fuse_[l].w);
    writer.AddTensor("fuse" + i + ".b", fuse_[l].b);
  }
  writer.AddTensor("film.w", film_.w);
  writer.AddTensor("film.b", film_.b);
  writer.AddTensor("head.w", head_.w);
  writer.AddTensor("head.b", head_.b);
  writer.Save(path);
}

NrsModel NrsModel::Load(const std::string& path) {
  ArchiveReader reader = ArchiveReader::Load(path, kSchema);
  const auto& meta = reader.meta();
  NrsConfig cfg;
  cfg.channels = meta.at("channels").get<std::vector<int>>();
  cfg.replay_embed_dim = meta.at("replay_embed_dim").get<int>();
  cfg.n_replay_ids = meta.at("n_replay_ids").get<int>();
  cfg.leaky_slope = meta.at("leaky_slope").get<float>();
  cfg.clamp_knee = meta.at("clamp_knee").get<float>();
  NrsModel m(cfg, 0);
  m.covered_ids_ = meta.at("covered_ids").get<std::vector<int>>();
  if (meta.contains("training")) m.training_meta_ = meta.at("training");

  auto take = [&reader](const std::string& name, nn::Mat* dst) {
    const nn::Mat& t = reader.Tensor(name);
    if (t.rows() != dst->rows() || t.cols() != dst->cols()) {
      throw Error(ErrorKind::kFormat, "nrs: tensor " + name + " shape mismatch");
    }
    *dst = t;
  };
  take("embed", &m.embed_);
  m.gembed_ = nn::Mat::Zero(m.embed_.rows(), m.embed_.cols());
  for (size_t l = 0; l < m.down_.size(); ++l) {
    const std::string i = std::to_string(l);
    take("down" + i + ".w", &m.down_[l].w);
    take("down" + i + ".b", &m.down_[l].b);
    take("up" + i + ".w", &m.up_[l].w);
    take("up" + i + ".b", &m.up_[l].b);
    take("fuse" + i + ".w", &m.fuse_[l].w);
    take("fuse" + i + ".b", &m.fuse_[l].b);
  }
  take("film.w", &m.film_.w);
  take("film.b", &m.film_.b);
  take("head.w", &m.head_.w);
  take("head.b", &m.head_.b);
  return m;
}

namespace {

AdversarialExample NrsAttackCore(const std::vector<const Scorer*>& scorers,
                                 const Waveform& x_v, const NrsModel& nrs,
                                 int replay_id, const NrsAttackConfig& cfg,
                                 AttackMethod method) {
  ReplayFn hook = [&nrs, replay_id](const Waveform& w) {
    return nrs.Simulate(w, replay_id);
  };
  Waveform init = nrs.Simulate(x_v, replay_id);
  const Waveform& ref = cfg.project_to_clean ? x_v : init;
  AdversarialExample ex = RunPgd(scorers, x_v, init, ref, cfg.pgd, hook, method);
  ex.replay_id = replay_id;
  return ex;
}

}  // namespace

AdversarialExample NrsPgdAttack(const Scorer& scorer, const Waveform& x_v,
                                const NrsModel& nrs, int replay_id,
                                const NrsAttackConfig& cfg) {
  return NrsAttackCore({&scorer}, x_v, nrs, replay_id, cfg, AttackMethod::kNrsPgd);
}

AdversarialExample NrsEnsemblePgdAttack(const std::vector<const Scorer*>& scorers,
                                        const Waveform& x_v, const NrsModel& nrs,
                                        int replay_id, const NrsAttackConfig& cfg) {
  if (scorers.size() < 2) {
    throw Error(ErrorKind::kConfig,
                "attack: the multi-model attack needs at least 2 scorers, got " +
                    std::to_string(scorers.size()));
  }
  return NrsAttackCore(scorers, x_v, nrs, replay_id, cfg,
                       AttackMethod::kNrsEnsemblePgd);
}

}  // namespace asvlab
