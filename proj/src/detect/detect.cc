// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "asvlab/detect/detect.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include "asvlab/core/archive.h"
#include "asvlab/core/error.h"
#include "asvlab/core/rng.h"
#include "asvlab/harness/metrics.h"

namespace asvlab {

namespace {

constexpr char kSchema[] = "asvlab.detect.v1";
constexpr float kSlope = 0.1f;  // detector-net leaky relu

double Sq(double v) { return v * v; }

}  // namespace

// ----------------------------- features -----------------------------

FeatureExtractor::FeatureExtractor(const EmbeddingModel* model) : model_(model) {
  if (model_ == nullptr) {
    throw Error(ErrorKind::kArgument, "detect: feature extractor needs a model");
  }
}

std::vector<nn::Vec> FeatureExtractor::Extract(const Waveform& w) const {
  return model_->LayerFeatures(w);
}

// ------------------------------- mmd --------------------------------

double MedianHeuristicSigma(const std::vector<nn::Vec>& xs,
                            const std::vector<nn::Vec>& ys) {
  std::vector<const nn::Vec*> all;
  all.reserve(xs.size() + ys.size());
  for (const auto& v : xs) all.push_back(&v);
  for (const auto& v : ys) all.push_back(&v);
  std::vector<double> dists;
  dists.reserve(all.size() * (all.size() - 1) / 2);
  for (size_t i = 0; i < all.size(); ++i) {
    for (size_t j = i + 1; j < all.size(); ++j) {
      dists.push_back((*all[i] - *all[j]).cast<double>().norm());
    }
  }
  if (dists.empty()) return 1.0;
  std::sort(dists.begin(), dists.end());
  const size_t n = dists.size();
  const double med = n % 2 == 1 ? dists[n / 2]
                                : 0.5 * (dists[n / 2 - 1] + dists[n / 2]);
  return med > 1e-12 ? med : 1.0;
}

double Mmd(const std::vector<nn::Vec>& xs, const std::vector<nn::Vec>& ys,
           const MmdKernel& kernel) {
  if (xs.empty() || ys.empty()) {
    throw Error(ErrorKind::kArgument, "mmd: both sets must be non-empty");
  }
  const Eigen::Index dim = xs.front().size();
  for (const auto& v : xs) {
    if (v.size() != dim) throw Error(ErrorKind::kShape, "mmd: ragged set");
  }
  for (const auto& v : ys) {
    if (v.size() != dim) throw Error(ErrorKind::kShape, "mmd: ragged set");
  }
  const double sigma =
      kernel.sigma > 0.0f ? double(kernel.sigma) : MedianHeuristicSigma(xs, ys);
  const double denom = 2.0 * sigma * sigma;
  auto k = [&](const nn::Vec& a, const nn::Vec& b) {
    return std::exp(-(a - b).cast<double>().squaredNorm() / denom);
  };
  double a = 0.0, b = 0.0, c = 0.0;
  for (const auto& x1 : xs) {
    for (const auto& x2 : xs) a += k(x1, x2);
  }
  for (const auto& y1 : ys) {
    for (const auto& y2 : ys) b += k(y1, y2);
  }
  for (const auto& x1 : xs) {
    for (const auto& y1 : ys) c += k(x1, y1);
  }
  const double ns = static_cast<double>(xs.size());
  const double nt = static_cast<double>(ys.size());
  const double v = a / (ns * ns) + b / (nt * nt) - 2.0 * c / (ns * nt);
  return std::max(0.0, v);  // the biased estimator is nonnegative; clip rounding
}

// ------------------------------ spheres ------------------------------

namespace detail {

Hypersphere SolveSphere(const std::vector<nn::Vec>& points, float nu) {
  if (points.empty()) {
    throw Error(ErrorKind::kArgument, "detect: sphere needs at least one point");
  }
  if (!(nu > 0.0f) || nu > 1.0f) {
    throw Error(ErrorKind::kConfig, "detect: nu must be in (0, 1]");
  }
  Hypersphere s;
  s.center = nn::Vec::Zero(points.front().size());
  for (const auto& p : points) s.center += p;
  s.center /= static_cast<float>(points.size());
  std::vector<double> d2;
  d2.reserve(points.size());
  for (const auto& p : points) {
    d2.push_back((p - s.center).cast<double>().squaredNorm());
  }
  std::sort(d2.begin(), d2.end());
  const long n = static_cast<long>(points.size());
  // Snap near-integer ranks: float nu values like 0.3f otherwise push the
  // ceiling one rank too high.
  const long k =
      n - static_cast<long>(std::ceil(double(nu) * double(n) - 1e-6));
  s.r2 = k <= 0 ? 0.0 : d2[static_cast<size_t>(k - 1)];
  return s;
}

double SphereObjective(const std::vector<nn::Vec>& points, const Hypersphere& s,
                       float nu) {
  if (points.empty()) {
    throw Error(ErrorKind::kArgument, "detect: sphere objective on empty set");
  }
  double hinge = 0.0;
  for (const auto& p : points) {
    hinge += std::max(0.0, (p - s.center).cast<double>().squaredNorm() - s.r2);
  }
  return s.r2 + hinge / (double(nu) * static_cast<double>(points.size()));
}

}  // namespace detail

// ------------------------------ variants -----------------------------

const char* DetectorVariantName(DetectorVariant v) {
  switch (v) {
    case DetectorVariant::kOcc: return "occ";
    case DetectorVariant::kCoOcc: return "co-occ";
    case DetectorVariant::kDaOcc: return "da-occ";
    case DetectorVariant::kCodaOcc: return "coda-occ";
  }
  return "occ";
}

DetectorVariant ParseDetectorVariant(const std::string& name) {
  if (name == "occ") return DetectorVariant::kOcc;
  if (name == "co-occ") return DetectorVariant::kCoOcc;
  if (name == "da-occ") return DetectorVariant::kDaOcc;
  if (name == "coda-occ") return DetectorVariant::kCodaOcc;
  throw Error(ErrorKind::kArgument, "detect: unknown variant '" + name + "'");
}

// ------------------------------ training -----------------------------

namespace {

bool CoLike(DetectorVariant v) {
  return v == DetectorVariant::kCoOcc || v == DetectorVariant::kCodaOcc;
}
bool DaLike(DetectorVariant v) {
  return v == DetectorVariant::kDaOcc || v == DetectorVariant::kCodaOcc;
}

struct DomainData {
  std::vector<nn::Mat> x;  // per used layer: in_dim x n, pre-scaled
  int n = 0;
};

struct Mapped {
  std::vector<nn::Mat> hpre;
  std::vector<nn::Mat> h;
  std::vector<nn::Mat> out;
};

void MapDomain(const std::vector<nn::Mat>& w1, const std::vector<nn::Mat>& w2,
               const DomainData& d, Mapped* m) {
  const size_t nl = w1.size();
  m->hpre.resize(nl);
  m->h.resize(nl);
  m->out.resize(nl);
  for (size_t l = 0; l < nl; ++l) {
    m->hpre[l] = w1[l] * d.x[l];
    m->h[l] = nn::LeakyRelu(m->hpre[l], kSlope);
    m->out[l] = w2[l] * m->h[l];
  }
}

nn::Vec ColMean(const nn::Mat& m) { return m.rowwise().mean(); }

// Variant objective at the current mapping with centers as closed-form
// means (differentiable through the mean) and the radii held fixed.
// When gs/gt are non-null they receive dF/d(out) per layer.
double Objective(const DetectorConfig& cfg, const std::vector<double>& sigma,
                 const std::vector<double>& r2_s, const std::vector<double>& r2_t,
                 const Mapped& ms, const Mapped* mt,
                 std::vector<nn::Vec>* cs_out, std::vector<nn::Vec>* ct_out,
                 std::vector<nn::Mat>* gs, std::vector<nn::Mat>* gt) {
  const size_t nl = ms.out.size();
  const bool co = CoLike(cfg.variant);
  const bool da = DaLike(cfg.variant);
  double total = 0.0;

  std::vector<nn::Vec> cs(nl), ct;
  for (size_t l = 0; l < nl; ++l) cs[l] = ColMean(ms.out[l]);
  if (mt != nullptr) {
    ct.resize(nl);
    for (size_t l = 0; l < nl; ++l) ct[l] = ColMean(mt->out[l]);
  }
  if (gs != nullptr) {
    gs->assign(nl, nn::Mat());
    for (size_t l = 0; l < nl; ++l) {
      (*gs)[l] = nn::Mat::Zero(ms.out[l].rows(), ms.out[l].cols());
    }
  }
  if (gt != nullptr && mt != nullptr) {
    gt->assign(nl, nn::Mat());
    for (size_t l = 0; l < nl; ++l) {
      (*gt)[l] = nn::Mat::Zero(mt->out[l].rows(), mt->out[l].cols());
    }
  }

  // Soft-boundary sphere terms, gradient routed through both the sample
  // and the mean.
  auto sphere_terms = [&](const Mapped& m, const std::vector<nn::Vec>& c,
                          const std::vector<double>& r2,
                          std::vector<nn::Mat>* g) {
    for (size_t l = 0; l < nl; ++l) {
      const nn::Mat& out = m.out[l];
      const Eigen::Index n = out.cols();
      const double inv = 1.0 / (double(cfg.nu) * double(n));
      double hinge = 0.0;
      nn::Vec s_o = nn::Vec::Zero(out.rows());
      for (Eigen::Index i = 0; i < n; ++i) {
        const nn::Vec d = out.col(i) - c[l];
        const double d2 = d.cast<double>().squaredNorm();
        if (d2 > r2[l]) {
          hinge += d2 - r2[l];
          if (g != nullptr) {
            (*g)[l].col(i) += float(2.0 * inv) * d;
            s_o += d;
          }
        }
      }
      total += r2[l] + inv * hinge;
      if (g != nullptr) {
        const nn::Vec pull = float(2.0 * inv / double(n)) * s_o;
        (*g)[l].colwise() -= pull;
      }
    }
  };
  sphere_terms(ms, cs, r2_s, gs);
  if (mt != nullptr) sphere_terms(*mt, ct, r2_t, gt);

  // Contrastive terms per domain: attraction of layer centers to their
  // mean, separation hinge between layer centers.
  auto co_terms = [&](const std::vector<nn::Vec>& c, Eigen::Index n,
                      std::vector<nn::Mat>* g) {
    nn::Vec c0 = nn::Vec::Zero(c.front().size());
    for (const auto& cl : c) c0 += cl;
    c0 /= static_cast<float>(c.size());
    std::vector<nn::Vec> gc(c.size(), nn::Vec::Zero(c0.size()));
    for (size_t l = 0; l < c.size(); ++l) {
      total += double(cfg.lambda_b) * (c[l] - c0).cast<double>().squaredNorm();
      gc[l] += 2.0f * cfg.lambda_b * (c[l] - c0);
    }
    for (size_t a = 0; a < c.size(); ++a) {
      for (size_t b = a + 1; b < c.size(); ++b) {
        const nn::Vec diff = c[a] - c[b];
        const double dist = diff.cast<double>().norm();
        const double h = std::max(0.0, double(cfg.margin) - dist);
        total += 2.0 * double(cfg.lambda_s) * h * h;  // ordered-pair sum
        if (h > 0.0 && dist > 1e-12) {
          const nn::Vec dir = diff * float(1.0 / dist);
          gc[a] -= float(4.0 * cfg.lambda_s * h) * dir;
          gc[b] += float(4.0 * cfg.lambda_s * h) * dir;
        }
      }
    }
    if (g != nullptr) {
      for (size_t l = 0; l < c.size(); ++l) {
        (*g)[l].colwise() += gc[l] * (1.0f / static_cast<float>(n));
      }
    }
  };
  if (co) {
    co_terms(cs, ms.out[0].cols(), gs);
    if (mt != nullptr) co_terms(ct, mt->out[0].cols(), gt);
  }

  // Alignment terms per layer: center distance plus the kernel discrepancy
  // of the mapped features.
  if (da && mt != nullptr) {
    for (size_t l = 0; l < nl; ++l) {
      const Eigen::Index n_s = ms.out[l].cols();
      const Eigen::Index n_t = mt->out[l].cols();
      if (cfg.align_weight != 0.0f) {
        const nn::Vec diff = cs[l] - ct[l];
        total += double(cfg.align_weight) * diff.cast<double>().squaredNorm();
        if (gs != nullptr) {
          (*gs)[l].colwise() +=
              diff * (2.0f * cfg.align_weight / static_cast<float>(n_s));
        }
        if (gt != nullptr) {
          (*gt)[l].colwise() -=
              diff * (2.0f * cfg.align_weight / static_cast<float>(n_t));
        }
      }
      if (cfg.mmd_weight != 0.0f) {
        const nn::Mat& s = ms.out[l];
        const nn::Mat& t = mt->out[l];
        const double denom = 2.0 * sigma[l] * sigma[l];
        const double wm = double(cfg.mmd_weight);
        double a = 0.0, b = 0.0, cc = 0.0;
        nn::Mat kss(n_s, n_s), ktt(n_t, n_t), kst(n_s, n_t);
        for (Eigen::Index i = 0; i < n_s; ++i) {
          for (Eigen::Index j = 0; j < n_s; ++j) {
            kss(i, j) = float(std::exp(
                -(s.col(i) - s.col(j)).cast<double>().squaredNorm() / denom));
            a += kss(i, j);
          }
        }
        for (Eigen::Index i = 0; i < n_t; ++i) {
          for (Eigen::Index j = 0; j < n_t; ++j) {
            ktt(i, j) = float(std::exp(
                -(t.col(i) - t.col(j)).cast<double>().squaredNorm() / denom));
            b += ktt(i, j);
          }
        }
        for (Eigen::Index i = 0; i < n_s; ++i) {
          for (Eigen::Index j = 0; j < n_t; ++j) {
            kst(i, j) = float(std::exp(
                -(s.col(i) - t.col(j)).cast<double>().squaredNorm() / denom));
            cc += kst(i, j);
          }
        }
        const double ds = static_cast<double>(n_s);
        const double dt = static_cast<double>(n_t);
        total += wm * (a / (ds * ds) + b / (dt * dt) - 2.0 * cc / (ds * dt));
        if (gs != nullptr || gt != nullptr) {
          // d k(a,b) / da = k * (b - a) * 2 / denom; the double sums visit
          // every pair from both sides, doubling the within-set terms.
          const float f_ss = float(wm * 4.0 / (ds * ds * denom));
          const float f_tt = float(wm * 4.0 / (dt * dt * denom));
          const float f_st = float(wm * 4.0 / (ds * dt * denom));
          if (gs != nullptr) {
            for (Eigen::Index i = 0; i < n_s; ++i) {
              nn::Vec acc = nn::Vec::Zero(s.rows());
              for (Eigen::Index j = 0; j < n_s; ++j) {
                acc += kss(i, j) * (s.col(j) - s.col(i));
              }
              nn::Vec acc2 = nn::Vec::Zero(s.rows());
              for (Eigen::Index j = 0; j < n_t; ++j) {
                acc2 += kst(i, j) * (t.col(j) - s.col(i));
              }
              (*gs)[l].col(i) += f_ss * acc - f_st * acc2;
            }
          }
          if (gt != nullptr) {
            for (Eigen::Index j = 0; j < n_t; ++j) {
              nn::Vec acc = nn::Vec::Zero(t.rows());
              for (Eigen::Index i = 0; i < n_t; ++i) {
                acc += ktt(j, i) * (t.col(i) - t.col(j));
              }
              nn::Vec acc2 = nn::Vec::Zero(t.rows());
              for (Eigen::Index i = 0; i < n_s; ++i) {
                acc2 += kst(i, j) * (s.col(i) - t.col(j));
              }
              (*gt)[l].col(j) += f_tt * acc - f_st * acc2;
            }
          }
        }
      }
    }
  }

  if (cs_out != nullptr) *cs_out = std::move(cs);
  if (ct_out != nullptr) *ct_out = std::move(ct);
  return total;
}

void BackpropWeights(const std::vector<nn::Mat>& w2, const DomainData& d,
                     const Mapped& m, const std::vector<nn::Mat>& gout,
                     std::vector<nn::Mat>* gw1, std::vector<nn::Mat>* gw2) {
  for (size_t l = 0; l < w2.size(); ++l) {
    (*gw2)[l].noalias() += gout[l] * m.h[l].transpose();
    const nn::Mat gh = w2[l].transpose() * gout[l];
    const nn::Mat gpre = nn::LeakyReluBackward(m.hpre[l], gh, kSlope);
    (*gw1)[l].noalias() += gpre * d.x[l].transpose();
  }
}

std::vector<nn::Vec> MatCols(const nn::Mat& m) {
  std::vector<nn::Vec> out;
  out.reserve(static_cast<size_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.cols(); ++i) out.push_back(m.col(i));
  return out;
}

void CheckFeatureSet(const FeatureSet& fs, const char* what) {
  if (fs.empty()) {
    throw Error(ErrorKind::kConfig,
                std::string("detect: ") + what + " feature set is empty");
  }
  const size_t nl = fs.front().size();
  if (nl == 0) {
    throw Error(ErrorKind::kShape, "detect: features have no layers");
  }
  for (const auto& sample : fs) {
    if (sample.size() != nl) {
      throw Error(ErrorKind::kShape, "detect: ragged layer counts");
    }
    for (size_t l = 0; l < nl; ++l) {
      if (sample[l].size() != fs.front()[l].size()) {
        throw Error(ErrorKind::kShape, "detect: ragged feature dims");
      }
    }
  }
}

}  // namespace

Detector TrainDetector(const FeatureSet& source, const FeatureSet* target,
                       const DetectorConfig& cfg, uint64_t seed) {
  CheckFeatureSet(source, "source");
  const bool da = DaLike(cfg.variant);
  const bool has_target = target != nullptr && !target->empty();
  if (da && !has_target) {
    throw Error(ErrorKind::kConfig,
                "detect: the domain-aligned variants need target features");
  }
  if (!da && has_target) {
    throw Error(ErrorKind::kConfig,
                "detect: target features are only meaningful for the "
                "domain-aligned variants");
  }
  if (da) CheckFeatureSet(*target, "target");
  if (!(cfg.nu > 0.0f) || cfg.nu > 1.0f) {
    throw Error(ErrorKind::kConfig, "detect: nu must be in (0, 1]");
  }
  // Zero epochs is legal: the detector keeps its freshly initialized map,
  // which gives analyses a faithful before-training reference point.
  if (cfg.epochs < 0 || cfg.hidden_dim < 1 || cfg.out_dim < 1 ||
      !(cfg.lr > 0.0f) || !(cfg.margin > 0.0f)) {
    throw Error(ErrorKind::kConfig, "detect: bad training hyperparameters");
  }
  const size_t n_layers = source.front().size();
  if (da && target->front().size() != n_layers) {
    throw Error(ErrorKind::kShape, "detect: source/target layer counts differ");
  }

  Detector det;
  det.cfg_ = cfg;
  if (CoLike(cfg.variant)) {
    for (size_t l = 0; l < n_layers; ++l) det.used_layers_.push_back(int(l));
  } else {
    det.used_layers_.push_back(int(n_layers) - 1);
  }
  const size_t nl = det.used_layers_.size();

  // Per-layer feature normalization so the contrastive margin lives in a
  // comparable space across layers.
  det.in_dims_.resize(nl);
  det.in_scale_.resize(nl);
  for (size_t l = 0; l < nl; ++l) {
    const int layer = det.used_layers_[l];
    det.in_dims_[l] = int(source.front()[size_t(layer)].size());
    if (da && (*target).front()[size_t(layer)].size() != det.in_dims_[l]) {
      throw Error(ErrorKind::kShape, "detect: source/target dims differ");
    }
    double acc = 0.0;
    size_t cnt = 0;
    for (const auto& s : source) {
      acc += s[size_t(layer)].cast<double>().squaredNorm();
      ++cnt;
    }
    if (da) {
      for (const auto& s : *target) {
        acc += s[size_t(layer)].cast<double>().squaredNorm();
        ++cnt;
      }
    }
    const double rms = std::sqrt(acc / static_cast<double>(cnt));
    det.in_scale_[l] = rms > 1e-12 ? float(rms) : 1.0f;
  }

  auto build = [&](const FeatureSet& fs) {
    DomainData d;
    d.n = int(fs.size());
    d.x.resize(nl);
    for (size_t l = 0; l < nl; ++l) {
      const int layer = det.used_layers_[l];
      d.x[l] = nn::Mat(det.in_dims_[l], d.n);
      for (int i = 0; i < d.n; ++i) {
        d.x[l].col(i) = fs[size_t(i)][size_t(layer)] / det.in_scale_[l];
      }
    }
    return d;
  };
  const DomainData src = build(source);
  DomainData tgt;
  if (da) tgt = build(*target);

  Rng rng(DeriveSeed(seed, "detect/init"));
  det.w1_.resize(nl);
  det.w2_.resize(nl);
  auto he = [&rng](nn::Mat* w, int fan_in) {
    const float std = std::sqrt(2.0f / static_cast<float>(fan_in));
    for (Eigen::Index i = 0; i < w->size(); ++i) {
      (*w)(i) = std * static_cast<float>(rng.Gaussian());
    }
  };
  for (size_t l = 0; l < nl; ++l) {
    det.w1_[l] = nn::Mat(cfg.hidden_dim, det.in_dims_[l]);
    det.w2_[l] = nn::Mat(cfg.out_dim, cfg.hidden_dim);
    he(&det.w1_[l], det.in_dims_[l]);
    he(&det.w2_[l], cfg.hidden_dim);
  }

  Mapped ms, mt;
  MapDomain(det.w1_, det.w2_, src, &ms);
  if (da) MapDomain(det.w1_, det.w2_, tgt, &mt);

  det.sigma_.assign(nl, 0.0);
  if (da) {
    for (size_t l = 0; l < nl; ++l) {
      det.sigma_[l] = cfg.kernel.sigma > 0.0f
                          ? double(cfg.kernel.sigma)
                          : MedianHeuristicSigma(MatCols(ms.out[l]),
                                                 MatCols(mt.out[l]));
    }
  }

  auto solve_radii = [&](const Mapped& m, std::vector<double>* r2) {
    r2->resize(nl);
    for (size_t l = 0; l < nl; ++l) {
      (*r2)[l] = detail::SolveSphere(MatCols(m.out[l]), cfg.nu).r2;
    }
  };
  std::vector<double> r2_s, r2_t(nl, 0.0);
  solve_radii(ms, &r2_s);
  if (da) solve_radii(mt, &r2_t);

  std::vector<nn::Vec> cs, ct;
  double f_now = Objective(cfg, det.sigma_, r2_s, r2_t, ms, da ? &mt : nullptr,
                           &cs, &ct, nullptr, nullptr);
  det.history_.push_back(f_now);

  auto collapse_check = [&](int epoch) {
    for (size_t l = 0; l < nl; ++l) {
      double var = 0.0;
      Eigen::Index cnt = 0;
      const nn::Vec mean_s = ColMean(ms.out[l]);
      for (Eigen::Index i = 0; i < ms.out[l].cols(); ++i) {
        var += (ms.out[l].col(i) - mean_s).cast<double>().squaredNorm();
        ++cnt;
      }
      if (da) {
        const nn::Vec mean_t = ColMean(mt.out[l]);
        for (Eigen::Index i = 0; i < mt.out[l].cols(); ++i) {
          var += (mt.out[l].col(i) - mean_t).cast<double>().squaredNorm();
          ++cnt;
        }
      }
      var /= static_cast<double>(cnt);
      if (!std::isfinite(var) || var < 1e-8) {
        throw Error(ErrorKind::kTraining,
                    "detect: mapped features collapsed (variant " +
                        std::string(DetectorVariantName(cfg.variant)) +
                        ", layer index " + std::to_string(l) + ", epoch " +
                        std::to_string(epoch) + ", variance " +
                        std::to_string(var) + ")");
      }
    }
  };
  collapse_check(0);

  std::vector<nn::Mat> gs, gt, gw1(nl), gw2(nl);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Objective(cfg, det.sigma_, r2_s, r2_t, ms, da ? &mt : nullptr, nullptr,
              nullptr, &gs, da ? &gt : nullptr);
    for (size_t l = 0; l < nl; ++l) {
      gw1[l] = nn::Mat::Zero(det.w1_[l].rows(), det.w1_[l].cols());
      gw2[l] = nn::Mat::Zero(det.w2_[l].rows(), det.w2_[l].cols());
    }
    BackpropWeights(det.w2_, src, ms, gs, &gw1, &gw2);
    if (da) BackpropWeights(det.w2_, tgt, mt, gt, &gw1, &gw2);

    // Backtracking step: never accept an increase of the epoch objective.
    const std::vector<nn::Mat> w1_old = det.w1_;
    const std::vector<nn::Mat> w2_old = det.w2_;
    float step = cfg.lr;
    bool accepted = false;
    for (int trial = 0; trial < 30 && !accepted; ++trial) {
      for (size_t l = 0; l < nl; ++l) {
        det.w1_[l] = w1_old[l] - step * gw1[l];
        det.w2_[l] = w2_old[l] - step * gw2[l];
      }
      MapDomain(det.w1_, det.w2_, src, &ms);
      if (da) MapDomain(det.w1_, det.w2_, tgt, &mt);
      const double f_try =
          Objective(cfg, det.sigma_, r2_s, r2_t, ms, da ? &mt : nullptr,
                    nullptr, nullptr, nullptr, nullptr);
      if (std::isfinite(f_try) && f_try <= f_now + 1e-12) {
        accepted = true;
        f_now = f_try;
      } else {
        step *= 0.5f;
      }
    }
    if (!accepted) {
      det.w1_ = w1_old;
      det.w2_ = w2_old;
      MapDomain(det.w1_, det.w2_, src, &ms);
      if (da) MapDomain(det.w1_, det.w2_, tgt, &mt);
    }

    // Re-fit the radii at the new mapping; this only lowers the objective.
    solve_radii(ms, &r2_s);
    if (da) solve_radii(mt, &r2_t);
    f_now = Objective(cfg, det.sigma_, r2_s, r2_t, ms, da ? &mt : nullptr, &cs,
                      &ct, nullptr, nullptr);
    det.history_.push_back(f_now);
    collapse_check(epoch);
  }

  det.src_spheres_.resize(nl);
  for (size_t l = 0; l < nl; ++l) {
    det.src_spheres_[l].center = cs[l];
    det.src_spheres_[l].r2 = r2_s[l];
  }
  if (da) {
    det.tgt_spheres_.resize(nl);
    for (size_t l = 0; l < nl; ++l) {
      det.tgt_spheres_[l].center = ct[l];
      det.tgt_spheres_[l].r2 = r2_t[l];
    }
  }
  det.trained_ = true;
  return det;
}

// ------------------------------ scoring ------------------------------

nn::Vec Detector::Map(int used_index, const nn::Vec& feat) const {
  if (!trained_) throw Error(ErrorKind::kState, "detect: untrained detector");
  if (used_index < 0 || used_index >= int(w1_.size())) {
    throw Error(ErrorKind::kArgument, "detect: layer index out of range");
  }
  const size_t l = static_cast<size_t>(used_index);
  if (feat.size() != in_dims_[l]) {
    throw Error(ErrorKind::kShape, "detect: feature dim mismatch");
  }
  nn::Vec h = w1_[l] * (feat / in_scale_[l]);
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    if (h[i] < 0.0f) h[i] *= kSlope;
  }
  return w2_[l] * h;
}

DetectionScore Detector::ScoreDetailed(const std::vector<nn::Vec>& feats) const {
  if (!trained_) throw Error(ErrorKind::kState, "detect: untrained detector");
  const std::vector<Hypersphere>& spheres =
      cfg_.use_target_sphere && !tgt_spheres_.empty() ? tgt_spheres_
                                                      : src_spheres_;
  DetectionScore score;
  score.layer_d.reserve(used_layers_.size());
  double agg = cfg_.score_max ? -1e300 : 0.0;
  for (size_t l = 0; l < used_layers_.size(); ++l) {
    const int layer = used_layers_[l];
    if (layer >= int(feats.size())) {
      throw Error(ErrorKind::kShape, "detect: too few feature layers");
    }
    const nn::Vec out = Map(int(l), feats[size_t(layer)]);
    const double d2 = (out - spheres[l].center).cast<double>().squaredNorm();
    score.layer_d.push_back(std::sqrt(d2));
    const double v = d2 - spheres[l].r2;
    if (cfg_.score_max) {
      agg = std::max(agg, v);
    } else {
      agg += v / static_cast<double>(used_layers_.size());
    }
  }
  score.value = agg;
  return score;
}

// --------------------------- calibration ----------------------------

namespace {

std::vector<double> ScoreSet(const Detector& det, const FeatureSet& fs) {
  std::vector<double> out;
  out.reserve(fs.size());
  for (const auto& sample : fs) out.push_back(det.ScoreFeatures(sample));
  return out;
}

}  // namespace

double CalibrateDetector(Detector* det, const FeatureSet& dev_bona,
                         const FeatureSet& dev_adv) {
  if (det == nullptr || !det->trained()) {
    throw Error(ErrorKind::kState, "detect: calibration needs a trained detector");
  }
  if (dev_bona.empty() || dev_adv.empty()) {
    throw Error(ErrorKind::kCalibration,
                "detect: calibration needs both bona fide and adversarial "
                "development scores");
  }
  std::vector<double> scores = ScoreSet(*det, dev_bona);
  std::vector<int> labels(scores.size(), 0);
  for (double s : ScoreSet(*det, dev_adv)) {
    scores.push_back(s);
    labels.push_back(1);
  }
  const EerResult eer = ComputeEer(scores, labels);
  det->set_threshold(eer.threshold);
  return eer.threshold;
}

DetectionMetrics EvaluateDetector(
    const Detector& det, const std::map<std::string, FeatureSet>& bona_by_domain,
    const FeatureSet& adv) {
  if (!det.trained() || !det.calibrated()) {
    throw Error(ErrorKind::kState, "detect: evaluation needs a calibrated detector");
  }
  if (bona_by_domain.empty() || adv.empty()) {
    throw Error(ErrorKind::kArgument, "detect: empty evaluation sets");
  }
  for (const auto& [name, fs] : bona_by_domain) {
    if (fs.empty()) {
      throw Error(ErrorKind::kArgument,
                  "detect: empty bona fide domain '" + name + "'");
    }
  }

  DetectionMetrics m;
  m.threshold = det.threshold();
  std::vector<double> scores;
  std::vector<int> labels;
  for (const auto& [name, fs] : bona_by_domain) {
    const std::vector<double> ds = ScoreSet(det, fs);
    const std::vector<int> zeros(ds.size(), 0);
    m.far_by_domain[name] = ComputeFarFrr(ds, zeros, det.threshold()).far;
    scores.insert(scores.end(), ds.begin(), ds.end());
    labels.insert(labels.end(), ds.size(), 0);
  }
  for (double s : ScoreSet(det, adv)) {
    scores.push_back(s);
    labels.push_back(1);
  }
  const FarFrr ff = ComputeFarFrr(scores, labels, det.threshold());
  m.far_overall = ff.far;
  m.frr = ff.frr;
  m.eer = ComputeEer(scores, labels).eer;
  m.auc = ComputeAuc(scores, labels);
  return m;
}

nlohmann::json DetectionMetricsToJson(const DetectionMetrics& m) {
  nlohmann::json j;
  j["eer"] = m.eer;
  j["auc"] = m.auc;
  j["far_overall"] = m.far_overall;
  j["far_by_domain"] = m.far_by_domain;
  j["frr"] = m.frr;
  j["threshold"] = m.threshold;
  return j;
}

// ---------------------------- persistence ----------------------------

void Detector::Save(const std::string& path) const {
  if (!trained_) throw Error(ErrorKind::kState, "detect: nothing to save");
  nlohmann::json meta;
  meta["variant"] = DetectorVariantName(cfg_.variant);
  meta["hidden_dim"] = cfg_.hidden_dim;
  meta["out_dim"] = cfg_.out_dim;
  meta["nu"] = cfg_.nu;
  meta["lambda_b"] = cfg_.lambda_b;
  meta["lambda_s"] = cfg_.lambda_s;
  meta["margin"] = cfg_.margin;
  meta["align_weight"] = cfg_.align_weight;
  meta["mmd_weight"] = cfg_.mmd_weight;
  meta["kernel_sigma"] = cfg_.kernel.sigma;
  meta["epochs"] = cfg_.epochs;
  meta["lr"] = cfg_.lr;
  meta["score_max"] = cfg_.score_max;
  meta["use_target_sphere"] = cfg_.use_target_sphere;
  meta["used_layers"] = used_layers_;
  meta["in_dims"] = in_dims_;
  meta["in_scale"] = in_scale_;
  meta["sigma"] = sigma_;
  meta["history"] = history_;
  meta["threshold"] = threshold_;
  meta["calibrated"] = calibrated_;
  std::vector<double> r2s, r2t;
  for (const auto& s : src_spheres_) r2s.push_back(s.r2);
  for (const auto& s : tgt_spheres_) r2t.push_back(s.r2);
  meta["r2_source"] = r2s;
  meta["r2_target"] = r2t;

  ArchiveWriter writer(kSchema, meta);
  for (size_t l = 0; l < w1_.size(); ++l) {
    writer.AddTensor("net" + std::to_string(l) + ".w1", w1_[l]);
    writer.AddTensor("net" + std::to_string(l) + ".w2", w2_[l]);
    writer.AddTensor("sphere" + std::to_string(l) + ".cs",
                     src_spheres_[l].center);
    if (!tgt_spheres_.empty()) {
      writer.AddTensor("sphere" + std::to_string(l) + ".ct",
                       tgt_spheres_[l].center);
    }
  }
  writer.Save(path);
}

Detector Detector::Load(const std::string& path) {
  ArchiveReader reader = ArchiveReader::Load(path, kSchema);
  const auto& meta = reader.meta();
  Detector det;
  det.cfg_.variant = ParseDetectorVariant(meta.at("variant").get<std::string>());
  det.cfg_.hidden_dim = meta.at("hidden_dim").get<int>();
  det.cfg_.out_dim = meta.at("out_dim").get<int>();
  det.cfg_.nu = meta.at("nu").get<float>();
  det.cfg_.lambda_b = meta.at("lambda_b").get<float>();
  det.cfg_.lambda_s = meta.at("lambda_s").get<float>();
  det.cfg_.margin = meta.at("margin").get<float>();
  det.cfg_.align_weight = meta.at("align_weight").get<float>();
  det.cfg_.mmd_weight = meta.at("mmd_weight").get<float>();
  det.cfg_.kernel.sigma = meta.at("kernel_sigma").get<float>();
  det.cfg_.epochs = meta.at("epochs").get<int>();
  det.cfg_.lr = meta.at("lr").get<float>();
  det.cfg_.score_max = meta.at("score_max").get<bool>();
  det.cfg_.use_target_sphere = meta.at("use_target_sphere").get<bool>();
  det.used_layers_ = meta.at("used_layers").get<std::vector<int>>();
  det.in_dims_ = meta.at("in_dims").get<std::vector<int>>();
  det.in_scale_ = meta.at("in_scale").get<std::vector<float>>();
  det.sigma_ = meta.at("sigma").get<std::vector<double>>();
  det.history_ = meta.at("history").get<std::vector<double>>();
  det.threshold_ = meta.at("threshold").get<double>();
  det.calibrated_ = meta.at("calibrated").get<bool>();
  const auto r2s = meta.at("r2_source").get<std::vector<double>>();
  const auto r2t = meta.at("r2_target").get<std::vector<double>>();

  const size_t nl = det.used_layers_.size();
  det.w1_.resize(nl);
  det.w2_.resize(nl);
  det.src_spheres_.resize(nl);
  if (!r2t.empty()) det.tgt_spheres_.resize(nl);
  if (det.in_dims_.size() != nl || det.in_scale_.size() != nl ||
      det.sigma_.size() != nl || r2s.size() != nl ||
      (!r2t.empty() && r2t.size() != nl)) {
    throw Error(ErrorKind::kFormat, "detect: inconsistent checkpoint layout");
  }
  for (size_t l = 0; l < nl; ++l) {
    det.w1_[l] = reader.Tensor("net" + std::to_string(l) + ".w1");
    det.w2_[l] = reader.Tensor("net" + std::to_string(l) + ".w2");
    if (det.w1_[l].rows() != det.cfg_.hidden_dim ||
        det.w1_[l].cols() != det.in_dims_[l] ||
        det.w2_[l].rows() != det.cfg_.out_dim ||
        det.w2_[l].cols() != det.cfg_.hidden_dim) {
      throw Error(ErrorKind::kFormat, "detect: checkpoint weight shape mismatch");
    }
    det.src_spheres_[l].center =
        reader.TensorVec("sphere" + std::to_string(l) + ".cs");
    det.src_spheres_[l].r2 = r2s[l];
    if (!r2t.empty()) {
      det.tgt_spheres_[l].center =
          reader.TensorVec("sphere" + std::to_string(l) + ".ct");
      det.tgt_spheres_[l].r2 = r2t[l];
    }
  }
  det.trained_ = true;
  return det;
}

}  // namespace asvlab
