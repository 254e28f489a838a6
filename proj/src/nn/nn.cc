// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "asvlab/nn/nn.h"

#include <cmath>

#include "asvlab/core/error.h"

namespace asvlab {
namespace nn {

namespace {
void HeNormal(Mat* w, int fan_in, Rng& rng, float scale) {
  const float std = scale * std::sqrt(2.0f / static_cast<float>(fan_in));
  for (Eigen::Index j = 0; j < w->cols(); ++j)
    for (Eigen::Index i = 0; i < w->rows(); ++i)
      (*w)(i, j) = std * static_cast<float>(rng.Gaussian());
}
}  // namespace

// ---------------------------- Conv1d ----------------------------

Conv1d::Conv1d(int in_ch, int out_ch, int kernel, int stride, int pad, bool bias)
    : in_ch_(in_ch), out_ch_(out_ch), k_(kernel), stride_(stride), pad_(pad),
      has_bias_(bias) {
  w = Mat::Zero(out_ch, in_ch * kernel);
  gw = Mat::Zero(out_ch, in_ch * kernel);
  if (has_bias_) {
    b = Mat::Zero(out_ch, 1);
    gb = Mat::Zero(out_ch, 1);
  }
}

void Conv1d::Init(Rng& rng, float scale) { HeNormal(&w, in_ch_ * k_, rng, scale); }

int Conv1d::OutLen(int t_in) const {
  return (t_in + 2 * pad_ - k_) / stride_ + 1;
}

Mat Conv1d::Im2Col(const Mat& x) const {
  const int t_in = static_cast<int>(x.cols());
  const int t_out = OutLen(t_in);
  Mat cols = Mat::Zero(in_ch_ * k_, t_out);
  for (int t = 0; t < t_out; ++t) {
    const int start = t * stride_ - pad_;
    for (int j = 0; j < k_; ++j) {
      const int src = start + j;
      if (src < 0 || src >= t_in) continue;
      for (int c = 0; c < in_ch_; ++c) cols(c * k_ + j, t) = x(c, src);
    }
  }
  return cols;
}

void Conv1d::Col2ImAdd(const Mat& cols, int t_in, Mat* x) const {
  const int t_out = static_cast<int>(cols.cols());
  for (int t = 0; t < t_out; ++t) {
    const int start = t * stride_ - pad_;
    for (int j = 0; j < k_; ++j) {
      const int dst = start + j;
      if (dst < 0 || dst >= t_in) continue;
      for (int c = 0; c < in_ch_; ++c) (*x)(c, dst) += cols(c * k_ + j, t);
    }
  }
}

Mat Conv1d::Forward(const Mat& x, Cache* cache) const {
  if (x.rows() != in_ch_)
    throw Error(ErrorKind::kShape, "Conv1d: channel mismatch");
  if (OutLen(static_cast<int>(x.cols())) < 1)
    throw Error(ErrorKind::kLength, "Conv1d: input shorter than kernel");
  Mat cols = Im2Col(x);
  Mat y = w * cols;
  if (has_bias_) y.colwise() += Eigen::VectorXf(b.col(0));
  if (cache) {
    cache->cols = std::move(cols);
    cache->t_in = static_cast<int>(x.cols());
  }
  return y;
}

Mat Conv1d::Backward(const Cache& cache, const Mat& gy) {
  gw.noalias() += gy * cache.cols.transpose();
  if (has_bias_) gb.col(0) += gy.rowwise().sum();
  return BackwardData(gy, cache.t_in);
}

Mat Conv1d::BackwardData(const Mat& gy, int t_in) const {
  Mat gcols = w.transpose() * gy;
  Mat gx = Mat::Zero(in_ch_, t_in);
  Col2ImAdd(gcols, t_in, &gx);
  return gx;
}

void Conv1d::CollectParams(const std::string& prefix, std::vector<ParamRef>* out) {
  out->push_back({prefix + ".w", &w, &gw});
  if (has_bias_) out->push_back({prefix + ".b", &b, &gb});
}

// ---------------------- ConvTranspose1d ----------------------

ConvTranspose1d::ConvTranspose1d(int in_ch, int out_ch, int kernel, int stride,
                                 int pad, bool bias)
    : in_ch_(in_ch), out_ch_(out_ch), k_(kernel), stride_(stride), pad_(pad),
      has_bias_(bias) {
  w = Mat::Zero(in_ch, out_ch * kernel);
  gw = Mat::Zero(in_ch, out_ch * kernel);
  if (has_bias_) {
    b = Mat::Zero(out_ch, 1);
    gb = Mat::Zero(out_ch, 1);
  }
}

void ConvTranspose1d::Init(Rng& rng, float scale) {
  HeNormal(&w, in_ch_ * k_ / stride_, rng, scale);
}

int ConvTranspose1d::OutLen(int t_in) const {
  return (t_in - 1) * stride_ + k_ - 2 * pad_;
}

Mat ConvTranspose1d::Forward(const Mat& x, Cache* cache) const {
  if (x.rows() != in_ch_)
    throw Error(ErrorKind::kShape, "ConvTranspose1d: channel mismatch");
  const int t_in = static_cast<int>(x.cols());
  const int t_out = OutLen(t_in);
  Mat cols = w.transpose() * x;  // (out_ch*k) x t_in
  Mat y = Mat::Zero(out_ch_, t_out);
  for (int t = 0; t < t_in; ++t) {
    const int start = t * stride_ - pad_;
    for (int j = 0; j < k_; ++j) {
      const int dst = start + j;
      if (dst < 0 || dst >= t_out) continue;
      for (int c = 0; c < out_ch_; ++c) y(c, dst) += cols(c * k_ + j, t);
    }
  }
  if (has_bias_) y.colwise() += Eigen::VectorXf(b.col(0));
  if (cache) cache->x = x;
  return y;
}

Mat ConvTranspose1d::GyCols(const Mat& gy, int t_in) const {
  const int t_out = static_cast<int>(gy.cols());
  Mat gcols = Mat::Zero(out_ch_ * k_, t_in);
  for (int t = 0; t < t_in; ++t) {
    const int start = t * stride_ - pad_;
    for (int j = 0; j < k_; ++j) {
      const int src = start + j;
      if (src < 0 || src >= t_out) continue;
      for (int c = 0; c < out_ch_; ++c) gcols(c * k_ + j, t) = gy(c, src);
    }
  }
  return gcols;
}

Mat ConvTranspose1d::Backward(const Cache& cache, const Mat& gy) {
  const int t_in = static_cast<int>(cache.x.cols());
  Mat gcols = GyCols(gy, t_in);
  gw.noalias() += cache.x * gcols.transpose();
  if (has_bias_) gb.col(0) += gy.rowwise().sum();
  return w * gcols;
}

Mat ConvTranspose1d::BackwardData(const Mat& gy, int t_in) const {
  return w * GyCols(gy, t_in);
}

void ConvTranspose1d::CollectParams(const std::string& prefix,
                                    std::vector<ParamRef>* out) {
  out->push_back({prefix + ".w", &w, &gw});
  if (has_bias_) out->push_back({prefix + ".b", &b, &gb});
}

// ---------------------------- Dense ----------------------------

Dense::Dense(int in_dim, int out_dim, bool bias) : has_bias_(bias) {
  w = Mat::Zero(out_dim, in_dim);
  gw = Mat::Zero(out_dim, in_dim);
  if (has_bias_) {
    b = Mat::Zero(out_dim, 1);
    gb = Mat::Zero(out_dim, 1);
  }
}

void Dense::Init(Rng& rng, float scale) {
  HeNormal(&w, static_cast<int>(w.cols()), rng, scale);
}

Vec Dense::Forward(const Vec& x, Cache* cache) const {
  if (x.size() != w.cols()) throw Error(ErrorKind::kShape, "Dense: dim mismatch");
  Vec y = w * x;
  if (has_bias_) y += b.col(0);
  if (cache) cache->x = x;
  return y;
}

Vec Dense::Backward(const Cache& cache, const Vec& gy) {
  gw.noalias() += gy * cache.x.transpose();
  if (has_bias_) gb.col(0) += gy;
  return w.transpose() * gy;
}

Vec Dense::BackwardData(const Vec& gy) const { return w.transpose() * gy; }

void Dense::CollectParams(const std::string& prefix, std::vector<ParamRef>* out) {
  out->push_back({prefix + ".w", &w, &gw});
  if (has_bias_) out->push_back({prefix + ".b", &b, &gb});
}

// ---------------------------- activations ----------------------------

Mat Relu(const Mat& x) { return x.cwiseMax(0.0f); }

Mat ReluBackward(const Mat& y, const Mat& gy) {
  return (y.array() > 0.0f).cast<float>() * gy.array();
}

Mat LeakyRelu(const Mat& x, float slope) {
  return x.unaryExpr([slope](float v) { return v > 0.0f ? v : slope * v; });
}

Mat LeakyReluBackward(const Mat& x, const Mat& gy, float slope) {
  Mat gx(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      gx(i, j) = (x(i, j) > 0.0f ? 1.0f : slope) * gy(i, j);
  return gx;
}

Mat Tanh(const Mat& x) {
  return x.unaryExpr([](float v) { return std::tanh(v); });
}

Mat TanhBackward(const Mat& y, const Mat& gy) {
  return (1.0f - y.array().square()) * gy.array();
}

// ---------------------------- pooling ----------------------------

Vec MeanPoolTime(const Mat& x) { return x.rowwise().mean(); }

Mat MeanPoolTimeBackward(const Vec& gy, int t) {
  Mat gx(gy.size(), t);
  gx.colwise() = Eigen::VectorXf(gy / static_cast<float>(t));
  return gx;
}

// ---------------------------- losses ----------------------------

float SoftmaxCrossEntropy(const Vec& logits, int label, Vec* glogits) {
  const float mx = logits.maxCoeff();
  Vec e = (logits.array() - mx).exp();
  const float z = e.sum();
  Vec p = e / z;
  if (glogits) {
    *glogits = p;
    (*glogits)(label) -= 1.0f;
  }
  return -std::log(std::max(p(label), 1e-30f));
}

// ---------------------------- Adam ----------------------------

Adam::Adam(std::vector<ParamRef> params, float lr, float beta1, float beta2,
           float eps)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2),
      eps_(eps) {
  for (const auto& p : params_) {
    m_.push_back(Mat::Zero(p.value->rows(), p.value->cols()));
    v_.push_back(Mat::Zero(p.value->rows(), p.value->cols()));
  }
}

void Adam::ZeroGrad() {
  for (auto& p : params_) p.grad->setZero();
}

void Adam::Step() {
  ++t_;
  const float bc1 = 1.0f - std::pow(beta1_, static_cast<float>(t_));
  const float bc2 = 1.0f - std::pow(beta2_, static_cast<float>(t_));
  for (size_t i = 0; i < params_.size(); ++i) {
    const Mat& g = *params_[i].grad;
    m_[i] = beta1_ * m_[i] + (1.0f - beta1_) * g;
    v_[i] = beta2_ * v_[i].array() + (1.0f - beta2_) * g.array().square();
    params_[i].value->array() -=
        lr_ * (m_[i].array() / bc1) /
        ((v_[i].array() / bc2).sqrt() + eps_);
  }
}

}  // namespace nn
}  // namespace asvlab
