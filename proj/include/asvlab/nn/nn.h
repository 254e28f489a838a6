// Copyright 2026 ASVLab Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

// Minimal float32 neural-network layers with explicit backprop.
// Layers keep no forward state: Forward is const and writes activations
// needed by Backward into an external Cache, so a frozen model can score
// many inputs concurrently. Backward accumulates parameter gradients;
// BackwardData propagates input gradients only and is const.

#ifndef ASVLAB_NN_NN_H_
#define ASVLAB_NN_NN_H_

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "asvlab/core/rng.h"

namespace asvlab {
namespace nn {

using Mat = Eigen::MatrixXf;
using Vec = Eigen::VectorXf;

struct ParamRef {
  std::string name;
  Mat* value;
  Mat* grad;
};

// 1-D convolution over (channels x time) matrices, im2col based.
class Conv1d {
 public:
  Conv1d() : Conv1d(1, 1, 1) {}
  Conv1d(int in_ch, int out_ch, int kernel, int stride = 1, int pad = 0,
         bool bias = true);

  struct Cache {
    Mat cols;
    int t_in = 0;
  };

  void Init(Rng& rng, float scale = 1.0f);
  int OutLen(int t_in) const;
  Mat Forward(const Mat& x, Cache* cache = nullptr) const;
  Mat Backward(const Cache& cache, const Mat& gy);   // accumulates gw/gb
  Mat BackwardData(const Mat& gy, int t_in) const;   // input grad only
  void CollectParams(const std::string& prefix, std::vector<ParamRef>* out);

  int in_ch() const { return in_ch_; }
  int out_ch() const { return out_ch_; }
  int kernel() const { return k_; }
  int stride() const { return stride_; }

  Mat w;   // out_ch x (in_ch * kernel)
  Mat b;   // out_ch x 1 (when bias)
  Mat gw;
  Mat gb;

 private:
  Mat Im2Col(const Mat& x) const;
  void Col2ImAdd(const Mat& cols, int t_in, Mat* x) const;

  int in_ch_;
  int out_ch_;
  int k_;
  int stride_;
  int pad_;
  bool has_bias_;
};

// Transposed 1-D convolution (upsampling). With kernel = 2*stride and
// pad = stride/2 the output length is exactly stride * input length.
class ConvTranspose1d {
 public:
  ConvTranspose1d(int in_ch, int out_ch, int kernel, int stride, int pad = 0,
                  bool bias = true);

  struct Cache {
    Mat x;
  };

  void Init(Rng& rng, float scale = 1.0f);
  int OutLen(int t_in) const;
  Mat Forward(const Mat& x, Cache* cache = nullptr) const;
  Mat Backward(const Cache& cache, const Mat& gy);
  Mat BackwardData(const Mat& gy, int t_in) const;
  void CollectParams(const std::string& prefix, std::vector<ParamRef>* out);

  Mat w;   // in_ch x (out_ch * kernel)
  Mat b;   // out_ch x 1 (when bias)
  Mat gw;
  Mat gb;

 private:
  Mat GyCols(const Mat& gy, int t_in) const;

  int in_ch_;
  int out_ch_;
  int k_;
  int stride_;
  int pad_;
  bool has_bias_;
};

class Dense {
 public:
  Dense() : Dense(1, 1) {}
  Dense(int in_dim, int out_dim, bool bias = true);

  struct Cache {
    Vec x;
  };

  void Init(Rng& rng, float scale = 1.0f);
  Vec Forward(const Vec& x, Cache* cache = nullptr) const;
  Vec Backward(const Cache& cache, const Vec& gy);
  Vec BackwardData(const Vec& gy) const;
  void CollectParams(const std::string& prefix, std::vector<ParamRef>* out);

  Mat w;   // out x in
  Mat b;   // out x 1 (when bias)
  Mat gw;
  Mat gb;

 private:
  bool has_bias_;
};

// Activations. Backward signatures take whichever of (x, y) makes the
// derivative cheapest to evaluate.
Mat Relu(const Mat& x);
Mat ReluBackward(const Mat& y, const Mat& gy);
Mat LeakyRelu(const Mat& x, float slope);
Mat LeakyReluBackward(const Mat& x, const Mat& gy, float slope);
Mat Tanh(const Mat& x);
Mat TanhBackward(const Mat& y, const Mat& gy);

Vec MeanPoolTime(const Mat& x);
Mat MeanPoolTimeBackward(const Vec& gy, int t);

// Returns the loss; fills glogits (= softmax(p) - onehot) when non-null.
float SoftmaxCrossEntropy(const Vec& logits, int label, Vec* glogits);

class Adam {
 public:
  explicit Adam(std::vector<ParamRef> params, float lr = 1e-3f,
                float beta1 = 0.9f, float beta2 = 0.999f, float eps = 1e-8f);

  void ZeroGrad();
  void Step();
  void set_lr(float lr) { lr_ = lr; }
  float lr() const { return lr_; }

 private:
  std::vector<ParamRef> params_;
  std::vector<Mat> m_;
  std::vector<Mat> v_;
  float lr_;
  float beta1_;
  float beta2_;
  float eps_;
  int t_ = 0;
};

}  // namespace nn
}  // namespace asvlab

#endif  // ASVLAB_NN_NN_H_
