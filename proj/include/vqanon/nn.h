// vqanon/nn.h

// Copyright 2026  The vqanon Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef VQANON_NN_H_
#define VQANON_NN_H_

// Small neural-network toolkit with hand-written backward passes.
//
// Sequences are stored time-major in row-major matrices.  A batch of B
// equal-length sequences of length T is a [T*B x C] matrix whose row t*B+b
// is frame t of sequence b.  Variable-length batches (the attackers) are
// stacked end to end with a separate list of lengths (SeqBatch).

#include <string>
#include <vector>

#include "vqanon/base.h"
#include "vqanon/rng.h"

namespace vqanon {

struct Param {
  std::string name;
  Matrix value;
  Matrix grad;
  Matrix adam_m, adam_v;
  bool trainable = true;

  Param() = default;
  Param(std::string n, int rows, int cols, bool train = true)
      : name(std::move(n)), value(Matrix::Zero(rows, cols)),
        grad(Matrix::Zero(rows, cols)), trainable(train) {}
  void ZeroGrad() { grad.setZero(); }
};

/// Non-owning, ordered list of parameters.  Order defines checkpoint layout.
class ParamSet {
 public:
  void Add(Param *p) { params_.push_back(p); }
  void Add(const ParamSet &other) {
    params_.insert(params_.end(), other.params_.begin(), other.params_.end());
  }
  const std::vector<Param *> &params() const { return params_; }
  void ZeroGrad();
  /// Rescales all gradients so that their joint L2 norm is at most `max_norm`.
  /// Returns the norm before clipping.
  double ClipGradNorm(double max_norm);
  size_t NumValues() const;

 private:
  std::vector<Param *> params_;
};

void InitUniform(Param *p, double bound, Rng *rng);

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam(ParamSet params, const AdamOptions &opts);
  void Step();
  void set_learning_rate(double lr) { opts_.learning_rate = lr; }
  long steps() const { return t_; }

 private:
  ParamSet params_;
  AdamOptions opts_;
  long t_ = 0;
};

/// y = x W^T + b.
class Linear {
 public:
  Linear() = default;
  Linear(const std::string &name, int in, int out, bool bias = true);
  void Init(Rng *rng);  // U(-1/sqrt(in), 1/sqrt(in))
  void Forward(const Matrix &x, Matrix *y) const;
  /// Accumulates parameter gradients.  `dx` may be null.
  void Backward(const Matrix &x, const Matrix &dy, Matrix *dx);
  ParamSet Params();
  int InputDim() const { return static_cast<int>(weight.value.cols()); }
  int OutputDim() const { return static_cast<int>(weight.value.rows()); }

  Param weight, bias;
  bool has_bias = true;
};

/// Variable-length sequences stacked along rows.
struct SeqBatch {
  Matrix data;
  std::vector<int> lengths;
  int NumSeqs() const { return static_cast<int>(lengths.size()); }
  std::vector<int> Offsets() const;
};

class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(const std::string &name, int in, int out, int kernel, int stride = 1,
         int padding = 0, int dilation = 1);
  void Init(Rng *rng);
  int OutputLength(int t) const;

  struct Cache {
    Matrix columns;  // im2col, [sum T_out x kernel*in]
    std::vector<int> in_lengths;
  };
  void Forward(const SeqBatch &x, SeqBatch *y, Cache *cache) const;
  void Backward(const Cache &cache, const Matrix &dy, Matrix *dx);
  ParamSet Params();

  Param weight, bias;  // [out x kernel*in], column index = k*in + c
  int in_channels = 0, out_channels = 0, kernel = 1, stride = 1, padding = 0,
      dilation = 1;
};

/// Batch normalization over all rows of a stacked batch.
class BatchNorm {
 public:
  BatchNorm() = default;
  BatchNorm(const std::string &name, int channels);

  struct Cache {
    Matrix normalized;
    RowVector inv_std;
  };
  /// Training mode uses batch statistics and updates the running averages.
  void Forward(const Matrix &x, bool training, Matrix *y, Cache *cache);
  void Backward(const Cache &cache, const Matrix &dy, Matrix *dx);
  ParamSet Params();

  Param gamma, beta, running_mean, running_var;
  double momentum = 0.1, epsilon = 1e-5;
};

/// Max pooling, kernel 2, stride 2, ceil mode (a trailing odd frame is
/// pooled alone).
class MaxPool2 {
 public:
  struct Cache {
    std::vector<int> argmax;  // per output element, source row
    int in_rows = 0, cols = 0;
  };
  static int OutputLength(int t) { return (t + 1) / 2; }
  void Forward(const SeqBatch &x, SeqBatch *y, Cache *cache) const;
  void Backward(const Cache &cache, const Matrix &dy, Matrix *dx) const;
};

void Relu(Matrix *x);
/// dx = dy where the (post-activation) output y was positive.
void ReluBackward(const Matrix &y, Matrix *dy);

/// Recurrent half of a GRU layer (PyTorch gate convention, order r, z, n):
///   r = s(gi_r + gh_r), z = s(gi_z + gh_z), n = tanh(gi_n + r * gh_n),
///   h' = (1 - z) * n + z * h,   gh = h W_hh^T + b_hh.
/// The input contribution gi (including the input bias) is supplied by the
/// caller so that it can be computed in bulk or assembled from lookups.
class GruCell {
 public:
  GruCell() = default;
  GruCell(const std::string &name, int hidden);
  void Init(Rng *rng);
  int hidden() const { return hidden_; }

  struct Cache {
    Matrix h;                 // outputs [T*B x H]
    Matrix r, z, n, gh_n;     // [T*B x H]
    int batch = 0;
    bool reverse = false;
  };
  /// `gi` is [T*B x 3H] time-major.  Initial state is zero.  When `reverse`
  /// the recurrence runs from t = T-1 down to 0 (outputs stay in time order).
  void Forward(const Matrix &gi, int batch, bool reverse, Cache *cache) const;
  /// `dh` is the gradient of the loss w.r.t. cache.h; writes d loss / d gi.
  void Backward(const Cache &cache, const Matrix &dh, Matrix *dgi);
  /// One step for a batch: gi [B x 3H], h [B x H] updated in place.
  void Step(const Matrix &gi, Matrix *h) const;
  ParamSet Params();

  Param w_hh, b_hh;

 private:
  int hidden_ = 0;
};

/// Input projection plus recurrence.
class GruLayer {
 public:
  GruLayer() = default;
  GruLayer(const std::string &name, int in, int hidden);
  void Init(Rng *rng);

  struct Cache {
    GruCell::Cache cell;
  };
  void Forward(const Matrix &x, int batch, bool reverse, Cache *cache) const;
  void Backward(const Matrix &x, const Cache &cache, const Matrix &dh, Matrix *dx);
  ParamSet Params();

  Linear input;
  GruCell cell;
};

/// Bi-directional GRU; output is [forward | backward], width 2H.
class BiGru {
 public:
  BiGru() = default;
  BiGru(const std::string &name, int in, int hidden);
  void Init(Rng *rng);
  int InputDim() const { return fwd.input.InputDim(); }
  int OutputDim() const { return 2 * fwd.cell.hidden(); }

  struct Cache {
    GruLayer::Cache f, b;
  };
  void Forward(const Matrix &x, int batch, Matrix *y, Cache *cache) const;
  void Backward(const Matrix &x, const Cache &cache, const Matrix &dy, Matrix *dx);
  ParamSet Params();

  GruLayer fwd, bwd;
};

/// Mean softmax cross entropy over rows; writes d loss / d logits.
double SoftmaxCrossEntropy(const Matrix &logits, const std::vector<int> &targets,
                           Matrix *dlogits);
/// Mean binary cross entropy of sigmoid(logit) against 0/1 targets.
double SigmoidBinaryCrossEntropy(const Vector &logits, const std::vector<int> &targets,
                                 Vector *dlogits);

inline double Sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
void LogSoftmaxRows(const Matrix &logits, Matrix *out);

}  // namespace vqanon

#endif  // VQANON_NN_H_
