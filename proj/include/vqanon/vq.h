// vqanon/vq.h

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

#ifndef VQANON_VQ_H_
#define VQANON_VQ_H_

// Content encoder and vector-quantization bottleneck.

#include <string>
#include <vector>

#include "vqanon/base.h"
#include "vqanon/nn.h"
#include "vqanon/rng.h"

namespace vqanon {

struct EncoderOptions {
  int input_dim = 13;
  int conv_channels = 64;
  int kernel = 3;
  int stride = 2;
  int hidden = 64;
  int n_linear = 5;  // the last block maps to latent_dim without a ReLU
  int latent_dim = 16;

  void Validate() const;
};

/// One strided 1-d convolution (ReLU) followed by a stack of linear blocks.
/// Frames in, latent vectors z_e out; T_out = conv.OutputLength(T_in).
class Encoder {
 public:
  Encoder() = default;
  explicit Encoder(const EncoderOptions &opts);
  void Init(Rng *rng);
  const EncoderOptions &options() const { return opts_; }
  int OutputLength(int t) const { return conv_.OutputLength(t); }

  struct Cache {
    Conv1d::Cache conv;
    std::vector<Matrix> activations;  // input to each linear block
  };
  /// `features` is [T x input_dim]; returns z_e [T_out x latent_dim].
  /// Throws ShapeError on a width mismatch.
  Matrix Forward(const Matrix &features, Cache *cache) const;
  /// Accumulates parameter gradients from d loss / d z_e.
  void Backward(const Cache &cache, const Matrix &dz);
  ParamSet Params();

  Conv1d &conv() { return conv_; }
  std::vector<Linear> &blocks() { return blocks_; }

 private:
  EncoderOptions opts_;
  Conv1d conv_;
  std::vector<Linear> blocks_;
};

/// The embedding table e [K x D].
class Codebook {
 public:
  Codebook() = default;
  Codebook(int k, int d);
  /// Entries drawn from U(-1/K, 1/K); redraws until all rows are distinct.
  void Init(Rng *rng);
  int K() const { return static_cast<int>(embeddings.value.rows()); }
  int D() const { return static_cast<int>(embeddings.value.cols()); }
  bool RowsDistinct() const;

  Param embeddings;
};

struct QuantizedSequence {
  std::vector<int> indices;  // [T], each in [0, K)
  Matrix one_hot;            // [T x K]
  Matrix codewords;          // [T x D], rows copied from the codebook
  std::vector<double> distances;  // squared distance to the chosen codeword

  int NumFrames() const { return static_cast<int>(indices.size()); }
};

/// Nearest codeword per row by squared Euclidean distance accumulated in
/// double precision; ties resolve to the lowest index.
QuantizedSequence Quantize(const Matrix &z_e, const Codebook &codebook);

struct VqLosses {
  double codebook = 0.0;
  double commitment = 0.0;
};

/// codebook = mean_t ||sg(z_e) - z_q||^2 and commitment =
/// mean_t ||z_e - sg(z_q)||^2, with the squared norm summed over D.
/// When the gradient outputs are non-null they receive d codebook / d z_q
/// and d commitment / d z_e.
VqLosses ComputeVqLosses(const Matrix &z_e, const Matrix &z_q, Matrix *dz_q = nullptr,
                         Matrix *dz_e = nullptr);

/// Straight-through estimator.  The forward value is z_q; the backward
/// pass hands the decoder-input gradient to z_e unchanged.
Matrix StraightThroughForward(const Matrix &z_e, const Matrix &z_q);
Matrix StraightThroughBackward(const Matrix &d_decoder_input);

/// Scatters d loss / d z_q onto the rows of the codebook gradient.
void AccumulateCodebookGrad(const QuantizedSequence &q, const Matrix &dz_q,
                            Codebook *codebook);

}  // namespace vqanon

#endif  // VQANON_VQ_H_
