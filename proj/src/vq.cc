// vq.cc

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

#include "vqanon/vq.h"

#include <limits>
#include <set>

namespace vqanon {

void EncoderOptions::Validate() const {
  if (input_dim <= 0) throw ValidationError("encoder.input_dim", "must be positive");
  if (conv_channels <= 0) throw ValidationError("encoder.conv_channels", "must be positive");
  if (kernel <= 0) throw ValidationError("encoder.kernel", "must be positive");
  if (stride <= 0) throw ValidationError("encoder.stride", "must be positive");
  if (hidden <= 0) throw ValidationError("encoder.hidden", "must be positive");
  if (n_linear < 1) throw ValidationError("encoder.n_linear", "must be at least 1");
  if (latent_dim <= 0) throw ValidationError("D", "must be positive");
}

Encoder::Encoder(const EncoderOptions &opts)
    : opts_(opts),
      conv_("encoder.conv", opts.input_dim, opts.conv_channels, opts.kernel, opts.stride,
            opts.kernel / 2) {
  opts.Validate();
  int in = opts.conv_channels;
  for (int i = 0; i < opts.n_linear; ++i) {
    int out = i + 1 == opts.n_linear ? opts.latent_dim : opts.hidden;
    blocks_.emplace_back("encoder.linear" + std::to_string(i), in, out);
    in = out;
  }
}

void Encoder::Init(Rng *rng) {
  conv_.Init(rng);
  for (Linear &l : blocks_) l.Init(rng);
}

Matrix Encoder::Forward(const Matrix &features, Cache *cache) const {
  if (features.cols() != opts_.input_dim)
    throw ShapeError("encoder: feature width " + std::to_string(features.cols()) +
                     " != " + std::to_string(opts_.input_dim));
  SeqBatch x, y;
  x.data = features;
  x.lengths = {static_cast<int>(features.rows())};
  conv_.Forward(x, &y, cache ? &cache->conv : nullptr);
  Matrix h = std::move(y.data);
  Relu(&h);
  if (cache) cache->activations.clear();
  for (size_t i = 0; i < blocks_.size(); ++i) {
    if (cache) cache->activations.push_back(h);
    Matrix out;
    blocks_[i].Forward(h, &out);
    if (i + 1 < blocks_.size()) Relu(&out);
    h = std::move(out);
  }
  return h;
}

void Encoder::Backward(const Cache &cache, const Matrix &dz) {
  Matrix d = dz;
  for (size_t i = blocks_.size(); i-- > 0;) {
    // Activations of block i+1's input are the ReLU outputs of block i.
    if (i + 1 < blocks_.size()) ReluBackward(cache.activations[i + 1], &d);
    Matrix dx;
    blocks_[i].Backward(cache.activations[i], d, &dx);
    d = std::move(dx);
  }
  ReluBackward(cache.activations[0], &d);
  conv_.Backward(cache.conv, d, nullptr);
}

ParamSet Encoder::Params() {
  ParamSet s = conv_.Params();
  for (Linear &l : blocks_) s.Add(l.Params());
  return s;
}

Codebook::Codebook(int k, int d) : embeddings("codebook", k, d) {
  if (k <= 0) throw ValidationError("K", "must be positive");
  if (d <= 0) throw ValidationError("D", "must be positive");
}

void Codebook::Init(Rng *rng) {
  const double bound = 1.0 / K();
  do {
    InitUniform(&embeddings, bound, rng);
  } while (!RowsDistinct());
}

bool Codebook::RowsDistinct() const {
  std::set<std::vector<BaseFloat>> rows;
  for (int k = 0; k < K(); ++k) {
    const BaseFloat *p = embeddings.value.row(k).data();
    if (!rows.emplace(p, p + D()).second) return false;
  }
  return true;
}

QuantizedSequence Quantize(const Matrix &z_e, const Codebook &codebook) {
  const int K = codebook.K(), D = codebook.D();
  if (z_e.cols() != D)
    throw ShapeError("quantize: latent width " + std::to_string(z_e.cols()) +
                     " != codebook width " + std::to_string(D));
  const Matrix &e = codebook.embeddings.value;
  QuantizedSequence q;
  const int T = static_cast<int>(z_e.rows());
  q.indices.resize(T);
  q.distances.resize(T);
  q.one_hot = Matrix::Zero(T, K);
  q.codewords.resize(T, D);
  for (int t = 0; t < T; ++t) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int k = 0; k < K; ++k) {
      double d = 0.0;
      for (int c = 0; c < D; ++c) {
        double diff = static_cast<double>(z_e(t, c)) - e(k, c);
        d += diff * diff;
      }
      if (d < best_d) best_d = d, best = k;
    }
    q.indices[t] = best;
    q.distances[t] = best_d;
    q.one_hot(t, best) = 1.0f;
    q.codewords.row(t) = e.row(best);
  }
  return q;
}

VqLosses ComputeVqLosses(const Matrix &z_e, const Matrix &z_q, Matrix *dz_q, Matrix *dz_e) {
  if (z_e.rows() != z_q.rows() || z_e.cols() != z_q.cols())
    throw ShapeError("vq losses: z_e and z_q shapes differ");
  VqLosses out;
  const int T = static_cast<int>(z_e.rows());
  if (T == 0) {
    if (dz_q) dz_q->setZero(0, z_q.cols());
    if (dz_e) dz_e->setZero(0, z_e.cols());
    return out;
  }
  double sq = (z_e.cast<double>() - z_q.cast<double>()).squaredNorm() / T;
  out.codebook = sq;
  out.commitment = sq;
  const float scale = 2.0f / static_cast<float>(T);
  if (dz_q) *dz_q = scale * (z_q - z_e);
  if (dz_e) *dz_e = scale * (z_e - z_q);
  return out;
}

Matrix StraightThroughForward(const Matrix &z_e, const Matrix &z_q) {
  if (z_e.rows() != z_q.rows() || z_e.cols() != z_q.cols())
    throw ShapeError("straight-through: z_e and z_q shapes differ");
  return z_q;
}

Matrix StraightThroughBackward(const Matrix &d_decoder_input) { return d_decoder_input; }

void AccumulateCodebookGrad(const QuantizedSequence &q, const Matrix &dz_q,
                            Codebook *codebook) {
  for (int t = 0; t < q.NumFrames(); ++t)
    codebook->embeddings.grad.row(q.indices[t]) += dz_q.row(t);
}

}  // namespace vqanon
