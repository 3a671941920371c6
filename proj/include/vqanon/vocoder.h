// vqanon/vocoder.h

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

#ifndef VQANON_VOCODER_H_
#define VQANON_VOCODER_H_

// Autoregressive sample-level decoder over 256 mu-law classes.
//
// Each conditioning frame is smoothed with its neighbours (learned 3-tap
// per-channel filter) and held for `upsample` samples.  From the smoothed
// frame the model derives (a) an input to the first GRU and (b) a set of
// linear-prediction coefficients a_k.  At sample n the prediction
// p_n = sum_k a_k y_{n-1-k} over previously emitted sample values enters the
// first GRU in companded form together with an embedding of the previous
// level.  A second GRU and two linear layers produce the logits, to which
// a prior -exp(s) (u_j - F(p_n))^2 centred on the prediction is added
// (u_j is the companded centre of class j).  Training minimises the
// categorical NLL plus lp_loss_weight * mean (p_n - y_n)^2.

#include <cstdint>
#include <vector>

#include "vqanon/base.h"
#include "vqanon/conditioner.h"
#include "vqanon/nn.h"
#include "vqanon/rng.h"

namespace vqanon {

struct VocoderOptions {
  int cond_dim = 128;
  int hidden = 64;
  int upsample = 160;   // samples per conditioning frame
  int lp_order = 112;
  double lp_loss_weight = 10.0;
  double init_log_sharpness = 3.0;

  void Validate() const;
};

enum class SamplingMode { kArgmax, kCategorical };

struct DecodeTrainResult {
  Matrix logits;  // [n_samples x 256]
  double nll = 0.0;
};

class Vocoder {
 public:
  Vocoder() = default;
  explicit Vocoder(const VocoderOptions &opts);
  void Init(Rng *rng);
  const VocoderOptions &options() const { return opts_; }

  /// Marks the parameters as usable for generation (after training or
  /// loading a checkpoint).
  void set_trained(bool t) { trained_ = t; }
  bool trained() const { return trained_; }

  /// One training crop: frames [start_frame, start_frame + n_frames) of a
  /// conditioned utterance together with the utterance's full level
  /// sequence (length cond->rows() * upsample).
  struct Crop {
    const Matrix *cond = nullptr;
    const std::vector<int> *levels = nullptr;
    int start_frame = 0;
  };
  struct Loss {
    double nll = 0.0;
    double lp_mse = 0.0;
    double Total(double lp_weight) const { return nll + lp_weight * lp_mse; }
  };
  /// Teacher-forced forward and backward pass over equal-length crops.
  /// Accumulates parameter gradients of nll + lp_loss_weight * lp_mse and
  /// writes d loss / d cond for every crop (full utterance shape).
  Loss ForwardBackward(const std::vector<Crop> &crops, int n_frames,
                       std::vector<Matrix> *dcond);
  /// Teacher-forced losses without gradients.
  Loss Evaluate(const std::vector<Crop> &crops, int n_frames) const;

  /// Teacher-forced logits and mean NLL over a whole utterance.  Throws
  /// ShapeError unless target_levels.size() == frames * upsample.
  DecodeTrainResult DecodeTrain(const ConditionedSequence &cond,
                                const std::vector<int> &target_levels) const;

  /// Emits frames * upsample levels per utterance; all utterances are
  /// advanced together, each with its own generator seeded by seeds[i].
  /// Throws StateError if the model is not trained.
  std::vector<std::vector<int>> GenerateLevels(const std::vector<const Matrix *> &conds,
                                               const std::vector<uint64_t> &seeds,
                                               SamplingMode mode) const;
  std::vector<BaseFloat> Generate(const ConditionedSequence &cond, uint64_t seed,
                                  SamplingMode mode) const;

  ParamSet Params();

  Param smooth;       // [3 x cond_dim], taps for frames t-1, t, t+1
  Linear cond_in;     // cond_dim -> 3H, carries the first GRU's input bias
  Param level_embed;  // [256 x 3H]
  Param lp_gate;      // [1 x 3H]
  Linear lp;          // cond_dim -> lp_order
  GruCell gru1;
  GruLayer gru2;
  Linear fc1, fc2;
  Param log_sharpness;  // [1 x 1]

 private:
  struct Cache;
  Matrix SmoothFrames(const Matrix &cond) const;
  void SmoothBackward(const Matrix &cond, const Matrix &dsmoothed, Matrix *dcond);
  Loss Forward(const std::vector<Crop> &crops, int n_frames, Cache *cache,
               Matrix *logits_out) const;

  VocoderOptions opts_;
  bool trained_ = false;
};

}  // namespace vqanon

#endif  // VQANON_VOCODER_H_
