// vqanon/model.h

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

#ifndef VQANON_MODEL_H_
#define VQANON_MODEL_H_

// The full anonymization model: encoder, codebook, conditioner, vocoder,
// plus the feature front end that feeds the encoder.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vqanon/conditioner.h"
#include "vqanon/corpus.h"
#include "vqanon/features.h"
#include "vqanon/vocoder.h"
#include "vqanon/vq.h"

namespace vqanon {

struct ModelConfig {
  int sample_rate = 8000;
  int n_mels = 40;
  int n_ceps = 13;  // 0 keeps the log-mel frames
  int codebook_size = 64;  // K
  EncoderOptions encoder;
  ConditionerOptions conditioner;
  VocoderOptions vocoder;

  FeatureOptions EncoderFeatureOptions() const {
    return FeatureOptions::ForRate(sample_rate, n_mels);
  }
  /// Samples per code frame: feature hop times encoder stride.
  int SamplesPerFrame() const;
  /// Copies shared widths between components (D, 2H, input dim, upsampling)
  /// and validates every field.
  void Finalize();
  void Validate() const;
};

class AnonModel {
 public:
  AnonModel() = default;
  AnonModel(const ModelConfig &config, std::vector<std::string> speaker_ids);
  void Init(Rng *rng);
  const ModelConfig &config() const { return config_; }

  /// Zero-pads the waveform on the right to a whole number of code frames.
  std::vector<BaseFloat> PadToFrames(std::span<const BaseFloat> waveform) const;
  /// Encoder input frames for a padded waveform: cepstra (or log-mel) with
  /// per-utterance mean removal.  The analysis is padded so that every hop
  /// yields one frame.
  Matrix EncoderInput(std::span<const BaseFloat> padded) const;
  Matrix Encode(std::span<const BaseFloat> padded) const;
  QuantizedSequence EncodeAndQuantize(std::span<const BaseFloat> padded) const;

  ConditionedSequence Condition(const QuantizedSequence &q, Gender gender,
                                const std::optional<std::string> &speaker) const {
    return conditioner.Condition(q.codewords, gender, speaker);
  }

  ParamSet Params();

  Encoder encoder;
  Codebook codebook;
  Conditioner conditioner;
  Vocoder vocoder;

 private:
  ModelConfig config_;
};

struct TrainOptions {
  int steps = 1500;
  int batch_size = 16;
  int crop_frames = 8;
  double learning_rate = 1e-3;
  /// Fraction of the schedule after which the learning rate decays
  /// linearly to 10% of its initial value.
  double decay_start = 0.7;
  double identity_prob = 0.5;  // per batch item, else gender-only mode
  double commitment_beta = 0.25;
  double grad_clip = 5.0;
  int reseed_interval = 100;  // steps between dead-code checks
  int log_interval = 50;
  uint64_t seed = 0;

  void Validate() const;
};

struct TrainExample {
  Matrix encoder_input;
  std::vector<int> levels;
  Gender gender = Gender::kFemale;
  std::string speaker;
};

struct TrainStats {
  int step = 0;
  double nll = 0.0, lp_mse = 0.0, codebook = 0.0, commitment = 0.0;
  int codes_used = 0;
  double Total(double lp_weight, double beta) const {
    return nll + lp_weight * lp_mse + codebook + beta * commitment;
  }
};

TrainExample MakeTrainExample(const AnonModel &model, const Utterance &utt);

/// Single-controller joint trainer for all model parameters.
class Trainer {
 public:
  Trainer(AnonModel *model, const TrainOptions &opts, std::vector<TrainExample> examples);
  /// One optimizer step on a freshly sampled batch.
  TrainStats Step();
  /// Loss of the current parameters on a fixed batch (no update).
  TrainStats EvaluateBatch(const std::vector<int> &example_ids,
                           const std::vector<int> &start_frames,
                           const std::vector<bool> &identity);
  /// Gradient step on a fixed batch.
  TrainStats StepOnBatch(const std::vector<int> &example_ids,
                         const std::vector<int> &start_frames,
                         const std::vector<bool> &identity);
  int steps_done() const { return step_; }
  const std::vector<TrainExample> &examples() const { return examples_; }

 private:
  TrainStats Run(const std::vector<int> &ids, const std::vector<int> &starts,
                 const std::vector<bool> &identity, bool update);
  void ReseedDeadCodes(const std::vector<Matrix> &latents);

  AnonModel *model_;
  TrainOptions opts_;
  std::vector<TrainExample> examples_;
  Rng rng_;
  ParamSet params_;
  Adam adam_;
  int step_ = 0;
  std::vector<int> usage_;
};

}  // namespace vqanon

#endif  // VQANON_MODEL_H_
