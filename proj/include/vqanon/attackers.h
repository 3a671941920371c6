// vqanon/attackers.h

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

#ifndef VQANON_ATTACKERS_H_
#define VQANON_ATTACKERS_H_

// Inference attackers trained on clean audio: a gender classifier, a
// speaker embedder for verification and a CTC content recognizer.

#include <map>
#include <span>
#include <string>
#include <vector>

#include "vqanon/base.h"
#include "vqanon/corpus.h"
#include "vqanon/features.h"
#include "vqanon/nn.h"
#include "vqanon/rng.h"

namespace vqanon {

/// Log-mel front end shared by the attackers (no mean normalization; each
/// model standardizes with statistics fitted on its training data).
struct AttackerFrontEnd {
  int sample_rate = 8000;
  int n_mels = 40;
  /// Throws LengthError if the waveform is shorter than one analysis frame.
  Matrix Features(std::span<const BaseFloat> waveform) const;
};

/// Per-dimension standardization stored as non-trainable parameters.
class FeatureNormalizer {
 public:
  FeatureNormalizer() = default;
  FeatureNormalizer(const std::string &name, int dim);
  void Fit(const std::vector<Matrix> &feats);
  Matrix Apply(const Matrix &feats) const;
  ParamSet Params();

  Param mean, inv_std;
};

/// conv -> batch norm -> max pool (2, ceil) -> ReLU.
struct ConvBnBlock {
  Conv1d conv;
  BatchNorm bn;
  MaxPool2 pool;
  struct Cache {
    Conv1d::Cache conv;
    BatchNorm::Cache bn;
    MaxPool2::Cache pool;
    Matrix out;  // post-ReLU
  };
};

class GenderClassifier {
 public:
  struct Options {
    int channels = 32;
    int n_blocks = 5;
    int steps = 600;
    int batch_size = 16;
    double learning_rate = 2e-3;
  };
  GenderClassifier() = default;
  GenderClassifier(const Options &opts, const AttackerFrontEnd &fe);
  void Init(Rng *rng);
  const AttackerFrontEnd &front_end() const { return fe_; }

  /// Fits the normalizer and trains with binary cross entropy (label 1 = M).
  /// Throws DataError if only one gender is present.
  void Train(const std::vector<Matrix> &feats, const std::vector<Gender> &labels,
             uint64_t seed);
  /// Logits for a batch of raw (unnormalized) feature matrices.
  Vector Logits(const std::vector<const Matrix *> &feats, bool training,
                std::vector<ConvBnBlock::Cache> *caches = nullptr,
                SeqBatch *pooled_in = nullptr);
  /// P(gender = M) in inference mode.
  double Probability(const Matrix &feats) const;
  double ProbabilityOfWaveform(std::span<const BaseFloat> waveform) const {
    return Probability(fe_.Features(waveform));
  }
  static Gender Decide(double p) { return p >= 0.5 ? Gender::kMale : Gender::kFemale; }
  ParamSet Params();

  FeatureNormalizer norm;
  std::vector<ConvBnBlock> blocks;
  Linear out;

 private:
  Options opts_;
  AttackerFrontEnd fe_;
};

class SpeakerEmbedder {
 public:
  struct Options {
    int channels = 64;
    int embedding_dim = 128;
    int steps = 600;
    int speakers_per_batch = 8;    // N
    int utterances_per_speaker = 2;  // M
    double learning_rate = 2e-3;
    double init_scale = 10.0;   // w
    double init_bias = -5.0;    // b
  };
  SpeakerEmbedder() = default;
  SpeakerEmbedder(const Options &opts, const AttackerFrontEnd &fe);
  void Init(Rng *rng);
  const AttackerFrontEnd &front_end() const { return fe_; }

  /// Angular prototypical training.  `speakers[i]` labels feats[i].
  void Train(const std::vector<Matrix> &feats, const std::vector<std::string> &speakers,
             uint64_t seed);
  /// Unit-norm embedding of one utterance.
  RowVector Embed(const Matrix &feats) const;
  RowVector EmbedWaveform(std::span<const BaseFloat> waveform) const {
    return Embed(fe_.Features(waveform));
  }
  ParamSet Params();

  FeatureNormalizer norm;
  std::vector<Conv1d> convs;
  Linear proj;
  Param scale, bias;  // [1 x 1] each

 private:
  struct Cache {
    std::vector<Conv1d::Cache> conv;
    std::vector<Matrix> acts;  // post-ReLU outputs
    std::vector<int> lengths;
    Matrix pooled, mean, stddev;
    Matrix raw;  // before normalization
  };
  Matrix Forward(const std::vector<const Matrix *> &feats, Cache *cache) const;
  void Backward(const Cache &cache, const Matrix &dunit);

  Options opts_;
  AttackerFrontEnd fe_;
};

/// Mean over a batch of angular prototypical losses: for queries q_i and
/// prototypes p_j (unit rows), logits w cos(q_i, p_j) + b and softmax cross
/// entropy with target j = i.  Writes gradients w.r.t. q, p, w and b.
double AngularPrototypicalLoss(const Matrix &q, const Matrix &p, double w, double b,
                               Matrix *dq, Matrix *dp, double *dw, double *db);

class ContentRecognizer {
 public:
  struct Options {
    int channels = 64;
    int vocab_size = 8;
    int steps = 600;
    int batch_size = 16;
    double learning_rate = 2e-3;
  };
  ContentRecognizer() = default;
  ContentRecognizer(const Options &opts, const AttackerFrontEnd &fe);
  void Init(Rng *rng);
  int Blank() const { return opts_.vocab_size; }
  const AttackerFrontEnd &front_end() const { return fe_; }

  void Train(const std::vector<Matrix> &feats, const std::vector<std::vector<int>> &tokens,
             uint64_t seed);
  /// Per-frame logits [T x (vocab + 1)].
  Matrix FrameLogits(const Matrix &feats) const;
  std::vector<int> Transcribe(const Matrix &feats) const;
  std::vector<int> TranscribeWaveform(std::span<const BaseFloat> waveform) const {
    return Transcribe(fe_.Features(waveform));
  }
  ParamSet Params();

  FeatureNormalizer norm;
  std::vector<Conv1d> convs;
  Linear out;

 private:
  Options opts_;
  AttackerFrontEnd fe_;
};

/// Negative log-likelihood of `target` under CTC with the given blank
/// index; writes d loss / d logits.  Returns +inf if no alignment exists.
double CtcLoss(const Matrix &logits, const std::vector<int> &target, int blank, Matrix *grad);

/// Frame-wise argmax, repeats collapsed, blanks removed.
std::vector<int> CtcGreedyDecode(const Matrix &logits, int blank);

struct Trial {
  std::string enroll_id, test_id;
  bool genuine = false;
};

/// All same-speaker pairs (i < j in the given order) plus an equal number
/// of distinct different-speaker pairs drawn with `rng`.
std::vector<Trial> MakeTrialList(const std::vector<UtteranceInfo> &infos, Rng *rng);
void WriteTrials(const std::string &path, const std::vector<Trial> &trials);
std::vector<Trial> ReadTrials(const std::string &path);

struct VerificationScores {
  std::vector<double> genuine, impostor;
};
/// Cosine scores of enrollment against test embeddings.  Throws IoError
/// for an id missing from either map.
VerificationScores ScoreTrials(const std::vector<Trial> &trials,
                               const std::map<std::string, RowVector> &enroll,
                               const std::map<std::string, RowVector> &test);

}  // namespace vqanon

#endif  // VQANON_ATTACKERS_H_
