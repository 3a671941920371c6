// vqanon/evaluation.h

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

#ifndef VQANON_EVALUATION_H_
#define VQANON_EVALUATION_H_

// Attacker-side evaluation of anonymized corpora: the clean-trained
// attacker suite, report rows, chance references and linear probes.

#include <map>
#include <string>
#include <vector>

#include "vqanon/anonymizer.h"
#include "vqanon/attackers.h"
#include "vqanon/metrics.h"

namespace vqanon {

/// Splits a speaker-ordered corpus by position within each speaker: the
/// first `train_per_speaker` utterances of every speaker go to `train`.
struct CorpusSplit {
  std::vector<Utterance> train, eval;
};
CorpusSplit SplitBySpeakerPosition(const std::vector<Utterance> &utts, int train_per_speaker);

struct AttackerOptions {
  AttackerFrontEnd front_end;
  /// Extra copies of every training utterance with white noise added at an
  /// SNR drawn uniformly from [snr_min_db, snr_max_db].  The copies are
  /// still clean (non-anonymized) speech.
  int noise_copies = 2;
  double snr_min_db = 5.0, snr_max_db = 30.0;
  GenderClassifier::Options gender;
  SpeakerEmbedder::Options speaker;
  ContentRecognizer::Options content;
};

struct AttackerSuite {
  GenderClassifier gender;
  SpeakerEmbedder speaker;
  ContentRecognizer content;
};

/// x plus white Gaussian noise at the given signal-to-noise ratio, clipped
/// to [-1, 1].
std::vector<BaseFloat> AddWhiteNoise(std::span<const BaseFloat> x, double snr_db, Rng *rng);

/// Trains all three attackers on clean audio.  Each attacker gets its own
/// seed derived from `seed`.
AttackerSuite TrainAttackers(const std::vector<Utterance> &clean_train,
                             const AttackerOptions &opts, uint64_t seed);

struct EvaluateOptions {
  /// Enroll on anonymized audio instead of clean audio.
  bool enroll_anonymized = false;
};

/// One report row.  WER compares transcriptions of `test` audio with the
/// reference tokens of `clean`; accuracy compares gender decisions on
/// `test` with the source genders; EER scores trials with enrollment on
/// `clean` (or `test`) and test utterances from `test`.  `test` must list
/// the same ids in the same order as `clean`, else DataError naming the
/// offending positions.
ReportRow EvaluateRun(const std::string &setting, const std::vector<Utterance> &clean,
                      const std::vector<Utterance> &test, const AttackerSuite &attackers,
                      const std::vector<Trial> &trials, const EvaluateOptions &opts = {});

/// Expected token error rate of a recognizer that emits uniformly random
/// tokens with the reference length, estimated by Monte Carlo.
double ChanceTokenErrorRate(const std::vector<std::vector<int>> &references, int vocab_size,
                            int draws, uint64_t seed);

/// L2-regularized logistic regression on standardized features, trained by
/// full-batch gradient descent.  Labels are 0/1.
class LinearProbe {
 public:
  struct Options {
    int iterations = 500;
    double learning_rate = 0.5;
    double l2 = 1e-3;
  };
  LinearProbe() = default;
  explicit LinearProbe(const Options &opts) : opts_(opts) {}
  void Fit(const Matrix &x, const std::vector<int> &labels);
  double Probability(const RowVector &x) const;
  /// Accuracy in percent.
  double Accuracy(const Matrix &x, const std::vector<int> &labels) const;

 private:
  Options opts_;
  RowVector mean_, scale_;
  Eigen::RowVectorXd w_;
  double b_ = 0.0;
};

/// Per-utterance mean of the quantized codewords, one row per utterance.
Matrix AveragedCodewords(const AnonModel &model, const std::vector<Utterance> &utts);
/// Per-utterance mean of the gender-only conditioned decoder input, with
/// each utterance conditioned on its own gender.
Matrix AveragedGenderConditioned(const AnonModel &model, const std::vector<Utterance> &utts);
std::vector<int> GenderLabels(const std::vector<Utterance> &utts);  // 1 = M

}  // namespace vqanon

#endif  // VQANON_EVALUATION_H_
