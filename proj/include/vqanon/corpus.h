// vqanon/corpus.h

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

#ifndef VQANON_CORPUS_H_
#define VQANON_CORPUS_H_

#include <string>
#include <vector>

#include "vqanon/base.h"

namespace vqanon {

enum class Gender { kFemale = 0, kMale = 1 };

/// "F" / "M".
const char *GenderName(Gender g);
/// Parses "F" or "M"; anything else is a DomainError.
Gender ParseGender(const std::string &s);
inline Gender Opposite(Gender g) {
  return g == Gender::kFemale ? Gender::kMale : Gender::kFemale;
}

/// One manifest record.  f0_hz and tract_scale are the generator's
/// ground-truth voice parameters, kept so that tests can read them back.
struct UtteranceInfo {
  std::string id;
  std::string relative_path;
  std::string speaker_id;
  Gender gender = Gender::kFemale;
  std::vector<int> tokens;
  double f0_hz = 0.0;
  double tract_scale = 1.0;
};

struct Utterance {
  UtteranceInfo info;
  int sample_rate = 0;
  std::vector<BaseFloat> waveform;  // in [-1, 1]
};

struct CorpusSpec {
  int n_speakers = 20;
  int utterances_per_speaker = 50;
  int token_vocab_size = 8;
  int tokens_min = 4;
  int tokens_max = 7;
  int sample_rate = 16000;
  uint64_t seed = 0;

  double female_f0_min = 165.0, female_f0_max = 255.0;
  double male_f0_min = 85.0, male_f0_max = 155.0;
  double tract_scale_min = 0.92, tract_scale_max = 1.08;
  double token_seconds = 0.1;
  double crossfade_seconds = 0.01;

  /// Throws ValidationError naming the first invalid field.
  void Validate() const;
  int TokenSamples() const;
};

/// Largest vocabulary the formant table supports.
constexpr int kMaxTokenVocab = 12;

/// Formant frequencies (F1, F2) in Hz of token `token` at tract scale 1.
std::pair<double, double> TokenFormants(int token);

/// Synthesizes one utterance: a harmonic source at `f0_hz` shaped per token
/// by a two-formant envelope scaled by `tract_scale`, `token_seconds` per
/// token with linear cross-fades between token envelopes and 5 ms raised-
/// cosine fades at both ends.  Peak-normalized to 0.6.
std::vector<BaseFloat> RenderTokens(const std::vector<int> &tokens, double f0_hz,
                                    double tract_scale, const CorpusSpec &spec);

/// Builds the full labeled corpus in memory.  Speaker i is female for even
/// i and male for odd i.  A pure function of `spec`.
std::vector<Utterance> GenerateCorpus(const CorpusSpec &spec);

/// Speaker ids "spk00", "spk01", ... (zero-padded to the width of n-1).
std::string SpeakerId(int index, int n_speakers);

/// Writes `<dir>/manifest.tsv` and one WAV per utterance under `<dir>/wav/`.
void WriteCorpus(const std::string &dir, const std::vector<Utterance> &utts);

/// Reads a manifest plus its audio.  Audio paths are relative to `dir`.
std::vector<Utterance> LoadCorpus(const std::string &dir,
                                  const std::string &manifest = "manifest.tsv");

void WriteManifest(const std::string &path, const std::vector<UtteranceInfo> &infos);
std::vector<UtteranceInfo> ReadManifest(const std::string &path);

}  // namespace vqanon

#endif  // VQANON_CORPUS_H_
