// vqanon/features.h

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

#ifndef VQANON_FEATURES_H_
#define VQANON_FEATURES_H_

#include <span>
#include <vector>

#include "vqanon/base.h"

namespace vqanon {

struct FeatureSequence {
  Matrix frames;  // [n_frames x n_features]
  int frame_length = 0;
  int hop_length = 0;

  int NumFrames() const { return static_cast<int>(frames.rows()); }
  int Dim() const { return static_cast<int>(frames.cols()); }
};

struct FeatureOptions {
  int frame_length = 400;  // 25 ms at 16 kHz
  int hop_length = 160;    // 10 ms at 16 kHz
  int n_features = 40;     // mel bands
  double energy_floor = 1e-10;  // log floor is ln(energy_floor)
  double low_freq = 20.0;
  double high_freq = 0.0;  // <= 0 means Nyquist

  /// Options for `sample_rate` with 25 ms frames and a 10 ms hop.
  static FeatureOptions ForRate(int sample_rate, int n_features = 40);
};

/// 1 + floor((n_samples - frame_length) / hop_length); zero if shorter than
/// one frame.
int NumFrames(int n_samples, int frame_length, int hop_length);

/// Hann-windowed power spectrum -> triangular mel filterbank -> natural log
/// with an energy floor.  Throws LengthError when the waveform is shorter
/// than one frame and ValidationError for non-positive sizes.
FeatureSequence ExtractFeatures(std::span<const BaseFloat> waveform,
                                int sample_rate,
                                const FeatureOptions &opts);

/// Subtracts the per-dimension mean over time (utterance-level CMN).
void ApplyCmn(Matrix *frames);

/// Orthonormal DCT-II along each row, keeping the first `n_ceps`
/// coefficients.  Applied to log-mel frames this gives cepstra whose low
/// orders describe the spectral envelope without the harmonic fine structure.
Matrix ToCepstra(const Matrix &log_mel, int n_ceps);

}  // namespace vqanon

#endif  // VQANON_FEATURES_H_
