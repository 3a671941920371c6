// vqanon/wav-io.h

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

#ifndef VQANON_WAV_IO_H_
#define VQANON_WAV_IO_H_

#include <string>
#include <vector>

#include "vqanon/base.h"

namespace vqanon {

struct WaveData {
  int sample_rate = 0;
  std::vector<BaseFloat> samples;  // mono, nominally in [-1, 1]
};

/// Writes mono 16-bit PCM in a RIFF/WAVE container.  Samples are clamped
/// to [-1, 1] and rounded to the nearest integer level.
void WriteWav(const std::string &path, const WaveData &wave);

/// Reads a mono 16-bit PCM RIFF/WAVE file.  Throws IoError on anything
/// else (missing file, other sample formats, truncated data).
WaveData ReadWav(const std::string &path);

}  // namespace vqanon

#endif  // VQANON_WAV_IO_H_
