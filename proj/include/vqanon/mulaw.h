// vqanon/mulaw.h

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

#ifndef VQANON_MULAW_H_
#define VQANON_MULAW_H_

#include <span>
#include <vector>

#include "vqanon/base.h"

namespace vqanon {

constexpr int kMuLawLevels = 256;
constexpr int kDefaultMu = 255;

/// Continuous companding curve sign(x) ln(1 + mu|x|) / ln(1 + mu); maps
/// [-1, 1] onto [-1, 1].
double MuLawCompress(double x, int mu = kDefaultMu);
double MuLawExpand(double y, int mu = kDefaultMu);

/// Quantizes x in [-1, 1] to one of 256 levels:
///   clamp(floor((F(x) + 1) / 2 * 256), 0, 255).
/// Throws DomainError if |x| > 1.
int MuLawEncode(double x, int mu = kDefaultMu);

/// Inverse of MuLawEncode, evaluated at the bin midpoint.  Throws
/// DomainError if level is outside [0, 255].
double MuLawDecode(int level, int mu = kDefaultMu);

/// Vectorized helpers; samples are clamped to [-1, 1] first so that
/// waveforms read from disk never trip the domain check on rounding noise.
std::vector<int> MuLawEncodeWaveform(std::span<const BaseFloat> samples,
                                     int mu = kDefaultMu);
std::vector<BaseFloat> MuLawDecodeLevels(std::span<const int> levels,
                                         int mu = kDefaultMu);

/// Lookup table of MuLawDecode for all 256 levels.
const std::vector<BaseFloat> &MuLawDecodeTable();

}  // namespace vqanon

#endif  // VQANON_MULAW_H_
