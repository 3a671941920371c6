// mulaw.cc

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

#include "vqanon/mulaw.h"

#include <algorithm>
#include <cmath>

namespace vqanon {

double MuLawCompress(double x, int mu) {
  double s = x < 0 ? -1.0 : 1.0;
  return s * std::log1p(mu * std::fabs(x)) / std::log1p(static_cast<double>(mu));
}

double MuLawExpand(double y, int mu) {
  double s = y < 0 ? -1.0 : 1.0;
  return s * (std::pow(1.0 + mu, std::fabs(y)) - 1.0) / mu;
}

int MuLawEncode(double x, int mu) {
  if (!(std::fabs(x) <= 1.0))
    throw DomainError("mu-law encode: sample outside [-1, 1]");
  double f = MuLawCompress(x, mu);
  double level = std::floor((f + 1.0) / 2.0 * kMuLawLevels);
  return static_cast<int>(std::clamp(level, 0.0, kMuLawLevels - 1.0));
}

double MuLawDecode(int level, int mu) {
  if (level < 0 || level >= kMuLawLevels)
    throw DomainError("mu-law decode: level outside [0, 255]");
  double y = 2.0 * (level + 0.5) / kMuLawLevels - 1.0;
  return MuLawExpand(y, mu);
}

std::vector<int> MuLawEncodeWaveform(std::span<const BaseFloat> samples,
                                     int mu) {
  std::vector<int> out(samples.size());
  for (size_t i = 0; i < samples.size(); ++i)
    out[i] = MuLawEncode(std::clamp<double>(samples[i], -1.0, 1.0), mu);
  return out;
}

std::vector<BaseFloat> MuLawDecodeLevels(std::span<const int> levels, int mu) {
  std::vector<BaseFloat> out(levels.size());
  for (size_t i = 0; i < levels.size(); ++i)
    out[i] = static_cast<BaseFloat>(MuLawDecode(levels[i], mu));
  return out;
}

const std::vector<BaseFloat> &MuLawDecodeTable() {
  static const std::vector<BaseFloat> table = [] {
    std::vector<BaseFloat> t(kMuLawLevels);
    for (int l = 0; l < kMuLawLevels; ++l)
      t[l] = static_cast<BaseFloat>(MuLawDecode(l));
    return t;
  }();
  return table;
}

}  // namespace vqanon
