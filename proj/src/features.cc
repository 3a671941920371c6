// features.cc

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

#include "vqanon/features.h"

#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <tuple>

#include <unsupported/Eigen/FFT>

namespace vqanon {

namespace {

double HzToMel(double hz) { return 1127.0 * std::log1p(hz / 700.0); }

int NextPow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Filterbank weights [n_mel x n_bins], cached per configuration.
struct MelBanks {
  int n_fft;
  Matrix weights;
};

std::shared_ptr<const MelBanks> GetMelBanks(int sample_rate, int frame_length,
                                            int n_mel, double low, double high) {
  using Key = std::tuple<int, int, int, double, double>;
  static std::mutex mu;
  static std::map<Key, std::shared_ptr<const MelBanks>> cache;
  std::lock_guard<std::mutex> lock(mu);
  Key key{sample_rate, frame_length, n_mel, low, high};
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  auto banks = std::make_shared<MelBanks>();
  // Twice the next power of two keeps the lowest mel bands wider than one
  // FFT bin at 8 kHz.
  banks->n_fft = 2 * NextPow2(frame_length);
  const int n_bins = banks->n_fft / 2 + 1;
  const double nyquist = 0.5 * sample_rate;
  if (high <= 0.0 || high > nyquist) high = nyquist;
  const double mel_lo = HzToMel(low), mel_hi = HzToMel(high);
  const double delta = (mel_hi - mel_lo) / (n_mel + 1);
  banks->weights = Matrix::Zero(n_mel, n_bins);
  for (int m = 0; m < n_mel; ++m) {
    double left = mel_lo + m * delta, center = left + delta,
           right = center + delta;
    for (int b = 0; b < n_bins; ++b) {
      double mel = HzToMel(static_cast<double>(b) * sample_rate / banks->n_fft);
      double w = 0.0;
      if (mel > left && mel <= center)
        w = (mel - left) / (center - left);
      else if (mel > center && mel < right)
        w = (right - mel) / (right - center);
      banks->weights(m, b) = static_cast<BaseFloat>(w);
    }
  }
  cache.emplace(key, banks);
  return banks;
}

}  // namespace

FeatureOptions FeatureOptions::ForRate(int sample_rate, int n_features) {
  FeatureOptions o;
  o.frame_length = sample_rate / 40;  // 25 ms
  o.hop_length = sample_rate / 100;   // 10 ms
  o.n_features = n_features;
  return o;
}

int NumFrames(int n_samples, int frame_length, int hop_length) {
  if (n_samples < frame_length) return 0;
  return 1 + (n_samples - frame_length) / hop_length;
}

FeatureSequence ExtractFeatures(std::span<const BaseFloat> waveform,
                                int sample_rate, const FeatureOptions &opts) {
  if (opts.frame_length <= 0)
    throw ValidationError("frame_length", "must be positive");
  if (opts.hop_length <= 0) throw ValidationError("hop_length", "must be positive");
  if (opts.n_features <= 0) throw ValidationError("n_features", "must be positive");
  if (sample_rate <= 0) throw ValidationError("sample_rate", "must be positive");
  const int n_samples = static_cast<int>(waveform.size());
  if (n_samples < opts.frame_length)
    throw LengthError("waveform has " + std::to_string(n_samples) +
                      " samples, fewer than one frame (" +
                      std::to_string(opts.frame_length) + ")");

  auto banks = GetMelBanks(sample_rate, opts.frame_length, opts.n_features,
                           opts.low_freq, opts.high_freq);
  const int n_fft = banks->n_fft, n_bins = n_fft / 2 + 1;
  const int n_frames = NumFrames(n_samples, opts.frame_length, opts.hop_length);

  std::vector<float> window(opts.frame_length);
  for (int i = 0; i < opts.frame_length; ++i)
    window[i] = static_cast<float>(
        0.5 - 0.5 * std::cos(2.0 * M_PI * i / (opts.frame_length - 1)));

  Eigen::FFT<float> fft;
  std::vector<float> buf(n_fft, 0.0f);
  std::vector<std::complex<float>> spec;
  Matrix power(n_frames, n_bins);
  for (int t = 0; t < n_frames; ++t) {
    const BaseFloat *src = waveform.data() + static_cast<size_t>(t) * opts.hop_length;
    for (int i = 0; i < opts.frame_length; ++i) buf[i] = src[i] * window[i];
    std::fill(buf.begin() + opts.frame_length, buf.end(), 0.0f);
    fft.fwd(spec, buf);
    for (int b = 0; b < n_bins; ++b) power(t, b) = std::norm(spec[b]);
  }

  FeatureSequence out;
  out.frame_length = opts.frame_length;
  out.hop_length = opts.hop_length;
  out.frames.noalias() = power * banks->weights.transpose();
  const BaseFloat floor = static_cast<BaseFloat>(opts.energy_floor);
  out.frames = out.frames.array().max(floor).log().matrix();
  return out;
}

void ApplyCmn(Matrix *frames) {
  if (frames->rows() == 0) return;
  RowVector mean = frames->colwise().mean();
  frames->rowwise() -= mean;
}

Matrix ToCepstra(const Matrix &log_mel, int n_ceps) {
  const int n = static_cast<int>(log_mel.cols());
  if (n_ceps <= 0 || n_ceps > n)
    throw ValidationError("n_ceps", "must be in [1, " + std::to_string(n) + "]");
  Matrix basis(n, n_ceps);
  for (int k = 0; k < n_ceps; ++k) {
    double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / n);
    for (int j = 0; j < n; ++j)
      basis(j, k) = static_cast<BaseFloat>(scale * std::cos(M_PI * k * (j + 0.5) / n));
  }
  return log_mel * basis;
}

}  // namespace vqanon
