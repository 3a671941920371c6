// corpus.cc

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

#include "vqanon/corpus.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <iomanip>

#include "vqanon/rng.h"
#include "vqanon/wav-io.h"

namespace vqanon {

namespace fs = std::filesystem;

const char *GenderName(Gender g) { return g == Gender::kFemale ? "F" : "M"; }

Gender ParseGender(const std::string &s) {
  if (s == "F") return Gender::kFemale;
  if (s == "M") return Gender::kMale;
  throw DomainError("invalid gender '" + s + "' (expected F or M)");
}

void CorpusSpec::Validate() const {
  if (n_speakers < 2) throw ValidationError("n_speakers", "must be at least 2");
  if (n_speakers % 2 != 0)
    throw ValidationError("n_speakers", "must be even for a gender-balanced corpus");
  if (utterances_per_speaker < 1)
    throw ValidationError("utterances_per_speaker", "must be positive");
  if (token_vocab_size < 2 || token_vocab_size > kMaxTokenVocab)
    throw ValidationError("token_vocab_size",
                          "must be in [2, " + std::to_string(kMaxTokenVocab) + "]");
  if (tokens_min < 1) throw ValidationError("tokens_min", "must be positive");
  if (tokens_max < tokens_min)
    throw ValidationError("tokens_max", "must be >= tokens_min");
  if (sample_rate < 4000) throw ValidationError("sample_rate", "must be >= 4000 Hz");
  if (!(female_f0_min > 0 && female_f0_min <= female_f0_max))
    throw ValidationError("female_f0", "band must satisfy 0 < min <= max");
  if (!(male_f0_min > 0 && male_f0_min <= male_f0_max))
    throw ValidationError("male_f0", "band must satisfy 0 < min <= max");
  if (!(tract_scale_min > 0 && tract_scale_min <= tract_scale_max))
    throw ValidationError("tract_scale", "range must satisfy 0 < min <= max");
  if (!(token_seconds > 0)) throw ValidationError("token_seconds", "must be positive");
  if (!(crossfade_seconds >= 0 && crossfade_seconds < token_seconds))
    throw ValidationError("crossfade_seconds", "must be in [0, token_seconds)");
}

int CorpusSpec::TokenSamples() const {
  return static_cast<int>(std::lround(token_seconds * sample_rate));
}

std::pair<double, double> TokenFormants(int token) {
  if (token < 0 || token >= kMaxTokenVocab)
    throw DomainError("token id out of range: " + std::to_string(token));
  // Tokens sit on a grid in (log F1, log F2): the F2/F1 ratio steps by 1.5x
  // and each ratio has two overall levels.  Tract scaling moves a token
  // along the diagonal by at most ~8%, well inside the grid spacing.
  const int ratio_index = token / 2;
  const int level = token % 2;
  const double ratio = 1.6 * std::pow(1.5, ratio_index);
  const double geo_mean = 800.0 * std::exp(0.35 * level);
  const double s = std::sqrt(ratio);
  return {geo_mean / s, geo_mean * s};
}

std::vector<BaseFloat> RenderTokens(const std::vector<int> &tokens, double f0_hz,
                                    double tract_scale, const CorpusSpec &spec) {
  VQ_ASSERT(!tokens.empty());
  const int sr = spec.sample_rate;
  const int seg = spec.TokenSamples();
  const int xfade = static_cast<int>(std::lround(spec.crossfade_seconds * sr));
  const int n = seg * static_cast<int>(tokens.size());
  const int n_harm = std::max(1, static_cast<int>(0.45 * sr / f0_hz));

  // Harmonic amplitudes per token.
  std::vector<std::vector<double>> env(tokens.size(), std::vector<double>(n_harm));
  for (size_t i = 0; i < tokens.size(); ++i) {
    auto [f1, f2] = TokenFormants(tokens[i]);
    f1 *= tract_scale;
    f2 *= tract_scale;
    const double bw1 = 90.0 * tract_scale, bw2 = 140.0 * tract_scale;
    for (int h = 0; h < n_harm; ++h) {
      double f = f0_hz * (h + 1);
      double a = 1.0 / (1.0 + std::pow((f - f1) / bw1, 2)) +
                 0.7 / (1.0 + std::pow((f - f2) / bw2, 2)) + 0.01;
      env[i][h] = a / std::sqrt(h + 1.0);
    }
  }

  // Weight of each token at each sample: 1 inside its segment, linear ramps
  // of `xfade` samples centred on every internal boundary.
  auto token_weight = [&](int i, int t) -> double {
    int start = i * seg, end = start + seg;
    double w = (t >= start && t < end) ? 1.0 : 0.0;
    if (xfade > 0) {
      int half = xfade / 2;
      if (i > 0 && t >= start - half && t < start + half)
        w = static_cast<double>(t - (start - half)) / xfade;
      if (i + 1 < static_cast<int>(tokens.size()) && t >= end - half && t < end + half)
        w = 1.0 - static_cast<double>(t - (end - half)) / xfade;
    }
    return w;
  };

  std::vector<double> y(n, 0.0);
  std::vector<double> amp(n_harm);
  std::vector<std::complex<double>> osc(n_harm, {1.0, 0.0}), rot(n_harm);
  for (int h = 0; h < n_harm; ++h)
    rot[h] = std::polar(1.0, 2.0 * M_PI * f0_hz * (h + 1) / sr);
  for (int t = 0; t < n; ++t) {
    std::fill(amp.begin(), amp.end(), 0.0);
    int cur = t / seg;
    for (int i = std::max(0, cur - 1);
         i <= std::min<int>(cur + 1, static_cast<int>(tokens.size()) - 1); ++i) {
      double w = token_weight(i, t);
      if (w <= 0.0) continue;
      for (int h = 0; h < n_harm; ++h) amp[h] += w * env[i][h];
    }
    double acc = 0.0;
    for (int h = 0; h < n_harm; ++h) {
      acc += amp[h] * osc[h].real();
      osc[h] *= rot[h];
    }
    y[t] = acc;
  }

  const int fade = std::min(n / 2, static_cast<int>(0.005 * sr));
  for (int t = 0; t < fade; ++t) {
    double g = 0.5 - 0.5 * std::cos(M_PI * t / fade);
    y[t] *= g;
    y[n - 1 - t] *= g;
  }
  double peak = 0.0;
  for (double v : y) peak = std::max(peak, std::fabs(v));
  std::vector<BaseFloat> out(n);
  const double gain = peak > 0 ? 0.6 / peak : 0.0;
  for (int t = 0; t < n; ++t) out[t] = static_cast<BaseFloat>(y[t] * gain);
  return out;
}

std::string SpeakerId(int index, int n_speakers) {
  int width = std::max(2, static_cast<int>(std::to_string(n_speakers - 1).size()));
  std::ostringstream os;
  os << "spk" << std::setw(width) << std::setfill('0') << index;
  return os.str();
}

std::vector<Utterance> GenerateCorpus(const CorpusSpec &spec) {
  spec.Validate();
  struct Voice {
    Gender gender;
    double f0, scale;
  };
  std::vector<Voice> voices(spec.n_speakers);
  for (int s = 0; s < spec.n_speakers; ++s) {
    Rng rng(DeriveSeed(spec.seed ^ 0x5eed5eed5eedULL, s));
    Voice v;
    v.gender = (s % 2 == 0) ? Gender::kFemale : Gender::kMale;
    v.f0 = v.gender == Gender::kFemale
               ? rng.Uniform(spec.female_f0_min, spec.female_f0_max)
               : rng.Uniform(spec.male_f0_min, spec.male_f0_max);
    v.scale = rng.Uniform(spec.tract_scale_min, spec.tract_scale_max);
    voices[s] = v;
  }

  std::vector<Utterance> utts;
  utts.reserve(static_cast<size_t>(spec.n_speakers) * spec.utterances_per_speaker);
  int width = std::max(3, static_cast<int>(std::to_string(spec.utterances_per_speaker - 1).size()));
  for (int s = 0; s < spec.n_speakers; ++s) {
    for (int u = 0; u < spec.utterances_per_speaker; ++u) {
      const uint64_t index = static_cast<uint64_t>(s) * spec.utterances_per_speaker + u;
      Rng rng(DeriveSeed(spec.seed, index));
      int len = spec.tokens_min +
                static_cast<int>(rng.Index(spec.tokens_max - spec.tokens_min + 1));
      std::vector<int> tokens;
      // No immediate repeats: a repeated token would render as one long
      // segment with no boundary to recover.
      while (static_cast<int>(tokens.size()) < len) {
        int tok = static_cast<int>(rng.Index(spec.token_vocab_size));
        if (tokens.empty() || tok != tokens.back()) tokens.push_back(tok);
      }
      Utterance utt;
      std::ostringstream id;
      id << SpeakerId(s, spec.n_speakers) << "_u" << std::setw(width)
         << std::setfill('0') << u;
      utt.info.id = id.str();
      utt.info.relative_path = "wav/" + utt.info.id + ".wav";
      utt.info.speaker_id = SpeakerId(s, spec.n_speakers);
      utt.info.gender = voices[s].gender;
      utt.info.tokens = tokens;
      utt.info.f0_hz = voices[s].f0;
      utt.info.tract_scale = voices[s].scale;
      utt.sample_rate = spec.sample_rate;
      utt.waveform = RenderTokens(tokens, voices[s].f0, voices[s].scale, spec);
      utts.push_back(std::move(utt));
    }
  }
  return utts;
}

void WriteManifest(const std::string &path, const std::vector<UtteranceInfo> &infos) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os << "# id\trelative_path\tspeaker_id\tgender\ttokens\tf0_hz\ttract_scale\n";
  os << std::setprecision(17);
  for (const auto &info : infos) {
    os << info.id << '\t' << info.relative_path << '\t' << info.speaker_id << '\t'
       << GenderName(info.gender) << '\t';
    for (size_t i = 0; i < info.tokens.size(); ++i)
      os << (i ? " " : "") << info.tokens[i];
    os << '\t' << info.f0_hz << '\t' << info.tract_scale << '\n';
  }
  if (!os) throw IoError("write failed: " + path);
}

namespace {
std::vector<std::string> SplitTabs(const std::string &line) {
  std::vector<std::string> fields;
  size_t start = 0;
  while (true) {
    size_t pos = line.find('\t', start);
    fields.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return fields;
}
}  // namespace

std::vector<UtteranceInfo> ReadManifest(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open manifest " + path);
  std::vector<UtteranceInfo> infos;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    auto fields = SplitTabs(line);
    auto fail = [&](const std::string &what) {
      throw IoError(path + ":" + std::to_string(lineno) + ": " + what);
    };
    if (fields.size() < 5) fail("expected at least 5 tab-separated fields");
    UtteranceInfo info;
    info.id = fields[0];
    info.relative_path = fields[1];
    info.speaker_id = fields[2];
    try {
      info.gender = ParseGender(fields[3]);
    } catch (const DomainError &e) {
      fail(e.what());
    }
    std::istringstream toks(fields[4]);
    int tok;
    while (toks >> tok) info.tokens.push_back(tok);
    if (!toks.eof()) fail("malformed token list");
    if (info.tokens.empty()) fail("empty token list");
    if (fields.size() >= 7) {
      try {
        info.f0_hz = std::stod(fields[5]);
        info.tract_scale = std::stod(fields[6]);
      } catch (const std::exception &) {
        fail("malformed voice parameters");
      }
    }
    infos.push_back(std::move(info));
  }
  return infos;
}

void WriteCorpus(const std::string &dir, const std::vector<Utterance> &utts) {
  std::vector<UtteranceInfo> infos;
  for (const auto &u : utts) {
    fs::path p = fs::path(dir) / u.info.relative_path;
    fs::create_directories(p.parent_path());
    WriteWav(p.string(), WaveData{u.sample_rate, u.waveform});
    infos.push_back(u.info);
  }
  WriteManifest((fs::path(dir) / "manifest.tsv").string(), infos);
}

std::vector<Utterance> LoadCorpus(const std::string &dir, const std::string &manifest) {
  auto infos = ReadManifest((fs::path(dir) / manifest).string());
  std::vector<Utterance> utts;
  utts.reserve(infos.size());
  for (auto &info : infos) {
    fs::path p = fs::path(dir) / info.relative_path;
    if (!fs::exists(p))
      throw IoError("missing audio for utterance " + info.id + ": " + p.string());
    WaveData w = ReadWav(p.string());
    Utterance u;
    u.info = std::move(info);
    u.sample_rate = w.sample_rate;
    u.waveform = std::move(w.samples);
    utts.push_back(std::move(u));
  }
  return utts;
}

}  // namespace vqanon
