// vqanon/config.h

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

#ifndef VQANON_CONFIG_H_
#define VQANON_CONFIG_H_

// Run configuration: one plain-text file of `[section]` headers and
// `key = value` lines, layered over a named preset.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vqanon/corpus.h"
#include "vqanon/evaluation.h"
#include "vqanon/model.h"

namespace vqanon {

struct AnonymizeConfig {
  SamplingMode sampling = SamplingMode::kCategorical;
  int batch_size = 256;
};

struct EvaluateConfig {
  int train_per_speaker = 40;  // leading utterances per speaker used for training
  int chance_draws = 200;
  bool enroll_anonymized = false;
};

using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

struct RunConfig {
  std::string preset = "toy";
  uint64_t seed = 1;
  CorpusSpec corpus;
  ModelConfig model;
  TrainOptions train;
  AttackerOptions attackers;
  AnonymizeConfig anonymize;
  EvaluateConfig evaluate;

  /// "toy" or "full"; ConfigError otherwise.
  static RunConfig Preset(const std::string &name);

  /// Sets `section.key`.  ConfigError for an unknown key, ValidationError
  /// (naming the key) for an unparsable value.
  void Set(const std::string &key, const std::string &value);
  /// Copies shared values between sections (sample rate, vocabulary, stage
  /// seeds) and validates everything.
  void Finalize();

  /// Canonical text; parsing it over any preset reproduces this config.
  std::string ToText() const;
  /// 16 hex digits of a 64-bit FNV-1a hash of ToText().
  std::string Hash() const;

  /// Seed of a named stage, derived from `seed`.
  uint64_t StageSeed(const std::string &stage) const;
};

/// Applies `text` on top of `base`, then finalizes.
RunConfig ParseConfig(const std::string &text, RunConfig base);
RunConfig LoadConfigFile(const std::string &path, const RunConfig &base);

/// Architecture keys that must agree between a checkpoint and a config.
ConfigEntries ModelEntries(const ModelConfig &config);
ConfigEntries AttackerEntries(const AttackerOptions &opts);

uint64_t Fnv1a64(std::string_view bytes);
std::string HexDigest(uint64_t h);
std::string EntriesHash(const ConfigEntries &entries);

}  // namespace vqanon

#endif  // VQANON_CONFIG_H_
