// vqanon/checkpoint.h

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

#ifndef VQANON_CHECKPOINT_H_
#define VQANON_CHECKPOINT_H_

// Binary checkpoints: magic "VQAN", format version, string metadata,
// named float arrays and a trailing FNV-1a checksum.  Little-endian.

#include <string>
#include <utility>
#include <vector>

#include "vqanon/config.h"
#include "vqanon/evaluation.h"
#include "vqanon/model.h"
#include "vqanon/nn.h"

namespace vqanon {

constexpr uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::pair<std::string, Matrix>> arrays;

  /// Metadata value; IntegrityError if absent.
  const std::string &Meta(const std::string &key) const;
  bool HasMeta(const std::string &key) const;
};

/// Writes atomically through a temporary file.
void WriteCheckpoint(const std::string &path, const Checkpoint &ckpt);
/// IoError if unreadable; IntegrityError for a bad magic, version,
/// checksum or truncation.
Checkpoint ReadCheckpoint(const std::string &path);

void AppendParams(const ParamSet &params, Checkpoint *ckpt);
/// Copies arrays into `params` by name.  IntegrityError for a missing name
/// or a shape mismatch.
void RestoreParams(const Checkpoint &ckpt, const ParamSet &params);

/// Compares stored `entries` metadata with `expected`: ValidationError
/// naming the first key that differs, then the combined hash.
void CheckEntries(const Checkpoint &ckpt, const ConfigEntries &expected,
                  const std::string &hash_key);

void SaveModel(const std::string &path, AnonModel *model);
/// Rebuilds the model from `config` and the stored speaker roster.  The
/// vocoder is marked trained.
AnonModel LoadModel(const std::string &path, const ModelConfig &config);

void SaveAttackers(const std::string &path, AttackerSuite *suite, const AttackerOptions &opts);
AttackerSuite LoadAttackers(const std::string &path, const AttackerOptions &opts);

}  // namespace vqanon

#endif  // VQANON_CHECKPOINT_H_
