// vqanon/conditioner.h

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

#ifndef VQANON_CONDITIONER_H_
#define VQANON_CONDITIONER_H_

// Attribute embedding tables and the stacked bi-directional recurrent
// network that fuses them with quantized content.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vqanon/base.h"
#include "vqanon/corpus.h"
#include "vqanon/nn.h"
#include "vqanon/rng.h"

namespace vqanon {

/// Two rows: row 0 = F, row 1 = M.
class GenderTable {
 public:
  GenderTable() = default;
  explicit GenderTable(int dim);
  void Init(Rng *rng);
  int Dim() const { return static_cast<int>(embeddings.value.cols()); }
  RowVector Lookup(Gender g) const { return embeddings.value.row(Row(g)); }
  /// Throws DomainError unless `g` is 0 or 1.
  RowVector LookupIndex(int g) const;
  static int Row(Gender g) { return g == Gender::kFemale ? 0 : 1; }

  Param embeddings;
};

/// One row per enrolled speaker, rows in lexicographic order of speaker id.
class SpeakerTable {
 public:
  SpeakerTable() = default;
  SpeakerTable(std::vector<std::string> speaker_ids, int dim);
  void Init(Rng *rng);
  int Dim() const { return static_cast<int>(embeddings.value.cols()); }
  int NumSpeakers() const { return static_cast<int>(ids_.size()); }
  const std::vector<std::string> &ids() const { return ids_; }
  bool Contains(const std::string &id) const { return index_.count(id) > 0; }
  /// Throws EnrollmentError for an unknown speaker.
  int Row(const std::string &id) const;
  RowVector Lookup(const std::string &id) const { return embeddings.value.row(Row(id)); }

  Param embeddings;

 private:
  std::vector<std::string> ids_;
  std::map<std::string, int> index_;
};

enum class ConditionMode { kGenderOnly, kGenderPlusIdentity };
const char *ConditionModeName(ConditionMode m);

struct ConditionedSequence {
  Matrix frames;  // [T x 2H]
  ConditionMode mode = ConditionMode::kGenderOnly;
  int NumFrames() const { return static_cast<int>(frames.rows()); }
};

struct ConditionerOptions {
  int latent_dim = 16;   // D
  int gender_dim = 16;   // D_g
  int speaker_dim = 64;
  int hidden = 64;       // H, per direction
  /// Project the speaker embedding to 2H before concatenation so that the
  /// identity layer sees exactly 4H input channels.
  bool project_speaker = true;
  /// Accept layer-2 widths other than 4H.
  bool allow_channel_override = false;
  /// Add the first layer's output to the identity layer's output.
  bool identity_residual = false;

  int Layer1InputDim() const { return latent_dim + gender_dim; }
  int Layer2InputDim() const {
    return 2 * hidden + (project_speaker ? 2 * hidden : speaker_dim);
  }
  int OutputDim() const { return 2 * hidden; }
  void Validate() const;
};

class Conditioner {
 public:
  Conditioner() = default;
  Conditioner(const ConditionerOptions &opts, std::vector<std::string> speaker_ids);
  void Init(Rng *rng);
  const ConditionerOptions &options() const { return opts_; }

  struct Cache {
    Matrix x1, x2;
    BiGru::Cache l1, l2;
    Matrix h1;
    Matrix speaker_in;  // [1 x speaker_dim]
    bool identity = false;
  };
  /// Core computation from explicit embedding rows.  `speaker_emb` null
  /// selects gender-only mode.
  ConditionedSequence Forward(const Matrix &z_q, const RowVector &gender_emb,
                              const RowVector *speaker_emb, Cache *cache) const;
  /// Gradients w.r.t. the inputs of Forward; parameter gradients of the
  /// recurrent layers and projection accumulate.  `dspeaker` is untouched in
  /// gender-only mode.
  void Backward(const Cache &cache, const Matrix &dframes, Matrix *dz_q,
                RowVector *dgender, RowVector *dspeaker);

  /// Table lookups followed by Forward.
  ConditionedSequence Condition(const Matrix &z_q, Gender gender,
                                const std::optional<std::string> &speaker) const;

  /// All trainable parameters including both tables.
  ParamSet Params();

  GenderTable gender_table;
  SpeakerTable speaker_table;
  BiGru layer1, layer2;
  Linear speaker_proj;

 private:
  ConditionerOptions opts_;
};

}  // namespace vqanon

#endif  // VQANON_CONDITIONER_H_
