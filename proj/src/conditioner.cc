// conditioner.cc

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

#include "vqanon/conditioner.h"

#include <algorithm>
#include <set>

namespace vqanon {

GenderTable::GenderTable(int dim) : embeddings("gender_table", 2, dim) {
  if (dim <= 0) throw ValidationError("D_g", "must be positive");
}

void GenderTable::Init(Rng *rng) {
  do {
    InitUniform(&embeddings, 1.0, rng);
  } while (embeddings.value.row(0) == embeddings.value.row(1));
}

RowVector GenderTable::LookupIndex(int g) const {
  if (g != 0 && g != 1) throw DomainError("gender index " + std::to_string(g) + " not in {0, 1}");
  return embeddings.value.row(g);
}

SpeakerTable::SpeakerTable(std::vector<std::string> ids, int dim)
    : embeddings("speaker_table", static_cast<int>(ids.size()), dim) {
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
    throw ValidationError("speakers", "duplicate speaker id");
  ids_ = std::move(ids);
  for (size_t i = 0; i < ids_.size(); ++i) index_[ids_[i]] = static_cast<int>(i);
}

void SpeakerTable::Init(Rng *rng) { InitUniform(&embeddings, 1.0, rng); }

int SpeakerTable::Row(const std::string &id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw EnrollmentError("speaker '" + id + "' is not enrolled");
  return it->second;
}

const char *ConditionModeName(ConditionMode m) {
  return m == ConditionMode::kGenderOnly ? "gender_only" : "gender_plus_identity";
}

void ConditionerOptions::Validate() const {
  if (latent_dim <= 0) throw ValidationError("D", "must be positive");
  if (gender_dim <= 0) throw ValidationError("D_g", "must be positive");
  if (speaker_dim <= 0) throw ValidationError("conditioner.speaker_dim", "must be positive");
  if (hidden <= 0) throw ValidationError("H", "must be positive");
  if (Layer2InputDim() != 4 * hidden && !allow_channel_override)
    throw ValidationError("H", "identity layer input width " +
                                   std::to_string(Layer2InputDim()) + " != 4H = " +
                                   std::to_string(4 * hidden) +
                                   " (set conditioner.allow_channel_override to accept)");
}

Conditioner::Conditioner(const ConditionerOptions &opts, std::vector<std::string> speaker_ids)
    : gender_table(opts.gender_dim),
      speaker_table(std::move(speaker_ids), opts.speaker_dim),
      layer1("conditioner.layer1", opts.Layer1InputDim(), opts.hidden),
      layer2("conditioner.layer2", opts.Layer2InputDim(), opts.hidden),
      speaker_proj("conditioner.speaker_proj", opts.speaker_dim, 2 * opts.hidden),
      opts_(opts) {
  opts.Validate();
}

void Conditioner::Init(Rng *rng) {
  gender_table.Init(rng);
  speaker_table.Init(rng);
  layer1.Init(rng);
  layer2.Init(rng);
  speaker_proj.Init(rng);
}

ConditionedSequence Conditioner::Forward(const Matrix &z_q, const RowVector &gender_emb,
                                         const RowVector *speaker_emb, Cache *cache) const {
  if (z_q.cols() != opts_.latent_dim)
    throw ShapeError("condition: z_q width " + std::to_string(z_q.cols()) + " != D = " +
                     std::to_string(opts_.latent_dim));
  if (gender_emb.size() != opts_.gender_dim)
    throw ShapeError("condition: gender embedding width " + std::to_string(gender_emb.size()) +
                     " != " + std::to_string(opts_.gender_dim));
  if (speaker_emb && speaker_emb->size() != opts_.speaker_dim)
    throw ShapeError("condition: speaker embedding width " +
                     std::to_string(speaker_emb->size()) + " != " +
                     std::to_string(opts_.speaker_dim));
  const int T = static_cast<int>(z_q.rows());
  Cache local;
  Cache &c = cache ? *cache : local;
  c.identity = speaker_emb != nullptr;
  c.x1.resize(T, opts_.Layer1InputDim());
  c.x1.leftCols(opts_.latent_dim) = z_q;
  c.x1.rightCols(opts_.gender_dim) = gender_emb.replicate(T, 1);
  ConditionedSequence out;
  layer1.Forward(c.x1, 1, &c.h1, &c.l1);
  if (!speaker_emb) {
    out.frames = c.h1;
    out.mode = ConditionMode::kGenderOnly;
    return out;
  }
  const int H2 = 2 * opts_.hidden;
  RowVector s = *speaker_emb;
  c.speaker_in = s;
  if (opts_.project_speaker) {
    Matrix proj;
    speaker_proj.Forward(s, &proj);
    s = proj.row(0);
  }
  c.x2.resize(T, opts_.Layer2InputDim());
  c.x2.leftCols(H2) = c.h1;
  c.x2.rightCols(s.size()) = s.replicate(T, 1);
  layer2.Forward(c.x2, 1, &out.frames, &c.l2);
  if (opts_.identity_residual) out.frames += c.h1;
  out.mode = ConditionMode::kGenderPlusIdentity;
  return out;
}

void Conditioner::Backward(const Cache &c, const Matrix &dframes, Matrix *dz_q,
                           RowVector *dgender, RowVector *dspeaker) {
  const int H2 = 2 * opts_.hidden;
  Matrix dh1;
  if (c.identity) {
    Matrix dx2;
    layer2.Backward(c.x2, c.l2, dframes, &dx2);
    dh1 = dx2.leftCols(H2);
    if (opts_.identity_residual) dh1 += dframes;
    const int sw = static_cast<int>(dx2.cols()) - H2;
    RowVector ds = dx2.rightCols(sw).colwise().sum();
    if (opts_.project_speaker) {
      Matrix dspk;
      speaker_proj.Backward(c.speaker_in, ds, &dspk);
      ds = dspk.row(0);
    }
    if (dspeaker) *dspeaker = ds;
  } else {
    dh1 = dframes;
  }
  Matrix dx1;
  layer1.Backward(c.x1, c.l1, dh1, &dx1);
  if (dz_q) *dz_q = dx1.leftCols(opts_.latent_dim);
  if (dgender) *dgender = dx1.rightCols(opts_.gender_dim).colwise().sum();
}

ConditionedSequence Conditioner::Condition(const Matrix &z_q, Gender gender,
                                           const std::optional<std::string> &speaker) const {
  RowVector g = gender_table.Lookup(gender);
  if (!speaker) return Forward(z_q, g, nullptr, nullptr);
  RowVector s = speaker_table.Lookup(*speaker);
  return Forward(z_q, g, &s, nullptr);
}

ParamSet Conditioner::Params() {
  ParamSet s;
  s.Add(&gender_table.embeddings);
  s.Add(&speaker_table.embeddings);
  s.Add(layer1.Params());
  s.Add(layer2.Params());
  s.Add(speaker_proj.Params());
  return s;
}

}  // namespace vqanon
