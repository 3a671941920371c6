// tests/conditioner-test.cc

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

#include "doctest.h"
#include "grad-check.h"
#include "vqanon/conditioner.h"

namespace vqanon {

using test::MaxGradError;
using test::Project;
using test::RandomMatrix;

namespace {
std::vector<std::string> Roster() { return {"spk02", "spk00", "spk01"}; }
}  // namespace

TEST_CASE("table lookups") {
  ConditionerOptions o;
  o.latent_dim = 4;
  o.gender_dim = 3;
  o.hidden = 5;
  Conditioner cond(o, Roster());
  Rng rng(1);
  cond.Init(&rng);
  CHECK(cond.gender_table.Lookup(Gender::kFemale) == cond.gender_table.embeddings.value.row(0));
  CHECK(cond.gender_table.Lookup(Gender::kMale) == cond.gender_table.embeddings.value.row(1));
  CHECK(cond.gender_table.embeddings.value.row(0) != cond.gender_table.embeddings.value.row(1));
  CHECK_THROWS_AS(cond.gender_table.LookupIndex(2), DomainError);
  CHECK(cond.speaker_table.ids() == std::vector<std::string>{"spk00", "spk01", "spk02"});
  for (const auto &id : cond.speaker_table.ids()) CHECK(cond.speaker_table.Lookup(id).size() == 64);
  CHECK(cond.speaker_table.Row("spk02") == 2);
  CHECK_THROWS_AS(cond.speaker_table.Lookup("spk99"), EnrollmentError);
  CHECK_THROWS_AS(cond.Condition(Matrix::Zero(3, 4), Gender::kMale, std::string("nobody")),
                  EnrollmentError);
}

TEST_CASE("channel arithmetic") {
  ConditionerOptions o;
  o.latent_dim = 64;
  o.gender_dim = 64;
  o.hidden = 64;
  CHECK(o.Layer1InputDim() == 128);
  CHECK(o.OutputDim() == 128);
  CHECK(o.Layer2InputDim() == 256);
  Conditioner cond(o, Roster());
  CHECK(cond.layer1.InputDim() == 128);
  CHECK(cond.layer2.InputDim() == 4 * 64);

  ConditionerOptions raw = o;
  raw.project_speaker = false;
  CHECK(raw.Layer2InputDim() == 2 * 64 + 64);
  try {
    raw.Validate();
    FAIL("expected a validation error");
  } catch (const ValidationError &e) {
    CHECK(e.field() == "H");
  }
  raw.allow_channel_override = true;
  CHECK_NOTHROW(raw.Validate());
  Conditioner unprojected(raw, Roster());
  Rng rng(2);
  unprojected.Init(&rng);
  auto seq = unprojected.Condition(Matrix::Zero(7, 64), Gender::kFemale, std::string("spk01"));
  CHECK(seq.frames.cols() == 128);
  raw.hidden = 32;
  raw.allow_channel_override = false;
  CHECK_NOTHROW(raw.Validate());  // 2*32 + 64 == 4*32
}

TEST_CASE("frame count, modes and broadcast") {
  ConditionerOptions o;
  o.latent_dim = 4;
  o.gender_dim = 3;
  o.hidden = 5;
  Conditioner cond(o, Roster());
  Rng rng(3);
  cond.Init(&rng);
  Matrix zq = RandomMatrix(11, 4, &rng);
  auto g = cond.Condition(zq, Gender::kFemale, std::nullopt);
  CHECK(g.mode == ConditionMode::kGenderOnly);
  CHECK(g.NumFrames() == 11);
  CHECK(g.frames.cols() == 10);
  auto gi = cond.Condition(zq, Gender::kFemale, std::string("spk00"));
  CHECK(gi.mode == ConditionMode::kGenderPlusIdentity);
  CHECK(gi.NumFrames() == 11);
  CHECK(gi.frames.cols() == 10);
  CHECK(gi.frames.allFinite());
  auto m = cond.Condition(zq, Gender::kMale, std::nullopt);
  CHECK((m.frames - g.frames).norm() > 0.0f);

  Conditioner::Cache cache;
  RowVector ge = cond.gender_table.Lookup(Gender::kMale);
  cond.Forward(zq, ge, nullptr, &cache);
  for (int t = 0; t < 11; ++t) CHECK(cache.x1.row(t).rightCols(3) == ge);
  CHECK_THROWS_AS(cond.Forward(Matrix::Zero(3, 5), ge, nullptr, nullptr), ShapeError);
  RowVector bad = RowVector::Zero(7);
  CHECK_THROWS_AS(cond.Forward(zq, bad, nullptr, nullptr), ShapeError);
}

TEST_CASE("conditioner gradients") {
  for (bool residual : {false, true}) {
    for (bool identity : {false, true}) {
      ConditionerOptions o;
      o.latent_dim = 3;
      o.gender_dim = 2;
      o.speaker_dim = 4;
      o.hidden = 3;
      o.identity_residual = residual;
      Conditioner cond(o, Roster());
      Rng rng(4);
      cond.Init(&rng);
      Matrix zq = RandomMatrix(5, 3, &rng);
      Matrix ge = RandomMatrix(1, 2, &rng), se = RandomMatrix(1, 4, &rng);
      Matrix w = RandomMatrix(5, 6, &rng);
      auto loss = [&] {
        RowVector g = ge.row(0), s = se.row(0);
        return Project(cond.Forward(zq, g, identity ? &s : nullptr, nullptr).frames, w);
      };
      Conditioner::Cache cache;
      RowVector g = ge.row(0), s = se.row(0);
      cond.Forward(zq, g, identity ? &s : nullptr, &cache);
      cond.Params().ZeroGrad();
      Matrix dzq;
      RowVector dg, ds;
      cond.Backward(cache, w, &dzq, &dg, &ds);
      Matrix dgm = dg;
      CHECK(MaxGradError(loss, &zq, dzq, &rng) < 2e-3);
      CHECK(MaxGradError(loss, &ge, dgm, &rng) < 2e-3);
      CHECK(MaxGradError(loss, &cond.layer1.fwd.cell.w_hh.value, cond.layer1.fwd.cell.w_hh.grad,
                         &rng) < 2e-3);
      if (identity) {
        Matrix dsm = ds;
        CHECK(MaxGradError(loss, &se, dsm, &rng) < 2e-3);
        CHECK(MaxGradError(loss, &cond.speaker_proj.weight.value, cond.speaker_proj.weight.grad,
                           &rng) < 2e-3);
        CHECK(MaxGradError(loss, &cond.layer2.bwd.input.weight.value,
                           cond.layer2.bwd.input.weight.grad, &rng) < 2e-3);
      }
    }
  }
}

}  // namespace vqanon
