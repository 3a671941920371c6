// tests/pipeline-test.cc

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

#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "test-util.h"
#include "tiny-model.h"
#include "vqanon/checkpoint.h"
#include "vqanon/config.h"

namespace vqanon {

using test::SmallCorpus;
using test::TinyModel;

namespace {

std::string FieldOf(const std::function<void()> &f) {
  try {
    f();
  } catch (const ValidationError &e) {
    return e.field();
  }
  return "";
}

}  // namespace

TEST_CASE("presets and canonical text") {
  RunConfig toy = RunConfig::Preset("toy");
  CHECK(toy.model.codebook_size == 64);
  CHECK(toy.model.encoder.latent_dim == 16);
  CHECK(toy.model.vocoder.upsample == 160);
  CHECK(toy.corpus.n_speakers == 20);
  RunConfig full = RunConfig::Preset("full");
  CHECK(full.model.codebook_size == 512);
  CHECK(full.model.encoder.latent_dim == 64);
  CHECK(full.model.vocoder.upsample == 320);
  CHECK_THROWS_AS(RunConfig::Preset("huge"), ConfigError);

  // Canonical text reproduces the config over a different preset.
  RunConfig back = ParseConfig(toy.ToText(), full);
  CHECK(back.ToText() == toy.ToText());
  CHECK(back.Hash() == toy.Hash());
  CHECK(toy.Hash().size() == 16);
  CHECK(toy.Hash() != full.Hash());
}

TEST_CASE("config parsing errors name the field") {
  RunConfig toy = RunConfig::Preset("toy");
  RunConfig c = ParseConfig("[model]\nK = 32  # smaller\n\ntrain.steps = 7\n", toy);
  CHECK(c.model.codebook_size == 32);
  CHECK(c.train.steps == 7);
  CHECK_THROWS_AS(ParseConfig("[model]\nbogus = 1\n", toy), ConfigError);
  CHECK_THROWS_AS(ParseConfig("K = 1\n", toy), ConfigError);
  CHECK_THROWS_AS(ParseConfig("[model\n", toy), ConfigError);
  CHECK(FieldOf([&] { ParseConfig("[model]\nK = many\n", toy); }) == "model.K");
  CHECK(FieldOf([&] { ParseConfig("[model]\nK = 0\n", toy); }) == "K");
  CHECK(FieldOf([&] { ParseConfig("[model]\nupsample = 100\n", toy); }) == "model.upsample");
  CHECK(FieldOf([&] { ParseConfig("[anonymize]\nsampling = greedy\n", toy); }) ==
        "anonymize.sampling");
  CHECK(FieldOf([&] { ParseConfig("[evaluate]\ntrain_per_speaker = 50\n", toy); }) ==
        "evaluate.train_per_speaker");
  CHECK_THROWS_AS(LoadConfigFile("/nonexistent/config.txt", toy), IoError);
}

TEST_CASE("stage seeds are explicit functions of the run seed") {
  RunConfig a = RunConfig::Preset("toy");
  RunConfig b = ParseConfig("[run]\nseed = 2\n", a);
  CHECK(a.StageSeed("train") == RunConfig::Preset("toy").StageSeed("train"));
  CHECK(a.StageSeed("train") != a.StageSeed("corpus"));
  CHECK(a.StageSeed("train") != b.StageSeed("train"));
  CHECK(b.corpus.seed == b.StageSeed("corpus"));
  CHECK(b.train.seed == b.StageSeed("train"));
}

TEST_CASE("checkpoint arrays round trip bit-exactly") {
  TempDir dir;
  const std::string path = dir.path() + "/a.ckpt";
  Rng rng(3);
  Checkpoint c;
  c.metadata = {{"kind", "test"}, {"note", "x=1"}};
  Matrix m(3, 5);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<BaseFloat>(rng.Normal());
  m(0, 0) = -0.0f;
  c.arrays = {{"m", m}, {"empty", Matrix(0, 4)}};
  WriteCheckpoint(path, c);
  Checkpoint r = ReadCheckpoint(path);
  CHECK(r.metadata == c.metadata);
  REQUIRE(r.arrays.size() == 2);
  CHECK(std::memcmp(r.arrays[0].second.data(), m.data(), m.size() * sizeof(float)) == 0);
  CHECK(r.arrays[1].second.cols() == 4);
  CHECK_THROWS_AS(r.Meta("absent"), IntegrityError);

  const auto size = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, size - 9);
  CHECK_THROWS_AS(ReadCheckpoint(path), IntegrityError);
  std::filesystem::resize_file(path, 6);
  CHECK_THROWS_AS(ReadCheckpoint(path), IntegrityError);

  WriteCheckpoint(path, c);
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(20);
    f.put('\x7f');
  }
  CHECK_THROWS_AS(ReadCheckpoint(path), IntegrityError);
  {
    std::ofstream f(path, std::ios::binary);
    f << "NOPE and some more bytes";
  }
  CHECK_THROWS_AS(ReadCheckpoint(path), IntegrityError);
  CHECK_THROWS_AS(ReadCheckpoint(dir.path() + "/missing.ckpt"), IoError);
}

TEST_CASE("model checkpoint reproduces generation and guards the config") {
  auto utts = SmallCorpus(2, 1);
  AnonModel m = TinyModel(utts);
  TempDir dir;
  const std::string path = dir.path() + "/model.ckpt";
  SaveModel(path, &m);
  AnonModel back = LoadModel(path, m.config());
  CHECK(back.vocoder.trained());
  CHECK(back.conditioner.speaker_table.ids() == m.conditioner.speaker_table.ids());
  ParamSet pa = m.Params(), pb = back.Params();
  for (size_t i = 0; i < pa.params().size(); ++i)
    CHECK(pa.params()[i]->value == pb.params()[i]->value);
  const auto padded = m.PadToFrames(utts[0].waveform);
  auto cond = m.Condition(m.EncodeAndQuantize(padded), Gender::kMale, std::nullopt);
  auto cond2 = back.Condition(back.EncodeAndQuantize(padded), Gender::kMale, std::nullopt);
  CHECK(m.vocoder.Generate(cond, 4, SamplingMode::kCategorical) ==
        back.vocoder.Generate(cond2, 4, SamplingMode::kCategorical));

  ModelConfig wrong_k = m.config();
  wrong_k.codebook_size = 16;
  CHECK(FieldOf([&] { LoadModel(path, wrong_k); }) == "model.K");
  ModelConfig wrong_h = m.config();
  wrong_h.vocoder.hidden = 16;
  CHECK(FieldOf([&] { LoadModel(path, wrong_h); }) == "model.vocoder_hidden");
  std::filesystem::resize_file(path, std::filesystem::file_size(path) / 2);
  CHECK_THROWS_AS(LoadModel(path, m.config()), IntegrityError);
}

TEST_CASE("attacker checkpoint round trip") {
  auto utts = SmallCorpus(4, 2);
  AttackerOptions ao;
  ao.gender.steps = 2;
  ao.speaker.steps = 2;
  ao.speaker.speakers_per_batch = 4;
  ao.content.steps = 2;
  AttackerSuite s = TrainAttackers(utts, ao, 1);
  TempDir dir;
  const std::string path = dir.path() + "/attackers.ckpt";
  SaveAttackers(path, &s, ao);
  AttackerSuite back = LoadAttackers(path, ao);
  for (const auto &u : utts) {
    CHECK(back.gender.ProbabilityOfWaveform(u.waveform) ==
          s.gender.ProbabilityOfWaveform(u.waveform));
    CHECK(back.speaker.EmbedWaveform(u.waveform) == s.speaker.EmbedWaveform(u.waveform));
    CHECK(back.content.TranscribeWaveform(u.waveform) == s.content.TranscribeWaveform(u.waveform));
  }
  AttackerOptions other = ao;
  other.speaker.embedding_dim = 64;
  CHECK(FieldOf([&] { LoadAttackers(path, other); }) == "attackers.embedding_dim");
  auto m = TinyModel(utts);
  SaveModel(path + ".model", &m);
  CHECK_THROWS_AS(LoadAttackers(path + ".model", ao), IntegrityError);
}

TEST_CASE("joint training reduces the loss on a fixed batch") {
  auto utts = SmallCorpus(2, 2);
  for (uint64_t seed : {1, 2, 3}) {
    AnonModel m = TinyModel(utts, seed);
    std::vector<TrainExample> ex;
    for (const auto &u : utts) ex.push_back(MakeTrainExample(m, u));
    TrainOptions opts;
    opts.steps = 50;
    opts.crop_frames = 2;
    opts.learning_rate = 1e-2;
    opts.seed = seed;
    Trainer trainer(&m, opts, ex);
    const std::vector<int> ids{0, 1, 2, 3};
    const std::vector<int> starts{0, 1, 0, 1};
    const std::vector<bool> identity{true, false, true, false};
    auto total = [&](const TrainStats &s) {
      return s.Total(m.config().vocoder.lp_loss_weight, opts.commitment_beta);
    };
    const double before = total(trainer.EvaluateBatch(ids, starts, identity));
    for (int i = 0; i < 50; ++i) trainer.StepOnBatch(ids, starts, identity);
    const double after = total(trainer.EvaluateBatch(ids, starts, identity));
    MESSAGE("seed " << seed << ": " << before << " -> " << after);
    CHECK(after <= 0.9 * before);
  }
}

}  // namespace vqanon
