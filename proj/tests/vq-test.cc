// tests/vq-test.cc

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

#include <cmath>

#include "doctest.h"
#include "grad-check.h"
#include "oracles.h"
#include "vqanon/vq.h"

namespace vqanon {

using test::MaxGradError;
using test::Project;
using test::RandomMatrix;

TEST_CASE("encoder output shape follows the stride") {
  EncoderOptions o;
  o.input_dim = 40;
  o.latent_dim = 64;
  Encoder enc(o);
  Rng rng(1);
  enc.Init(&rng);
  Matrix z = enc.Forward(RandomMatrix(100, 40, &rng), nullptr);
  CHECK(z.rows() == 50);
  CHECK(z.cols() == 64);
  CHECK_THROWS_AS(enc.Forward(Matrix::Zero(10, 13), nullptr), ShapeError);
  CHECK_THROWS_AS(EncoderOptions{.latent_dim = 0}.Validate(), ValidationError);
}

TEST_CASE("zero-initialised encoder maps everything to zero, deterministically") {
  Encoder enc(EncoderOptions{});
  Rng rng(2);
  Matrix x = RandomMatrix(30, 13, &rng);
  Matrix z = enc.Forward(x, nullptr);
  CHECK(z.cwiseAbs().maxCoeff() == 0.0f);
  enc.Init(&rng);
  CHECK(enc.Forward(x, nullptr) == enc.Forward(x, nullptr));
}

TEST_CASE("encoder gradients") {
  EncoderOptions o;
  o.input_dim = 5;
  o.conv_channels = 6;
  o.hidden = 7;
  o.latent_dim = 4;
  Encoder enc(o);
  Rng rng(3);
  enc.Init(&rng);
  Matrix x = RandomMatrix(9, 5, &rng);
  Matrix w = RandomMatrix(5, 4, &rng);
  auto loss = [&] { return Project(enc.Forward(x, nullptr), w); };
  Encoder::Cache cache;
  enc.Forward(x, &cache);
  enc.Params().ZeroGrad();
  enc.Backward(cache, w);
  CHECK(MaxGradError(loss, &enc.conv().weight.value, enc.conv().weight.grad, &rng) < 2e-3);
  CHECK(MaxGradError(loss, &enc.blocks()[0].weight.value, enc.blocks()[0].weight.grad, &rng) <
        2e-3);
  CHECK(MaxGradError(loss, &enc.blocks()[4].bias.value, enc.blocks()[4].bias.grad, &rng) <
        2e-3);
}

TEST_CASE("codebook initialisation") {
  Codebook cb(64, 16);
  Rng rng(4);
  cb.Init(&rng);
  CHECK(cb.RowsDistinct());
  CHECK(cb.embeddings.value.cwiseAbs().maxCoeff() <= 1.0f / 64);
  CHECK(cb.embeddings.value.allFinite());
  CHECK_THROWS_AS(Codebook(0, 3), ValidationError);
}

TEST_CASE("quantize examples") {
  Codebook cb(2, 2);
  cb.embeddings.value << 0, 0, 1, 1;
  Matrix z(3, 2);
  z << 0.2f, 0.2f, 1, 1, 0.5f, 0.5f;
  QuantizedSequence q = Quantize(z, cb);
  CHECK(q.indices == std::vector<int>{0, 1, 0});
  CHECK(q.distances[0] == doctest::Approx(0.08));
  CHECK(q.distances[1] == 0.0);
  CHECK_THROWS_AS(Quantize(Matrix::Zero(1, 3), cb), ShapeError);

  Rng rng(5);
  Codebook big(8, 3);
  big.Init(&rng);
  Matrix e3 = big.embeddings.value.row(3);
  QuantizedSequence q3 = Quantize(e3, big);
  CHECK(q3.indices[0] == 3);
  CHECK(q3.distances[0] == 0.0);
}

TEST_CASE("quantize agrees with an exhaustive scan and is idempotent") {
  Rng rng(6);
  for (int trial = 0; trial < 200; ++trial) {
    int K = 1 + static_cast<int>(rng.Index(32)), D = 1 + static_cast<int>(rng.Index(8));
    int T = 1 + static_cast<int>(rng.Index(16));
    Codebook cb(K, D);
    cb.embeddings.value = RandomMatrix(K, D, &rng);
    Matrix z = RandomMatrix(T, D, &rng);
    QuantizedSequence q = Quantize(z, cb);
    for (int t = 0; t < T; ++t) {
      REQUIRE(q.indices[t] == oracle::ExhaustiveNearest(cb.embeddings.value, z.row(t)));
      REQUIRE(q.one_hot.row(t).sum() == 1.0f);
      REQUIRE(q.one_hot(t, q.indices[t]) == 1.0f);
      REQUIRE(q.codewords.row(t) == cb.embeddings.value.row(q.indices[t]));
    }
    REQUIRE(Quantize(q.codewords, cb).indices == q.indices);
  }
}

TEST_CASE("vq losses") {
  Matrix a(1, 2), b(1, 2);
  a << 0, 0;
  b << 1, 1;
  VqLosses l = ComputeVqLosses(a, b);
  CHECK(l.codebook == 2.0);
  CHECK(l.commitment == 2.0);
  VqLosses zero = ComputeVqLosses(b, b);
  CHECK(zero.codebook == 0.0);
  CHECK(zero.commitment == 0.0);
  Rng rng(7);
  Matrix ze = RandomMatrix(5, 3, &rng), zq = RandomMatrix(5, 3, &rng);
  VqLosses base = ComputeVqLosses(ze, zq);
  Matrix scaled = zq + 3.0f * (ze - zq);
  CHECK(ComputeVqLosses(scaled, zq).codebook == doctest::Approx(9.0 * base.codebook));
  CHECK_THROWS_AS(ComputeVqLosses(ze, Matrix::Zero(4, 3)), ShapeError);

  Matrix dq, de;
  ComputeVqLosses(ze, zq, &dq, &de);
  auto cb_loss = [&] { return ComputeVqLosses(ze, zq).codebook; };
  CHECK(MaxGradError(cb_loss, &zq, dq, &rng, 40, 1e-3) < 1e-3);
  auto cm_loss = [&] { return ComputeVqLosses(ze, zq).commitment; };
  CHECK(MaxGradError(cm_loss, &ze, de, &rng, 40, 1e-3) < 1e-3);
}

TEST_CASE("straight-through contract") {
  Rng rng(8);
  Matrix ze = RandomMatrix(4, 3, &rng), zq = RandomMatrix(4, 3, &rng);
  Matrix out = StraightThroughForward(ze, zq);
  CHECK(out == zq);
  Matrix ones = Matrix::Ones(4, 3);
  CHECK(StraightThroughBackward(ones) == ones);
  CHECK_THROWS_AS(StraightThroughForward(ze, Matrix::Zero(4, 2)), ShapeError);
}

}  // namespace vqanon
