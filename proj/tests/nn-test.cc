// tests/nn-test.cc

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
#include "vqanon/nn.h"

namespace vqanon {

using test::MaxGradError;
using test::Project;
using test::RandomMatrix;

constexpr double kTol = 2e-3;

TEST_CASE("linear gradients") {
  Rng rng(1);
  Linear lin("l", 5, 4);
  lin.Init(&rng);
  Matrix x = RandomMatrix(6, 5, &rng), w = RandomMatrix(6, 4, &rng);
  auto loss = [&] {
    Matrix y;
    lin.Forward(x, &y);
    return Project(y, w);
  };
  lin.Params().ZeroGrad();
  Matrix dx;
  lin.Backward(x, w, &dx);
  CHECK(MaxGradError(loss, &lin.weight.value, lin.weight.grad, &rng) < kTol);
  CHECK(MaxGradError(loss, &lin.bias.value, lin.bias.grad, &rng) < kTol);
  CHECK(MaxGradError(loss, &x, dx, &rng) < kTol);
  Matrix bad(3, 4);
  Matrix y;
  CHECK_THROWS_AS(lin.Forward(bad, &y), ShapeError);
}

TEST_CASE("conv1d output length and gradients") {
  Conv1d c("c", 3, 4, 3, 2, 1);
  for (int t = 1; t < 20; ++t) CHECK(c.OutputLength(t) == (t + 1) / 2);
  Conv1d dil("d", 2, 2, 3, 1, 0, 2);
  CHECK(dil.OutputLength(5) == 1);
  CHECK(dil.OutputLength(4) == 0);

  Rng rng(2);
  for (Conv1d conv : {Conv1d("a", 3, 4, 3, 2, 1), Conv1d("b", 3, 2, 3, 1, 2, 2)}) {
    conv.Init(&rng);
    SeqBatch x;
    x.lengths = {7, 4, 9};
    x.data = RandomMatrix(20, 3, &rng);
    SeqBatch y0;
    conv.Forward(x, &y0, nullptr);
    Matrix w = RandomMatrix(static_cast<int>(y0.data.rows()), conv.out_channels, &rng);
    auto loss = [&] {
      SeqBatch y;
      conv.Forward(x, &y, nullptr);
      return Project(y.data, w);
    };
    Conv1d::Cache cache;
    conv.Forward(x, &y0, &cache);
    conv.Params().ZeroGrad();
    Matrix dx;
    conv.Backward(cache, w, &dx);
    CHECK(MaxGradError(loss, &conv.weight.value, conv.weight.grad, &rng) < kTol);
    CHECK(MaxGradError(loss, &conv.bias.value, conv.bias.grad, &rng) < kTol);
    CHECK(MaxGradError(loss, &x.data, dx, &rng) < kTol);
  }
}

TEST_CASE("conv1d matches direct convolution") {
  Rng rng(3);
  Conv1d conv("c", 2, 3, 3, 1, 1);
  conv.Init(&rng);
  SeqBatch x;
  x.lengths = {5};
  x.data = RandomMatrix(5, 2, &rng);
  SeqBatch y;
  conv.Forward(x, &y, nullptr);
  for (int t = 0; t < 5; ++t)
    for (int o = 0; o < 3; ++o) {
      double acc = conv.bias.value(0, o);
      for (int k = 0; k < 3; ++k) {
        int s = t - 1 + k;
        if (s < 0 || s >= 5) continue;
        for (int c = 0; c < 2; ++c) acc += conv.weight.value(o, k * 2 + c) * x.data(s, c);
      }
      CHECK(y.data(t, o) == doctest::Approx(acc).epsilon(1e-5));
    }
}

TEST_CASE("batchnorm gradients and inference mode") {
  Rng rng(4);
  BatchNorm bn("bn", 3);
  bn.gamma.value = RandomMatrix(1, 3, &rng);
  bn.beta.value = RandomMatrix(1, 3, &rng);
  Matrix x = RandomMatrix(10, 3, &rng, 2.0), w = RandomMatrix(10, 3, &rng);
  auto loss = [&] {
    BatchNorm copy = bn;
    Matrix y;
    copy.Forward(x, true, &y, nullptr);
    return Project(y, w);
  };
  BatchNorm::Cache cache;
  Matrix y;
  BatchNorm live = bn;
  live.Forward(x, true, &y, &cache);
  for (int c = 0; c < 3; ++c) {
    double m = y.col(c).cast<double>().mean();
    CHECK(m == doctest::Approx(bn.beta.value(0, c)).epsilon(1e-4));
  }
  live.Params().ZeroGrad();
  Matrix dx;
  live.Backward(cache, w, &dx);
  CHECK(MaxGradError(loss, &bn.gamma.value, live.gamma.grad, &rng) < kTol);
  CHECK(MaxGradError(loss, &bn.beta.value, live.beta.grad, &rng) < kTol);
  CHECK(MaxGradError(loss, &x, dx, &rng, 30, 1e-3) < 1e-2);

  BatchNorm inf("i", 2);
  inf.running_mean.value << 1.0f, -1.0f;
  inf.running_var.value << 4.0f, 1.0f;
  Matrix in(1, 2), out;
  in << 3.0f, -1.0f;
  inf.Forward(in, false, &out, nullptr);
  CHECK(out(0, 0) == doctest::Approx(2.0 / std::sqrt(4.0 + 1e-5)));
  CHECK(out(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("maxpool ceil mode and gradients") {
  MaxPool2 pool;
  SeqBatch x;
  x.lengths = {3, 2};
  x.data.resize(5, 1);
  x.data << 1, 5, 2, 7, 3;
  SeqBatch y;
  MaxPool2::Cache cache;
  pool.Forward(x, &y, &cache);
  REQUIRE(y.lengths == std::vector<int>{2, 1});
  CHECK(y.data(0, 0) == 5);
  CHECK(y.data(1, 0) == 2);
  CHECK(y.data(2, 0) == 7);
  Matrix dy(3, 1), dx;
  dy << 1, 2, 3;
  pool.Backward(cache, dy, &dx);
  CHECK(dx(0, 0) == 0);
  CHECK(dx(1, 0) == 1);
  CHECK(dx(2, 0) == 2);
  CHECK(dx(3, 0) == 3);
  CHECK(dx(4, 0) == 0);
}

TEST_CASE("gru cell matches explicit recurrence") {
  Rng rng(5);
  const int H = 3, B = 2, T = 4;
  GruCell cell("g", H);
  cell.Init(&rng);
  Matrix gi = RandomMatrix(T * B, 3 * H, &rng);
  GruCell::Cache cache;
  cell.Forward(gi, B, false, &cache);
  Matrix h = Matrix::Zero(B, H);
  for (int t = 0; t < T; ++t) {
    cell.Step(gi.middleRows(t * B, B), &h);
    for (int b = 0; b < B; ++b)
      for (int j = 0; j < H; ++j) {
        CHECK(cache.h(t * B + b, j) == doctest::Approx(h(b, j)).epsilon(1e-5));
      }
  }
  // Scalar reference for the first step of sequence 0.
  for (int j = 0; j < H; ++j) {
    auto s = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    double r = s(gi(0, j) + cell.b_hh.value(0, j));
    double z = s(gi(0, H + j) + cell.b_hh.value(0, H + j));
    double n = std::tanh(gi(0, 2 * H + j) + r * cell.b_hh.value(0, 2 * H + j));
    CHECK(cache.h(0, j) == doctest::Approx((1 - z) * n).epsilon(1e-5));
  }
}

TEST_CASE("gru gradients forward and reverse") {
  Rng rng(6);
  const int H = 4, B = 3, T = 5;
  for (bool reverse : {false, true}) {
    GruLayer layer("g", 3, H);
    layer.Init(&rng);
    Matrix x = RandomMatrix(T * B, 3, &rng), w = RandomMatrix(T * B, H, &rng);
    auto loss = [&] {
      GruLayer::Cache c;
      layer.Forward(x, B, reverse, &c);
      return Project(c.cell.h, w);
    };
    GruLayer::Cache cache;
    layer.Forward(x, B, reverse, &cache);
    layer.Params().ZeroGrad();
    Matrix dx;
    layer.Backward(x, cache, w, &dx);
    CHECK(MaxGradError(loss, &layer.cell.w_hh.value, layer.cell.w_hh.grad, &rng) < kTol);
    CHECK(MaxGradError(loss, &layer.cell.b_hh.value, layer.cell.b_hh.grad, &rng) < kTol);
    CHECK(MaxGradError(loss, &layer.input.weight.value, layer.input.weight.grad, &rng) < kTol);
    CHECK(MaxGradError(loss, &x, dx, &rng) < kTol);
  }
}

TEST_CASE("bigru output layout and gradients") {
  Rng rng(7);
  const int H = 3, B = 2, T = 6;
  BiGru bi("b", 4, H);
  bi.Init(&rng);
  CHECK(bi.OutputDim() == 2 * H);
  Matrix x = RandomMatrix(T * B, 4, &rng), w = RandomMatrix(T * B, 2 * H, &rng);
  auto loss = [&] {
    BiGru::Cache c;
    Matrix y;
    bi.Forward(x, B, &y, &c);
    return Project(y, w);
  };
  BiGru::Cache cache;
  Matrix y;
  bi.Forward(x, B, &y, &cache);
  // The backward half at the last frame has seen exactly one input.
  Matrix h1 = Matrix::Zero(B, H), gi;
  bi.bwd.input.Forward(x.bottomRows(B), &gi);
  bi.bwd.cell.Step(gi, &h1);
  CHECK((y.bottomRows(B).rightCols(H) - h1).cwiseAbs().maxCoeff() < 1e-5);
  bi.Params().ZeroGrad();
  Matrix dx;
  bi.Backward(x, cache, w, &dx);
  CHECK(MaxGradError(loss, &bi.bwd.cell.w_hh.value, bi.bwd.cell.w_hh.grad, &rng) < kTol);
  CHECK(MaxGradError(loss, &bi.fwd.input.weight.value, bi.fwd.input.weight.grad, &rng) < kTol);
  CHECK(MaxGradError(loss, &x, dx, &rng) < kTol);
}

TEST_CASE("loss functions") {
  Rng rng(8);
  Matrix logits = Matrix::Zero(3, 256), d;
  std::vector<int> t{0, 17, 255};
  CHECK(SoftmaxCrossEntropy(logits, t, &d) == doctest::Approx(std::log(256.0)));
  logits = RandomMatrix(4, 5, &rng);
  t = {1, 0, 4, 2};
  SoftmaxCrossEntropy(logits, t, &d);
  auto ce = [&] { return SoftmaxCrossEntropy(logits, t, nullptr); };
  CHECK(MaxGradError(ce, &logits, d, &rng, 40, 1e-3) < kTol);

  Vector bl(5), bd;
  bl << -30.0f, -1.0f, 0.0f, 2.0f, 40.0f;
  std::vector<int> bt{0, 1, 0, 1, 1};
  double l = SigmoidBinaryCrossEntropy(bl, bt, &bd);
  double ref = 0;
  for (int i = 0; i < 5; ++i) {
    double p = 1.0 / (1.0 + std::exp(-static_cast<double>(bl[i])));
    ref -= bt[i] ? std::log(p) : std::log1p(-p);
  }
  CHECK(l == doctest::Approx(ref / 5).epsilon(1e-6));
  CHECK(std::isfinite(l));
  Matrix blm = bl, bdm = bd;
  auto bce = [&] {
    Vector v = blm.col(0);
    return SigmoidBinaryCrossEntropy(v, bt, nullptr);
  };
  CHECK(MaxGradError(bce, &blm, bdm, &rng, 40, 1e-3) < kTol);
}

TEST_CASE("adam moves parameters against the gradient") {
  Param p("p", 1, 2);
  p.value << 1.0f, -1.0f;
  p.grad << 0.5f, -2.0f;
  ParamSet s;
  s.Add(&p);
  Adam opt(s, AdamOptions{});
  opt.Step();
  CHECK(p.value(0, 0) == doctest::Approx(1.0 - 1e-3).epsilon(1e-5));
  CHECK(p.value(0, 1) == doctest::Approx(-1.0 + 1e-3).epsilon(1e-5));
  p.grad << 3.0f, 4.0f;
  CHECK(s.ClipGradNorm(1.0) == doctest::Approx(5.0));
  CHECK(p.grad.norm() == doctest::Approx(1.0));
}

}  // namespace vqanon
