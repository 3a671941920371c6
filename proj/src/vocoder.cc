// vocoder.cc

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

#include "vqanon/vocoder.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vqanon/mulaw.h"

namespace vqanon {

namespace {

const double kLogMu1 = std::log1p(255.0);

inline double Compress(double p) {
  double a = std::min(std::fabs(p), 1.0);
  double c = std::log1p(255.0 * a) / kLogMu1;
  return p < 0 ? -c : c;
}

/// d Compress / dp; zero where the input is clamped.
inline double CompressDeriv(double p) {
  double a = std::fabs(p);
  if (a >= 1.0) return 0.0;
  return 255.0 / ((1.0 + 255.0 * a) * kLogMu1);
}

const std::vector<double> &ClassCentres() {
  static const std::vector<double> centres = [] {
    std::vector<double> c(kMuLawLevels);
    for (int j = 0; j < kMuLawLevels; ++j) c[j] = 2.0 * (j + 0.5) / kMuLawLevels - 1.0;
    return c;
  }();
  return centres;
}

constexpr int kSilenceLevel = 128;

}  // namespace

void VocoderOptions::Validate() const {
  if (cond_dim <= 0) throw ValidationError("vocoder.cond_dim", "must be positive");
  if (hidden <= 0) throw ValidationError("vocoder.hidden", "must be positive");
  if (upsample <= 0) throw ValidationError("upsample", "must be positive");
  if (lp_order <= 0) throw ValidationError("vocoder.lp_order", "must be positive");
  if (lp_loss_weight < 0) throw ValidationError("vocoder.lp_loss_weight", "must be >= 0");
}

struct Vocoder::Cache {
  int batch = 0, n_frames = 0, n_samples = 0;
  std::vector<Matrix> smoothed;  // per crop, full utterance
  Matrix frames;                 // [B*W x C] crop rows, crop-major
  Matrix A;                      // [B*W x P]
  std::vector<std::vector<BaseFloat>> y_store;
  std::vector<int> prev, target;  // per row (time-major)
  Vector p, cp;                   // per row
  Matrix gi1;
  GruCell::Cache g1;
  GruLayer::Cache g2;
  Matrix f1;  // post-ReLU
  Matrix logits;
};

Vocoder::Vocoder(const VocoderOptions &opts)
    : smooth("vocoder.smooth", 3, opts.cond_dim),
      cond_in("vocoder.cond_in", opts.cond_dim, 3 * opts.hidden),
      level_embed("vocoder.level_embed", kMuLawLevels, 3 * opts.hidden),
      lp_gate("vocoder.lp_gate", 1, 3 * opts.hidden),
      lp("vocoder.lp", opts.cond_dim, opts.lp_order),
      gru1("vocoder.gru1", opts.hidden),
      gru2("vocoder.gru2", opts.hidden, opts.hidden),
      fc1("vocoder.fc1", opts.hidden, opts.hidden),
      fc2("vocoder.fc2", opts.hidden, kMuLawLevels),
      log_sharpness("vocoder.log_sharpness", 1, 1),
      opts_(opts) {
  opts.Validate();
  smooth.value.row(1).setOnes();
  log_sharpness.value(0, 0) = static_cast<BaseFloat>(opts.init_log_sharpness);
}

void Vocoder::Init(Rng *rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(opts_.hidden));
  smooth.value.setZero();
  smooth.value.row(1).setOnes();
  cond_in.Init(rng);
  InitUniform(&level_embed, bound, rng);
  InitUniform(&lp_gate, bound, rng);
  lp.weight.value.setZero();
  lp.bias.value.setZero();
  gru1.Init(rng);
  gru2.Init(rng);
  fc1.Init(rng);
  fc2.Init(rng);
  log_sharpness.value(0, 0) = static_cast<BaseFloat>(opts_.init_log_sharpness);
  trained_ = false;
}

ParamSet Vocoder::Params() {
  ParamSet s;
  s.Add(&smooth);
  s.Add(cond_in.Params());
  s.Add(&level_embed);
  s.Add(&lp_gate);
  s.Add(lp.Params());
  s.Add(gru1.Params());
  s.Add(gru2.Params());
  s.Add(fc1.Params());
  s.Add(fc2.Params());
  s.Add(&log_sharpness);
  return s;
}

Matrix Vocoder::SmoothFrames(const Matrix &cond) const {
  if (cond.cols() != opts_.cond_dim)
    throw ShapeError("vocoder: conditioning width " + std::to_string(cond.cols()) +
                     " != " + std::to_string(opts_.cond_dim));
  const int T = static_cast<int>(cond.rows());
  Matrix out = cond.array().rowwise() * smooth.value.row(1).array();
  if (T > 1) {
    out.bottomRows(T - 1).array() +=
        cond.topRows(T - 1).array().rowwise() * smooth.value.row(0).array();
    out.topRows(T - 1).array() +=
        cond.bottomRows(T - 1).array().rowwise() * smooth.value.row(2).array();
  }
  return out;
}

void Vocoder::SmoothBackward(const Matrix &cond, const Matrix &ds, Matrix *dcond) {
  const int T = static_cast<int>(cond.rows());
  smooth.grad.row(1) += (ds.array() * cond.array()).matrix().colwise().sum();
  *dcond = ds.array().rowwise() * smooth.value.row(1).array();
  if (T > 1) {
    smooth.grad.row(0) +=
        (ds.bottomRows(T - 1).array() * cond.topRows(T - 1).array()).matrix().colwise().sum();
    smooth.grad.row(2) +=
        (ds.topRows(T - 1).array() * cond.bottomRows(T - 1).array()).matrix().colwise().sum();
    dcond->topRows(T - 1).array() +=
        ds.bottomRows(T - 1).array().rowwise() * smooth.value.row(0).array();
    dcond->bottomRows(T - 1).array() +=
        ds.topRows(T - 1).array().rowwise() * smooth.value.row(2).array();
  }
}

Vocoder::Loss Vocoder::Forward(const std::vector<Crop> &crops, int W, Cache *c,
                               Matrix *logits_out) const {
  const int B = static_cast<int>(crops.size());
  const int UP = opts_.upsample, P = opts_.lp_order, H = opts_.hidden;
  if (B == 0 || W <= 0) throw ShapeError("vocoder: empty batch");
  const int N = W * UP;
  const std::vector<BaseFloat> &table = MuLawDecodeTable();
  c->batch = B;
  c->n_frames = W;
  c->n_samples = N;
  c->smoothed.resize(B);
  c->frames.resize(B * W, opts_.cond_dim);
  c->y_store.assign(B, {});
  for (int b = 0; b < B; ++b) {
    const Crop &cr = crops[b];
    const int T = static_cast<int>(cr.cond->rows());
    if (static_cast<int>(cr.levels->size()) != T * UP)
      throw ShapeError("vocoder: " + std::to_string(cr.levels->size()) +
                       " target levels for " + std::to_string(T) + " frames x " +
                       std::to_string(UP));
    if (cr.start_frame < 0 || cr.start_frame + W > T)
      throw ShapeError("vocoder: crop outside the utterance");
    c->smoothed[b] = SmoothFrames(*cr.cond);
    c->frames.middleRows(b * W, W) = c->smoothed[b].middleRows(cr.start_frame, W);
    std::vector<BaseFloat> &y = c->y_store[b];
    y.resize(cr.levels->size());
    for (size_t i = 0; i < y.size(); ++i) y[i] = table[(*cr.levels)[i]];
  }
  Matrix U;
  cond_in.Forward(c->frames, &U);
  lp.Forward(c->frames, &c->A);

  const int R = N * B;
  c->prev.resize(R);
  c->target.resize(R);
  c->p.resize(R);
  c->cp.resize(R);
  c->gi1.resize(R, 3 * H);
  double mse = 0.0;
  for (int n = 0; n < N; ++n) {
    const int w = n / UP;
    for (int b = 0; b < B; ++b) {
      const int r = n * B + b;
      const int g = crops[b].start_frame * UP + n;
      const std::vector<int> &lev = *crops[b].levels;
      const std::vector<BaseFloat> &y = c->y_store[b];
      const BaseFloat *a = c->A.row(b * W + w).data();
      double p = 0.0;
      const int kmax = std::min(P, g);
      for (int k = 0; k < kmax; ++k) p += static_cast<double>(a[k]) * y[g - 1 - k];
      c->p[r] = static_cast<BaseFloat>(p);
      c->cp[r] = static_cast<BaseFloat>(Compress(p));
      c->prev[r] = g > 0 ? lev[g - 1] : kSilenceLevel;
      c->target[r] = lev[g];
      double e = p - y[g];
      mse += e * e;
      c->gi1.row(r) = level_embed.value.row(c->prev[r]) + U.row(b * W + w) +
                      c->cp[r] * lp_gate.value.row(0);
    }
  }
  gru1.Forward(c->gi1, B, false, &c->g1);
  gru2.Forward(c->g1.h, B, false, &c->g2);
  fc1.Forward(c->g2.cell.h, &c->f1);
  Relu(&c->f1);
  fc2.Forward(c->f1, &c->logits);
  const std::vector<double> &u = ClassCentres();
  const double S = std::exp(static_cast<double>(log_sharpness.value(0, 0)));
  for (int r = 0; r < R; ++r) {
    BaseFloat *row = c->logits.row(r).data();
    const double cp = c->cp[r];
    for (int j = 0; j < kMuLawLevels; ++j) {
      double d = u[j] - cp;
      row[j] -= static_cast<BaseFloat>(S * d * d);
    }
  }
  Loss loss;
  loss.nll = SoftmaxCrossEntropy(c->logits, c->target, nullptr);
  loss.lp_mse = mse / R;
  if (logits_out) *logits_out = c->logits;
  return loss;
}

Vocoder::Loss Vocoder::ForwardBackward(const std::vector<Crop> &crops, int W,
                                       std::vector<Matrix> *dcond) {
  Cache c;
  Loss loss = Forward(crops, W, &c, nullptr);
  const int B = c.batch, N = c.n_samples, R = N * B, UP = opts_.upsample,
            P = opts_.lp_order;
  Matrix dlogits;
  SoftmaxCrossEntropy(c.logits, c.target, &dlogits);

  const std::vector<double> &u = ClassCentres();
  const double S = std::exp(static_cast<double>(log_sharpness.value(0, 0)));
  std::vector<double> dcp(R, 0.0);
  double dlog_s = 0.0;
  for (int r = 0; r < R; ++r) {
    const BaseFloat *dl = dlogits.row(r).data();
    const double cp = c.cp[r];
    double acc_c = 0.0, acc_s = 0.0;
    for (int j = 0; j < kMuLawLevels; ++j) {
      double d = u[j] - cp;
      acc_c += dl[j] * d;
      acc_s += dl[j] * d * d;
    }
    dcp[r] = 2.0 * S * acc_c;
    dlog_s -= S * acc_s;
  }
  log_sharpness.grad(0, 0) += static_cast<BaseFloat>(dlog_s);

  Matrix df1;
  fc2.Backward(c.f1, dlogits, &df1);
  ReluBackward(c.f1, &df1);
  Matrix dh2;
  fc1.Backward(c.g2.cell.h, df1, &dh2);
  Matrix dh1;
  gru2.Backward(c.g1.h, c.g2, dh2, &dh1);
  Matrix dgi1;
  gru1.Backward(c.g1, dh1, &dgi1);

  Matrix dU = Matrix::Zero(B * W, 3 * opts_.hidden);
  Matrix dA = Matrix::Zero(B * W, P);
  const double lp_scale = 2.0 * opts_.lp_loss_weight / R;
  RowVector dgate = RowVector::Zero(3 * opts_.hidden);
  for (int n = 0; n < N; ++n) {
    const int w = n / UP;
    for (int b = 0; b < B; ++b) {
      const int r = n * B + b;
      const int g = crops[b].start_frame * UP + n;
      const auto drow = dgi1.row(r);
      level_embed.grad.row(c.prev[r]) += drow;
      dU.row(b * W + w) += drow;
      dgate += c.cp[r] * drow;
      double dc = dcp[r] + static_cast<double>(drow.dot(lp_gate.value.row(0)));
      const std::vector<BaseFloat> &y = c.y_store[b];
      double dp = dc * CompressDeriv(c.p[r]) + lp_scale * (static_cast<double>(c.p[r]) - y[g]);
      BaseFloat *da = dA.row(b * W + w).data();
      const int kmax = std::min(P, g);
      for (int k = 0; k < kmax; ++k) da[k] += static_cast<BaseFloat>(dp * y[g - 1 - k]);
    }
  }
  lp_gate.grad.row(0) += dgate;

  Matrix dframes, dframes_lp;
  cond_in.Backward(c.frames, dU, &dframes);
  lp.Backward(c.frames, dA, &dframes_lp);
  dframes += dframes_lp;
  if (dcond) dcond->resize(B);
  for (int b = 0; b < B; ++b) {
    const Matrix &cond = *crops[b].cond;
    Matrix ds = Matrix::Zero(cond.rows(), cond.cols());
    ds.middleRows(crops[b].start_frame, W) = dframes.middleRows(b * W, W);
    Matrix dc;
    SmoothBackward(cond, ds, &dc);
    if (dcond) (*dcond)[b] = std::move(dc);
  }
  return loss;
}

Vocoder::Loss Vocoder::Evaluate(const std::vector<Crop> &crops, int W) const {
  Cache c;
  return Forward(crops, W, &c, nullptr);
}

DecodeTrainResult Vocoder::DecodeTrain(const ConditionedSequence &cond,
                                       const std::vector<int> &target_levels) const {
  const size_t expected = static_cast<size_t>(cond.NumFrames()) * opts_.upsample;
  if (target_levels.size() != expected)
    throw ShapeError("decode_train: " + std::to_string(target_levels.size()) +
                     " target levels, expected " + std::to_string(expected));
  for (int l : target_levels)
    if (l < 0 || l >= kMuLawLevels) throw DomainError("decode_train: level out of range");
  Cache c;
  DecodeTrainResult out;
  Crop crop{&cond.frames, &target_levels, 0};
  out.nll = Forward({crop}, cond.NumFrames(), &c, &out.logits).nll;
  return out;
}

std::vector<std::vector<int>> Vocoder::GenerateLevels(const std::vector<const Matrix *> &conds,
                                                      const std::vector<uint64_t> &seeds,
                                                      SamplingMode mode) const {
  if (!trained_) throw StateError("vocoder: parameters are not trained or loaded");
  if (conds.size() != seeds.size()) throw ShapeError("generate: one seed per utterance required");
  const int B = static_cast<int>(conds.size());
  const int UP = opts_.upsample, P = opts_.lp_order, H = opts_.hidden;
  const std::vector<BaseFloat> &table = MuLawDecodeTable();
  const std::vector<double> &u = ClassCentres();
  const double S = std::exp(static_cast<double>(log_sharpness.value(0, 0)));

  std::vector<Matrix> U(B), A(B);
  std::vector<int> len(B);
  int max_len = 0;
  for (int b = 0; b < B; ++b) {
    Matrix sm = SmoothFrames(*conds[b]);
    cond_in.Forward(sm, &U[b]);
    lp.Forward(sm, &A[b]);
    len[b] = static_cast<int>(conds[b]->rows()) * UP;
    max_len = std::max(max_len, len[b]);
  }
  std::vector<Rng> rngs;
  rngs.reserve(B);
  for (uint64_t s : seeds) rngs.emplace_back(s);
  std::vector<std::vector<int>> out(B);
  // History per utterance with P leading zeros; y[P + n] is sample n.
  std::vector<std::vector<BaseFloat>> hist(B);
  for (int b = 0; b < B; ++b) {
    out[b].reserve(len[b]);
    hist[b].assign(P + len[b], 0.0f);
  }
  std::vector<int> prev(B, kSilenceLevel);
  Matrix h1 = Matrix::Zero(B, H), h2 = Matrix::Zero(B, H);
  Matrix gi(B, 3 * H), gi2, f1, logits;
  std::vector<double> cp(B, 0.0);
  std::vector<double> probs(kMuLawLevels);
  for (int n = 0; n < max_len; ++n) {
    for (int b = 0; b < B; ++b) {
      if (n >= len[b]) {
        gi.row(b).setZero();
        continue;
      }
      const int w = n / UP;
      const BaseFloat *a = A[b].row(w).data();
      const BaseFloat *y = hist[b].data() + P + n - 1;  // y[-k] is sample n-1-k
      double p = 0.0;
      for (int k = 0; k < P; ++k) p += static_cast<double>(a[k]) * y[-k];
      cp[b] = Compress(p);
      gi.row(b) = level_embed.value.row(prev[b]) + U[b].row(w) +
                  static_cast<BaseFloat>(cp[b]) * lp_gate.value.row(0);
    }
    gru1.Step(gi, &h1);
    gru2.input.Forward(h1, &gi2);
    gru2.cell.Step(gi2, &h2);
    fc1.Forward(h2, &f1);
    Relu(&f1);
    fc2.Forward(f1, &logits);
    for (int b = 0; b < B; ++b) {
      if (n >= len[b]) continue;
      const BaseFloat *row = logits.row(b).data();
      int level = 0;
      if (mode == SamplingMode::kArgmax) {
        double best = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < kMuLawLevels; ++j) {
          double d = u[j] - cp[b];
          double v = row[j] - S * d * d;
          if (v > best) best = v, level = j;
        }
      } else {
        double mx = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < kMuLawLevels; ++j) {
          double d = u[j] - cp[b];
          probs[j] = row[j] - S * d * d;
          mx = std::max(mx, probs[j]);
        }
        double total = 0.0;
        for (int j = 0; j < kMuLawLevels; ++j) total += probs[j] = std::exp(probs[j] - mx);
        double target = rngs[b].Uniform() * total, acc = 0.0;
        level = kMuLawLevels - 1;
        for (int j = 0; j < kMuLawLevels; ++j) {
          acc += probs[j];
          if (acc > target) {
            level = j;
            break;
          }
        }
      }
      out[b].push_back(level);
      hist[b][P + n] = table[level];
      prev[b] = level;
    }
  }
  return out;
}

std::vector<BaseFloat> Vocoder::Generate(const ConditionedSequence &cond, uint64_t seed,
                                         SamplingMode mode) const {
  auto levels = GenerateLevels({&cond.frames}, {seed}, mode);
  return MuLawDecodeLevels(levels[0]);
}

}  // namespace vqanon
