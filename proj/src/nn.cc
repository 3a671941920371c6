// nn.cc

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

#include "vqanon/nn.h"

#include <algorithm>
#include <cmath>

namespace vqanon {

void ParamSet::ZeroGrad() {
  for (Param *p : params_) p->ZeroGrad();
}

double ParamSet::ClipGradNorm(double max_norm) {
  double sq = 0.0;
  for (Param *p : params_)
    if (p->trainable) sq += p->grad.cast<double>().squaredNorm();
  double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    float scale = static_cast<float>(max_norm / norm);
    for (Param *p : params_)
      if (p->trainable) p->grad *= scale;
  }
  return norm;
}

size_t ParamSet::NumValues() const {
  size_t n = 0;
  for (const Param *p : params_) n += static_cast<size_t>(p->value.size());
  return n;
}

void InitUniform(Param *p, double bound, Rng *rng) {
  for (Eigen::Index i = 0; i < p->value.size(); ++i)
    p->value.data()[i] = static_cast<BaseFloat>(rng->Uniform(-bound, bound));
}

Adam::Adam(ParamSet params, const AdamOptions &opts)
    : params_(std::move(params)), opts_(opts) {
  for (Param *p : params_.params()) {
    p->adam_m = Matrix::Zero(p->value.rows(), p->value.cols());
    p->adam_v = Matrix::Zero(p->value.rows(), p->value.cols());
  }
}

void Adam::Step() {
  ++t_;
  const double bc1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
  const float b1 = static_cast<float>(opts_.beta1), b2 = static_cast<float>(opts_.beta2);
  const float step = static_cast<float>(opts_.learning_rate / bc1);
  const float inv_bc2 = static_cast<float>(1.0 / bc2);
  const float eps = static_cast<float>(opts_.epsilon);
  for (Param *p : params_.params()) {
    if (!p->trainable) continue;
    p->adam_m = b1 * p->adam_m + (1.0f - b1) * p->grad;
    p->adam_v = b2 * p->adam_v + (1.0f - b2) * p->grad.cwiseAbs2();
    p->value.array() -=
        step * p->adam_m.array() / ((p->adam_v.array() * inv_bc2).sqrt() + eps);
  }
}

// ---------------------------------------------------------------- Linear

Linear::Linear(const std::string &name, int in, int out, bool bias)
    : weight(name + ".weight", out, in), bias(name + ".bias", 1, bias ? out : 0),
      has_bias(bias) {}

void Linear::Init(Rng *rng) {
  double bound = 1.0 / std::sqrt(static_cast<double>(InputDim()));
  InitUniform(&weight, bound, rng);
  if (has_bias) InitUniform(&bias, bound, rng);
}

void Linear::Forward(const Matrix &x, Matrix *y) const {
  if (x.cols() != weight.value.cols())
    throw ShapeError(weight.name + ": input width " + std::to_string(x.cols()) +
                     " != " + std::to_string(weight.value.cols()));
  y->noalias() = x * weight.value.transpose();
  if (has_bias) y->rowwise() += bias.value.row(0);
}

void Linear::Backward(const Matrix &x, const Matrix &dy, Matrix *dx) {
  weight.grad.noalias() += dy.transpose() * x;
  if (has_bias) bias.grad.row(0) += dy.colwise().sum();
  if (dx) dx->noalias() = dy * weight.value;
}

ParamSet Linear::Params() {
  ParamSet s;
  s.Add(&weight);
  if (has_bias) s.Add(&bias);
  return s;
}

// ---------------------------------------------------------------- SeqBatch

std::vector<int> SeqBatch::Offsets() const {
  std::vector<int> off(lengths.size() + 1, 0);
  for (size_t i = 0; i < lengths.size(); ++i) off[i + 1] = off[i] + lengths[i];
  return off;
}

// ---------------------------------------------------------------- Conv1d

Conv1d::Conv1d(const std::string &name, int in, int out, int k, int s, int p, int d)
    : weight(name + ".weight", out, k * in), bias(name + ".bias", 1, out),
      in_channels(in), out_channels(out), kernel(k), stride(s), padding(p),
      dilation(d) {}

void Conv1d::Init(Rng *rng) {
  double bound = 1.0 / std::sqrt(static_cast<double>(kernel * in_channels));
  InitUniform(&weight, bound, rng);
  InitUniform(&bias, bound, rng);
}

int Conv1d::OutputLength(int t) const {
  int span = dilation * (kernel - 1) + 1;
  int padded = t + 2 * padding;
  if (padded < span) return 0;
  return (padded - span) / stride + 1;
}

void Conv1d::Forward(const SeqBatch &x, SeqBatch *y, Cache *cache) const {
  if (x.data.cols() != in_channels)
    throw ShapeError(weight.name + ": expected " + std::to_string(in_channels) +
                     " input channels, got " + std::to_string(x.data.cols()));
  std::vector<int> out_len(x.lengths.size());
  int total = 0;
  for (size_t i = 0; i < x.lengths.size(); ++i) {
    out_len[i] = OutputLength(x.lengths[i]);
    if (out_len[i] <= 0)
      throw LengthError(weight.name + ": sequence of length " +
                        std::to_string(x.lengths[i]) + " is shorter than the kernel");
    total += out_len[i];
  }
  Matrix cols = Matrix::Zero(total, kernel * in_channels);
  int in_off = 0, out_off = 0;
  for (size_t i = 0; i < x.lengths.size(); ++i) {
    for (int t = 0; t < out_len[i]; ++t) {
      for (int k = 0; k < kernel; ++k) {
        int src = t * stride - padding + k * dilation;
        if (src < 0 || src >= x.lengths[i]) continue;
        cols.row(out_off + t).segment(k * in_channels, in_channels) =
            x.data.row(in_off + src);
      }
    }
    in_off += x.lengths[i];
    out_off += out_len[i];
  }
  y->data.noalias() = cols * weight.value.transpose();
  y->data.rowwise() += bias.value.row(0);
  y->lengths = out_len;
  if (cache) {
    cache->columns = std::move(cols);
    cache->in_lengths = x.lengths;
  }
}

void Conv1d::Backward(const Cache &cache, const Matrix &dy, Matrix *dx) {
  weight.grad.noalias() += dy.transpose() * cache.columns;
  bias.grad.row(0) += dy.colwise().sum();
  if (!dx) return;
  Matrix dcols = dy * weight.value;
  int total_in = 0;
  for (int l : cache.in_lengths) total_in += l;
  *dx = Matrix::Zero(total_in, in_channels);
  int in_off = 0, out_off = 0;
  for (int len : cache.in_lengths) {
    int n_out = OutputLength(len);
    for (int t = 0; t < n_out; ++t) {
      for (int k = 0; k < kernel; ++k) {
        int src = t * stride - padding + k * dilation;
        if (src < 0 || src >= len) continue;
        dx->row(in_off + src) += dcols.row(out_off + t).segment(k * in_channels, in_channels);
      }
    }
    in_off += len;
    out_off += n_out;
  }
}

ParamSet Conv1d::Params() {
  ParamSet s;
  s.Add(&weight);
  s.Add(&bias);
  return s;
}

// ---------------------------------------------------------------- BatchNorm

BatchNorm::BatchNorm(const std::string &name, int channels)
    : gamma(name + ".gamma", 1, channels), beta(name + ".beta", 1, channels),
      running_mean(name + ".running_mean", 1, channels, false),
      running_var(name + ".running_var", 1, channels, false) {
  gamma.value.setOnes();
  running_var.value.setOnes();
}

void BatchNorm::Forward(const Matrix &x, bool training, Matrix *y, Cache *cache) {
  RowVector mean, var;
  if (training) {
    mean = x.colwise().mean();
    var = (x.rowwise() - mean).cwiseAbs2().colwise().mean();
    const float m = static_cast<float>(momentum);
    running_mean.value.row(0) = (1 - m) * running_mean.value.row(0) + m * mean;
    running_var.value.row(0) = (1 - m) * running_var.value.row(0) + m * var;
  } else {
    mean = running_mean.value.row(0);
    var = running_var.value.row(0);
  }
  RowVector inv_std = (var.array() + static_cast<float>(epsilon)).rsqrt().matrix();
  Matrix norm = (x.rowwise() - mean).array().rowwise() * inv_std.array();
  *y = (norm.array().rowwise() * gamma.value.row(0).array()).rowwise() +
       beta.value.row(0).array();
  if (cache) {
    cache->normalized = std::move(norm);
    cache->inv_std = inv_std;
  }
}

void BatchNorm::Backward(const Cache &cache, const Matrix &dy, Matrix *dx) {
  const Matrix &xhat = cache.normalized;
  gamma.grad.row(0) += (dy.array() * xhat.array()).matrix().colwise().sum();
  beta.grad.row(0) += dy.colwise().sum();
  if (!dx) return;
  const float n = static_cast<float>(dy.rows());
  Matrix dxhat = dy.array().rowwise() * gamma.value.row(0).array();
  RowVector sum_dxhat = dxhat.colwise().sum();
  RowVector sum_dxhat_xhat = (dxhat.array() * xhat.array()).matrix().colwise().sum();
  Matrix t = (dxhat * n).rowwise() - sum_dxhat;
  t -= (xhat.array().rowwise() * sum_dxhat_xhat.array()).matrix();
  *dx = t.array().rowwise() * (cache.inv_std.array() / n);
}

ParamSet BatchNorm::Params() {
  ParamSet s;
  s.Add(&gamma);
  s.Add(&beta);
  s.Add(&running_mean);
  s.Add(&running_var);
  return s;
}

// ---------------------------------------------------------------- MaxPool2

void MaxPool2::Forward(const SeqBatch &x, SeqBatch *y, Cache *cache) const {
  const int cols = static_cast<int>(x.data.cols());
  std::vector<int> out_len(x.lengths.size());
  int total = 0;
  for (size_t i = 0; i < x.lengths.size(); ++i) total += out_len[i] = OutputLength(x.lengths[i]);
  Matrix out(total, cols);
  std::vector<int> arg(static_cast<size_t>(total) * cols);
  int in_off = 0, out_off = 0;
  for (size_t i = 0; i < x.lengths.size(); ++i) {
    for (int t = 0; t < out_len[i]; ++t) {
      int a = in_off + 2 * t;
      bool pair = 2 * t + 1 < x.lengths[i];
      for (int c = 0; c < cols; ++c) {
        int src = a;
        if (pair && x.data(a + 1, c) > x.data(a, c)) src = a + 1;
        out(out_off + t, c) = x.data(src, c);
        arg[static_cast<size_t>(out_off + t) * cols + c] = src;
      }
    }
    in_off += x.lengths[i];
    out_off += out_len[i];
  }
  y->data = std::move(out);
  y->lengths = out_len;
  if (cache) {
    cache->argmax = std::move(arg);
    cache->in_rows = in_off;
    cache->cols = cols;
  }
}

void MaxPool2::Backward(const Cache &cache, const Matrix &dy, Matrix *dx) const {
  *dx = Matrix::Zero(cache.in_rows, cache.cols);
  for (Eigen::Index r = 0; r < dy.rows(); ++r)
    for (int c = 0; c < cache.cols; ++c)
      (*dx)(cache.argmax[static_cast<size_t>(r) * cache.cols + c], c) += dy(r, c);
}

void Relu(Matrix *x) { *x = x->cwiseMax(0.0f); }

void ReluBackward(const Matrix &y, Matrix *dy) {
  *dy = (y.array() > 0.0f).select(dy->array(), 0.0f);
}

// ---------------------------------------------------------------- GRU

GruCell::GruCell(const std::string &name, int hidden)
    : w_hh(name + ".w_hh", 3 * hidden, hidden), b_hh(name + ".b_hh", 1, 3 * hidden),
      hidden_(hidden) {}

void GruCell::Init(Rng *rng) {
  double bound = 1.0 / std::sqrt(static_cast<double>(hidden_));
  InitUniform(&w_hh, bound, rng);
  InitUniform(&b_hh, bound, rng);
}

namespace {
inline void SigmoidInPlace(Eigen::Ref<Matrix> m) {
  m = (1.0f + (-m.array()).exp()).inverse().matrix();
}
}  // namespace

void GruCell::Forward(const Matrix &gi, int batch, bool reverse, Cache *c) const {
  const int H = hidden_;
  if (gi.cols() != 3 * H) throw ShapeError(w_hh.name + ": gate input width mismatch");
  if (batch <= 0 || gi.rows() % batch != 0)
    throw ShapeError(w_hh.name + ": rows not a multiple of the batch size");
  const int T = static_cast<int>(gi.rows()) / batch;
  c->batch = batch;
  c->reverse = reverse;
  c->h.resize(gi.rows(), H);
  c->r.resize(gi.rows(), H);
  c->z.resize(gi.rows(), H);
  c->n.resize(gi.rows(), H);
  c->gh_n.resize(gi.rows(), H);
  Matrix h = Matrix::Zero(batch, H), gh(batch, 3 * H);
  for (int step = 0; step < T; ++step) {
    const int t = reverse ? T - 1 - step : step;
    const int row = t * batch;
    gh.noalias() = h * w_hh.value.transpose();
    gh.rowwise() += b_hh.value.row(0);
    auto gi_t = gi.middleRows(row, batch);
    auto r = c->r.middleRows(row, batch);
    auto z = c->z.middleRows(row, batch);
    auto n = c->n.middleRows(row, batch);
    r = gi_t.leftCols(H) + gh.leftCols(H);
    SigmoidInPlace(r);
    z = gi_t.middleCols(H, H) + gh.middleCols(H, H);
    SigmoidInPlace(z);
    c->gh_n.middleRows(row, batch) = gh.rightCols(H);
    n = (gi_t.rightCols(H).array() + r.array() * gh.rightCols(H).array()).tanh().matrix();
    h = ((1.0f - z.array()) * n.array() + z.array() * h.array()).matrix();
    c->h.middleRows(row, batch) = h;
  }
}

void GruCell::Backward(const Cache &c, const Matrix &dh_out, Matrix *dgi) {
  const int H = hidden_, B = c.batch;
  const int T = static_cast<int>(c.h.rows()) / B;
  dgi->resize(c.h.rows(), 3 * H);
  Matrix dgh_all(c.h.rows(), 3 * H);
  Matrix h_prev_all(c.h.rows(), H);
  Matrix carry = Matrix::Zero(B, H);
  for (int step = T - 1; step >= 0; --step) {
    const int t = c.reverse ? T - 1 - step : step;
    const int row = t * B;
    const int prev_t = c.reverse ? t + 1 : t - 1;
    const bool has_prev = step > 0;
    Matrix h_prev = has_prev ? Matrix(c.h.middleRows(prev_t * B, B)) : Matrix::Zero(B, H);
    auto r = c.r.middleRows(row, B).array();
    auto z = c.z.middleRows(row, B).array();
    auto n = c.n.middleRows(row, B).array();
    auto ghn = c.gh_n.middleRows(row, B).array();
    Array dh = (dh_out.middleRows(row, B) + carry).array();
    Array dn_pre = dh * (1.0f - z) * (1.0f - n * n);
    Array dz_pre = dh * (h_prev.array() - n) * z * (1.0f - z);
    Array dr_pre = dn_pre * ghn * r * (1.0f - r);
    auto dgi_t = dgi->middleRows(row, B);
    dgi_t.leftCols(H) = dr_pre.matrix();
    dgi_t.middleCols(H, H) = dz_pre.matrix();
    dgi_t.rightCols(H) = dn_pre.matrix();
    auto dgh_t = dgh_all.middleRows(row, B);
    dgh_t.leftCols(H) = dr_pre.matrix();
    dgh_t.middleCols(H, H) = dz_pre.matrix();
    dgh_t.rightCols(H) = (dn_pre * r).matrix();
    h_prev_all.middleRows(row, B) = h_prev;
    carry = (dh * z).matrix();
    carry.noalias() += dgh_t * w_hh.value;
  }
  w_hh.grad.noalias() += dgh_all.transpose() * h_prev_all;
  b_hh.grad.row(0) += dgh_all.colwise().sum();
}

void GruCell::Step(const Matrix &gi, Matrix *h) const {
  const int H = hidden_;
  Matrix gh = (*h) * w_hh.value.transpose();
  gh.rowwise() += b_hh.value.row(0);
  Matrix r = gi.leftCols(H) + gh.leftCols(H);
  SigmoidInPlace(r);
  Matrix z = gi.middleCols(H, H) + gh.middleCols(H, H);
  SigmoidInPlace(z);
  Array n =
      (gi.rightCols(H).array() + r.array() * gh.rightCols(H).array()).tanh();
  *h = ((1.0f - z.array()) * n + z.array() * h->array()).matrix();
}

ParamSet GruCell::Params() {
  ParamSet s;
  s.Add(&w_hh);
  s.Add(&b_hh);
  return s;
}

GruLayer::GruLayer(const std::string &name, int in, int hidden)
    : input(name + ".input", in, 3 * hidden), cell(name, hidden) {}

void GruLayer::Init(Rng *rng) {
  // PyTorch-style bound 1/sqrt(H) for the input map as well.
  double bound = 1.0 / std::sqrt(static_cast<double>(cell.hidden()));
  InitUniform(&input.weight, bound, rng);
  InitUniform(&input.bias, bound, rng);
  cell.Init(rng);
}

void GruLayer::Forward(const Matrix &x, int batch, bool reverse, Cache *cache) const {
  Matrix gi;
  input.Forward(x, &gi);
  cell.Forward(gi, batch, reverse, &cache->cell);
}

void GruLayer::Backward(const Matrix &x, const Cache &cache, const Matrix &dh, Matrix *dx) {
  Matrix dgi;
  cell.Backward(cache.cell, dh, &dgi);
  input.Backward(x, dgi, dx);
}

ParamSet GruLayer::Params() {
  ParamSet s = input.Params();
  s.Add(cell.Params());
  return s;
}

BiGru::BiGru(const std::string &name, int in, int hidden)
    : fwd(name + ".fwd", in, hidden), bwd(name + ".bwd", in, hidden) {}

void BiGru::Init(Rng *rng) {
  fwd.Init(rng);
  bwd.Init(rng);
}

void BiGru::Forward(const Matrix &x, int batch, Matrix *y, Cache *cache) const {
  fwd.Forward(x, batch, false, &cache->f);
  bwd.Forward(x, batch, true, &cache->b);
  const int H = fwd.cell.hidden();
  y->resize(x.rows(), 2 * H);
  y->leftCols(H) = cache->f.cell.h;
  y->rightCols(H) = cache->b.cell.h;
}

void BiGru::Backward(const Matrix &x, const Cache &cache, const Matrix &dy, Matrix *dx) {
  const int H = fwd.cell.hidden();
  Matrix dxf, dxb;
  fwd.Backward(x, cache.f, dy.leftCols(H), dx ? &dxf : nullptr);
  bwd.Backward(x, cache.b, dy.rightCols(H), dx ? &dxb : nullptr);
  if (dx) *dx = dxf + dxb;
}

ParamSet BiGru::Params() {
  ParamSet s = fwd.Params();
  s.Add(bwd.Params());
  return s;
}

// ---------------------------------------------------------------- losses

void LogSoftmaxRows(const Matrix &logits, Matrix *out) {
  Vector mx = logits.rowwise().maxCoeff();
  Matrix shifted = logits.colwise() - mx;
  Vector lse = shifted.array().exp().rowwise().sum().log().matrix();
  *out = shifted.colwise() - lse;
}

double SoftmaxCrossEntropy(const Matrix &logits, const std::vector<int> &targets,
                           Matrix *dlogits) {
  if (static_cast<Eigen::Index>(targets.size()) != logits.rows())
    throw ShapeError("cross entropy: target count mismatch");
  const Eigen::Index n = logits.rows(), k = logits.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  double loss = 0.0;
  if (dlogits) dlogits->resize(n, k);
  Eigen::ArrayXd row(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (targets[i] < 0 || targets[i] >= k) throw DomainError("cross entropy: target out of range");
    row = logits.row(i).cast<double>().transpose().array();
    double mx = row.maxCoeff();
    row = (row - mx).exp();
    double sum = row.sum();
    loss += std::log(sum) + mx - static_cast<double>(logits(i, targets[i]));
    if (dlogits) {
      row *= inv_n / sum;
      row[targets[i]] -= inv_n;
      dlogits->row(i) = row.cast<BaseFloat>().transpose().matrix();
    }
  }
  return loss * inv_n;
}

double SigmoidBinaryCrossEntropy(const Vector &logits, const std::vector<int> &targets,
                                 Vector *dlogits) {
  if (static_cast<Eigen::Index>(targets.size()) != logits.size())
    throw ShapeError("binary cross entropy: target count mismatch");
  const double inv_n = 1.0 / static_cast<double>(logits.size());
  double loss = 0.0;
  if (dlogits) dlogits->resize(logits.size());
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    double x = logits[i];
    // log(1 + e^-|x|) form avoids overflow.
    double softplus = std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
    loss += softplus - (targets[i] ? x : 0.0);
    if (dlogits) (*dlogits)[i] = static_cast<BaseFloat>((Sigmoid(x) - targets[i]) * inv_n);
  }
  return loss * inv_n;
}

}  // namespace vqanon
