// attackers.cc

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

#include "vqanon/attackers.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace vqanon {

// ---------------------------------------------------------------- front end

Matrix AttackerFrontEnd::Features(std::span<const BaseFloat> waveform) const {
  return ExtractFeatures(waveform, sample_rate, FeatureOptions::ForRate(sample_rate, n_mels))
      .frames;
}

FeatureNormalizer::FeatureNormalizer(const std::string &name, int dim)
    : mean(name + ".mean", 1, dim, false), inv_std(name + ".inv_std", 1, dim, false) {
  inv_std.value.setOnes();
}

void FeatureNormalizer::Fit(const std::vector<Matrix> &feats) {
  const int dim = static_cast<int>(mean.value.cols());
  Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(dim), sq = sum;
  double n = 0;
  for (const Matrix &f : feats) {
    if (f.cols() != dim) throw ShapeError("normalizer: feature width mismatch");
    sum += f.cast<double>().colwise().sum();
    sq += f.cast<double>().cwiseAbs2().colwise().sum();
    n += static_cast<double>(f.rows());
  }
  if (n < 2) throw DataError("normalizer: not enough frames");
  Eigen::RowVectorXd mu = sum / n;
  Eigen::RowVectorXd var = (sq / n - mu.cwiseAbs2()).cwiseMax(1e-8);
  mean.value.row(0) = mu.cast<BaseFloat>();
  inv_std.value.row(0) = var.cwiseSqrt().cwiseInverse().cast<BaseFloat>();
}

Matrix FeatureNormalizer::Apply(const Matrix &feats) const {
  if (feats.cols() != mean.value.cols()) throw ShapeError("normalizer: feature width mismatch");
  return (feats.rowwise() - mean.value.row(0)).array().rowwise() * inv_std.value.row(0).array();
}

ParamSet FeatureNormalizer::Params() {
  ParamSet s;
  s.Add(&mean);
  s.Add(&inv_std);
  return s;
}

namespace {

SeqBatch Stack(const std::vector<const Matrix *> &feats, const FeatureNormalizer &norm) {
  SeqBatch x;
  int rows = 0;
  for (const Matrix *f : feats) rows += static_cast<int>(f->rows());
  x.data.resize(rows, feats.empty() ? 0 : feats[0]->cols());
  int off = 0;
  for (const Matrix *f : feats) {
    if (f->rows() == 0) throw LengthError("attacker: empty feature sequence");
    x.data.middleRows(off, f->rows()) = norm.Apply(*f);
    x.lengths.push_back(static_cast<int>(f->rows()));
    off += static_cast<int>(f->rows());
  }
  return x;
}

/// Mean over the rows of each sequence.
Matrix SequenceMeans(const SeqBatch &x) {
  Matrix out(x.NumSeqs(), x.data.cols());
  int off = 0;
  for (int i = 0; i < x.NumSeqs(); ++i) {
    out.row(i) = x.data.middleRows(off, x.lengths[i]).colwise().mean();
    off += x.lengths[i];
  }
  return out;
}

void SequenceMeansBackward(const std::vector<int> &lengths, const Matrix &dmean, Matrix *dx) {
  int rows = 0;
  for (int l : lengths) rows += l;
  dx->resize(rows, dmean.cols());
  int off = 0;
  for (size_t i = 0; i < lengths.size(); ++i) {
    dx->middleRows(off, lengths[i]) =
        (dmean.row(i) / static_cast<float>(lengths[i])).replicate(lengths[i], 1);
    off += lengths[i];
  }
}

/// Batches of distinct random indices, reshuffled every epoch.
class BatchSampler {
 public:
  BatchSampler(int n, uint64_t seed) : order_(n), rng_(seed) {
    for (int i = 0; i < n; ++i) order_[i] = i;
    pos_ = n;
  }
  std::vector<int> Next(int batch) {
    std::vector<int> out;
    while (static_cast<int>(out.size()) < batch) {
      if (pos_ >= order_.size()) {
        rng_.Shuffle(order_.begin(), order_.end());
        pos_ = 0;
      }
      out.push_back(order_[pos_++]);
    }
    return out;
  }

 private:
  std::vector<int> order_;
  size_t pos_;
  Rng rng_;
};

}  // namespace

// ---------------------------------------------------------------- gender

GenderClassifier::GenderClassifier(const Options &opts, const AttackerFrontEnd &fe)
    : norm("gender.norm", fe.n_mels), out("gender.out", opts.channels, 1), opts_(opts), fe_(fe) {
  int in = fe.n_mels;
  for (int i = 0; i < opts.n_blocks; ++i) {
    std::string name = "gender.block" + std::to_string(i);
    blocks.push_back({Conv1d(name + ".conv", in, opts.channels, 3, 1, 1),
                      BatchNorm(name + ".bn", opts.channels), MaxPool2()});
    in = opts.channels;
  }
}

void GenderClassifier::Init(Rng *rng) {
  for (ConvBnBlock &b : blocks) b.conv.Init(rng);
  out.Init(rng);
}

Vector GenderClassifier::Logits(const std::vector<const Matrix *> &feats, bool training,
                                std::vector<ConvBnBlock::Cache> *caches, SeqBatch *last) {
  SeqBatch x = Stack(feats, norm);
  if (caches) caches->resize(blocks.size());
  for (size_t i = 0; i < blocks.size(); ++i) {
    ConvBnBlock &b = blocks[i];
    ConvBnBlock::Cache *c = caches ? &(*caches)[i] : nullptr;
    SeqBatch y;
    b.conv.Forward(x, &y, c ? &c->conv : nullptr);
    Matrix z;
    b.bn.Forward(y.data, training, &z, c ? &c->bn : nullptr);
    y.data = std::move(z);
    b.pool.Forward(y, &x, c ? &c->pool : nullptr);
    Relu(&x.data);
    if (c) c->out = x.data;
  }
  if (last) *last = x;
  Matrix logits;
  out.Forward(SequenceMeans(x), &logits);
  return logits.col(0);
}

double GenderClassifier::Probability(const Matrix &feats) const {
  auto *self = const_cast<GenderClassifier *>(this);
  Vector l = self->Logits({&feats}, false);
  return Sigmoid(l[0]);
}

void GenderClassifier::Train(const std::vector<Matrix> &feats, const std::vector<Gender> &labels,
                             uint64_t seed) {
  if (feats.size() != labels.size()) throw ShapeError("gender classifier: label count mismatch");
  std::set<Gender> present(labels.begin(), labels.end());
  if (present.size() < 2) throw DataError("gender classifier: training data has one gender only");
  norm.Fit(feats);
  Rng rng(seed);
  Init(&rng);
  ParamSet params = Params();
  Adam adam(params, AdamOptions{.learning_rate = opts_.learning_rate});
  BatchSampler sampler(static_cast<int>(feats.size()), DeriveSeed(seed, 1));
  for (int step = 0; step < opts_.steps; ++step) {
    std::vector<int> ids = sampler.Next(opts_.batch_size);
    std::vector<const Matrix *> batch;
    std::vector<int> targets;
    for (int i : ids) {
      batch.push_back(&feats[i]);
      targets.push_back(labels[i] == Gender::kMale ? 1 : 0);
    }
    std::vector<ConvBnBlock::Cache> caches;
    SeqBatch last;
    Vector logits = Logits(batch, true, &caches, &last);
    Vector dlogits;
    SigmoidBinaryCrossEntropy(logits, targets, &dlogits);
    params.ZeroGrad();
    Matrix pooled = SequenceMeans(last);
    Matrix dpooled;
    out.Backward(pooled, Matrix(dlogits), &dpooled);
    Matrix d;
    SequenceMeansBackward(last.lengths, dpooled, &d);
    for (size_t i = blocks.size(); i-- > 0;) {
      ConvBnBlock &b = blocks[i];
      ReluBackward(caches[i].out, &d);
      Matrix dpool, dbn;
      b.pool.Backward(caches[i].pool, d, &dpool);
      b.bn.Backward(caches[i].bn, dpool, &dbn);
      Matrix dx;
      b.conv.Backward(caches[i].conv, dbn, i > 0 ? &dx : nullptr);
      d = std::move(dx);
    }
    adam.Step();
  }
}

ParamSet GenderClassifier::Params() {
  ParamSet s = norm.Params();
  for (ConvBnBlock &b : blocks) {
    s.Add(b.conv.Params());
    s.Add(b.bn.Params());
  }
  s.Add(out.Params());
  return s;
}

// ---------------------------------------------------------------- speaker

namespace {
constexpr int kSpeakerKernels[] = {5, 3, 3};
constexpr int kSpeakerDilations[] = {1, 2, 3};
constexpr double kStdEps = 1e-5;
}  // namespace

SpeakerEmbedder::SpeakerEmbedder(const Options &opts, const AttackerFrontEnd &fe)
    : norm("speaker.norm", fe.n_mels),
      proj("speaker.proj", 2 * opts.channels, opts.embedding_dim),
      scale("speaker.scale", 1, 1),
      bias("speaker.bias", 1, 1),
      opts_(opts),
      fe_(fe) {
  int in = fe.n_mels;
  for (int i = 0; i < 3; ++i) {
    int k = kSpeakerKernels[i], d = kSpeakerDilations[i];
    convs.emplace_back("speaker.conv" + std::to_string(i), in, opts.channels, k, 1,
                       d * (k - 1) / 2, d);
    in = opts.channels;
  }
  scale.value(0, 0) = static_cast<BaseFloat>(opts.init_scale);
  bias.value(0, 0) = static_cast<BaseFloat>(opts.init_bias);
}

void SpeakerEmbedder::Init(Rng *rng) {
  for (Conv1d &c : convs) c.Init(rng);
  proj.Init(rng);
  scale.value(0, 0) = static_cast<BaseFloat>(opts_.init_scale);
  bias.value(0, 0) = static_cast<BaseFloat>(opts_.init_bias);
}

Matrix SpeakerEmbedder::Forward(const std::vector<const Matrix *> &feats, Cache *c) const {
  SeqBatch x = Stack(feats, norm);
  c->conv.resize(convs.size());
  c->acts.resize(convs.size());
  for (size_t i = 0; i < convs.size(); ++i) {
    SeqBatch y;
    convs[i].Forward(x, &y, &c->conv[i]);
    Relu(&y.data);
    c->acts[i] = y.data;
    x = std::move(y);
  }
  c->lengths = x.lengths;
  const int n = x.NumSeqs(), C = static_cast<int>(x.data.cols());
  c->mean.resize(n, C);
  c->stddev.resize(n, C);
  int off = 0;
  for (int i = 0; i < n; ++i) {
    auto seg = x.data.middleRows(off, x.lengths[i]);
    RowVector mu = seg.colwise().mean();
    RowVector var = (seg.rowwise() - mu).cwiseAbs2().colwise().mean();
    c->mean.row(i) = mu;
    c->stddev.row(i) = (var.array() + static_cast<float>(kStdEps)).sqrt().matrix();
    off += x.lengths[i];
  }
  c->pooled.resize(n, 2 * C);
  c->pooled.leftCols(C) = c->mean;
  c->pooled.rightCols(C) = c->stddev;
  proj.Forward(c->pooled, &c->raw);
  Matrix unit = c->raw;
  for (int i = 0; i < n; ++i) unit.row(i).normalize();
  return unit;
}

void SpeakerEmbedder::Backward(const Cache &c, const Matrix &dunit) {
  const int n = static_cast<int>(c.raw.rows());
  Matrix draw(n, c.raw.cols());
  for (int i = 0; i < n; ++i) {
    double norm_v = c.raw.row(i).norm();
    RowVector e = c.raw.row(i) / static_cast<float>(norm_v);
    draw.row(i) = (dunit.row(i) - e * e.dot(dunit.row(i))) / static_cast<float>(norm_v);
  }
  Matrix dpooled;
  proj.Backward(c.pooled, draw, &dpooled);
  const Matrix &h = c.acts.back();
  const int C = static_cast<int>(h.cols());
  Matrix d(h.rows(), C);
  int off = 0;
  for (int i = 0; i < n; ++i) {
    const int T = c.lengths[i];
    auto seg = h.middleRows(off, T);
    RowVector dm = dpooled.row(i).leftCols(C) / static_cast<float>(T);
    RowVector ds = dpooled.row(i).rightCols(C).array() /
                   (c.stddev.row(i).array() * static_cast<float>(T));
    d.middleRows(off, T) =
        ((seg.rowwise() - c.mean.row(i)).array().rowwise() * ds.array()).rowwise() +
        dm.array();
    off += T;
  }
  for (size_t i = convs.size(); i-- > 0;) {
    ReluBackward(c.acts[i], &d);
    Matrix dx;
    convs[i].Backward(c.conv[i], d, i > 0 ? &dx : nullptr);
    d = std::move(dx);
  }
}

RowVector SpeakerEmbedder::Embed(const Matrix &feats) const {
  Cache c;
  return Forward({&feats}, &c).row(0);
}

double AngularPrototypicalLoss(const Matrix &q, const Matrix &p, double w, double b, Matrix *dq,
                               Matrix *dp, double *dw, double *db) {
  if (q.rows() != p.rows() || q.cols() != p.cols())
    throw ShapeError("prototypical loss: query and prototype shapes differ");
  const int n = static_cast<int>(q.rows());
  Matrix cosine = q * p.transpose();
  Matrix logits = (static_cast<float>(w) * cosine).array() + static_cast<float>(b);
  std::vector<int> targets(n);
  for (int i = 0; i < n; ++i) targets[i] = i;
  Matrix dlogits;
  double loss = SoftmaxCrossEntropy(logits, targets, &dlogits);
  *dw = (dlogits.array() * cosine.array()).cast<double>().sum();
  *db = dlogits.cast<double>().sum();
  Matrix dcos = static_cast<float>(w) * dlogits;
  *dq = dcos * p;
  *dp = dcos.transpose() * q;
  return loss;
}

void SpeakerEmbedder::Train(const std::vector<Matrix> &feats,
                            const std::vector<std::string> &speakers, uint64_t seed) {
  if (feats.size() != speakers.size()) throw ShapeError("speaker embedder: label count mismatch");
  std::map<std::string, std::vector<int>> by_speaker;
  for (size_t i = 0; i < speakers.size(); ++i) by_speaker[speakers[i]].push_back(static_cast<int>(i));
  std::vector<std::vector<int>> groups;
  for (auto &kv : by_speaker)
    if (static_cast<int>(kv.second.size()) >= opts_.utterances_per_speaker)
      groups.push_back(kv.second);
  const int N = std::min<int>(opts_.speakers_per_batch, static_cast<int>(groups.size()));
  if (N < 2) throw DataError("speaker embedder: need at least two speakers with enough utterances");
  if (opts_.utterances_per_speaker != 2)
    throw ValidationError("attackers.speaker.utterances_per_speaker", "only M = 2 is supported");
  norm.Fit(feats);
  Rng rng(seed);
  Init(&rng);
  ParamSet params = Params();
  Adam adam(params, AdamOptions{.learning_rate = opts_.learning_rate});
  std::vector<int> group_order(groups.size());
  for (size_t i = 0; i < groups.size(); ++i) group_order[i] = static_cast<int>(i);
  for (int step = 0; step < opts_.steps; ++step) {
    rng.Shuffle(group_order.begin(), group_order.end());
    std::vector<const Matrix *> batch;
    std::vector<int> picks;
    for (int g = 0; g < N; ++g) {
      const std::vector<int> &members = groups[group_order[g]];
      int a = static_cast<int>(rng.Index(members.size()));
      int b = static_cast<int>(rng.Index(members.size() - 1));
      if (b >= a) ++b;
      picks.push_back(members[a]);
      picks.push_back(members[b]);
    }
    for (int i : picks) batch.push_back(&feats[i]);
    Cache c;
    Matrix emb = Forward(batch, &c);
    Matrix q(N, emb.cols()), p(N, emb.cols());
    for (int g = 0; g < N; ++g) {
      q.row(g) = emb.row(2 * g);
      p.row(g) = emb.row(2 * g + 1);
    }
    Matrix dq, dp;
    double dw, db;
    AngularPrototypicalLoss(q, p, scale.value(0, 0), bias.value(0, 0), &dq, &dp, &dw, &db);
    Matrix demb(emb.rows(), emb.cols());
    for (int g = 0; g < N; ++g) {
      demb.row(2 * g) = dq.row(g);
      demb.row(2 * g + 1) = dp.row(g);
    }
    params.ZeroGrad();
    scale.grad(0, 0) = static_cast<BaseFloat>(dw);
    bias.grad(0, 0) = static_cast<BaseFloat>(db);
    Backward(c, demb);
    adam.Step();
    scale.value(0, 0) = std::max(scale.value(0, 0), 1e-6f);
  }
}

ParamSet SpeakerEmbedder::Params() {
  ParamSet s = norm.Params();
  for (Conv1d &c : convs) s.Add(c.Params());
  s.Add(proj.Params());
  s.Add(&scale);
  s.Add(&bias);
  return s;
}

// ---------------------------------------------------------------- content

namespace {
constexpr int kRecognizerDilations[] = {1, 1, 2, 2};
}  // namespace

ContentRecognizer::ContentRecognizer(const Options &opts, const AttackerFrontEnd &fe)
    : norm("content.norm", fe.n_mels),
      out("content.out", opts.channels, opts.vocab_size + 1),
      opts_(opts),
      fe_(fe) {
  if (opts.vocab_size < 1) throw ValidationError("token_vocab_size", "must be positive");
  int in = fe.n_mels;
  for (int i = 0; i < 4; ++i) {
    int d = kRecognizerDilations[i];
    convs.emplace_back("content.conv" + std::to_string(i), in, opts.channels, 5, 1, 2 * d, d);
    in = opts.channels;
  }
}

void ContentRecognizer::Init(Rng *rng) {
  for (Conv1d &c : convs) c.Init(rng);
  out.Init(rng);
}

Matrix ContentRecognizer::FrameLogits(const Matrix &feats) const {
  SeqBatch x = Stack({&feats}, norm);
  for (const Conv1d &c : convs) {
    SeqBatch y;
    c.Forward(x, &y, nullptr);
    Relu(&y.data);
    x = std::move(y);
  }
  Matrix logits;
  out.Forward(x.data, &logits);
  return logits;
}

std::vector<int> ContentRecognizer::Transcribe(const Matrix &feats) const {
  return CtcGreedyDecode(FrameLogits(feats), Blank());
}

void ContentRecognizer::Train(const std::vector<Matrix> &feats,
                              const std::vector<std::vector<int>> &tokens, uint64_t seed) {
  if (feats.size() != tokens.size()) throw ShapeError("recognizer: label count mismatch");
  for (const auto &t : tokens)
    for (int k : t)
      if (k < 0 || k >= opts_.vocab_size) throw DataError("recognizer: token outside vocabulary");
  norm.Fit(feats);
  Rng rng(seed);
  Init(&rng);
  ParamSet params = Params();
  Adam adam(params, AdamOptions{.learning_rate = opts_.learning_rate});
  BatchSampler sampler(static_cast<int>(feats.size()), DeriveSeed(seed, 1));
  for (int step = 0; step < opts_.steps; ++step) {
    std::vector<int> ids = sampler.Next(opts_.batch_size);
    std::vector<const Matrix *> batch;
    for (int i : ids) batch.push_back(&feats[i]);
    SeqBatch x = Stack(batch, norm);
    std::vector<Conv1d::Cache> caches(convs.size());
    std::vector<Matrix> acts(convs.size());
    for (size_t i = 0; i < convs.size(); ++i) {
      SeqBatch y;
      convs[i].Forward(x, &y, &caches[i]);
      Relu(&y.data);
      acts[i] = y.data;
      x = std::move(y);
    }
    Matrix logits;
    out.Forward(x.data, &logits);
    Matrix dlogits(logits.rows(), logits.cols());
    int off = 0;
    const float inv_b = 1.0f / static_cast<float>(ids.size());
    for (size_t b = 0; b < ids.size(); ++b) {
      Matrix g;
      double l = CtcLoss(logits.middleRows(off, x.lengths[b]), tokens[ids[b]], Blank(), &g);
      if (!std::isfinite(l)) g.setZero(x.lengths[b], logits.cols());
      dlogits.middleRows(off, x.lengths[b]) = inv_b * g;
      off += x.lengths[b];
    }
    params.ZeroGrad();
    Matrix d;
    out.Backward(x.data, dlogits, &d);
    for (size_t i = convs.size(); i-- > 0;) {
      ReluBackward(acts[i], &d);
      Matrix dx;
      convs[i].Backward(caches[i], d, i > 0 ? &dx : nullptr);
      d = std::move(dx);
    }
    adam.Step();
  }
}

ParamSet ContentRecognizer::Params() {
  ParamSet s = norm.Params();
  for (Conv1d &c : convs) s.Add(c.Params());
  s.Add(out.Params());
  return s;
}

namespace {
inline double LogAdd(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}
}  // namespace

double CtcLoss(const Matrix &logits, const std::vector<int> &target, int blank, Matrix *grad) {
  const int T = static_cast<int>(logits.rows()), V = static_cast<int>(logits.cols());
  if (blank < 0 || blank >= V) throw DomainError("ctc: blank index out of range");
  for (int k : target)
    if (k < 0 || k >= V || k == blank) throw DomainError("ctc: invalid target symbol");
  const double kNegInf = -std::numeric_limits<double>::infinity();
  // Log-softmax in double.
  Eigen::MatrixXd lp(T, V);
  for (int t = 0; t < T; ++t) {
    Eigen::RowVectorXd row = logits.row(t).cast<double>();
    double mx = row.maxCoeff();
    double lse = mx + std::log((row.array() - mx).exp().sum());
    lp.row(t) = row.array() - lse;
  }
  const int S = 2 * static_cast<int>(target.size()) + 1;
  std::vector<int> ext(S);
  for (int s = 0; s < S; ++s) ext[s] = s % 2 == 0 ? blank : target[s / 2];
  Eigen::MatrixXd alpha = Eigen::MatrixXd::Constant(T, S, kNegInf), beta = alpha;
  if (T > 0) {
    alpha(0, 0) = lp(0, ext[0]);
    if (S > 1) alpha(0, 1) = lp(0, ext[1]);
  }
  for (int t = 1; t < T; ++t)
    for (int s = 0; s < S; ++s) {
      double a = alpha(t - 1, s);
      if (s >= 1) a = LogAdd(a, alpha(t - 1, s - 1));
      if (s >= 2 && ext[s] != blank && ext[s] != ext[s - 2]) a = LogAdd(a, alpha(t - 1, s - 2));
      alpha(t, s) = a == kNegInf ? kNegInf : a + lp(t, ext[s]);
    }
  if (T > 0) {
    beta(T - 1, S - 1) = lp(T - 1, ext[S - 1]);
    if (S > 1) beta(T - 1, S - 2) = lp(T - 1, ext[S - 2]);
  }
  for (int t = T - 2; t >= 0; --t)
    for (int s = 0; s < S; ++s) {
      double b = beta(t + 1, s);
      if (s + 1 < S) b = LogAdd(b, beta(t + 1, s + 1));
      if (s + 2 < S && ext[s] != blank && ext[s] != ext[s + 2]) b = LogAdd(b, beta(t + 1, s + 2));
      beta(t, s) = b == kNegInf ? kNegInf : b + lp(t, ext[s]);
    }
  double log_p = kNegInf;
  if (T > 0) {
    log_p = alpha(T - 1, S - 1);
    if (S > 1) log_p = LogAdd(log_p, alpha(T - 1, S - 2));
  }
  if (grad) {
    grad->resize(T, V);
    if (log_p == kNegInf) {
      grad->setZero();
    } else {
      for (int t = 0; t < T; ++t) {
        std::vector<double> occ(V, kNegInf);
        for (int s = 0; s < S; ++s) occ[ext[s]] = LogAdd(occ[ext[s]], alpha(t, s) + beta(t, s));
        for (int k = 0; k < V; ++k) {
          double post = occ[k] == kNegInf ? 0.0 : std::exp(occ[k] - lp(t, k) - log_p);
          (*grad)(t, k) = static_cast<BaseFloat>(std::exp(lp(t, k)) - post);
        }
      }
    }
  }
  return -log_p;
}

std::vector<int> CtcGreedyDecode(const Matrix &logits, int blank) {
  std::vector<int> out;
  int prev = -1;
  for (Eigen::Index t = 0; t < logits.rows(); ++t) {
    Eigen::Index k;
    logits.row(t).maxCoeff(&k);
    int s = static_cast<int>(k);
    if (s != prev && s != blank) out.push_back(s);
    prev = s;
  }
  return out;
}

// ---------------------------------------------------------------- trials

std::vector<Trial> MakeTrialList(const std::vector<UtteranceInfo> &infos, Rng *rng) {
  std::vector<Trial> trials;
  const size_t n = infos.size();
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j)
      if (infos[i].speaker_id == infos[j].speaker_id)
        trials.push_back({infos[i].id, infos[j].id, true});
  const size_t n_genuine = trials.size();
  size_t n_cross = 0;
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j) n_cross += infos[i].speaker_id != infos[j].speaker_id;
  if (n_cross < n_genuine) throw DataError("trial list: not enough different-speaker pairs");
  std::set<std::pair<size_t, size_t>> used;
  while (used.size() < n_genuine) {
    size_t i = rng->Index(n), j = rng->Index(n);
    if (i == j || infos[i].speaker_id == infos[j].speaker_id) continue;
    if (i > j) std::swap(i, j);
    if (used.insert({i, j}).second) trials.push_back({infos[i].id, infos[j].id, false});
  }
  return trials;
}

void WriteTrials(const std::string &path, const std::vector<Trial> &trials) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write trial list " + path);
  for (const Trial &t : trials)
    os << t.enroll_id << '\t' << t.test_id << '\t' << (t.genuine ? "genuine" : "impostor") << '\n';
  if (!os) throw IoError("write failed: " + path);
}

std::vector<Trial> ReadTrials(const std::string &path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read trial list " + path);
  std::vector<Trial> trials;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    Trial t;
    std::string label;
    if (!std::getline(ss, t.enroll_id, '\t') || !std::getline(ss, t.test_id, '\t') ||
        !std::getline(ss, label) || (label != "genuine" && label != "impostor"))
      throw IoError(path + ":" + std::to_string(lineno) + ": malformed trial");
    t.genuine = label == "genuine";
    trials.push_back(t);
  }
  return trials;
}

VerificationScores ScoreTrials(const std::vector<Trial> &trials,
                               const std::map<std::string, RowVector> &enroll,
                               const std::map<std::string, RowVector> &test) {
  VerificationScores out;
  for (const Trial &t : trials) {
    auto a = enroll.find(t.enroll_id);
    if (a == enroll.end()) throw IoError("trial references unknown utterance " + t.enroll_id);
    auto b = test.find(t.test_id);
    if (b == test.end()) throw IoError("trial references unknown utterance " + t.test_id);
    double s = static_cast<double>(a->second.dot(b->second));
    s = std::clamp(s, -1.0, 1.0);
    (t.genuine ? out.genuine : out.impostor).push_back(s);
  }
  return out;
}

}  // namespace vqanon
