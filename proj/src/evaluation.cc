// evaluation.cc

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

#include "vqanon/evaluation.h"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

namespace vqanon {

CorpusSplit SplitBySpeakerPosition(const std::vector<Utterance> &utts, int train_per_speaker) {
  if (train_per_speaker < 0) throw ValidationError("train_per_speaker", "must be >= 0");
  CorpusSplit split;
  std::unordered_map<std::string, int> seen;
  for (const Utterance &u : utts) {
    int &n = seen[u.info.speaker_id];
    (n < train_per_speaker ? split.train : split.eval).push_back(u);
    ++n;
  }
  return split;
}

std::vector<BaseFloat> AddWhiteNoise(std::span<const BaseFloat> x, double snr_db, Rng *rng) {
  double power = 0.0;
  for (BaseFloat v : x) power += static_cast<double>(v) * v;
  power /= std::max<size_t>(1, x.size());
  const double sd = std::sqrt(power / std::pow(10.0, snr_db / 10.0));
  std::vector<BaseFloat> y(x.begin(), x.end());
  for (BaseFloat &v : y)
    v = static_cast<BaseFloat>(std::clamp(v + sd * rng->Normal(), -1.0, 1.0));
  return y;
}

AttackerSuite TrainAttackers(const std::vector<Utterance> &clean_train,
                             const AttackerOptions &opts, uint64_t seed) {
  if (clean_train.empty()) throw DataError("attackers: empty training set");
  std::vector<Matrix> feats;
  std::vector<Gender> genders;
  std::vector<std::string> speakers;
  std::vector<std::vector<int>> tokens;
  for (const Utterance &u : clean_train) {
    if (u.sample_rate != opts.front_end.sample_rate)
      throw ValidationError("sample_rate", "utterance " + u.info.id + " has rate " +
                                               std::to_string(u.sample_rate));
    feats.push_back(opts.front_end.Features(u.waveform));
    genders.push_back(u.info.gender);
    speakers.push_back(u.info.speaker_id);
    tokens.push_back(u.info.tokens);
  }
  Rng noise_rng(DeriveSeed(seed, 4));
  const size_t n_clean = clean_train.size();
  for (int c = 0; c < opts.noise_copies; ++c)
    for (size_t i = 0; i < n_clean; ++i) {
      const Utterance &u = clean_train[i];
      const double snr = noise_rng.Uniform(opts.snr_min_db, opts.snr_max_db);
      feats.push_back(opts.front_end.Features(AddWhiteNoise(u.waveform, snr, &noise_rng)));
      genders.push_back(u.info.gender);
      speakers.push_back(u.info.speaker_id);
      tokens.push_back(u.info.tokens);
    }
  AttackerSuite s{GenderClassifier(opts.gender, opts.front_end),
                  SpeakerEmbedder(opts.speaker, opts.front_end),
                  ContentRecognizer(opts.content, opts.front_end)};
  s.gender.Train(feats, genders, DeriveSeed(seed, 1));
  s.speaker.Train(feats, speakers, DeriveSeed(seed, 2));
  s.content.Train(feats, tokens, DeriveSeed(seed, 3));
  return s;
}

ReportRow EvaluateRun(const std::string &setting, const std::vector<Utterance> &clean,
                      const std::vector<Utterance> &test, const AttackerSuite &attackers,
                      const std::vector<Trial> &trials, const EvaluateOptions &opts) {
  if (clean.empty()) throw DataError("evaluate: empty manifest");
  std::vector<std::string> offenders;
  const size_t n = std::max(clean.size(), test.size());
  for (size_t i = 0; i < n; ++i) {
    const std::string a = i < clean.size() ? clean[i].info.id : "<missing>";
    const std::string b = i < test.size() ? test[i].info.id : "<missing>";
    if (a != b) offenders.push_back(std::to_string(i) + ":" + a + "/" + b);
  }
  if (!offenders.empty()) {
    std::ostringstream msg;
    msg << "evaluate: " << offenders.size() << " misaligned utterance(s):";
    for (size_t i = 0; i < offenders.size() && i < 20; ++i) msg << ' ' << offenders[i];
    if (offenders.size() > 20) msg << " ...";
    throw DataError(msg.str());
  }
  const AttackerFrontEnd &fe = attackers.gender.front_end();
  std::vector<std::vector<int>> refs, hyps;
  std::vector<Gender> labels, preds;
  std::map<std::string, RowVector> enroll, probe;
  for (size_t i = 0; i < clean.size(); ++i) {
    const Matrix f = fe.Features(test[i].waveform);
    refs.push_back(clean[i].info.tokens);
    hyps.push_back(attackers.content.Transcribe(f));
    labels.push_back(clean[i].info.gender);
    preds.push_back(GenderClassifier::Decide(attackers.gender.Probability(f)));
    probe[test[i].info.id] = attackers.speaker.Embed(f);
    enroll[clean[i].info.id] =
        opts.enroll_anonymized ? probe[test[i].info.id]
                               : attackers.speaker.Embed(fe.Features(clean[i].waveform));
  }
  VerificationScores sc = ScoreTrials(trials, enroll, probe);
  return MakeReportRow(setting, WordErrorRate(refs, hyps), BinaryAccuracy(preds, labels),
                       EqualErrorRate(sc.genuine, sc.impostor));
}

double ChanceTokenErrorRate(const std::vector<std::vector<int>> &references, int vocab_size,
                            int draws, uint64_t seed) {
  if (vocab_size <= 0) throw ValidationError("vocab_size", "must be positive");
  if (draws <= 0) throw ValidationError("draws", "must be positive");
  Rng rng(seed);
  double sum = 0.0;
  std::vector<std::vector<int>> hyps(references.size());
  for (int d = 0; d < draws; ++d) {
    for (size_t i = 0; i < references.size(); ++i) {
      hyps[i].resize(references[i].size());
      for (int &t : hyps[i]) t = static_cast<int>(rng.Index(vocab_size));
    }
    sum += WordErrorRate(references, hyps);
  }
  return sum / draws;
}

void LinearProbe::Fit(const Matrix &x, const std::vector<int> &labels) {
  const Eigen::Index n = x.rows(), d = x.cols();
  if (n == 0 || static_cast<size_t>(n) != labels.size())
    throw DomainError("probe: need one label per row");
  mean_ = x.colwise().mean();
  Eigen::MatrixXd xc = (x.rowwise() - mean_).cast<double>();
  Eigen::RowVectorXd sd = (xc.array().square().colwise().sum() / n).sqrt();
  scale_ = (1.0 / (sd.array() + 1e-6)).cast<BaseFloat>().matrix();
  xc = xc.array().rowwise() * scale_.cast<double>().array();
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = labels[i];
  w_ = Eigen::RowVectorXd::Zero(d);
  b_ = 0.0;
  for (int it = 0; it < opts_.iterations; ++it) {
    Eigen::VectorXd p = ((xc * w_.transpose()).array() + b_).matrix();
    p = (1.0 / (1.0 + (-p.array()).exp())).matrix();
    const Eigen::VectorXd r = (p - y) / static_cast<double>(n);
    w_ -= opts_.learning_rate * ((r.transpose() * xc) + opts_.l2 * w_);
    b_ -= opts_.learning_rate * r.sum();
  }
}

double LinearProbe::Probability(const RowVector &x) const {
  if (x.cols() != w_.cols()) throw ShapeError("probe: feature width mismatch");
  const Eigen::RowVectorXd z =
      ((x - mean_).array() * scale_.array()).matrix().cast<double>();
  return 1.0 / (1.0 + std::exp(-(z.dot(w_) + b_)));
}

double LinearProbe::Accuracy(const Matrix &x, const std::vector<int> &labels) const {
  if (x.rows() == 0 || static_cast<size_t>(x.rows()) != labels.size())
    throw DomainError("probe: need one label per row");
  int correct = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    correct += (Probability(x.row(i)) >= 0.5 ? 1 : 0) == labels[i];
  return 100.0 * correct / x.rows();
}

Matrix AveragedCodewords(const AnonModel &model, const std::vector<Utterance> &utts) {
  Matrix out(utts.size(), model.codebook.D());
  for (size_t i = 0; i < utts.size(); ++i)
    out.row(i) = model.EncodeAndQuantize(model.PadToFrames(utts[i].waveform))
                     .codewords.colwise()
                     .mean();
  return out;
}

Matrix AveragedGenderConditioned(const AnonModel &model, const std::vector<Utterance> &utts) {
  Matrix out(utts.size(), model.config().conditioner.OutputDim());
  for (size_t i = 0; i < utts.size(); ++i) {
    QuantizedSequence q = model.EncodeAndQuantize(model.PadToFrames(utts[i].waveform));
    out.row(i) = model.Condition(q, utts[i].info.gender, std::nullopt).frames.colwise().mean();
  }
  return out;
}

std::vector<int> GenderLabels(const std::vector<Utterance> &utts) {
  std::vector<int> y;
  for (const Utterance &u : utts) y.push_back(u.info.gender == Gender::kMale ? 1 : 0);
  return y;
}

}  // namespace vqanon
