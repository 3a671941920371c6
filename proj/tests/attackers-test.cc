// tests/attackers-test.cc

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
#include <set>

#include "doctest.h"
#include "grad-check.h"
#include "oracles.h"
#include "test-util.h"
#include "vqanon/evaluation.h"

namespace vqanon {

using test::MaxGradError;
using test::RandomMatrix;

namespace {

Matrix OneHotLogits(const std::vector<int> &path, int width) {
  Matrix m = Matrix::Constant(path.size(), width, -5.0f);
  for (size_t t = 0; t < path.size(); ++t) m(t, path[t]) = 5.0f;
  return m;
}

// Sums path probabilities over every frame labelling.
double BruteForceCtcLoss(const Matrix &logits, const std::vector<int> &target, int blank) {
  const int T = static_cast<int>(logits.rows()), W = static_cast<int>(logits.cols());
  Eigen::MatrixXd logp = logits.cast<double>();
  for (int t = 0; t < T; ++t) {
    const double m = logp.row(t).maxCoeff();
    const double lse = m + std::log((logp.row(t).array() - m).exp().sum());
    logp.row(t).array() -= lse;
  }
  std::vector<int> path(T, 0);
  double total = 0.0;
  while (true) {
    if (oracle::CollapsePath(path, blank) == target) {
      double lp = 0.0;
      for (int t = 0; t < T; ++t) lp += logp(t, path[t]);
      total += std::exp(lp);
    }
    int t = 0;
    while (t < T && ++path[t] == W) path[t++] = 0;
    if (t == T) break;
  }
  return -std::log(total);
}

// Collapse of the single most probable labelling, found by enumeration.
std::vector<int> BruteForceBestPath(const Matrix &logits, int blank) {
  const int T = static_cast<int>(logits.rows()), W = static_cast<int>(logits.cols());
  std::vector<int> path(T, 0), best;
  double best_score = -1e300;
  while (true) {
    double s = 0.0;
    for (int t = 0; t < T; ++t) s += logits(t, path[t]);
    if (s > best_score) {
      best_score = s;
      best = path;
    }
    int t = 0;
    while (t < T && ++path[t] == W) path[t++] = 0;
    if (t == T) break;
  }
  return oracle::CollapsePath(best, blank);
}

std::vector<Utterance> Corpus(int speakers, int per_speaker, uint64_t seed) {
  CorpusSpec spec;
  spec.n_speakers = speakers;
  spec.utterances_per_speaker = per_speaker;
  spec.sample_rate = 8000;
  spec.seed = seed;
  return GenerateCorpus(spec);
}

}  // namespace

TEST_CASE("ctc greedy decoding examples") {
  const int blank = 0;
  CHECK(CtcGreedyDecode(OneHotLogits({0, 1, 1, 0, 2}, 3), blank) == std::vector<int>{1, 2});
  CHECK(CtcGreedyDecode(OneHotLogits({0, 0, 0}, 3), blank).empty());
  CHECK(CtcGreedyDecode(OneHotLogits({1, 0, 1}, 3), blank) == std::vector<int>{1, 1});
  CHECK(CtcGreedyDecode(OneHotLogits({2, 2, 1, 1}, 3), 3) == std::vector<int>{2, 1});
}

TEST_CASE("ctc loss and greedy decoding match enumeration") {
  Rng rng(17);
  for (int trial = 0; trial < 60; ++trial) {
    const int vocab = 1 + static_cast<int>(rng.Index(3));
    const int T = 1 + static_cast<int>(rng.Index(6));
    const int blank = vocab;
    Matrix logits = RandomMatrix(T, vocab + 1, &rng, 1.5);
    CHECK(CtcGreedyDecode(logits, blank) == BruteForceBestPath(logits, blank));
    std::vector<int> target(rng.Index(T + 1));
    for (int &k : target) k = static_cast<int>(rng.Index(vocab));
    const double oracle = BruteForceCtcLoss(logits, target, blank);
    Matrix grad;
    const double loss = CtcLoss(logits, target, blank, &grad);
    if (std::isinf(oracle)) {
      CHECK(std::isinf(loss));
    } else {
      CHECK(loss == doctest::Approx(oracle).epsilon(1e-9));
    }
  }
}

TEST_CASE("ctc gradient matches finite differences") {
  Rng rng(5);
  const int blank = 3;
  Matrix logits = RandomMatrix(7, 4, &rng, 1.0);
  const std::vector<int> target{0, 2, 2, 1};
  Matrix grad;
  CtcLoss(logits, target, blank, &grad);
  auto loss = [&] {
    Matrix g;
    return CtcLoss(logits, target, blank, &g);
  };
  CHECK(MaxGradError(loss, &logits, grad, &rng, 28, 1e-3) < 1e-4);
  // Softmax-space gradients sum to zero per frame.
  CHECK(grad.rowwise().sum().cwiseAbs().maxCoeff() < 1e-5);
  Matrix g;
  CHECK(std::isinf(CtcLoss(RandomMatrix(2, 4, &rng, 1.0), {1, 1}, blank, &g)));
}

TEST_CASE("angular prototypical loss gradients") {
  Rng rng(8);
  Matrix q = RandomMatrix(4, 5, &rng, 1.0), p = RandomMatrix(4, 5, &rng, 1.0);
  for (Matrix *m : {&q, &p}) m->rowwise().normalize();
  double w = 3.0, b = -1.0;
  Matrix dq, dp;
  double dw = 0, db = 0;
  AngularPrototypicalLoss(q, p, w, b, &dq, &dp, &dw, &db);
  auto loss = [&] {
    Matrix a, c;
    double x, y;
    return AngularPrototypicalLoss(q, p, w, b, &a, &c, &x, &y);
  };
  CHECK(MaxGradError(loss, &q, dq, &rng, 20, 1e-3) < 1e-4);
  CHECK(MaxGradError(loss, &p, dp, &rng, 20, 1e-3) < 1e-4);
  // The loss runs in single precision, so the step must be large.
  const double h = 1e-2;
  w += h;
  double lp = loss();
  w -= 2 * h;
  double lm = loss();
  w += h;
  CHECK((lp - lm) / (2 * h) == doctest::Approx(dw).epsilon(1e-3));
  b += h;
  lp = loss();
  b -= 2 * h;
  lm = loss();
  b += h;
  CHECK((lp - lm) / (2 * h) == doctest::Approx(db).epsilon(1e-3).scale(1));
}

TEST_CASE("trial list structure and round trip") {
  auto utts = Corpus(4, 4, 2);
  std::vector<UtteranceInfo> infos;
  for (const auto &u : utts) infos.push_back(u.info);
  Rng rng(3);
  auto trials = MakeTrialList(infos, &rng);
  int genuine = 0;
  std::set<std::pair<std::string, std::string>> seen;
  std::map<std::string, std::string> spk;
  for (const auto &i : infos) spk[i.id] = i.speaker_id;
  for (const Trial &t : trials) {
    genuine += t.genuine;
    CHECK(t.enroll_id != t.test_id);
    CHECK((spk[t.enroll_id] == spk[t.test_id]) == t.genuine);
    CHECK(seen.insert({t.enroll_id, t.test_id}).second);
  }
  CHECK(genuine == 4 * 6);
  CHECK(static_cast<int>(trials.size()) == 2 * genuine);
  TempDir dir;
  const std::string path = dir.path() + "/trials.tsv";
  WriteTrials(path, trials);
  auto back = ReadTrials(path);
  REQUIRE(back.size() == trials.size());
  for (size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].enroll_id == trials[i].enroll_id);
    CHECK(back[i].test_id == trials[i].test_id);
    CHECK(back[i].genuine == trials[i].genuine);
  }
  CHECK_THROWS_AS(ReadTrials(dir.path() + "/missing.tsv"), IoError);
}

TEST_CASE("cosine scoring contract") {
  RowVector a(3), b(3);
  a << 1, 0, 0;
  b << 0, 1, 0;
  std::map<std::string, RowVector> e{{"a", a}, {"b", b}};
  auto sc = ScoreTrials({{"a", "a", true}, {"a", "b", false}}, e, e);
  CHECK(sc.genuine[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(sc.impostor[0] == doctest::Approx(0.0).scale(1).epsilon(1e-12));
  CHECK_THROWS_AS(ScoreTrials({{"a", "zz", true}}, e, e), IoError);
}

TEST_CASE("small attackers: errors, ranges and determinism") {
  auto utts = Corpus(4, 4, 6);
  AttackerOptions ao;
  ao.gender.steps = 5;
  ao.speaker.steps = 5;
  ao.speaker.speakers_per_batch = 4;
  ao.content.steps = 5;
  AttackerSuite a = TrainAttackers(utts, ao, 1);
  AttackerSuite b = TrainAttackers(utts, ao, 1);
  auto pa = a.gender.Params().params(), pb = b.gender.Params().params();
  for (size_t i = 0; i < pa.size(); ++i) CHECK(pa[i]->value == pb[i]->value);
  auto sa = a.speaker.Params().params(), sb = b.speaker.Params().params();
  for (size_t i = 0; i < sa.size(); ++i) CHECK(sa[i]->value == sb[i]->value);
  auto ca = a.content.Params().params(), cb = b.content.Params().params();
  for (size_t i = 0; i < ca.size(); ++i) CHECK(ca[i]->value == cb[i]->value);

  std::vector<BaseFloat> zeros(4000, 0.0f);
  const double p = a.gender.ProbabilityOfWaveform(zeros);
  CHECK(p >= 0.0);
  CHECK(p <= 1.0);
  for (const auto &u : utts) {
    RowVector e = a.speaker.EmbedWaveform(u.waveform);
    CHECK(e.cols() == 128);
    CHECK(e.norm() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(a.content.FrameLogits(a.content.front_end().Features(u.waveform)).cols() == 9);
  }
  std::vector<BaseFloat> tiny(50, 0.1f);
  CHECK_THROWS_AS(a.gender.ProbabilityOfWaveform(tiny), LengthError);
  CHECK_THROWS_AS(a.content.TranscribeWaveform(tiny), LengthError);

  std::vector<Utterance> female;
  for (const auto &u : utts)
    if (u.info.gender == Gender::kFemale) female.push_back(u);
  CHECK_THROWS_AS(TrainAttackers(female, ao, 1), DataError);
}

TEST_CASE("evaluate run alignment and self-consistency") {
  auto utts = Corpus(4, 3, 6);
  AttackerOptions ao;
  ao.gender.steps = 3;
  ao.speaker.steps = 3;
  ao.speaker.speakers_per_batch = 4;
  ao.content.steps = 3;
  AttackerSuite s = TrainAttackers(utts, ao, 2);
  std::vector<UtteranceInfo> infos;
  for (const auto &u : utts) infos.push_back(u.info);
  Rng rng(1);
  auto trials = MakeTrialList(infos, &rng);
  ReportRow clean = EvaluateRun("clean", utts, utts, s, trials);
  ReportRow same = EvaluateRun("SI", utts, utts, s, trials);
  CHECK(same.wer_pct == clean.wer_pct);
  CHECK(same.gender_acc_pct == clean.gender_acc_pct);
  CHECK(same.eer_pct == clean.eer_pct);
  CHECK(same.ger_pct == 100.0 - same.gender_acc_pct);
  auto swapped = utts;
  std::swap(swapped[1], swapped[4]);
  try {
    EvaluateRun("SI", utts, swapped, s, trials);
    FAIL("expected DataError");
  } catch (const DataError &e) {
    const std::string msg = e.what();
    CHECK(msg.find(utts[1].info.id) != std::string::npos);
    CHECK(msg.find(utts[4].info.id) != std::string::npos);
  }
  swapped.pop_back();
  CHECK_THROWS_AS(EvaluateRun("SI", utts, swapped, s, trials), DataError);
}

TEST_CASE("chance token error rate and linear probe") {
  // One-token references over a vocabulary of 4: a random token is wrong
  // with probability 3/4.
  std::vector<std::vector<int>> refs(50, std::vector<int>{2});
  CHECK(ChanceTokenErrorRate(refs, 4, 400, 1) == doctest::Approx(75.0).epsilon(0.02));
  CHECK(ChanceTokenErrorRate(refs, 4, 10, 3) == ChanceTokenErrorRate(refs, 4, 10, 3));

  Rng rng(4);
  Matrix x(400, 3);
  std::vector<int> y(400);
  for (int i = 0; i < 400; ++i) {
    y[i] = i % 2;
    x(i, 0) = static_cast<BaseFloat>(rng.Normal() + (y[i] ? 3.0 : -3.0));
    x(i, 1) = static_cast<BaseFloat>(100.0 + rng.Normal());
    x(i, 2) = static_cast<BaseFloat>(rng.Normal());
  }
  LinearProbe probe;
  probe.Fit(x, y);
  CHECK(probe.Accuracy(x, y) > 99.0);
  Matrix noise = RandomMatrix(400, 3, &rng, 1.0);
  LinearProbe chance;
  chance.Fit(noise.topRows(200), std::vector<int>(y.begin(), y.begin() + 200));
  const double acc =
      chance.Accuracy(noise.bottomRows(200), std::vector<int>(y.begin() + 200, y.end()));
  CHECK(acc > 35.0);
  CHECK(acc < 65.0);
}

TEST_CASE("white-noise augmentation hits the requested snr") {
  Rng rng(31);
  std::vector<BaseFloat> x(40000);
  for (size_t i = 0; i < x.size(); ++i) x[i] = static_cast<BaseFloat>(0.3 * std::sin(0.05 * i));
  for (double snr : {5.0, 15.0, 30.0}) {
    std::vector<BaseFloat> y = AddWhiteNoise(x, snr, &rng);
    REQUIRE(y.size() == x.size());
    double ps = 0.0, pn = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
      ps += static_cast<double>(x[i]) * x[i];
      pn += (static_cast<double>(y[i]) - x[i]) * (static_cast<double>(y[i]) - x[i]);
      REQUIRE(std::fabs(y[i]) <= 1.0f);
    }
    CHECK(10.0 * std::log10(ps / pn) == doctest::Approx(snr).epsilon(0.01));
  }
  std::vector<BaseFloat> silence(100, 0.0f);
  CHECK(AddWhiteNoise(silence, 10.0, &rng) == silence);
  Rng a(5), b(5);
  CHECK(AddWhiteNoise(x, 10.0, &a) == AddWhiteNoise(x, 10.0, &b));
}

TEST_CASE("trained attackers on the toy corpus") {
  auto split = SplitBySpeakerPosition(Corpus(20, 50, 1), 40);
  REQUIRE(split.train.size() == 800);
  REQUIRE(split.eval.size() == 200);
  AttackerOptions ao;
  AttackerFrontEnd fe = ao.front_end;
  std::vector<Matrix> train_f, eval_f;
  std::vector<Gender> train_g, eval_g;
  for (const auto &u : split.train) {
    train_f.push_back(fe.Features(u.waveform));
    train_g.push_back(u.info.gender);
  }
  for (const auto &u : split.eval) {
    eval_f.push_back(fe.Features(u.waveform));
    eval_g.push_back(u.info.gender);
  }



  GenderClassifier gc(ao.gender, fe);
  gc.Train(train_f, train_g, 3);
  std::vector<Gender> pred;
  int same_decision = 0;
  for (size_t i = 0; i < eval_f.size(); ++i) {
    pred.push_back(GenderClassifier::Decide(gc.Probability(eval_f[i])));
    std::vector<BaseFloat> twice = split.eval[i].waveform;
    twice.insert(twice.end(), split.eval[i].waveform.begin(), split.eval[i].waveform.end());
    const double p2 = gc.ProbabilityOfWaveform(twice);
    if (GenderClassifier::Decide(p2) != pred.back())
      MESSAGE(split.eval[i].info.id << " " << gc.Probability(eval_f[i]) << " " << p2);
    same_decision += GenderClassifier::Decide(p2) == pred.back();
  }
  CHECK(BinaryAccuracy(pred, eval_g) >= 90.0);
  CHECK(same_decision == static_cast<int>(eval_f.size()));

  // Labels shuffled across speakers keep the class balance but carry no
  // acoustic signal.
  std::vector<Gender> shuffled = train_g;
  Rng rng(21);
  rng.Shuffle(shuffled.begin(), shuffled.end());
  GenderClassifier control(ao.gender, fe);
  control.Train(train_f, shuffled, 3);
  pred.clear();
  for (const Matrix &f : eval_f) pred.push_back(GenderClassifier::Decide(control.Probability(f)));
  const double acc = BinaryAccuracy(pred, eval_g);
  MESSAGE("shuffled-label accuracy " << acc);
  CHECK(acc >= 40.0);
  CHECK(acc <= 60.0);
}

}  // namespace vqanon
