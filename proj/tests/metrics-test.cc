// tests/metrics-test.cc

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
#include "oracles.h"
#include "vqanon/metrics.h"
#include "vqanon/rng.h"

namespace vqanon {

TEST_CASE("wer examples") {
  // a=0, b=1, c=2, x=3
  CHECK(WordErrorRate(std::vector<int>{0, 1, 2}, std::vector<int>{0, 1, 2}) == 0.0);
  CHECK(WordErrorRate(std::vector<int>{0, 1, 2}, std::vector<int>{0, 3, 2}) ==
        doctest::Approx(100.0 / 3));
  CHECK(WordErrorRate(std::vector<int>{0}, std::vector<int>{0, 1, 2}) == 200.0);
  CHECK(WordErrorRate(std::vector<int>{0, 1}, std::vector<int>{}) == 100.0);
  CHECK_THROWS_AS(WordErrorRate(std::vector<int>{}, std::vector<int>{1}), DomainError);
}

TEST_CASE("wer matches the exhaustive alignment oracle") {
  Rng rng(5);
  for (int trial = 0; trial < 3000; ++trial) {
    std::vector<int> ref(1 + rng.Index(6)), hyp(rng.Index(7));
    for (int &x : ref) x = static_cast<int>(rng.Index(3));
    for (int &x : hyp) x = static_cast<int>(rng.Index(3));
    REQUIRE(EditDistance(ref, hyp) == oracle::BruteForceEditDistance(ref, hyp));
  }
}

TEST_CASE("corpus-level wer pools edits") {
  std::vector<std::vector<int>> refs{{0, 1, 2}, {1}};
  std::vector<std::vector<int>> hyps{{0, 1, 2}, {2}};
  CHECK(WordErrorRate(refs, hyps) == 25.0);
}

TEST_CASE("binary accuracy") {
  using G = Gender;
  std::vector<G> labels{G::kFemale, G::kMale, G::kFemale, G::kFemale};
  CHECK(BinaryAccuracy(labels, labels) == 100.0);
  std::vector<G> comp;
  for (G g : labels) comp.push_back(Opposite(g));
  CHECK(BinaryAccuracy(comp, labels) == 0.0);
  std::vector<G> preds{G::kFemale, G::kMale, G::kMale, G::kFemale};
  CHECK(BinaryAccuracy(preds, labels) == 75.0);
  CHECK_THROWS_AS(BinaryAccuracy(std::vector<G>{}, std::vector<G>{}), DomainError);
  CHECK_THROWS_AS(BinaryAccuracy(preds, std::vector<G>{G::kMale}), DomainError);

  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<G> p(1 + rng.Index(30)), l(p.size()), pc(p.size());
    for (size_t i = 0; i < p.size(); ++i) {
      p[i] = rng.Bernoulli(0.5) ? G::kMale : G::kFemale;
      l[i] = rng.Bernoulli(0.5) ? G::kMale : G::kFemale;
      pc[i] = Opposite(p[i]);
    }
    CHECK(BinaryAccuracy(p, l) + BinaryAccuracy(pc, l) == doctest::Approx(100.0));
  }
}

TEST_CASE("eer examples") {
  CHECK(EqualErrorRate(std::vector<double>{0.9, 0.8}, std::vector<double>{0.1, 0.2}) == 0.0);
  std::vector<double> same{0.3, 0.1, 0.7, 0.5, 0.2};
  CHECK(EqualErrorRate(same, same) == doctest::Approx(50.0).epsilon(1e-12));
  std::vector<double> same_even{0.3, 0.1, 0.7, 0.5};
  CHECK(EqualErrorRate(same_even, same_even) == 50.0);
  CHECK(EqualErrorRate(std::vector<double>{0.9, 0.7, 0.6},
                       std::vector<double>{0.8, 0.3, 0.2}) ==
        doctest::Approx(100.0 / 3).epsilon(1e-12));
  // Fully reversed scores.
  CHECK(EqualErrorRate(std::vector<double>{0.1, 0.2}, std::vector<double>{0.8, 0.9}) == 100.0);
  CHECK_THROWS_AS(EqualErrorRate(std::vector<double>{}, std::vector<double>{0.1}), DomainError);
}

TEST_CASE("eer agrees with the dense-grid oracle and is rank-invariant") {
  Rng rng(9);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> g(1 + rng.Index(50)), im(1 + rng.Index(50));
    for (double &s : g) s = rng.Normal() + 1.0;
    for (double &s : im) s = rng.Normal();
    double eer = EqualErrorRate(g, im);
    CHECK(std::fabs(eer - oracle::DenseGridEer(g, im, 20001)) <= 0.1);
    std::vector<double> g2, im2;
    for (double s : g) g2.push_back(std::exp(3.0 * s) + 5.0);
    for (double s : im) im2.push_back(std::exp(3.0 * s) + 5.0);
    CHECK(EqualErrorRate(g2, im2) == doctest::Approx(eer).epsilon(1e-12));
  }
}

TEST_CASE("report rows derive GER and round-trip through records") {
  EvaluationReport report;
  report.rows.push_back(MakeReportRow("clean", 3.5, 97.25, 4.0));
  report.rows.push_back(MakeReportRow("RG", 40.0, 51.0, 49.5));
  for (const auto &r : report.rows) CHECK(r.ger_pct == 100.0 - r.gender_acc_pct);
  auto back = EvaluationReport::ParseRecords(report.FormatRecords());
  REQUIRE(back.rows.size() == 2);
  CHECK(back.rows[1].setting == "RG");
  CHECK(back.rows[1].eer_pct == 49.5);
  CHECK(back.FormatRecords() == report.FormatRecords());
  CHECK(report.FormatTable().find("Settings") == 0);
  CHECK(report.Find("RG") != nullptr);
  CHECK(report.Find("SI") == nullptr);
}

}  // namespace vqanon
