// metrics.cc

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

#include "vqanon/metrics.h"

#include <algorithm>
#include <cstdio>
#include <limits>

#include "json.hpp"

namespace vqanon {

int EditDistance(std::span<const int> ref, std::span<const int> hyp) {
  const size_t n = ref.size(), m = hyp.size();
  std::vector<int> prev(m + 1), cur(m + 1);
  for (size_t j = 0; j <= m; ++j) prev[j] = static_cast<int>(j);
  for (size_t i = 1; i <= n; ++i) {
    cur[0] = static_cast<int>(i);
    for (size_t j = 1; j <= m; ++j) {
      int sub = prev[j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

double WordErrorRate(std::span<const int> ref, std::span<const int> hyp) {
  if (ref.empty()) throw DomainError("WER: empty reference");
  return 100.0 * EditDistance(ref, hyp) / static_cast<double>(ref.size());
}

double WordErrorRate(const std::vector<std::vector<int>> &refs,
                     const std::vector<std::vector<int>> &hyps) {
  if (refs.size() != hyps.size())
    throw DomainError("WER: reference/hypothesis count mismatch");
  long edits = 0, total = 0;
  for (size_t i = 0; i < refs.size(); ++i) {
    if (refs[i].empty()) throw DomainError("WER: empty reference");
    edits += EditDistance(refs[i], hyps[i]);
    total += static_cast<long>(refs[i].size());
  }
  if (total == 0) throw DomainError("WER: no references");
  return 100.0 * static_cast<double>(edits) / static_cast<double>(total);
}

double BinaryAccuracy(std::span<const Gender> predictions,
                      std::span<const Gender> labels) {
  if (predictions.empty()) throw DomainError("accuracy: no predictions");
  if (predictions.size() != labels.size())
    throw DomainError("accuracy: predictions and labels differ in length");
  size_t correct = 0;
  for (size_t i = 0; i < labels.size(); ++i)
    correct += predictions[i] == labels[i];
  return 100.0 * static_cast<double>(correct) / static_cast<double>(labels.size());
}

double EqualErrorRate(std::span<const double> genuine,
                      std::span<const double> impostor) {
  if (genuine.empty() || impostor.empty())
    throw DomainError("EER: genuine and impostor lists must be non-empty");
  std::vector<double> g(genuine.begin(), genuine.end());
  std::vector<double> im(impostor.begin(), impostor.end());
  std::sort(g.begin(), g.end());
  std::sort(im.begin(), im.end());
  std::vector<double> thresholds(g);
  thresholds.insert(thresholds.end(), im.begin(), im.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());
  thresholds.push_back(std::numeric_limits<double>::infinity());

  const double ng = static_cast<double>(g.size()), ni = static_cast<double>(im.size());
  double prev_frr = 0.0, prev_diff = 0.0;
  bool have_prev = false;
  for (double t : thresholds) {
    // FRR: genuine strictly below t.  FAR: impostor at or above t.
    double frr = static_cast<double>(std::lower_bound(g.begin(), g.end(), t) - g.begin()) / ng;
    double far = static_cast<double>(im.end() - std::lower_bound(im.begin(), im.end(), t)) / ni;
    double diff = far - frr;
    if (diff <= 0.0) {
      if (diff == 0.0 || !have_prev) return 100.0 * frr;
      double lambda = prev_diff / (prev_diff - diff);
      return 100.0 * (prev_frr + lambda * (frr - prev_frr));
    }
    prev_frr = frr;
    prev_diff = diff;
    have_prev = true;
  }
  return 100.0 * prev_frr;  // unreachable: +inf always gives diff < 0
}

ReportRow MakeReportRow(const std::string &setting, double wer_pct,
                        double gender_acc_pct, double eer_pct) {
  ReportRow r;
  r.setting = setting;
  r.wer_pct = wer_pct;
  r.gender_acc_pct = gender_acc_pct;
  r.ger_pct = 100.0 - gender_acc_pct;
  r.eer_pct = eer_pct;
  return r;
}

const ReportRow *EvaluationReport::Find(const std::string &setting) const {
  for (const auto &r : rows)
    if (r.setting == setting) return &r;
  return nullptr;
}

std::string EvaluationReport::FormatTable() const {
  std::string out;
  char line[128];
  std::snprintf(line, sizeof(line), "%-10s %8s %8s %8s %8s\n", "Settings", "WER",
                "Acc", "EER", "GER");
  out += line;
  out += std::string(46, '-') + "\n";
  for (const auto &r : rows) {
    std::snprintf(line, sizeof(line), "%-10s %8.2f %8.2f %8.2f %8.2f\n",
                  r.setting.c_str(), r.wer_pct, r.gender_acc_pct, r.eer_pct, r.ger_pct);
    out += line;
  }
  return out;
}

std::string EvaluationReport::FormatRecords() const {
  std::string out;
  for (const auto &r : rows) {
    nlohmann::ordered_json j;
    j["setting"] = r.setting;
    j["wer_pct"] = r.wer_pct;
    j["gender_acc_pct"] = r.gender_acc_pct;
    j["ger_pct"] = r.ger_pct;
    j["eer_pct"] = r.eer_pct;
    out += j.dump() + "\n";
  }
  return out;
}

EvaluationReport EvaluationReport::ParseRecords(const std::string &text) {
  EvaluationReport report;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      ReportRow r;
      r.setting = j.at("setting").get<std::string>();
      r.wer_pct = j.at("wer_pct").get<double>();
      r.gender_acc_pct = j.at("gender_acc_pct").get<double>();
      r.ger_pct = j.at("ger_pct").get<double>();
      r.eer_pct = j.at("eer_pct").get<double>();
      report.rows.push_back(r);
    } catch (const nlohmann::json::exception &e) {
      throw IoError(std::string("malformed report record: ") + e.what());
    }
  }
  return report;
}

}  // namespace vqanon
