// vqanon/metrics.h

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

#ifndef VQANON_METRICS_H_
#define VQANON_METRICS_H_

#include <span>
#include <string>
#include <vector>

#include "vqanon/base.h"
#include "vqanon/corpus.h"

namespace vqanon {

/// Unit-cost Levenshtein distance between token sequences.
int EditDistance(std::span<const int> reference, std::span<const int> hypothesis);

/// 100 * EditDistance / |reference|.  May exceed 100 when the hypothesis
/// inserts tokens.  Throws DomainError on an empty reference.
double WordErrorRate(std::span<const int> reference, std::span<const int> hypothesis);

/// Corpus-level rate: total edits over total reference tokens.
double WordErrorRate(const std::vector<std::vector<int>> &references,
                     const std::vector<std::vector<int>> &hypotheses);

/// 100 * (TP + TN) / N.  Throws DomainError on empty or mismatched input.
double BinaryAccuracy(std::span<const Gender> predictions,
                      std::span<const Gender> labels);

/// Equal error rate in percent.  FRR(t) is the fraction of genuine scores
/// below t and FAR(t) the fraction of impostor scores at or above t; the
/// crossing is located over all distinct score thresholds (plus +inf) and
/// linearly interpolated between the two thresholds that bracket it.
double EqualErrorRate(std::span<const double> genuine,
                      std::span<const double> impostor);

struct ReportRow {
  std::string setting;  // "clean" or one of SI/RI/RG/SIRG/RISG
  double wer_pct = 0.0;
  double gender_acc_pct = 0.0;
  double ger_pct = 0.0;
  double eer_pct = 0.0;
};

/// Builds a row, deriving GER as 100 - accuracy.
ReportRow MakeReportRow(const std::string &setting, double wer_pct,
                        double gender_acc_pct, double eer_pct);

struct EvaluationReport {
  std::vector<ReportRow> rows;

  const ReportRow *Find(const std::string &setting) const;
  /// Aligned plain-text table: Settings, WER, Acc, EER, GER.
  std::string FormatTable() const;
  /// One JSON object per line.
  std::string FormatRecords() const;
  static EvaluationReport ParseRecords(const std::string &text);
};

}  // namespace vqanon

#endif  // VQANON_METRICS_H_
