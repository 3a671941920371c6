// vqanon/pipeline.h

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

#ifndef VQANON_PIPELINE_H_
#define VQANON_PIPELINE_H_

// Run-directory stages.  Layout under the run directory:
//   corpus/     manifest.tsv, train.tsv, eval.tsv, trials.tsv, wav/
//   models/     anonymizer.ckpt, attackers.ckpt, train_log.tsv
//   anonymized/<setting>/  manifest.tsv, selections.jsonl, wav/
//   reports/    report.txt, report.jsonl, diagnostics.json
// Every stage directory also receives the config.txt that produced it, and
// every command appends to run.log.

#include <functional>
#include <string>

#include "vqanon/anonymizer.h"
#include "vqanon/config.h"

namespace vqanon {

extern const char kVersion[];

struct ExperimentResult {
  EvaluationReport report;  // clean row followed by the five settings
  double chance_ter_pct = 0.0;
  double probe_zq_acc_pct = 0.0;           // gender probe on averaged z_q
  double probe_conditioned_acc_pct = 0.0;  // same probe on gender-only decoder input
  double train_seconds = 0.0, attack_seconds = 0.0, anonymize_seconds = 0.0;
};

/// Chance TER and both gender probes for a trained model.
void Diagnose(const RunConfig &config, const AnonModel &model, const CorpusSplit &split,
              ExperimentResult *result);

/// The whole pipeline in memory: corpus, joint training, attackers, all
/// five settings and evaluation, with the same stage seeds as RunDirectory.
ExperimentResult RunExperiment(const RunConfig &config,
                               const std::function<void(const std::string &)> &progress = {});

class RunDirectory {
 public:
  RunDirectory(std::string root, RunConfig config);

  const RunConfig &config() const { return config_; }
  std::string Path(const std::string &relative) const;

  void Corpus();
  void Train();
  void Attackers();
  void Anonymize(Setting setting);
  EvaluationReport Evaluate();
  /// corpus, train, attackers, every setting, evaluate.
  EvaluationReport All();

  /// Receives progress lines (also appended to run.log).
  std::function<void(const std::string &)> progress;

 private:
  void BeginStage(const std::string &command, const std::string &dir);
  void Log(const std::string &line);
  std::vector<Utterance> LoadSplit(const std::string &name) const;

  std::string root_;
  RunConfig config_;
};

}  // namespace vqanon

#endif  // VQANON_PIPELINE_H_
