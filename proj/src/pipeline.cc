// pipeline.cc

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

#include "vqanon/pipeline.h"

#include <Eigen/Core>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "vqanon/checkpoint.h"

namespace vqanon {

const char kVersion[] = "0.1.0";

namespace fs = std::filesystem;

namespace {

void WriteText(const std::string &path, const std::string &text) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path);
  os << text;
  if (!os) throw IoError("write failed: " + path);
}

std::string VersionString() {
  std::ostringstream os;
  os << "vqanon " << kVersion << ", eigen " << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION
     << '.' << EIGEN_MINOR_VERSION << ", compiler " << __VERSION__;
  return os.str();
}

}  // namespace

RunDirectory::RunDirectory(std::string root, RunConfig config)
    : root_(std::move(root)), config_(std::move(config)) {}

std::string RunDirectory::Path(const std::string &relative) const {
  return (fs::path(root_) / relative).string();
}

void RunDirectory::Log(const std::string &line) {
  fs::create_directories(root_);
  std::ofstream os(Path("run.log"), std::ios::app);
  if (!os) throw IoError("cannot append to " + Path("run.log"));
  os << line << '\n';
  if (progress) progress(line);
}

void RunDirectory::BeginStage(const std::string &command, const std::string &dir) {
  Log("== " + command + "  config " + config_.Hash() + "  preset " + config_.preset + "  seed " +
      std::to_string(config_.seed) + "  (" + VersionString() + ")");
  if (!dir.empty()) {
    fs::create_directories(Path(dir));
    WriteText(Path(dir + "/config.txt"), config_.ToText());
  }
}

std::vector<Utterance> RunDirectory::LoadSplit(const std::string &name) const {
  const std::string manifest = Path("corpus/" + name);
  if (!fs::exists(manifest)) throw IoError("missing " + manifest + " (run the corpus stage)");
  return LoadCorpus(Path("corpus"), name);
}

void RunDirectory::Corpus() {
  BeginStage("corpus", "corpus");
  std::vector<Utterance> utts = GenerateCorpus(config_.corpus);
  WriteCorpus(Path("corpus"), utts);
  CorpusSplit split = SplitBySpeakerPosition(utts, config_.evaluate.train_per_speaker);
  std::vector<UtteranceInfo> train, eval;
  for (const Utterance &u : split.train) train.push_back(u.info);
  for (const Utterance &u : split.eval) eval.push_back(u.info);
  WriteManifest(Path("corpus/train.tsv"), train);
  WriteManifest(Path("corpus/eval.tsv"), eval);
  Rng rng(config_.StageSeed("trials"));
  std::vector<Trial> trials = MakeTrialList(eval, &rng);
  WriteTrials(Path("corpus/trials.tsv"), trials);
  Log("corpus: " + std::to_string(utts.size()) + " utterances (" + std::to_string(train.size()) +
      " train, " + std::to_string(eval.size()) + " eval), " + std::to_string(trials.size()) +
      " trials");
}

void RunDirectory::Train() {
  std::vector<Utterance> train = LoadSplit("train.tsv");
  BeginStage("train", "models");
  std::set<std::string> speakers;
  for (const Utterance &u : train) speakers.insert(u.info.speaker_id);
  AnonModel model(config_.model, {speakers.begin(), speakers.end()});
  Rng rng(config_.StageSeed("init"));
  model.Init(&rng);
  std::vector<TrainExample> examples;
  for (const Utterance &u : train) examples.push_back(MakeTrainExample(model, u));
  Trainer trainer(&model, config_.train, std::move(examples));
  std::ofstream log(Path("models/train_log.tsv"));
  log << "step\tnll\tlp_mse\tcodebook\tcommitment\tcodes_used\n";
  TrainStats acc;
  int n = 0;
  const auto t0 = std::chrono::steady_clock::now();
  for (int s = 0; s < config_.train.steps; ++s) {
    TrainStats st = trainer.Step();
    log << st.step << '\t' << st.nll << '\t' << st.lp_mse << '\t' << st.codebook << '\t'
        << st.commitment << '\t' << st.codes_used << '\n';
    acc.nll += st.nll;
    acc.codes_used += st.codes_used;
    ++n;
    if ((s + 1) % config_.train.log_interval == 0 || s + 1 == config_.train.steps) {
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::ostringstream os;
      os << "train: step " << s + 1 << "/" << config_.train.steps << "  nll " << acc.nll / n
         << "  codes " << static_cast<double>(acc.codes_used) / n << "  " << secs << "s";
      Log(os.str());
      acc = TrainStats();
      n = 0;
    }
  }
  model.vocoder.set_trained(true);
  SaveModel(Path("models/anonymizer.ckpt"), &model);
  Log("train: wrote " + Path("models/anonymizer.ckpt"));
}

void RunDirectory::Attackers() {
  std::vector<Utterance> train = LoadSplit("train.tsv");
  BeginStage("attackers", "models");
  AttackerSuite suite = TrainAttackers(train, config_.attackers, config_.StageSeed("attackers"));
  SaveAttackers(Path("models/attackers.ckpt"), &suite, config_.attackers);
  Log("attackers: wrote " + Path("models/attackers.ckpt"));
}

void RunDirectory::Anonymize(Setting setting) {
  const std::string ckpt = Path("models/anonymizer.ckpt");
  if (!fs::exists(ckpt)) throw IoError("missing checkpoint " + ckpt + " (run the train stage)");
  AnonModel model = LoadModel(ckpt, config_.model);
  std::vector<Utterance> eval = LoadSplit("eval.tsv");
  const std::string dir = std::string("anonymized/") + SettingName(setting);
  fs::remove_all(Path(dir));
  BeginStage(std::string("anonymize --setting ") + SettingName(setting), dir);
  AnonymizedCorpus out = AnonymizeCorpus(model, eval, setting, config_.StageSeed("anonymize"),
                                         config_.anonymize.sampling, config_.anonymize.batch_size);
  WriteAnonymizedCorpus(Path(dir), out);
  Log("anonymize: " + std::to_string(out.utterances.size()) + " utterances -> " + Path(dir));
}

EvaluationReport RunDirectory::Evaluate() {
  const std::string ckpt = Path("models/attackers.ckpt");
  if (!fs::exists(ckpt)) throw IoError("missing checkpoint " + ckpt + " (run the attackers stage)");
  AttackerSuite attackers = LoadAttackers(ckpt, config_.attackers);
  std::vector<Utterance> eval = LoadSplit("eval.tsv");
  std::vector<Trial> trials = ReadTrials(Path("corpus/trials.tsv"));
  BeginStage("evaluate", "reports");
  EvaluateOptions eo;
  eo.enroll_anonymized = config_.evaluate.enroll_anonymized;
  EvaluationReport report;
  report.rows.push_back(EvaluateRun("clean", eval, eval, attackers, trials, eo));
  for (Setting s : AllSettings()) {
    const std::string dir = Path(std::string("anonymized/") + SettingName(s));
    if (!fs::exists(fs::path(dir) / "manifest.tsv")) continue;
    std::vector<Utterance> anon = LoadCorpus(dir);
    report.rows.push_back(EvaluateRun(SettingName(s), eval, anon, attackers, trials, eo));
  }
  WriteText(Path("reports/report.txt"), report.FormatTable());
  WriteText(Path("reports/report.jsonl"), report.FormatRecords());

  nlohmann::ordered_json diag;
  const std::string model_ckpt = Path("models/anonymizer.ckpt");
  if (fs::exists(model_ckpt)) {
    AnonModel model = LoadModel(model_ckpt, config_.model);
    ExperimentResult r;
    Diagnose(config_, model, {LoadSplit("train.tsv"), eval}, &r);
    diag["chance_ter_pct"] = r.chance_ter_pct;
    diag["probe_zq_acc_pct"] = r.probe_zq_acc_pct;
    diag["probe_conditioned_acc_pct"] = r.probe_conditioned_acc_pct;
  }
  WriteText(Path("reports/diagnostics.json"), diag.dump(2) + "\n");
  Log("evaluate:\n" + report.FormatTable());
  return report;
}

void Diagnose(const RunConfig &config, const AnonModel &model, const CorpusSplit &split,
              ExperimentResult *result) {
  std::vector<std::vector<int>> refs;
  for (const Utterance &u : split.eval) refs.push_back(u.info.tokens);
  result->chance_ter_pct = ChanceTokenErrorRate(refs, config.corpus.token_vocab_size,
                                                config.evaluate.chance_draws,
                                                config.StageSeed("chance"));
  LinearProbe zq, cond;
  zq.Fit(AveragedCodewords(model, split.train), GenderLabels(split.train));
  cond.Fit(AveragedGenderConditioned(model, split.train), GenderLabels(split.train));
  result->probe_zq_acc_pct =
      zq.Accuracy(AveragedCodewords(model, split.eval), GenderLabels(split.eval));
  result->probe_conditioned_acc_pct =
      cond.Accuracy(AveragedGenderConditioned(model, split.eval), GenderLabels(split.eval));
}

ExperimentResult RunExperiment(const RunConfig &config,
                               const std::function<void(const std::string &)> &progress) {
  auto say = [&](const std::string &s) {
    if (progress) progress(s);
  };
  auto since = [](std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  ExperimentResult result;
  CorpusSplit split =
      SplitBySpeakerPosition(GenerateCorpus(config.corpus), config.evaluate.train_per_speaker);

  auto t0 = std::chrono::steady_clock::now();
  std::set<std::string> speakers;
  for (const Utterance &u : split.train) speakers.insert(u.info.speaker_id);
  AnonModel model(config.model, {speakers.begin(), speakers.end()});
  Rng rng(config.StageSeed("init"));
  model.Init(&rng);
  std::vector<TrainExample> examples;
  for (const Utterance &u : split.train) examples.push_back(MakeTrainExample(model, u));
  Trainer trainer(&model, config.train, std::move(examples));
  double nll = 0.0;
  int n = 0;
  for (int s = 0; s < config.train.steps; ++s) {
    nll += trainer.Step().nll;
    ++n;
    if ((s + 1) % config.train.log_interval == 0 || s + 1 == config.train.steps) {
      std::ostringstream os;
      os << "train: step " << s + 1 << "/" << config.train.steps << "  nll " << nll / n << "  "
         << static_cast<int>(since(t0)) << "s";
      say(os.str());
      nll = 0.0;
      n = 0;
    }
  }
  model.vocoder.set_trained(true);
  result.train_seconds = since(t0);

  t0 = std::chrono::steady_clock::now();
  AttackerSuite attackers =
      TrainAttackers(split.train, config.attackers, config.StageSeed("attackers"));
  result.attack_seconds = since(t0);

  std::vector<UtteranceInfo> infos;
  for (const Utterance &u : split.eval) infos.push_back(u.info);
  Rng trial_rng(config.StageSeed("trials"));
  const std::vector<Trial> trials = MakeTrialList(infos, &trial_rng);
  EvaluateOptions eo;
  eo.enroll_anonymized = config.evaluate.enroll_anonymized;
  result.report.rows.push_back(EvaluateRun("clean", split.eval, split.eval, attackers, trials, eo));
  t0 = std::chrono::steady_clock::now();
  for (Setting s : AllSettings()) {
    AnonymizedCorpus anon =
        AnonymizeCorpus(model, split.eval, s, config.StageSeed("anonymize"),
                        config.anonymize.sampling, config.anonymize.batch_size);
    result.report.rows.push_back(
        EvaluateRun(SettingName(s), split.eval, anon.utterances, attackers, trials, eo));
    say(std::string("evaluated ") + SettingName(s));
  }
  result.anonymize_seconds = since(t0);
  Diagnose(config, model, split, &result);
  return result;
}

EvaluationReport RunDirectory::All() {
  Corpus();
  Train();
  Attackers();
  for (Setting s : AllSettings()) Anonymize(s);
  return Evaluate();
}

}  // namespace vqanon
