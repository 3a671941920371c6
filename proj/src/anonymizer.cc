// anonymizer.cc

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

#include "vqanon/anonymizer.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "vqanon/mulaw.h"

namespace vqanon {

const std::vector<Setting> &AllSettings() {
  static const std::vector<Setting> all{Setting::kSI, Setting::kRI, Setting::kRG, Setting::kSIRG,
                                        Setting::kRISG};
  return all;
}

const char *SettingName(Setting s) {
  switch (s) {
    case Setting::kSI: return "SI";
    case Setting::kRI: return "RI";
    case Setting::kRG: return "RG";
    case Setting::kSIRG: return "SIRG";
    case Setting::kRISG: return "RISG";
  }
  return "?";
}

Setting ParseSetting(const std::string &name) {
  for (Setting s : AllSettings())
    if (name == SettingName(s)) return s;
  throw ValidationError("setting", "unknown setting '" + name + "' (SI, RI, RG, SIRG, RISG)");
}

namespace {

std::string OtherSpeaker(const std::string &source, const std::vector<std::string> &roster,
                         Rng *rng) {
  std::vector<const std::string *> others;
  for (const std::string &s : roster)
    if (s != source) others.push_back(&s);
  if (others.empty())
    throw ConfigError("roster has no speaker other than '" + source + "' to select");
  return *others[rng->Index(others.size())];
}

Gender RandomGender(Rng *rng) { return rng->Index(2) == 0 ? Gender::kFemale : Gender::kMale; }

}  // namespace

AttributeSelection SelectAttributes(Setting setting, const std::string &source_speaker,
                                    Gender source_gender, const std::vector<std::string> &roster,
                                    Rng *rng) {
  if (std::find(roster.begin(), roster.end(), source_speaker) == roster.end())
    throw EnrollmentError("source speaker '" + source_speaker + "' is not in the roster");
  AttributeSelection sel;
  switch (setting) {
    case Setting::kSI:
      sel.target_speaker = source_speaker;
      break;
    case Setting::kRI:
      sel.target_speaker = OtherSpeaker(source_speaker, roster, rng);
      break;
    case Setting::kRG:
      sel.target_gender = RandomGender(rng);
      break;
    case Setting::kSIRG:
      sel.target_speaker = source_speaker;
      sel.target_gender = RandomGender(rng);
      break;
    case Setting::kRISG:
      sel.target_speaker = OtherSpeaker(source_speaker, roster, rng);
      sel.target_gender = source_gender;
      break;
  }
  return sel;
}

bool SelectionValid(Setting setting, const std::string &source, Gender source_gender,
                    const AttributeSelection &sel) {
  const auto &sp = sel.target_speaker;
  const auto &g = sel.target_gender;
  switch (setting) {
    case Setting::kSI: return sp && *sp == source && !g;
    case Setting::kRI: return sp && *sp != source && !g;
    case Setting::kRG: return !sp && g.has_value();
    case Setting::kSIRG: return sp && *sp == source && g.has_value();
    case Setting::kRISG: return sp && *sp != source && g && *g == source_gender;
  }
  return false;
}

std::string FormatSelectionLog(const std::vector<SelectionRecord> &records) {
  std::string out;
  for (const SelectionRecord &r : records) {
    nlohmann::ordered_json j;
    j["utterance_id"] = r.utterance_id;
    j["setting"] = SettingName(r.setting);
    j["source_speaker"] = r.source_speaker;
    j["source_gender"] = GenderName(r.source_gender);
    j["target_speaker"] = r.selection.target_speaker ? nlohmann::ordered_json(*r.selection.target_speaker)
                                                     : nlohmann::ordered_json(nullptr);
    j["target_gender"] = r.selection.target_gender
                             ? nlohmann::ordered_json(GenderName(*r.selection.target_gender))
                             : nlohmann::ordered_json(nullptr);
    out += j.dump();
    out += '\n';
  }
  return out;
}

std::vector<SelectionRecord> ParseSelectionLog(const std::string &text) {
  std::vector<SelectionRecord> out;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      SelectionRecord r;
      r.utterance_id = j.at("utterance_id").get<std::string>();
      r.setting = ParseSetting(j.at("setting").get<std::string>());
      r.source_speaker = j.at("source_speaker").get<std::string>();
      r.source_gender = ParseGender(j.at("source_gender").get<std::string>());
      if (!j.at("target_speaker").is_null())
        r.selection.target_speaker = j["target_speaker"].get<std::string>();
      if (!j.at("target_gender").is_null())
        r.selection.target_gender = ParseGender(j["target_gender"].get<std::string>());
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception &e) {
      throw IoError(std::string("malformed selection record: ") + e.what());
    }
  }
  return out;
}

ConditionedSequence ConditionForSelection(const AnonModel &model, const QuantizedSequence &q,
                                          Gender source_gender, const AttributeSelection &sel) {
  return model.Condition(q, sel.target_gender.value_or(source_gender), sel.target_speaker);
}

namespace {

/// Re-throws `e` with a stage prefix, keeping its dynamic type.
[[noreturn]] void Rethrow(const std::string &ctx, const Error &e) {
  const std::string msg = ctx + ": " + e.what();
  if (dynamic_cast<const LengthError *>(&e)) throw LengthError(msg);
  if (dynamic_cast<const ShapeError *>(&e)) throw ShapeError(msg);
  if (dynamic_cast<const DomainError *>(&e)) throw DomainError(msg);
  if (dynamic_cast<const EnrollmentError *>(&e)) throw EnrollmentError(msg);
  if (dynamic_cast<const StateError *>(&e)) throw StateError(msg);
  if (dynamic_cast<const ConfigError *>(&e)) throw ConfigError(msg);
  if (dynamic_cast<const IoError *>(&e)) throw IoError(msg);
  throw Error(msg);
}

struct Prepared {
  std::vector<BaseFloat> padded;
  QuantizedSequence q;
  ConditionedSequence cond;
};

Prepared Prepare(const AnonModel &model, const Utterance &utt, const AttributeSelection &sel) {
  Prepared p;
  const std::string ctx = "utterance " + utt.info.id;
  try {
    p.padded = model.PadToFrames(utt.waveform);
  } catch (const Error &e) {
    Rethrow(ctx + " (features)", e);
  }
  try {
    p.q = model.EncodeAndQuantize(p.padded);
  } catch (const Error &e) {
    Rethrow(ctx + " (encode)", e);
  }
  try {
    p.cond = ConditionForSelection(model, p.q, utt.info.gender, sel);
  } catch (const Error &e) {
    Rethrow(ctx + " (condition)", e);
  }
  return p;
}

}  // namespace

std::vector<BaseFloat> AnonymizeUtterance(const AnonModel &model, const Utterance &utt,
                                          const AttributeSelection &sel, uint64_t seed,
                                          SamplingMode mode) {
  if (utt.sample_rate != model.config().sample_rate)
    throw ValidationError("sample_rate", "utterance " + utt.info.id + " is at " +
                                             std::to_string(utt.sample_rate) + " Hz, model at " +
                                             std::to_string(model.config().sample_rate));
  Prepared p = Prepare(model, utt, sel);
  try {
    return model.vocoder.Generate(p.cond, seed, mode);
  } catch (const Error &e) {
    Rethrow("utterance " + utt.info.id + " (generate)", e);
  }
}

std::vector<BaseFloat> AnonymizeUtterance(const AnonModel &model, const Utterance &utt,
                                          Setting setting, Rng *rng, uint64_t seed,
                                          SamplingMode mode, SelectionRecord *record) {
  AttributeSelection sel = SelectAttributes(setting, utt.info.speaker_id, utt.info.gender,
                                            model.conditioner.speaker_table.ids(), rng);
  if (record) *record = {utt.info.id, setting, utt.info.speaker_id, utt.info.gender, sel};
  return AnonymizeUtterance(model, utt, sel, seed, mode);
}

namespace {
uint64_t SelectionSeed(uint64_t seed, Setting s) {
  return DeriveSeed(seed, 0x5e1ec7ULL + static_cast<uint64_t>(s));
}
uint64_t SynthesisSeed(uint64_t seed, Setting s, size_t index) {
  return DeriveSeed(DeriveSeed(seed, 0x5a3b1eULL + static_cast<uint64_t>(s)), index);
}
}  // namespace

std::vector<SelectionRecord> DrawSelections(const std::vector<UtteranceInfo> &infos,
                                            const std::vector<std::string> &roster,
                                            Setting setting, uint64_t seed) {
  Rng rng(SelectionSeed(seed, setting));
  std::vector<SelectionRecord> log;
  log.reserve(infos.size());
  for (const UtteranceInfo &info : infos)
    log.push_back({info.id, setting, info.speaker_id, info.gender,
                   SelectAttributes(setting, info.speaker_id, info.gender, roster, &rng)});
  return log;
}

AnonymizedCorpus AnonymizeCorpus(const AnonModel &model, const std::vector<Utterance> &utts,
                                 Setting setting, uint64_t seed, SamplingMode mode,
                                 int batch_size) {
  std::vector<UtteranceInfo> infos;
  for (const Utterance &u : utts) infos.push_back(u.info);
  AnonymizedCorpus out;
  out.log = DrawSelections(infos, model.conditioner.speaker_table.ids(), setting, seed);
  std::vector<Prepared> prepared;
  prepared.reserve(utts.size());
  for (size_t i = 0; i < utts.size(); ++i) {
    if (utts[i].sample_rate != model.config().sample_rate)
      throw ValidationError("sample_rate", "utterance " + utts[i].info.id + " has rate " +
                                               std::to_string(utts[i].sample_rate));
    prepared.push_back(Prepare(model, utts[i], out.log[i].selection));
  }
  out.utterances.resize(utts.size());
  batch_size = std::max(1, batch_size);
  for (size_t start = 0; start < utts.size(); start += batch_size) {
    const size_t end = std::min(utts.size(), start + batch_size);
    std::vector<const Matrix *> conds;
    std::vector<uint64_t> seeds;
    for (size_t i = start; i < end; ++i) {
      conds.push_back(&prepared[i].cond.frames);
      seeds.push_back(SynthesisSeed(seed, setting, i));
    }
    std::vector<std::vector<int>> levels;
    try {
      levels = model.vocoder.GenerateLevels(conds, seeds, mode);
    } catch (const Error &e) {
      Rethrow("setting " + std::string(SettingName(setting)) + " (generate)", e);
    }
    for (size_t i = start; i < end; ++i) {
      Utterance &o = out.utterances[i];
      o.info = utts[i].info;
      o.sample_rate = utts[i].sample_rate;
      o.waveform = MuLawDecodeLevels(levels[i - start]);
    }
  }
  return out;
}

void WriteAnonymizedCorpus(const std::string &dir, const AnonymizedCorpus &corpus) {
  WriteCorpus(dir, corpus.utterances);
  const std::string path = (std::filesystem::path(dir) / "selections.jsonl").string();
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path);
  os << FormatSelectionLog(corpus.log);
  if (!os) throw IoError("write failed: " + path);
}

}  // namespace vqanon
