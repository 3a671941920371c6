// vqanon/anonymizer.h

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

#ifndef VQANON_ANONYMIZER_H_
#define VQANON_ANONYMIZER_H_

// Attribute-mapping settings and the anonymization pipeline
// features -> encode -> quantize -> select -> condition -> generate.

#include <optional>
#include <string>
#include <vector>

#include "vqanon/corpus.h"
#include "vqanon/model.h"
#include "vqanon/rng.h"
#include "vqanon/vocoder.h"

namespace vqanon {

enum class Setting { kSI, kRI, kRG, kSIRG, kRISG };

const std::vector<Setting> &AllSettings();
const char *SettingName(Setting s);
/// Exact uppercase names; throws ValidationError (field "setting") otherwise.
Setting ParseSetting(const std::string &name);

struct AttributeSelection {
  std::optional<std::string> target_speaker;
  std::optional<Gender> target_gender;
};

/// Draws the target attributes for one utterance.  Random speakers are
/// uniform over the roster without the source; random genders are F or M
/// with probability 1/2.  Throws EnrollmentError if the source is not in
/// the roster and ConfigError if RI/RISG has no other speaker to pick.
AttributeSelection SelectAttributes(Setting setting, const std::string &source_speaker,
                                    Gender source_gender,
                                    const std::vector<std::string> &roster, Rng *rng);

/// True if `sel` satisfies the setting's semantics for the given source.
bool SelectionValid(Setting setting, const std::string &source_speaker, Gender source_gender,
                    const AttributeSelection &sel);

struct SelectionRecord {
  std::string utterance_id;
  Setting setting = Setting::kSI;
  std::string source_speaker;
  Gender source_gender = Gender::kFemale;
  AttributeSelection selection;
};

/// One JSON object per line with keys utterance_id, setting,
/// source_speaker, source_gender, target_speaker, target_gender (null when
/// absent).
std::string FormatSelectionLog(const std::vector<SelectionRecord> &records);
std::vector<SelectionRecord> ParseSelectionLog(const std::string &text);

/// Conditioning actually applied: the target gender if any, else the
/// source gender; the target speaker if any (identity mode), else none.
ConditionedSequence ConditionForSelection(const AnonModel &model, const QuantizedSequence &q,
                                          Gender source_gender, const AttributeSelection &sel);

/// Anonymizes one utterance with an explicit selection.  The output has
/// frames * upsample samples (the input zero-padded to whole frames).
std::vector<BaseFloat> AnonymizeUtterance(const AnonModel &model, const Utterance &utt,
                                          const AttributeSelection &sel, uint64_t seed,
                                          SamplingMode mode);

/// Draws the selection with `rng`, then anonymizes.
std::vector<BaseFloat> AnonymizeUtterance(const AnonModel &model, const Utterance &utt,
                                          Setting setting, Rng *rng, uint64_t seed,
                                          SamplingMode mode, SelectionRecord *record = nullptr);

struct AnonymizedCorpus {
  std::vector<Utterance> utterances;  // ids, labels and paths preserved
  std::vector<SelectionRecord> log;
};

/// Selections are drawn in input order from one generator derived from
/// (seed, setting); synthesis then runs batched, with a per-utterance
/// sampling seed derived from (seed, index).
AnonymizedCorpus AnonymizeCorpus(const AnonModel &model, const std::vector<Utterance> &utts,
                                 Setting setting, uint64_t seed,
                                 SamplingMode mode = SamplingMode::kCategorical,
                                 int batch_size = 256);

/// Selections only (the log AnonymizeCorpus would produce).
std::vector<SelectionRecord> DrawSelections(const std::vector<UtteranceInfo> &infos,
                                            const std::vector<std::string> &roster,
                                            Setting setting, uint64_t seed);

/// Writes `<dir>/manifest.tsv`, `<dir>/wav/*.wav` and `<dir>/selections.jsonl`.
void WriteAnonymizedCorpus(const std::string &dir, const AnonymizedCorpus &corpus);

}  // namespace vqanon

#endif  // VQANON_ANONYMIZER_H_
