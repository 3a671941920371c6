// config.cc

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

#include "vqanon/config.h"

#include <charconv>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>

namespace vqanon {

namespace {

struct Field {
  std::string key;
  std::function<std::string()> get;
  std::function<void(const std::string &)> set;
};

template <class T>
T ParseNumber(const std::string &key, const std::string &s) {
  T v{};
  const char *end = s.data() + s.size();
  auto r = std::from_chars(s.data(), end, v);
  if (r.ec != std::errc() || r.ptr != end)
    throw ValidationError(key, "cannot parse '" + s + "'");
  return v;
}

std::string Format(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

template <class T>
Field Num(const std::string &key, T *p) {
  return {key,
          [p] {
            if constexpr (std::is_floating_point_v<T>) return Format(*p);
            else return std::to_string(*p);
          },
          [key, p](const std::string &s) { *p = ParseNumber<T>(key, s); }};
}

bool ParseBool(const std::string &key, const std::string &s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw ValidationError(key, "expected true or false, got '" + s + "'");
}

void AddModelFields(ModelConfig *m, std::vector<Field> *f) {
  f->push_back(Num("model.K", &m->codebook_size));
  f->push_back(Num("model.D", &m->encoder.latent_dim));
  f->push_back(Num("model.D_g", &m->conditioner.gender_dim));
  f->push_back(Num("model.H", &m->conditioner.hidden));
  f->push_back(Num("model.speaker_dim", &m->conditioner.speaker_dim));
  f->push_back({"model.project_speaker",
                [m] { return std::string(m->conditioner.project_speaker ? "true" : "false"); },
                [m](const std::string &s) {
                  m->conditioner.project_speaker = ParseBool("model.project_speaker", s);
                }});
  f->push_back(Num("model.n_mels", &m->n_mels));
  f->push_back(Num("model.n_ceps", &m->n_ceps));
  f->push_back(Num("model.encoder_channels", &m->encoder.conv_channels));
  f->push_back(Num("model.encoder_hidden", &m->encoder.hidden));
  f->push_back(Num("model.encoder_layers", &m->encoder.n_linear));
  f->push_back(Num("model.upsample", &m->vocoder.upsample));
  f->push_back(Num("model.vocoder_hidden", &m->vocoder.hidden));
  f->push_back(Num("model.lp_order", &m->vocoder.lp_order));
  f->push_back(Num("model.lp_loss_weight", &m->vocoder.lp_loss_weight));
}

void AddAttackerFields(AttackerOptions *a, std::vector<Field> *f) {
  f->push_back(Num("attackers.n_mels", &a->front_end.n_mels));
  f->push_back(Num("attackers.gender_channels", &a->gender.channels));
  f->push_back(Num("attackers.gender_blocks", &a->gender.n_blocks));
  f->push_back(Num("attackers.speaker_channels", &a->speaker.channels));
  f->push_back(Num("attackers.embedding_dim", &a->speaker.embedding_dim));
  f->push_back(Num("attackers.content_channels", &a->content.channels));
}

void AddAttackerTrainingFields(AttackerOptions *a, std::vector<Field> *f) {
  f->push_back(Num("attackers.noise_copies", &a->noise_copies));
  f->push_back(Num("attackers.snr_min_db", &a->snr_min_db));
  f->push_back(Num("attackers.snr_max_db", &a->snr_max_db));
  f->push_back(Num("attackers.gender_steps", &a->gender.steps));
  f->push_back(Num("attackers.gender_learning_rate", &a->gender.learning_rate));
  f->push_back(Num("attackers.speaker_steps", &a->speaker.steps));
  f->push_back(Num("attackers.speaker_learning_rate", &a->speaker.learning_rate));
  f->push_back(Num("attackers.content_steps", &a->content.steps));
  f->push_back(Num("attackers.content_learning_rate", &a->content.learning_rate));
  f->push_back(Num("attackers.gender_batch_size", &a->gender.batch_size));
  f->push_back(Num("attackers.content_batch_size", &a->content.batch_size));
  f->push_back(Num("attackers.speakers_per_batch", &a->speaker.speakers_per_batch));
}

std::vector<Field> Fields(RunConfig *c) {
  std::vector<Field> f;
  f.push_back(Num("run.seed", &c->seed));
  CorpusSpec *cs = &c->corpus;
  f.push_back(Num("corpus.n_speakers", &cs->n_speakers));
  f.push_back(Num("corpus.utterances_per_speaker", &cs->utterances_per_speaker));
  f.push_back(Num("corpus.vocab_size", &cs->token_vocab_size));
  f.push_back(Num("corpus.tokens_min", &cs->tokens_min));
  f.push_back(Num("corpus.tokens_max", &cs->tokens_max));
  f.push_back(Num("corpus.sample_rate", &cs->sample_rate));
  f.push_back(Num("corpus.token_seconds", &cs->token_seconds));
  AddModelFields(&c->model, &f);
  TrainOptions *t = &c->train;
  f.push_back(Num("train.steps", &t->steps));
  f.push_back(Num("train.batch_size", &t->batch_size));
  f.push_back(Num("train.crop_frames", &t->crop_frames));
  f.push_back(Num("train.learning_rate", &t->learning_rate));
  f.push_back(Num("train.decay_start", &t->decay_start));
  f.push_back(Num("train.identity_prob", &t->identity_prob));
  f.push_back(Num("train.commitment_beta", &t->commitment_beta));
  f.push_back(Num("train.grad_clip", &t->grad_clip));
  f.push_back(Num("train.reseed_interval", &t->reseed_interval));
  f.push_back(Num("train.log_interval", &t->log_interval));
  AddAttackerFields(&c->attackers, &f);
  AddAttackerTrainingFields(&c->attackers, &f);
  f.push_back({"anonymize.sampling",
               [c] {
                 return std::string(c->anonymize.sampling == SamplingMode::kArgmax ? "argmax"
                                                                                   : "categorical");
               },
               [c](const std::string &s) {
                 if (s == "argmax") c->anonymize.sampling = SamplingMode::kArgmax;
                 else if (s == "categorical") c->anonymize.sampling = SamplingMode::kCategorical;
                 else throw ValidationError("anonymize.sampling", "expected argmax or categorical");
               }});
  f.push_back(Num("anonymize.batch_size", &c->anonymize.batch_size));
  f.push_back(Num("evaluate.train_per_speaker", &c->evaluate.train_per_speaker));
  f.push_back(Num("evaluate.chance_draws", &c->evaluate.chance_draws));
  f.push_back({"evaluate.enroll",
               [c] { return std::string(c->evaluate.enroll_anonymized ? "anonymized" : "clean"); },
               [c](const std::string &s) {
                 if (s == "clean") c->evaluate.enroll_anonymized = false;
                 else if (s == "anonymized") c->evaluate.enroll_anonymized = true;
                 else throw ValidationError("evaluate.enroll", "expected clean or anonymized");
               }});
  return f;
}

std::string Trim(const std::string &s) {
  const size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
}

ConfigEntries ToEntries(const std::vector<Field> &fields) {
  ConfigEntries e;
  for (const Field &f : fields) e.emplace_back(f.key, f.get());
  return e;
}

}  // namespace

RunConfig RunConfig::Preset(const std::string &name) {
  RunConfig c;
  c.preset = name;
  c.corpus.sample_rate = 8000;
  if (name == "toy") {
    c.train.steps = 1000;
  } else if (name == "full") {
    c.corpus.sample_rate = 16000;
    c.model.codebook_size = 512;
    c.model.encoder.latent_dim = 64;
    c.model.conditioner.gender_dim = 64;
    c.model.conditioner.hidden = 128;
    c.model.encoder.conv_channels = 128;
    c.model.encoder.hidden = 128;
    c.model.vocoder.upsample = 320;
    c.model.vocoder.hidden = 256;
    c.model.vocoder.lp_order = 224;
    c.train.steps = 20000;
    c.attackers.speaker.steps = 2000;
    c.attackers.content.steps = 2000;
  } else {
    throw ConfigError("unknown preset '" + name + "' (toy, full)");
  }
  c.Finalize();
  return c;
}

void RunConfig::Set(const std::string &key, const std::string &value) {
  for (Field &f : Fields(this))
    if (f.key == key) {
      f.set(value);
      return;
    }
  throw ConfigError("unknown config key '" + key + "'");
}

void RunConfig::Finalize() {
  corpus.seed = StageSeed("corpus");
  train.seed = StageSeed("train");
  model.sample_rate = corpus.sample_rate;
  attackers.front_end.sample_rate = corpus.sample_rate;
  attackers.content.vocab_size = corpus.token_vocab_size;
  const int requested = model.vocoder.upsample;
  model.Finalize();
  if (model.vocoder.upsample != requested)
    throw ValidationError("model.upsample", "must be " + std::to_string(model.vocoder.upsample) +
                                                " (hop length times encoder stride)");
  corpus.Validate();
  train.Validate();
  if (anonymize.batch_size <= 0) throw ValidationError("anonymize.batch_size", "must be positive");
  if (evaluate.train_per_speaker <= 0 ||
      evaluate.train_per_speaker >= corpus.utterances_per_speaker)
    throw ValidationError("evaluate.train_per_speaker",
                          "must leave held-out utterances for every speaker");
  if (evaluate.chance_draws <= 0) throw ValidationError("evaluate.chance_draws", "must be positive");
  for (auto [key, steps] : {std::pair{"attackers.gender_steps", attackers.gender.steps},
                            std::pair{"attackers.speaker_steps", attackers.speaker.steps},
                            std::pair{"attackers.content_steps", attackers.content.steps}})
    if (steps < 0) throw ValidationError(key, "must be >= 0");
  if (attackers.noise_copies < 0) throw ValidationError("attackers.noise_copies", "must be >= 0");
  if (!(attackers.snr_min_db <= attackers.snr_max_db))
    throw ValidationError("attackers.snr_min_db", "must not exceed attackers.snr_max_db");
}

std::string RunConfig::ToText() const {
  std::vector<Field> fields = Fields(const_cast<RunConfig *>(this));
  std::ostringstream os;
  std::string section;
  for (const Field &f : fields) {
    const size_t dot = f.key.find('.');
    const std::string sec = f.key.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) os << '\n';
      os << '[' << sec << "]\n";
      section = sec;
    }
    os << f.key.substr(dot + 1) << " = " << f.get() << '\n';
  }
  return os.str();
}

uint64_t Fnv1a64(std::string_view bytes) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string HexDigest(uint64_t h) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::string RunConfig::Hash() const { return HexDigest(Fnv1a64(ToText())); }

uint64_t RunConfig::StageSeed(const std::string &stage) const {
  return DeriveSeed(seed, Fnv1a64(stage));
}

RunConfig ParseConfig(const std::string &text, RunConfig base) {
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = Trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3)
        throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
      section = Trim(line.substr(1, line.size() - 2));
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    std::string key = Trim(line.substr(0, eq));
    const std::string value = Trim(line.substr(eq + 1));
    if (key.find('.') == std::string::npos) {
      if (section.empty())
        throw ConfigError("line " + std::to_string(lineno) + ": key '" + key +
                          "' outside any section");
      key = section + "." + key;
    }
    base.Set(key, value);
  }
  base.Finalize();
  return base;
}

RunConfig LoadConfigFile(const std::string &path, const RunConfig &base) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read config " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return ParseConfig(ss.str(), base);
}

ConfigEntries ModelEntries(const ModelConfig &config) {
  ModelConfig copy = config;
  std::vector<Field> f;
  f.push_back(Num("model.sample_rate", &copy.sample_rate));
  AddModelFields(&copy, &f);
  return ToEntries(f);
}

ConfigEntries AttackerEntries(const AttackerOptions &opts) {
  AttackerOptions copy = opts;
  std::vector<Field> f;
  f.push_back(Num("attackers.sample_rate", &copy.front_end.sample_rate));
  f.push_back(Num("attackers.vocab_size", &copy.content.vocab_size));
  AddAttackerFields(&copy, &f);
  return ToEntries(f);
}

std::string EntriesHash(const ConfigEntries &entries) {
  std::string text;
  for (const auto &[k, v] : entries) text += k + "=" + v + "\n";
  return HexDigest(Fnv1a64(text));
}

}  // namespace vqanon
