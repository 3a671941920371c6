// checkpoint.cc

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

#include "vqanon/checkpoint.h"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace vqanon {

namespace {

constexpr char kMagic[4] = {'V', 'Q', 'A', 'N'};

template <class T>
void Put(std::string *out, T v) {
  out->append(reinterpret_cast<const char *>(&v), sizeof(T));
}

void PutString(std::string *out, const std::string &s) {
  Put<uint32_t>(out, static_cast<uint32_t>(s.size()));
  out->append(s);
}

class Reader {
 public:
  Reader(const std::string &data, size_t end, const std::string &path)
      : data_(data), end_(end), path_(path) {}
  template <class T>
  T Get() {
    T v;
    Need(sizeof(T));
    std::memcpy(&v, data_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string GetString() {
    const uint32_t n = Get<uint32_t>();
    Need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void GetFloats(float *dst, size_t n) {
    Need(n * sizeof(float));
    std::memcpy(dst, data_.data() + pos_, n * sizeof(float));
    pos_ += n * sizeof(float);
  }
  bool AtEnd() const { return pos_ == end_; }

 private:
  void Need(size_t n) const {
    if (n > end_ - pos_) throw IntegrityError(path_ + ": truncated checkpoint");
  }
  const std::string &data_;
  size_t pos_ = 0, end_;
  std::string path_;
};

}  // namespace

const std::string &Checkpoint::Meta(const std::string &key) const {
  for (const auto &kv : metadata)
    if (kv.first == key) return kv.second;
  throw IntegrityError("checkpoint has no metadata '" + key + "'");
}

bool Checkpoint::HasMeta(const std::string &key) const {
  for (const auto &kv : metadata)
    if (kv.first == key) return true;
  return false;
}

void WriteCheckpoint(const std::string &path, const Checkpoint &ckpt) {
  std::string out(kMagic, 4);
  Put<uint32_t>(&out, kCheckpointVersion);
  Put<uint32_t>(&out, static_cast<uint32_t>(ckpt.metadata.size()));
  for (const auto &[k, v] : ckpt.metadata) {
    PutString(&out, k);
    PutString(&out, v);
  }
  Put<uint32_t>(&out, static_cast<uint32_t>(ckpt.arrays.size()));
  for (const auto &[name, m] : ckpt.arrays) {
    PutString(&out, name);
    Put<int32_t>(&out, static_cast<int32_t>(m.rows()));
    Put<int32_t>(&out, static_cast<int32_t>(m.cols()));
    out.append(reinterpret_cast<const char *>(m.data()), m.size() * sizeof(float));
  }
  Put<uint64_t>(&out, Fnv1a64(out));
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw IoError("cannot write checkpoint " + path);
    os.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!os) throw IoError("write failed: " + path);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place: " + path);
}

Checkpoint ReadCheckpoint(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read checkpoint " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  const std::string data = ss.str();
  if (data.size() < 4 + 4 + 8) throw IntegrityError(path + ": truncated checkpoint");
  if (std::memcmp(data.data(), kMagic, 4) != 0) throw IntegrityError(path + ": not a checkpoint");
  const size_t body = data.size() - sizeof(uint64_t);
  uint64_t stored;
  std::memcpy(&stored, data.data() + body, sizeof(stored));
  if (stored != Fnv1a64(std::string_view(data.data(), body)))
    throw IntegrityError(path + ": checksum mismatch (corrupt or truncated)");
  Reader r(data, body, path);
  r.Get<uint32_t>();  // magic
  const uint32_t version = r.Get<uint32_t>();
  if (version != kCheckpointVersion)
    throw IntegrityError(path + ": format version " + std::to_string(version) +
                         ", expected " + std::to_string(kCheckpointVersion));
  Checkpoint ckpt;
  const uint32_t n_meta = r.Get<uint32_t>();
  for (uint32_t i = 0; i < n_meta; ++i) {
    std::string k = r.GetString();
    ckpt.metadata.emplace_back(std::move(k), r.GetString());
  }
  const uint32_t n_arrays = r.Get<uint32_t>();
  for (uint32_t i = 0; i < n_arrays; ++i) {
    std::string name = r.GetString();
    const int32_t rows = r.Get<int32_t>(), cols = r.Get<int32_t>();
    if (rows < 0 || cols < 0) throw IntegrityError(path + ": negative array shape");
    Matrix m(rows, cols);
    r.GetFloats(m.data(), static_cast<size_t>(rows) * cols);
    ckpt.arrays.emplace_back(std::move(name), std::move(m));
  }
  if (!r.AtEnd()) throw IntegrityError(path + ": trailing bytes");
  return ckpt;
}

void AppendParams(const ParamSet &params, Checkpoint *ckpt) {
  for (const Param *p : params.params()) ckpt->arrays.emplace_back(p->name, p->value);
}

void RestoreParams(const Checkpoint &ckpt, const ParamSet &params) {
  std::map<std::string, const Matrix *> by_name;
  for (const auto &[name, m] : ckpt.arrays) by_name[name] = &m;
  for (Param *p : params.params()) {
    auto it = by_name.find(p->name);
    if (it == by_name.end()) throw IntegrityError("checkpoint lacks array '" + p->name + "'");
    if (it->second->rows() != p->value.rows() || it->second->cols() != p->value.cols())
      throw IntegrityError("array '" + p->name + "' has shape " +
                           std::to_string(it->second->rows()) + "x" +
                           std::to_string(it->second->cols()) + ", expected " +
                           std::to_string(p->value.rows()) + "x" +
                           std::to_string(p->value.cols()));
    p->value = *it->second;
    p->grad.setZero(p->value.rows(), p->value.cols());
  }
}

void CheckEntries(const Checkpoint &ckpt, const ConfigEntries &expected,
                  const std::string &hash_key) {
  for (const auto &[key, value] : expected) {
    if (!ckpt.HasMeta(key)) throw ValidationError(key, "missing from the checkpoint");
    const std::string &stored = ckpt.Meta(key);
    if (stored != value)
      throw ValidationError(key, "checkpoint was built with " + stored + ", config has " + value);
  }
  if (ckpt.Meta(hash_key) != EntriesHash(expected))
    throw ValidationError(hash_key, "config hash differs from the checkpoint");
}

void SaveModel(const std::string &path, AnonModel *model) {
  Checkpoint ckpt;
  ckpt.metadata.emplace_back("kind", "anonymizer");
  const ConfigEntries entries = ModelEntries(model->config());
  ckpt.metadata.emplace_back("model.config_hash", EntriesHash(entries));
  for (const auto &e : entries) ckpt.metadata.push_back(e);
  std::string roster;
  for (const std::string &id : model->conditioner.speaker_table.ids())
    roster += (roster.empty() ? "" : ",") + id;
  ckpt.metadata.emplace_back("speakers", roster);
  ckpt.metadata.emplace_back("trained", model->vocoder.trained() ? "1" : "0");
  AppendParams(model->Params(), &ckpt);
  WriteCheckpoint(path, ckpt);
}

AnonModel LoadModel(const std::string &path, const ModelConfig &config) {
  Checkpoint ckpt = ReadCheckpoint(path);
  if (ckpt.Meta("kind") != "anonymizer")
    throw IntegrityError(path + ": holds '" + ckpt.Meta("kind") + "', not an anonymizer model");
  CheckEntries(ckpt, ModelEntries(config), "model.config_hash");
  std::vector<std::string> roster;
  std::istringstream ss(ckpt.Meta("speakers"));
  for (std::string id; std::getline(ss, id, ',');) roster.push_back(id);
  AnonModel model(config, roster);
  RestoreParams(ckpt, model.Params());
  model.vocoder.set_trained(ckpt.Meta("trained") == "1");
  return model;
}

void SaveAttackers(const std::string &path, AttackerSuite *suite, const AttackerOptions &opts) {
  Checkpoint ckpt;
  ckpt.metadata.emplace_back("kind", "attackers");
  const ConfigEntries entries = AttackerEntries(opts);
  ckpt.metadata.emplace_back("attackers.config_hash", EntriesHash(entries));
  for (const auto &e : entries) ckpt.metadata.push_back(e);
  AppendParams(suite->gender.Params(), &ckpt);
  AppendParams(suite->speaker.Params(), &ckpt);
  AppendParams(suite->content.Params(), &ckpt);
  WriteCheckpoint(path, ckpt);
}

AttackerSuite LoadAttackers(const std::string &path, const AttackerOptions &opts) {
  Checkpoint ckpt = ReadCheckpoint(path);
  if (ckpt.Meta("kind") != "attackers")
    throw IntegrityError(path + ": holds '" + ckpt.Meta("kind") + "', not attackers");
  CheckEntries(ckpt, AttackerEntries(opts), "attackers.config_hash");
  AttackerSuite s{GenderClassifier(opts.gender, opts.front_end),
                  SpeakerEmbedder(opts.speaker, opts.front_end),
                  ContentRecognizer(opts.content, opts.front_end)};
  RestoreParams(ckpt, s.gender.Params());
  RestoreParams(ckpt, s.speaker.Params());
  RestoreParams(ckpt, s.content.Params());
  return s;
}

}  // namespace vqanon
