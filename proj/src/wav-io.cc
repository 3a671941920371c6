// wav-io.cc

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

#include "vqanon/wav-io.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace vqanon {

namespace {

void PutU32(std::string *s, uint32_t v) {
  for (int i = 0; i < 4; ++i) s->push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void PutU16(std::string *s, uint16_t v) {
  for (int i = 0; i < 2; ++i) s->push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
uint32_t GetU32(const unsigned char *p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<uint32_t>(p[3]) << 24);
}
uint16_t GetU16(const unsigned char *p) { return p[0] | (p[1] << 8); }

}  // namespace

void WriteWav(const std::string &path, const WaveData &wave) {
  if (wave.sample_rate <= 0) throw IoError("WriteWav: invalid sample rate");
  const uint32_t data_bytes = static_cast<uint32_t>(wave.samples.size() * 2);
  std::string buf;
  buf.reserve(44 + data_bytes);
  buf += "RIFF";
  PutU32(&buf, 36 + data_bytes);
  buf += "WAVEfmt ";
  PutU32(&buf, 16);
  PutU16(&buf, 1);  // PCM
  PutU16(&buf, 1);  // mono
  PutU32(&buf, static_cast<uint32_t>(wave.sample_rate));
  PutU32(&buf, static_cast<uint32_t>(wave.sample_rate) * 2);
  PutU16(&buf, 2);
  PutU16(&buf, 16);
  buf += "data";
  PutU32(&buf, data_bytes);
  for (BaseFloat x : wave.samples) {
    double v = std::clamp<double>(x, -1.0, 1.0) * 32767.0;
    PutU16(&buf, static_cast<uint16_t>(static_cast<int16_t>(std::lround(v))));
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!os) throw IoError("write failed: " + path);
}

WaveData ReadWav(const std::string &path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  std::string bytes((std::istreambuf_iterator<char>(is)),
                    std::istreambuf_iterator<char>());
  const auto *p = reinterpret_cast<const unsigned char *>(bytes.data());
  const size_t n = bytes.size();
  if (n < 12 || std::memcmp(p, "RIFF", 4) != 0 || std::memcmp(p + 8, "WAVE", 4) != 0)
    throw IoError(path + ": not a RIFF/WAVE file");
  WaveData wave;
  bool have_fmt = false;
  size_t pos = 12;
  while (pos + 8 <= n) {
    uint32_t size = GetU32(p + pos + 4);
    const unsigned char *body = p + pos + 8;
    if (pos + 8 + size > n) throw IoError(path + ": truncated chunk");
    if (std::memcmp(p + pos, "fmt ", 4) == 0) {
      if (size < 16) throw IoError(path + ": short fmt chunk");
      uint16_t format = GetU16(body), channels = GetU16(body + 2),
               bits = GetU16(body + 14);
      if (format != 1 || channels != 1 || bits != 16)
        throw IoError(path + ": only mono 16-bit PCM is supported");
      wave.sample_rate = static_cast<int>(GetU32(body + 4));
      have_fmt = true;
    } else if (std::memcmp(p + pos, "data", 4) == 0) {
      if (!have_fmt) throw IoError(path + ": data chunk before fmt chunk");
      wave.samples.resize(size / 2);
      for (size_t i = 0; i < wave.samples.size(); ++i) {
        int16_t v = static_cast<int16_t>(GetU16(body + 2 * i));
        wave.samples[i] = static_cast<BaseFloat>(v / 32767.0);
      }
      return wave;
    }
    pos += 8 + size + (size & 1);
  }
  throw IoError(path + ": no data chunk");
}

}  // namespace vqanon
