// model.cc

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

#include "vqanon/model.h"

#include <algorithm>
#include <cmath>

#include "vqanon/mulaw.h"

namespace vqanon {

int ModelConfig::SamplesPerFrame() const {
  return EncoderFeatureOptions().hop_length * encoder.stride;
}

void ModelConfig::Finalize() {
  encoder.input_dim = n_ceps > 0 ? n_ceps : n_mels;
  conditioner.latent_dim = encoder.latent_dim;
  vocoder.cond_dim = conditioner.OutputDim();
  vocoder.upsample = SamplesPerFrame();
  Validate();
}

void ModelConfig::Validate() const {
  if (sample_rate < 4000) throw ValidationError("sample_rate", "must be at least 4000");
  if (n_mels <= 0) throw ValidationError("n_mels", "must be positive");
  if (n_ceps < 0 || n_ceps > n_mels) throw ValidationError("n_ceps", "must be in [0, n_mels]");
  if (codebook_size <= 0) throw ValidationError("K", "must be positive");
  encoder.Validate();
  conditioner.Validate();
  vocoder.Validate();
  if (encoder.input_dim != (n_ceps > 0 ? n_ceps : n_mels))
    throw ValidationError("encoder.input_dim", "does not match the feature front end");
  if (conditioner.latent_dim != encoder.latent_dim)
    throw ValidationError("D", "encoder and conditioner disagree");
  if (vocoder.cond_dim != conditioner.OutputDim())
    throw ValidationError("vocoder.cond_dim", "must equal 2H");
  if (vocoder.upsample != SamplesPerFrame())
    throw ValidationError("upsample", "must equal hop length times encoder stride (" +
                                          std::to_string(SamplesPerFrame()) + ")");
}

AnonModel::AnonModel(const ModelConfig &config, std::vector<std::string> speaker_ids)
    : encoder(config.encoder),
      codebook(config.codebook_size, config.encoder.latent_dim),
      conditioner(config.conditioner, std::move(speaker_ids)),
      vocoder(config.vocoder),
      config_(config) {
  config.Validate();
}

void AnonModel::Init(Rng *rng) {
  encoder.Init(rng);
  codebook.Init(rng);
  conditioner.Init(rng);
  vocoder.Init(rng);
}

std::vector<BaseFloat> AnonModel::PadToFrames(std::span<const BaseFloat> waveform) const {
  const size_t up = static_cast<size_t>(config_.SamplesPerFrame());
  const size_t n = std::max<size_t>(up, (waveform.size() + up - 1) / up * up);
  std::vector<BaseFloat> out(n, 0.0f);
  std::copy(waveform.begin(), waveform.end(), out.begin());
  return out;
}

Matrix AnonModel::EncoderInput(std::span<const BaseFloat> padded) const {
  FeatureOptions fo = config_.EncoderFeatureOptions();
  std::vector<BaseFloat> ext(padded.begin(), padded.end());
  ext.resize(ext.size() + (fo.frame_length - fo.hop_length), 0.0f);
  Matrix frames = ExtractFeatures(ext, config_.sample_rate, fo).frames;
  if (config_.n_ceps > 0) frames = ToCepstra(frames, config_.n_ceps);
  ApplyCmn(&frames);
  return frames;
}

Matrix AnonModel::Encode(std::span<const BaseFloat> padded) const {
  return encoder.Forward(EncoderInput(padded), nullptr);
}

QuantizedSequence AnonModel::EncodeAndQuantize(std::span<const BaseFloat> padded) const {
  return Quantize(Encode(padded), codebook);
}

ParamSet AnonModel::Params() {
  ParamSet s = encoder.Params();
  s.Add(&codebook.embeddings);
  s.Add(conditioner.Params());
  s.Add(vocoder.Params());
  return s;
}

// ---------------------------------------------------------------- training

void TrainOptions::Validate() const {
  if (steps < 0) throw ValidationError("train.steps", "must be >= 0");
  if (batch_size <= 0) throw ValidationError("train.batch_size", "must be positive");
  if (crop_frames <= 0) throw ValidationError("train.crop_frames", "must be positive");
  if (!(learning_rate > 0)) throw ValidationError("train.learning_rate", "must be positive");
  if (!(identity_prob >= 0 && identity_prob <= 1))
    throw ValidationError("train.identity_prob", "must be in [0, 1]");
  if (commitment_beta < 0) throw ValidationError("train.commitment_beta", "must be >= 0");
  if (reseed_interval < 0) throw ValidationError("train.reseed_interval", "must be >= 0");
}

TrainExample MakeTrainExample(const AnonModel &model, const Utterance &utt) {
  TrainExample ex;
  std::vector<BaseFloat> padded = model.PadToFrames(utt.waveform);
  ex.encoder_input = model.EncoderInput(padded);
  ex.levels = MuLawEncodeWaveform(padded);
  ex.gender = utt.info.gender;
  ex.speaker = utt.info.speaker_id;
  return ex;
}

Trainer::Trainer(AnonModel *model, const TrainOptions &opts, std::vector<TrainExample> examples)
    : model_(model),
      opts_(opts),
      examples_(std::move(examples)),
      rng_(opts.seed),
      params_(model->Params()),
      adam_(params_, AdamOptions{.learning_rate = opts.learning_rate}) {
  opts.Validate();
  if (examples_.empty()) throw DataError("trainer: no training examples");
  const int up = model->config().SamplesPerFrame();
  for (const TrainExample &ex : examples_) {
    int frames = static_cast<int>(ex.levels.size()) / up;
    if (frames < opts.crop_frames)
      throw DataError("trainer: utterance of " + std::to_string(frames) +
                      " frames is shorter than the crop");
    if (model->encoder.OutputLength(static_cast<int>(ex.encoder_input.rows())) != frames)
      throw ShapeError("trainer: encoder frames do not match the waveform length");
    model->conditioner.speaker_table.Row(ex.speaker);
  }
  usage_.assign(model->codebook.K(), 0);
}

TrainStats Trainer::Step() {
  const int B = opts_.batch_size;
  std::vector<int> ids(B), starts(B);
  std::vector<bool> identity(B);
  const int up = model_->config().SamplesPerFrame();
  for (int b = 0; b < B; ++b) {
    ids[b] = static_cast<int>(rng_.Index(examples_.size()));
    int frames = static_cast<int>(examples_[ids[b]].levels.size()) / up;
    starts[b] = static_cast<int>(rng_.Index(frames - opts_.crop_frames + 1));
    identity[b] = rng_.Bernoulli(opts_.identity_prob);
  }
  // Learning-rate schedule.
  double lr = opts_.learning_rate;
  const double pos = opts_.steps > 0 ? static_cast<double>(step_) / opts_.steps : 0.0;
  if (pos > opts_.decay_start && opts_.decay_start < 1.0)
    lr *= 1.0 - 0.9 * std::min(1.0, (pos - opts_.decay_start) / (1.0 - opts_.decay_start));
  adam_.set_learning_rate(lr);
  return Run(ids, starts, identity, true);
}

TrainStats Trainer::EvaluateBatch(const std::vector<int> &ids, const std::vector<int> &starts,
                                  const std::vector<bool> &identity) {
  return Run(ids, starts, identity, false);
}

TrainStats Trainer::StepOnBatch(const std::vector<int> &ids, const std::vector<int> &starts,
                                const std::vector<bool> &identity) {
  return Run(ids, starts, identity, true);
}

TrainStats Trainer::Run(const std::vector<int> &ids, const std::vector<int> &starts,
                        const std::vector<bool> &identity, bool update) {
  const int B = static_cast<int>(ids.size());
  AnonModel &m = *model_;
  std::vector<Encoder::Cache> enc_cache(B);
  std::vector<Conditioner::Cache> cond_cache(B);
  std::vector<QuantizedSequence> quant(B);
  std::vector<Matrix> z_e(B), cond(B);
  std::vector<RowVector> spk_emb(B);
  TrainStats stats;
  for (int b = 0; b < B; ++b) {
    const TrainExample &ex = examples_[ids[b]];
    z_e[b] = m.encoder.Forward(ex.encoder_input, &enc_cache[b]);
    quant[b] = Quantize(z_e[b], m.codebook);
    Matrix zq = StraightThroughForward(z_e[b], quant[b].codewords);
    RowVector g = m.conditioner.gender_table.Lookup(ex.gender);
    const RowVector *s = nullptr;
    if (identity[b]) {
      spk_emb[b] = m.conditioner.speaker_table.Lookup(ex.speaker);
      s = &spk_emb[b];
    }
    cond[b] = m.conditioner.Forward(zq, g, s, &cond_cache[b]).frames;
  }
  std::vector<Vocoder::Crop> crops(B);
  for (int b = 0; b < B; ++b) crops[b] = {&cond[b], &examples_[ids[b]].levels, starts[b]};

  if (update) params_.ZeroGrad();
  std::vector<Matrix> dcond;
  Vocoder::Loss vl = update ? m.vocoder.ForwardBackward(crops, opts_.crop_frames, &dcond)
                            : m.vocoder.Evaluate(crops, opts_.crop_frames);
  stats.nll = vl.nll;
  stats.lp_mse = vl.lp_mse;
  const float inv_b = 1.0f / static_cast<float>(B);
  for (int b = 0; b < B; ++b) {
    Matrix dzq_cb, dze_commit;
    VqLosses vq = ComputeVqLosses(z_e[b], quant[b].codewords, update ? &dzq_cb : nullptr,
                                  update ? &dze_commit : nullptr);
    stats.codebook += vq.codebook / B;
    stats.commitment += vq.commitment / B;
    if (!update) continue;
    const TrainExample &ex = examples_[ids[b]];
    Matrix dzq;
    RowVector dg, ds;
    m.conditioner.Backward(cond_cache[b], dcond[b], &dzq, &dg, &ds);
    m.conditioner.gender_table.embeddings.grad.row(GenderTable::Row(ex.gender)) += dg;
    if (identity[b])
      m.conditioner.speaker_table.embeddings.grad.row(
          m.conditioner.speaker_table.Row(ex.speaker)) += ds;
    Matrix dze = StraightThroughBackward(dzq);
    dze += static_cast<float>(opts_.commitment_beta) * inv_b * dze_commit;
    m.encoder.Backward(enc_cache[b], dze);
    AccumulateCodebookGrad(quant[b], inv_b * dzq_cb, &m.codebook);
    for (int k : quant[b].indices) ++usage_[k];
  }
  std::vector<bool> seen(m.codebook.K(), false);
  for (const auto &q : quant)
    for (int k : q.indices) seen[k] = true;
  stats.codes_used = static_cast<int>(std::count(seen.begin(), seen.end(), true));
  if (update) {
    params_.ClipGradNorm(opts_.grad_clip);
    adam_.Step();
    ++step_;
    stats.step = step_;
    if (opts_.reseed_interval > 0 && step_ % opts_.reseed_interval == 0) ReseedDeadCodes(z_e);
  }
  return stats;
}

void Trainer::ReseedDeadCodes(const std::vector<Matrix> &latents) {
  int total = 0;
  for (const Matrix &z : latents) total += static_cast<int>(z.rows());
  for (int k = 0; k < model_->codebook.K(); ++k) {
    if (usage_[k] > 0) continue;
    int pick = static_cast<int>(rng_.Index(total));
    for (const Matrix &z : latents) {
      if (pick < z.rows()) {
        model_->codebook.embeddings.value.row(k) = z.row(pick);
        break;
      }
      pick -= static_cast<int>(z.rows());
    }
  }
  std::fill(usage_.begin(), usage_.end(), 0);
}

}  // namespace vqanon
