// Copyright (c) 2026 The avjp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// The full audio-visual verification network in double precision: frame
// encoders, one attentive pooling layer per modality, three AAM heads, the
// gated fusion block and the two cross-modal temporal-weight encoders.

#pragma once

#include <random>
#include <string>
#include <vector>

#include "avjp/config.hpp"
#include "avjp/corpus.hpp"
#include "avjp/cycle.hpp"
#include "avjp/encoders.hpp"
#include "avjp/fusion.hpp"
#include "avjp/objectives.hpp"
#include "avjp/pooling.hpp"

namespace avjp {

enum ParamGroup : unsigned {
  kAudioBackbone = 1u << 0,
  kVisualBackbone = 1u << 1,
  kAudioPooling = 1u << 2,
  kVisualPooling = 1u << 3,
  kAudioHead = 1u << 4,
  kVisualHead = 1u << 5,
  kFusedHead = 1u << 6,
  kFusion = 1u << 7,
  kCrossModal = 1u << 8,
  kAllGroups = (1u << 9) - 1,
};

struct Model {
  AudioEncoder<double> audio;
  VisualEncoder<double> visual;
  AttentionParams<double> att_a;
  AttentionParams<double> att_v;
  ClassifierHead<double> head_a;
  ClassifierHead<double> head_v;
  ClassifierHead<double> head_f;
  FusionParams<double> fusion;
  WeightEncoder<double> f;  // audio track -> visual track
  WeightEncoder<double> g;  // visual track -> audio track

  /// fn(group, name, matrix) over every parameter in a fixed order.
  template <typename F>
  void for_each(F&& fn) {
    const auto scoped = [&fn](unsigned group, const std::string& prefix) {
      return [&fn, group, prefix](const std::string& name, auto& m) {
        fn(group, prefix + name, m);
      };
    };
    audio.for_each(scoped(kAudioBackbone, "audio_encoder."));
    visual.for_each(scoped(kVisualBackbone, "visual_encoder."));
    att_a.for_each(scoped(kAudioPooling, "audio_pooling."));
    att_v.for_each(scoped(kVisualPooling, "visual_pooling."));
    fn(kAudioHead, std::string("audio_head.W"), head_a.weights);
    fn(kVisualHead, std::string("visual_head.W"), head_v.weights);
    fn(kFusedHead, std::string("fused_head.W"), head_f.weights);
    fusion.for_each(scoped(kFusion, "fusion."));
    f.for_each(scoped(kCrossModal, "cycle_f."));
    g.for_each(scoped(kCrossModal, "cycle_g."));
  }

  std::vector<ParamRef<double>> params(unsigned groups = kAllGroups);
  void set_zero();
  Eigen::Index num_classes() const { return head_a.num_classes(); }
};

/// Fresh parameters. Attention starts uniform (V = 0) with offsets k = 1;
/// fusion starts from FusionParams::split.
Model init_model(const RunConfig& cfg, Eigen::Index num_classes, std::mt19937_64& rng);
/// Same shapes as init_model, all zeros.
Model zero_model(const RunConfig& cfg, Eigen::Index num_classes);

struct Embeddings {
  Eigen::VectorXd audio;   // pooled [2C]
  Eigen::VectorXd visual;  // pooled [2C]
  Eigen::VectorXd fused;   // [D]
};

struct AttentionView {
  PoolingResult<double> audio;
  PoolingResult<double> visual;
  Eigen::VectorXd track_a;  // lambda_tanh resampled to L_a
  Eigen::VectorXd track_v;  // lambda_tanh resampled to L_v
};

Embeddings embed(const Model& m, const Utterance& u);
AttentionView attend(const Model& m, const RunConfig& cfg, const Utterance& u);

struct LossParts {
  double total = 0;
  double aam = 0;
  double adversarial = 0;
  double cycle = 0;
  double ortho = 0;

  LossParts& operator+=(const LossParts& o);
  LossParts scaled(double s) const;
};

/// Loss of one utterance for a training stage (not two_stage). When `grad`
/// is non-null, weight * d(loss)/d(param) is added into it; backbone
/// gradients are skipped when `skip_backbones` is set.
LossParts utterance_loss(const Model& m, const RunConfig& cfg, Stage stage, const Utterance& u,
                         Eigen::Index label, Model* grad = nullptr, double weight = 1.0,
                         bool skip_backbones = false);

}  // namespace avjp
