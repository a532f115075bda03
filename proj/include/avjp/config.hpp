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

// Flat `key = value` run configuration. Lines starting with '#' and
// trailing '# ...' comments are ignored. Unknown keys are errors.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "avjp/encoders.hpp"
#include "avjp/synthdata.hpp"

namespace avjp {

enum class Stage { unimodal_audio, unimodal_visual, joint, two_stage };

std::string_view to_string(Stage s);
Stage parse_stage(std::string_view s);

struct RunConfig {
  // data
  std::string manifest;   // training manifest
  std::string init_ckpt;  // optional checkpoint to start from

  // model
  int audio_in_dim = 40;
  std::vector<int> audio_context{5, 3};
  int audio_depth = 2;
  std::string audio_padding = "replicate";
  int visual_height = 16;
  int visual_width = 16;
  int visual_depth = 2;
  int visual_filters = 4;
  int channels = 16;    // C
  int embed_dim = 64;   // D
  int bottleneck = 8;   // R
  int len_a = 40;       // L_a
  int len_v = 10;       // L_v

  // objectives
  double margin = 0.5;
  double scale = 30.0;
  double beta = 1.0;
  double gamma = 0.5;
  double ortho_weight = 0.1;

  // optimizer
  std::string stage = "two_stage";
  int epochs = 10;
  int batch_size = 32;
  double lr = 0.01;
  double lr_decay = 0.5;
  int lr_decay_every = 2;
  double weight_decay = 5e-4;
  double momentum = 0.9;
  double grad_clip = 5.0;
  bool freeze_backbones = false;
  double finetune_lr_scale = 0.1;  // joint stage, all but the cycle encoders
  std::uint64_t seed = 1;

  // scoring
  int snorm_top_k = 20;

  // synthetic corpus
  SynthConfig synth;

  AudioEncoderConfig audio_encoder() const;
  VisualEncoderConfig visual_encoder() const;
  BankDims bank_dims() const;
  Stage stage_kind() const { return parse_stage(stage); }
  void validate() const;
};

/// Relative `manifest` / `init_ckpt` paths are resolved against base_dir.
RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);
/// Canonical text: every key, fixed order, shortest round-trip numbers.
std::string to_text(const RunConfig& cfg);

}  // namespace avjp
