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

// Small configurations and corpora shared by the integration tests.

#pragma once

#include <filesystem>

#include "avjp/config.hpp"
#include "avjp/synthdata.hpp"

namespace avjp::testing {

/// Every dimension shrunk so that a full training run takes well under a
/// second.
inline RunConfig tiny_config() {
  RunConfig c;
  c.audio_in_dim = 6;
  c.audio_context = {3, 3};
  c.visual_height = 4;
  c.visual_width = 4;
  c.visual_depth = 1;
  c.visual_filters = 2;
  c.channels = 4;
  c.embed_dim = 8;
  c.bottleneck = 2;
  c.len_a = 8;
  c.len_v = 4;
  c.epochs = 2;
  c.batch_size = 4;
  c.snorm_top_k = 3;
  c.synth.num_identities = 6;
  c.synth.utts_per_identity = 4;
  c.synth.train_identities = 4;
  c.synth.frames_a = 8;
  c.synth.frames_v = 4;
  c.synth.visual_grid = 2;
  c.synth.n_target = 6;
  c.synth.n_nontarget = 6;
  return c;
}

/// Writes the synthetic corpus for `cfg` and points cfg.manifest at its
/// training split.
inline void make_corpus(RunConfig& cfg, const std::filesystem::path& dir) {
  write_synthetic_corpus(cfg.synth, cfg.bank_dims(), dir);
  cfg.manifest = (dir / "manifest_train.txt").string();
}

}  // namespace avjp::testing
