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

// Mini-batch SGD over the per-utterance losses. Single-threaded, so a
// (config, seed) pair fixes every byte of the resulting checkpoint.

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "avjp/checkpoint.hpp"
#include "avjp/corpus.hpp"
#include "avjp/model.hpp"

namespace avjp {

struct TrainingSet {
  std::vector<Utterance> utterances;
  std::vector<Eigen::Index> labels;
  std::vector<std::string> identities;  // label -> identity id, sorted
};

TrainingSet make_training_set(std::vector<Utterance> utterances);

using EpochCallback = std::function<void(const LossRecord&)>;

/// Stages run in order: two_stage expands to unimodal_audio,
/// unimodal_visual, joint. Each stage restarts the learning-rate schedule.
Checkpoint run_train(const RunConfig& cfg, const TrainingSet& data,
                     const EpochCallback& on_epoch = {});
/// Reads cfg.manifest.
Checkpoint run_train(const RunConfig& cfg, const EpochCallback& on_epoch = {});

/// Learning rate in (1-based) epoch `epoch`.
double learning_rate(const RunConfig& cfg, int epoch);

/// Per-identity mean embeddings used as the s-norm cohort.
void attach_cohort(Checkpoint& ckpt, const Model& m, const TrainingSet& data);

}  // namespace avjp
