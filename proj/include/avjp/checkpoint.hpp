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

// Unified checkpoint, little-endian:
//
//   "AVJC" | u32 version | string config | u32 num_classes |
//   u32 epochs_completed | u32 n_history | history records |
//   u32 n_arrays | arrays
//
// string  = u32 length + bytes
// history = string stage | u32 epoch | f64 total, aam, adversarial, cycle, ortho
// array   = string name | u32 rows | u32 cols | f64 values (column-major)
//
// Model parameters use their dotted names; s-norm cohorts are stored as
// "cohort.audio", "cohort.visual" and "cohort.fused".

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "avjp/config.hpp"
#include "avjp/model.hpp"

namespace avjp {

inline constexpr std::string_view kCheckpointMagic = "AVJC";
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct LossRecord {
  std::string stage;
  std::uint32_t epoch = 0;  // 0 marks the evaluation before the first update
  LossParts loss;
};

struct NamedArray {
  std::string name;
  Eigen::MatrixXd values;
};

struct Checkpoint {
  RunConfig config;
  std::uint32_t num_classes = 0;
  std::uint32_t epochs_completed = 0;
  std::vector<LossRecord> history;
  std::vector<NamedArray> arrays;

  const NamedArray* find(std::string_view name) const;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::string_view bytes);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Model parameters as named arrays, in Model::for_each order.
std::vector<NamedArray> model_arrays(Model& m);
/// Rebuilds the model; every parameter must be present with its shape.
Model restore_model(const Checkpoint& ckpt);

}  // namespace avjp
