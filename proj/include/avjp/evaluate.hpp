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

// Trial scoring and attention heatmaps on top of a trained checkpoint.

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "avjp/checkpoint.hpp"
#include "avjp/corpus.hpp"
#include "avjp/model.hpp"

namespace avjp {

enum class EvalModality { audio, visual, fused, ensemble };

EvalModality parse_modality(std::string_view s);
std::string_view to_string(EvalModality m);

using EmbeddingTable = std::map<std::string, Embeddings>;

EmbeddingTable extract_embeddings(const Model& m, const std::vector<Utterance>& utterances);

struct SystemReport {
  std::string name;  // "audio", "visual", "fused" or "ensemble"
  std::vector<ScoreLine> scores;
  double eer = 0;  // fraction in [0, 1]
  double eer_threshold = 0;
  double mindcf = 0;
};

struct EvalReport {
  std::vector<SystemReport> systems;  // requested system last

  const SystemReport& requested() const { return systems.back(); }
  const SystemReport* find(std::string_view name) const;
};

/// Scores every trial. Ensemble reports audio, visual and fused first, then
/// their uniform average; with snorm each system is normalized against its
/// own cohort before averaging.
EvalReport score_trials(const Checkpoint& ckpt, const EmbeddingTable& table,
                        const TrialList& trials, EvalModality modality, bool snorm);

/// Loads only the utterances the trials reference. Unknown ids raise a
/// ContractError listing them.
EvalReport run_eval(const Checkpoint& ckpt, const std::vector<ManifestEntry>& manifest,
                    const TrialList& trials, EvalModality modality, bool snorm);

/// One "<system> EER=<pct>% minDCF=<value>" line per system.
std::string format_report(const EvalReport& report);

struct Heatmap {
  Eigen::VectorXd temporal_audio;  // lambda_tanh resampled to L_a
  Eigen::VectorXd temporal_visual;  // resampled to L_v
  Eigen::MatrixXd alpha_audio;      // [T_a x C], columns sum to 1
  Eigen::MatrixXd alpha_visual;     // [T_v x C]
};

Heatmap compute_heatmap(const Checkpoint& ckpt, const Utterance& u);

/// Writes temporal_audio.csv, temporal_visual.csv (one row each),
/// alpha_audio.csv and alpha_visual.csv (one row per frame), at %.6f.
void emit_heatmap(const Heatmap& h, const std::filesystem::path& out_dir);

std::string format_csv(const Eigen::MatrixXd& m);
Eigen::MatrixXd parse_csv(const std::string& text);
Eigen::MatrixXd read_csv(const std::filesystem::path& path);

}  // namespace avjp
